// eitsim: spectroscopy, slow-light, and storage experiments on a flux-modulated
// qubit-resonator system. Subcommands: run, fit, validate.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eitsim/config.hpp"
#include "eitsim/csv.hpp"
#include "eitsim/log.hpp"
#include "eitsim/presets.hpp"
#include "eitsim/spectroscopy.hpp"
#include "eitsim/version.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitFit = 4;

eitsim::Spectrum spectrum_from_csv(const std::string& path) {
    const eitsim::csv::Table t = eitsim::csv::read(path);
    auto col = [&](const std::string& name) {
        for (size_t i = 0; i < t.columns.size(); ++i) {
            if (t.columns[i] == name) return i;
        }
        throw eitsim::ConfigError("csv missing column '" + name + "' in " + path);
    };
    const size_t cw = col("omega_p_GHz"), cr = col("re_t"), ci = col("im_t");
    eitsim::Spectrum sp;
    for (const auto& r : t.rows) {
        sp.omega_p.push_back(eitsim::units::ghz(r[cw]));
        sp.t_c.emplace_back(r[cr], r[ci]);
    }
    return sp;
}

int run_fit(const std::string& input, const std::string& model) {
    const eitsim::Spectrum sp = spectrum_from_csv(input);
    nlohmann::ordered_json out;
    if (model == "two_level") {
        const eitsim::TwoLevelFit fit = eitsim::fit_two_level(sp);
        out = {{"model", "two_level"},
               {"omega_q_GHz", eitsim::units::to_ghz(fit.omega_q)},
               {"gamma_MHz", eitsim::units::to_mhz(fit.gamma_relax)},
               {"gamma_phi_MHz", eitsim::units::to_mhz(fit.gamma_phi)},
               {"residual_norm", fit.residual_norm}};
        if (fit.covariance.size() == 9) {
            out["sigma_omega_q_GHz"] =
                eitsim::units::to_ghz(std::sqrt(std::abs(fit.covariance(0, 0))));
            out["sigma_gamma_MHz"] =
                eitsim::units::to_mhz(std::sqrt(std::abs(fit.covariance(1, 1))));
            out["sigma_gamma_phi_MHz"] =
                eitsim::units::to_mhz(std::sqrt(std::abs(fit.covariance(2, 2))));
        }
    } else {
        // The Lambda-system model needs the fixed linewidths; fit them first
        // from the same spectrum's off-window wings via the two-level model,
        // then fit (center, Omega_Phi).
        const eitsim::TwoLevelFit base = eitsim::fit_two_level(sp);
        eitsim::EitFixedParams fixed;
        fixed.gamma_relax = base.gamma_relax;
        fixed.gamma_total = base.gamma_phi + 0.5 * base.gamma_relax;
        fixed.kappa = 0.0;
        fixed.omega_r_dressed = 0.0;
        fixed.mod_freq = base.omega_q; // two-photon resonance at the center
        const eitsim::LambdaFit fit = eitsim::fit_eit(sp, fixed);
        out = {{"model", "eit"},
               {"omega_q_motional_GHz",
                eitsim::units::to_ghz(fit.omega_q_motional)},
               {"omega_phi_rabi_MHz", eitsim::units::to_mhz(fit.omega_phi_rabi)},
               {"residual_norm", fit.residual_norm}};
        if (fit.covariance.size() == 4) {
            out["sigma_omega_q_motional_GHz"] =
                eitsim::units::to_ghz(std::sqrt(std::abs(fit.covariance(0, 0))));
            out["sigma_omega_phi_rabi_MHz"] =
                eitsim::units::to_mhz(std::sqrt(std::abs(fit.covariance(1, 1))));
        }
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flux-modulated qubit-resonator EIT simulator"};
    app.set_version_flag("--version", eitsim::kVersion);
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute an experiment preset");
    std::string preset, config_path, out_dir = "out";
    bool plots = false;
    int parallel = 1;
    run->add_option("--preset", preset, "preset name")->required();
    run->add_option("--config", config_path, "config file (json)")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--plots", plots, "emit SVG plots");
    run->add_option("--parallel", parallel, "worker pool size")
        ->check(CLI::PositiveNumber);

    auto* fit = app.add_subcommand("fit", "fit a spectrum csv");
    std::string fit_input, fit_model;
    fit->add_option("--input", fit_input, "spectrum csv")->required();
    fit->add_option("--model", fit_model, "model")
        ->required()
        ->check(CLI::IsMember({"two_level", "eit"}));

    auto* validate = app.add_subcommand("validate", "validate a config file");
    std::string validate_path;
    validate->add_option("--config", validate_path, "config file (json)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const eitsim::ExperimentConfig cfg = eitsim::parse_config(config_path);
            const eitsim::RunManifest m =
                eitsim::run_preset(preset, cfg, out_dir, plots, parallel);
            std::cout << "wrote " << m.files.size() << " files to " << out_dir
                      << " (config " << m.config_hash << ")\n";
        } else if (fit->parsed()) {
            try {
                return run_fit(fit_input, fit_model);
            } catch (const eitsim::DomainError& e) {
                // malformed fit input (too few points, bad grid) is a fit
                // failure, not a solver failure
                throw eitsim::FitError(e.what());
            }
        } else if (validate->parsed()) {
            eitsim::parse_config(validate_path);
            std::cout << "ok\n";
        }
    } catch (const eitsim::FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitFit;
    } catch (const eitsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const eitsim::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return 0;
}
