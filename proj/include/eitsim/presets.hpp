#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "eitsim/config.hpp"
#include "eitsim/csv.hpp"
#include "eitsim/log.hpp"
#include "eitsim/pulselab.hpp"
#include "eitsim/spectroscopy.hpp"
#include "eitsim/svg.hpp"
#include "eitsim/version.hpp"

// Experiment presets: each executes a full pipeline (sweep -> solve -> fit ->
// persist) and returns a manifest sufficient to re-execute the run.

namespace eitsim {

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> files;
};

namespace detail {

inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
    return v;
}

/// Deterministic index fan-out over at most n_workers threads.
template <typename Fn>
inline void parallel_for(size_t count, int n_workers, Fn&& fn) {
    if (n_workers <= 1 || count < 2) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const int workers = int(std::min(size_t(n_workers), count));
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline csv::Table spectrum_table(const Spectrum& sp) {
    csv::Table t;
    t.columns = {"omega_p_GHz", "re_t", "im_t", "abs_t", "phase_rad"};
    for (size_t i = 0; i < sp.omega_p.size(); ++i) {
        t.rows.push_back({units::to_ghz(sp.omega_p[i]), sp.t_c[i].real(),
                          sp.t_c[i].imag(), std::abs(sp.t_c[i]),
                          std::arg(sp.t_c[i])});
    }
    return t;
}

inline csv::Table trace_table(const PulseTrace& tr) {
    csv::Table t;
    t.columns = {"t_ns", "alpha_out_abs", "n_res", "p_exc", "omega_phi_MHz"};
    for (size_t i = 0; i < tr.times.size(); ++i) {
        t.rows.push_back({tr.times[i], tr.alpha_out_abs[i], tr.res_pop[i],
                          tr.qubit_pop[i], units::to_mhz(tr.mod_envelope[i])});
    }
    return t;
}

/// Reference trace: the input pulse itself, on the same grid.
inline PulseTrace input_reference(const ProbePulse& pulse,
                                  const std::vector<double>& grid,
                                  double gamma_relax) {
    PulseTrace tr;
    tr.times = grid;
    for (double t : grid) {
        const double a = gaussian_probe(t, pulse) / std::sqrt(2.0 * gamma_relax);
        tr.alpha_out_abs.push_back(a);
        tr.alpha_in_abs.push_back(a);
        tr.res_pop.push_back(0.0);
        tr.qubit_pop.push_back(0.0);
        tr.mod_envelope.push_back(0.0);
    }
    return tr;
}

struct PresetContext {
    const ExperimentConfig& cfg;
    std::filesystem::path out;
    bool plots = false;
    int parallel = 1;
    RunManifest manifest;

    std::string path(const std::string& name) {
        manifest.files.push_back((out / name).string());
        return manifest.files.back();
    }
    void write_json(const std::string& name, const nlohmann::ordered_json& j) {
        std::ofstream f(path(name));
        f << j.dump(2) << "\n";
    }
};

inline SweepConfig sweep_or(const ExperimentConfig& cfg,
                            const std::string& axis, double start, double stop,
                            int points) {
    if (cfg.sweep && cfg.sweep->axis == axis) return *cfg.sweep;
    return {axis, start, stop, points};
}

} // namespace detail

namespace presets {

using detail::linspace;
using detail::PresetContext;

/// Probe sweep with the modulation off; two-level response of the dressed
/// qubit. Writes spectrum.csv + two_level_fit.json.
inline void single_tone(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    HamiltonianSpec spec;
    spec.device = cfg.device;
    spec.drive = cfg.drive;
    spec.drive.omega_phi_rabi = 0.0;
    spec.drive.delta_phi = 0.0;
    spec.n_fock = cfg.solver.n_fock;
    const double wq = spec.device.omega_q();
    const double span = 3.0 * spec.device.gamma_relax;
    const SweepConfig s = detail::sweep_or(cfg, "probe_freq_GHz",
                                           units::to_ghz(wq - span),
                                           units::to_ghz(wq + span), 401);
    const std::vector<double> grid_ghz = linspace(s.start, s.stop, s.points);
    std::vector<double> grid(grid_ghz.size());
    for (size_t i = 0; i < grid.size(); ++i) grid[i] = units::ghz(grid_ghz[i]);
    const SpectrumEngine engine = cfg.solver.frame == "lab"
                                      ? SpectrumEngine::LabPeriodic
                                      : SpectrumEngine::Effective;
    const Spectrum sp = sweep_spectrum(grid, spec, engine);
    const std::string csv_path = ctx.path("spectrum.csv");
    csv::write(csv_path, detail::spectrum_table(sp));
    const TwoLevelFit fit = fit_two_level(sp);
    ctx.write_json("two_level_fit.json",
                   {{"omega_q_GHz", units::to_ghz(fit.omega_q)},
                    {"gamma_MHz", units::to_mhz(fit.gamma_relax)},
                    {"gamma_phi_MHz", units::to_mhz(fit.gamma_phi)},
                    {"residual_norm", fit.residual_norm}});
    if (ctx.plots) {
        svg::write_line_plot(csv_path,
                             {"omega_p_GHz", "abs_t", "", "", "single tone"},
                             ctx.path("spectrum.svg"));
    }
}

/// Modulation-frequency sweep: |t_c|(omega_Phi, omega_p) heatmap showing the
/// sideband-induced splitting.
inline void two_tone(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const double wq_res = cfg.device.omega_q() - cfg.device.omega_r_effective();
    const SweepConfig s =
        detail::sweep_or(cfg, "mod_freq_MHz", units::to_mhz(wq_res) - 30.0,
                         units::to_mhz(wq_res) + 30.0, 31);
    const double wq = cfg.device.omega_q();
    const double span = 0.4 * cfg.device.gamma_relax;
    std::vector<double> probe_grid(101);
    for (size_t i = 0; i < probe_grid.size(); ++i) {
        probe_grid[i] = wq - span + 2.0 * span * i / 100.0;
    }
    csv::Table t;
    t.columns = {"mod_freq_MHz", "omega_p_GHz", "abs_t"};
    std::vector<Spectrum> slices(s.points);
    detail::parallel_for(size_t(s.points), ctx.parallel, [&](size_t k) {
        HamiltonianSpec spec;
        spec.device = cfg.device;
        spec.drive = cfg.drive;
        spec.drive.mod_freq =
            units::mhz(s.start + (s.stop - s.start) * k / double(s.points - 1));
        spec.n_fock = cfg.solver.n_fock;
        slices[k] = sweep_spectrum(probe_grid, spec, SpectrumEngine::Effective);
    });
    for (int k = 0; k < s.points; ++k) {
        const double f_mhz = s.start + (s.stop - s.start) * k / double(s.points - 1);
        for (size_t i = 0; i < probe_grid.size(); ++i) {
            t.rows.push_back({f_mhz, units::to_ghz(probe_grid[i]),
                              std::abs(slices[k].t_c[i])});
        }
    }
    const std::string csv_path = ctx.path("two_tone.csv");
    csv::write(csv_path, t);
    if (ctx.plots) {
        svg::write_heatmap(csv_path,
                           {"omega_p_GHz", "", "abs_t", "mod_freq_MHz",
                            "two tone"},
                           ctx.path("two_tone.svg"));
    }
}

/// Probe-power sweep at omega_p = omega_q: the on-resonance extinction
/// saturates as Omega_p approaches Gamma.
inline void saturation(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const SweepConfig s = detail::sweep_or(cfg, "probe_rabi_MHz", 0.5, 150.0, 41);
    const double wq = cfg.device.omega_q();
    csv::Table t;
    t.columns = {"probe_rabi_MHz", "power_dBm", "abs_t"};
    t.rows.resize(s.points);
    detail::parallel_for(size_t(s.points), ctx.parallel, [&](size_t k) {
        const double rabi_mhz =
            s.start + (s.stop - s.start) * k / double(s.points - 1);
        HamiltonianSpec spec;
        spec.device = cfg.device;
        spec.drive = cfg.drive;
        spec.drive.probe_rabi = units::mhz(rabi_mhz);
        spec.drive.probe_freq = wq;
        spec.drive.omega_phi_rabi = 0.0;
        spec.drive.delta_phi = 0.0;
        spec.n_fock = cfg.solver.n_fock;
        const DensityMatrix rho = steady_state(spec, spec.rates());
        const Complex sig = expectation(rho, qubit_lowering(spec.n_fock));
        const Complex tc = transmission_from_sigma(sig, cfg.device.gamma_relax,
                                                   spec.drive.probe_rabi);
        const double p_w =
            probe_power(wq, spec.drive.probe_rabi, cfg.device.gamma_relax);
        t.rows[k] = {rabi_mhz, watts_to_dbm(p_w), std::abs(tc)};
    });
    const std::string csv_path = ctx.path("saturation.csv");
    csv::write(csv_path, t);
    if (ctx.plots) {
        svg::write_line_plot(csv_path,
                             {"power_dBm", "abs_t", "", "", "saturation"},
                             ctx.path("saturation.svg"));
    }
}

struct EitSweepResult {
    std::vector<std::pair<double, LambdaFit>> fits; // (delta_phi, fit)
};

/// Transparency-window sweep over a delta_Phi grid with per-slice model fits.
inline EitSweepResult eit_spectrum(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const SweepConfig s = detail::sweep_or(cfg, "delta_phi_mPhi0", 10.0, 100.0, 10);
    HamiltonianSpec base;
    base.device = cfg.device;
    base.drive = cfg.drive;
    base.n_fock = cfg.solver.n_fock;
    const double wq = base.device.omega_q();
    std::vector<double> probe_grid(801);
    const double span = units::mhz(25.0);
    for (size_t i = 0; i < probe_grid.size(); ++i) {
        probe_grid[i] = wq - span + 2.0 * span * i / 800.0;
    }
    EitFixedParams fixed{cfg.device.gamma_relax, cfg.device.gamma_total(),
                         cfg.device.kappa, cfg.device.omega_r_effective(),
                         cfg.drive.mod_freq};
    csv::Table t2d;
    t2d.columns = {"delta_phi_mPhi0", "omega_p_GHz", "re_t", "im_t", "abs_t",
                   "phase_rad"};
    csv::Table tf;
    tf.columns = {"delta_phi_mPhi0", "omega_phi_rabi_MHz",
                  "omega_q_motional_GHz", "residual_norm"};
    EitSweepResult result;
    std::vector<Spectrum> slices(s.points);
    std::vector<LambdaFit> fits(s.points);
    detail::parallel_for(size_t(s.points), ctx.parallel, [&](size_t k) {
        HamiltonianSpec spec = base;
        spec.drive.delta_phi =
            1e-3 * (s.start + (s.stop - s.start) * k / double(s.points - 1));
        slices[k] = sweep_spectrum(probe_grid, spec, SpectrumEngine::Effective);
        fits[k] = fit_eit(slices[k], fixed);
    });
    for (int k = 0; k < s.points; ++k) {
        const double dphi_m =
            s.start + (s.stop - s.start) * k / double(s.points - 1);
        for (size_t i = 0; i < probe_grid.size(); ++i) {
            const Complex tc = slices[k].t_c[i];
            t2d.rows.push_back({dphi_m, units::to_ghz(probe_grid[i]), tc.real(),
                                tc.imag(), std::abs(tc), std::arg(tc)});
        }
        tf.rows.push_back({dphi_m, units::to_mhz(fits[k].omega_phi_rabi),
                           units::to_ghz(fits[k].omega_q_motional),
                           fits[k].residual_norm});
        result.fits.emplace_back(1e-3 * dphi_m, fits[k]);
    }
    const std::string csv2d = ctx.path("eit_spectrum.csv");
    csv::write(csv2d, t2d);
    csv::write(ctx.path("eit_fits.csv"), tf);
    if (ctx.plots) {
        svg::write_heatmap(csv2d,
                           {"omega_p_GHz", "", "abs_t", "delta_phi_mPhi0",
                            "transparency window"},
                           ctx.path("eit_spectrum.svg"));
    }
    return result;
}

/// Gaussian pulse through the transparency window at constant modulation;
/// peak delay vs the input reference.
inline DelayAnalysis slow_light(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const ProbePulse& pulse = cfg.pulse;
    if (pulse.tau_d <= 0) throw ConfigError("slow_light: pulse block required");
    HamiltonianSpec tmp;
    tmp.device = cfg.device;
    tmp.drive = cfg.drive;
    const double level = tmp.resolved_omega_phi_rabi();
    const double t_end = pulse.t0 + 5.0 * pulse.tau_d;
    std::vector<double> grid;
    for (double t = 0.0; t <= t_end; t += 2.0) grid.push_back(t);
    ModulationSchedule sched;
    sched.ramp = 0.0;
    sched.segments.push_back({-1.0, t_end + 1.0, level});
    PropagateOptions opts;
    opts.frame = cfg.solver.frame == "lab" ? PropagationFrame::Lab
                                           : PropagationFrame::Effective;
    opts.mod_freq = cfg.drive.mod_freq;
    opts.n_fock = cfg.solver.n_fock;
    opts.tol = cfg.solver.tol;
    const PulseTrace trace = propagate(cfg.device, pulse, sched, grid, opts);
    const PulseTrace ref =
        detail::input_reference(pulse, grid, cfg.device.gamma_relax);
    const DelayAnalysis delay = delay_time(trace, ref, cfg.device, level);
    const std::string csv_path = ctx.path("slow_light.csv");
    csv::write(csv_path, detail::trace_table(trace));
    csv::write(ctx.path("slow_light_reference.csv"), detail::trace_table(ref));
    ctx.write_json("delay.json",
                   {{"delta_t_ns", delay.delta_t_ns},
                    {"group_velocity_km_s", delay.group_velocity_km_s},
                    {"effective_depth", delay.effective_depth},
                    {"omega_phi_rabi_MHz", units::to_mhz(level)}});
    if (ctx.plots) {
        svg::write_line_plot(csv_path,
                             {"t_ns", "alpha_out_abs", "", "", "slow light"},
                             ctx.path("slow_light.svg"));
    }
    return delay;
}

/// Peak-delay and phase-slope delay vs Omega_Phi.
inline void delay_scan(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const SweepConfig s =
        detail::sweep_or(cfg, "omega_phi_rabi_MHz", 13.0, 25.0, 7);
    csv::Table t;
    t.columns = {"omega_phi_rabi_MHz", "delta_t_peak_ns", "delta_t_phase_ns",
                 "v_g_km_s", "effective_depth"};
    t.rows.resize(s.points);
    detail::parallel_for(size_t(s.points), ctx.parallel, [&](size_t k) {
        const double level_mhz =
            s.start + (s.stop - s.start) * k / double(s.points - 1);
        ExperimentConfig sub = cfg;
        sub.drive.omega_phi_rabi = units::mhz(level_mhz);
        const std::filesystem::path sub_out =
            ctx.out / ("level_" + std::to_string(k));
        std::filesystem::create_directories(sub_out);
        PresetContext sub_ctx{sub, sub_out, false, 1, {}};
        const DelayAnalysis peak = slow_light(sub_ctx);
        // phase-slope delay from the steady-state spectrum around the carrier
        HamiltonianSpec spec;
        spec.device = cfg.device;
        spec.drive = cfg.drive;
        spec.drive.omega_phi_rabi = units::mhz(level_mhz);
        spec.drive.probe_rabi = units::mhz(0.5);
        spec.n_fock = cfg.solver.n_fock;
        const double w0 = cfg.pulse.carrier;
        std::vector<double> grid(11);
        const double h = units::mhz(0.2);
        for (int i = 0; i < 11; ++i) grid[i] = w0 + (i - 5) * h;
        const Spectrum sp =
            sweep_spectrum(grid, spec, SpectrumEngine::Effective);
        const PhaseDelay ph = delay_from_phase(sp, w0);
        t.rows[k] = {level_mhz, peak.delta_t_ns, ph.magnitude_ns,
                     peak.group_velocity_km_s, peak.effective_depth};
    });
    // drop the per-level slow-light trace files from this scan's manifest:
    // only the aggregate csv is the product
    const std::string csv_path = ctx.path("delay_scan.csv");
    csv::write(csv_path, t);
    if (ctx.plots) {
        svg::write_line_plot(
            csv_path, {"omega_phi_rabi_MHz", "delta_t_peak_ns", "", "",
                       "delay scan"},
            ctx.path("delay_scan.svg"));
    }
}

/// Storage-and-retrieval: eta(T_s) sweep plus the exponential decay fit.
inline void store(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const ProbePulse& pulse = cfg.pulse;
    if (pulse.tau_d <= 0) throw ConfigError("store: pulse block required");
    const SweepConfig s = detail::sweep_or(cfg, "t_s_ns", 50.0, 250.0, 9);
    HamiltonianSpec tmp;
    tmp.device = cfg.device;
    tmp.drive = cfg.drive;
    const double level = tmp.resolved_omega_phi_rabi();
    const double ramp = cfg.schedule.ramp;
    const double t_c = pulse.t0 + pulse.tau_d;
    PropagateOptions opts;
    opts.frame = PropagationFrame::Effective;
    opts.mod_freq = cfg.drive.mod_freq;
    opts.n_fock = cfg.solver.n_fock;
    opts.tol = cfg.solver.tol;
    csv::Table t;
    t.columns = {"t_s_ns", "eta"};
    t.rows.resize(s.points);
    std::vector<std::pair<double, double>> eta_points(s.points);
    bool first_written = false;
    for (int k = 0; k < s.points; ++k) {
        const double t_s = s.start + (s.stop - s.start) * k / double(s.points - 1);
        const double t_on = t_c + ramp + t_s;
        const double t_end = t_on + ramp + 6.0 * pulse.tau_d;
        std::vector<double> grid;
        for (double tt = 0.0; tt <= t_end; tt += 1.0) grid.push_back(tt);
        const PulseTrace trace = retrieve_shaped(cfg.device, pulse, t_s, level,
                                                 level, grid, opts, t_c, ramp);
        const PulseTrace ref =
            detail::input_reference(pulse, grid, cfg.device.gamma_relax);
        const double eta =
            storage_efficiency(trace, ref, t_on, grid.back());
        t.rows[k] = {t_s, eta};
        eta_points[k] = {t_s, eta};
        if (!first_written) {
            csv::write(ctx.path("store_trace.csv"), detail::trace_table(trace));
            first_written = true;
        }
    }
    csv::write(ctx.path("eta_vs_ts.csv"), t);
    const DecayFit decay = storage_decay_fit(eta_points);
    const double n_r = mean_input_photons(pulse, cfg.device.gamma_relax);
    const double fwhm = eit_fwhm(level, cfg.device.gamma_relax,
                                 cfg.device.gamma_total());
    ctx.write_json("storage.json",
                   {{"mean_input_photons", n_r},
                    {"eit_fwhm_MHz", units::to_mhz(fwhm)},
                    {"decay_rate_MHz", units::to_mhz(decay.rate)},
                    {"decay_fit_residual", decay.residual_norm},
                    {"max_eta", [&] {
                         double m = 0;
                         for (auto& [ts, e] : eta_points) m = std::max(m, e);
                         return m;
                     }()}});
}

/// Capture-efficiency sweep over the modulation turn-off time T_c.
inline void capture_scan(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const ProbePulse& pulse = cfg.pulse;
    if (pulse.tau_d <= 0) throw ConfigError("capture_scan: pulse block required");
    const SweepConfig s =
        detail::sweep_or(cfg, "t_c_ns", pulse.t0 - pulse.tau_d,
                         pulse.t0 + 3.0 * pulse.tau_d, 13);
    HamiltonianSpec tmp;
    tmp.device = cfg.device;
    tmp.drive = cfg.drive;
    const double level = tmp.resolved_omega_phi_rabi();
    const double ramp = cfg.schedule.ramp;
    const double n_r = mean_input_photons(pulse, cfg.device.gamma_relax);
    PropagateOptions opts;
    opts.frame = PropagationFrame::Effective;
    opts.mod_freq = cfg.drive.mod_freq;
    opts.n_fock = cfg.solver.n_fock;
    opts.tol = cfg.solver.tol;
    csv::Table t;
    t.columns = {"t_c_ns", "eta_c", "t_measured_ns"};
    t.rows.resize(s.points);
    detail::parallel_for(size_t(s.points), ctx.parallel, [&](size_t k) {
        const double t_c = s.start + (s.stop - s.start) * k / double(s.points - 1);
        const double t_end = t_c + ramp + 4.0 * pulse.tau_d;
        std::vector<double> grid;
        for (double tt = 0.0; tt <= t_end; tt += 1.0) grid.push_back(tt);
        ModulationSchedule sched;
        sched.ramp = ramp;
        sched.segments.push_back({-1.0, t_c + 0.5 * ramp, level});
        const PulseTrace trace = propagate(cfg.device, pulse, sched, grid, opts);
        const CaptureResult cap = capture_efficiency(trace, t_c, n_r);
        t.rows[k] = {t_c, cap.eta_c, cap.t_measured};
    });
    const std::string csv_path = ctx.path("capture_scan.csv");
    csv::write(csv_path, t);
    if (ctx.plots) {
        svg::write_line_plot(csv_path,
                             {"t_c_ns", "eta_c", "", "", "capture efficiency"},
                             ctx.path("capture_scan.svg"));
    }
}

/// Retrieval at two modulation levels: stronger read-out releases the stored
/// excitation faster (higher, narrower peak).
inline void shape(PresetContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    const ProbePulse& pulse = cfg.pulse;
    if (pulse.tau_d <= 0) throw ConfigError("shape: pulse block required");
    const SweepConfig s =
        detail::sweep_or(cfg, "retrieve_level_MHz", 14.6, 24.4, 2);
    HamiltonianSpec tmp;
    tmp.device = cfg.device;
    tmp.drive = cfg.drive;
    const double write_level = tmp.resolved_omega_phi_rabi();
    const double ramp = cfg.schedule.ramp;
    const double t_c = pulse.t0 + pulse.tau_d;
    const double t_s = 125.0;
    const double t_on = t_c + ramp + t_s;
    const double t_end = t_on + ramp + 6.0 * pulse.tau_d;
    std::vector<double> grid;
    for (double tt = 0.0; tt <= t_end; tt += 1.0) grid.push_back(tt);
    PropagateOptions opts;
    opts.frame = PropagationFrame::Effective;
    opts.mod_freq = cfg.drive.mod_freq;
    opts.n_fock = cfg.solver.n_fock;
    opts.tol = cfg.solver.tol;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    const std::vector<double> levels = {units::mhz(s.start), units::mhz(s.stop)};
    const std::vector<std::string> names = {"shape_low.csv", "shape_high.csv"};
    for (size_t k = 0; k < levels.size(); ++k) {
        const PulseTrace trace = retrieve_shaped(
            cfg.device, pulse, t_s, write_level, levels[k], grid, opts, t_c, ramp);
        csv::write(ctx.path(names[k]), detail::trace_table(trace));
        // retrieved-peak height and FWHM inside the retrieval window
        double peak = 0.0, t_peak = 0.0;
        for (size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] >= t_on && trace.alpha_out_abs[i] > peak) {
                peak = trace.alpha_out_abs[i];
                t_peak = grid[i];
            }
        }
        double lo = t_on, hi = grid.back();
        for (size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < t_on) continue;
            if (grid[i] < t_peak && trace.alpha_out_abs[i] < 0.5 * peak) {
                lo = grid[i];
            }
            if (grid[i] > t_peak && trace.alpha_out_abs[i] > 0.5 * peak) {
                hi = grid[i];
            }
        }
        summary.push_back({{"retrieve_level_MHz", units::to_mhz(levels[k])},
                           {"peak_alpha", peak},
                           {"peak_t_ns", t_peak},
                           {"fwhm_ns", hi - lo}});
    }
    ctx.write_json("shape.json", summary);
}

/// Chain eit_spectrum fits at >= 3 modulation magnitudes into the shift
/// constants (C0, C1).
inline ShiftConstants calibrate(PresetContext& ctx) {
    ExperimentConfig cfg = ctx.cfg;
    if (!cfg.sweep || cfg.sweep->axis != "delta_phi_mPhi0") {
        cfg.sweep = SweepConfig{"delta_phi_mPhi0", 20.0, 80.0, 4};
    }
    PresetContext sub_ctx{cfg, ctx.out, ctx.plots, ctx.parallel, {}};
    const EitSweepResult sweep = eit_spectrum(sub_ctx);
    for (const auto& f : sub_ctx.manifest.files) ctx.manifest.files.push_back(f);
    const ShiftConstants sc =
        calibrate_shift_constants(sweep.fits, cfg.device.omega_q());
    ctx.write_json(
        "calibration.json",
        {{"shift_c0_MHz_per_mPhi0_sq", units::to_mhz(sc.c0) * 1e-6},
         {"rabi_c1_MHz_per_mPhi0", units::to_mhz(sc.c1) * 1e-3}});
    return sc;
}

} // namespace presets

inline RunManifest run_preset(const std::string& name,
                              const ExperimentConfig& cfg,
                              const std::string& out_dir, bool plots = false,
                              int parallel = 1) {
    std::filesystem::create_directories(out_dir);
    detail::PresetContext ctx{cfg, out_dir, plots, parallel, {}};
    ctx.manifest.config_hash = detail::fnv1a_hex(cfg.raw.dump());
    ctx.manifest.version = kVersion;
    ctx.manifest.started_at = detail::iso_now();
    log::info("preset '" + name + "' -> " + out_dir);

    if (name == "single_tone") presets::single_tone(ctx);
    else if (name == "two_tone") presets::two_tone(ctx);
    else if (name == "saturation") presets::saturation(ctx);
    else if (name == "eit_spectrum") presets::eit_spectrum(ctx);
    else if (name == "slow_light") presets::slow_light(ctx);
    else if (name == "delay_scan") presets::delay_scan(ctx);
    else if (name == "store") presets::store(ctx);
    else if (name == "capture_scan") presets::capture_scan(ctx);
    else if (name == "shape") presets::shape(ctx);
    else if (name == "calibrate") presets::calibrate(ctx);
    else throw ConfigError("unknown preset '" + name + "'");

    ctx.manifest.finished_at = detail::iso_now();
    nlohmann::ordered_json m{{"config_hash", ctx.manifest.config_hash},
                             {"version", ctx.manifest.version},
                             {"started_at", ctx.manifest.started_at},
                             {"finished_at", ctx.manifest.finished_at},
                             {"preset", name},
                             {"files", ctx.manifest.files},
                             {"config", cfg.raw}};
    std::ofstream mf(std::filesystem::path(out_dir) / "manifest.json");
    mf << m.dump(2) << "\n";
    ctx.manifest.files.push_back(
        (std::filesystem::path(out_dir) / "manifest.json").string());
    return ctx.manifest;
}

} // namespace eitsim
