#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "eitsim/dynamics.hpp"
#include "eitsim/lsq.hpp"

// Transmission spectra from steady states, the analytic Lambda-type model,
// parameter extraction fits, phase-slope delay and EIT bandwidth.

namespace eitsim {

struct Spectrum {
    std::vector<double> omega_p;        // strictly increasing, rad/ns
    std::vector<Complex> t_c;
    DeviceParams device;                // snapshot
    DriveConfig drive;
};

/// t_c = 1 + i Gamma <sigma> / Omega_p.
inline Complex transmission_from_sigma(Complex sigma_exp, double gamma_relax,
                                       double probe_rabi) {
    if (probe_rabi <= 0.0) throw DomainError("transmission_from_sigma: Omega_p <= 0");
    return 1.0 + Complex(0, 1) * gamma_relax * sigma_exp / probe_rabi;
}

/// Analytic Lambda-type transmission:
/// t = 1 + i (Gamma/2)(delta - i kappa/2)
///       / [(delta - i kappa/2)(delta + Delta2 - i gamma) - Omega_Phi^2/4].
inline Complex analytic_transmission(double delta, double delta2,
                                     double gamma_relax, double gamma_total,
                                     double kappa, double omega_phi_rabi) {
    if (gamma_relax < 0 || gamma_total < 0 || kappa < 0) {
        throw DomainError("analytic_transmission: negative rate");
    }
    const Complex dm(delta, -0.5 * kappa);
    const Complex d1(delta + delta2, -gamma_total);
    if (omega_phi_rabi == 0.0) {
        // The dark resonator factor cancels exactly; take the two-level limit
        // so a lossless resonator on resonance stays well defined.
        if (std::abs(d1) < 1e-300) {
            throw DomainError("analytic_transmission: singular denominator");
        }
        return 1.0 + Complex(0, 1) * 0.5 * gamma_relax / d1;
    }
    const Complex den = dm * d1 - 0.25 * omega_phi_rabi * omega_phi_rabi;
    if (std::abs(den) < 1e-300) {
        throw DomainError("analytic_transmission: singular denominator");
    }
    return 1.0 + Complex(0, 1) * 0.5 * gamma_relax * dm / den;
}

enum class SpectrumEngine { Effective, LabPeriodic, Analytic };

/// Per-point transmission over a probe-frequency grid via the selected engine.
/// Engine failures are annotated with the grid index.
inline Spectrum sweep_spectrum(const std::vector<double>& grid,
                               HamiltonianSpec spec, SpectrumEngine engine) {
    if (grid.size() < 2) throw DomainError("sweep_spectrum: grid too short");
    for (size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) {
            throw DomainError("sweep_spectrum: grid not strictly increasing");
        }
    }
    Spectrum sp;
    sp.omega_p = grid;
    sp.t_c.resize(grid.size());
    sp.device = spec.device;
    sp.drive = spec.drive;

    for (size_t i = 0; i < grid.size(); ++i) {
        spec.drive.probe_freq = grid[i];
        try {
            switch (engine) {
            case SpectrumEngine::Analytic: {
                const double wq = spec.effective_qubit_freq();
                const double d1 = wq - grid[i];
                const double d2 =
                    wq - spec.device.omega_r_effective() - spec.drive.mod_freq;
                sp.t_c[i] = analytic_transmission(
                    d1 - d2, d2, spec.device.gamma_relax,
                    spec.device.gamma_total(), spec.device.kappa,
                    spec.resolved_omega_phi_rabi());
                break;
            }
            case SpectrumEngine::Effective: {
                spec.frame = Frame::EffectiveTimeIndependent;
                const DensityMatrix rho = steady_state(spec, spec.rates());
                const Complex s = expectation(rho, qubit_lowering(spec.n_fock));
                sp.t_c[i] = transmission_from_sigma(s, spec.device.gamma_relax,
                                                    spec.drive.probe_rabi);
                break;
            }
            case SpectrumEngine::LabPeriodic: {
                spec.frame = Frame::LabRotatingAtProbe;
                const Complex s = periodic_steady_state_sigma(spec, spec.rates());
                sp.t_c[i] = transmission_from_sigma(s, spec.device.gamma_relax,
                                                    spec.drive.probe_rabi);
                break;
            }
            }
        } catch (const std::exception& e) {
            throw SolverError("sweep_spectrum: grid index " + std::to_string(i) +
                              ": " + e.what());
        }
    }
    return sp;
}

struct TwoLevelFit {
    double omega_q = 0.0;      // dressed qubit frequency
    double gamma_relax = 0.0;  // Gamma
    double gamma_phi = 0.0;
    double residual_norm = 0.0;
    Eigen::MatrixXd covariance;
};

namespace detail {

inline Eigen::VectorXd stack_residuals(const Spectrum& sp,
                                       const std::vector<Complex>& model) {
    Eigen::VectorXd r(2 * sp.t_c.size());
    for (size_t i = 0; i < sp.t_c.size(); ++i) {
        r[2 * i] = model[i].real() - sp.t_c[i].real();
        r[2 * i + 1] = model[i].imag() - sp.t_c[i].imag();
    }
    return r;
}

} // namespace detail

/// Nonlinear least squares of the two-level (Omega_Phi = 0) transmission on
/// joint (Re t, Im t) residuals. Initial guesses: center at min |t_c|, Gamma
/// from the dip width, gamma_phi = 0.
inline TwoLevelFit fit_two_level(const Spectrum& sp) {
    if (sp.omega_p.size() < 5) throw DomainError("fit_two_level: too few points");
    size_t i_min = 0;
    for (size_t i = 0; i < sp.t_c.size(); ++i) {
        if (std::abs(sp.t_c[i]) < std::abs(sp.t_c[i_min])) i_min = i;
    }
    // width guess: span where the dip is deeper than half its max depth
    const double depth = 1.0 - std::abs(sp.t_c[i_min]);
    double w_lo = sp.omega_p.front(), w_hi = sp.omega_p.back();
    for (size_t i = i_min; i-- > 0;) {
        if (1.0 - std::abs(sp.t_c[i]) < 0.5 * depth) { w_lo = sp.omega_p[i]; break; }
    }
    for (size_t i = i_min; i < sp.t_c.size(); ++i) {
        if (1.0 - std::abs(sp.t_c[i]) < 0.5 * depth) { w_hi = sp.omega_p[i]; break; }
    }
    Eigen::VectorXd x0(3);
    x0 << sp.omega_p[i_min], std::max(w_hi - w_lo, 1e-4), 0.0;

    auto residual = [&](const Eigen::VectorXd& x) {
        std::vector<Complex> model(sp.omega_p.size());
        const double wq = x[0], gam = std::abs(x[1]), gphi = std::abs(x[2]);
        const double gtot = gphi + 0.5 * gam;
        for (size_t i = 0; i < sp.omega_p.size(); ++i) {
            // two-level form, the Omega_Phi = 0 limit with the common factor
            // cancelled so the on-resonance point stays regular
            const double d1 = wq - sp.omega_p[i];
            model[i] = 1.0 + Complex(0, 1) * 0.5 * gam / Complex(d1, -gtot);
        }
        return detail::stack_residuals(sp, model);
    };
    const LsqResult res = levenberg_marquardt(residual, x0);
    if (!res.converged) {
        throw FitError("fit_two_level: no convergence, residual " +
                           std::to_string(res.residual_norm),
                       res.residual_norm);
    }
    return {res.x[0], std::abs(res.x[1]), std::abs(res.x[2]), res.residual_norm,
            res.covariance};
}

struct LambdaFit {
    double omega_q_motional = 0.0;  // fitted motional-average qubit frequency
    double omega_phi_rabi = 0.0;    // fitted Omega_Phi, >= 0
    double residual_norm = 0.0;
    Eigen::MatrixXd covariance;
};

struct EitFixedParams {
    double gamma_relax = 0.0;   // Gamma
    double gamma_total = 0.0;   // gamma
    double kappa = 0.0;
    double omega_r_dressed = 0.0;
    double mod_freq = 0.0;      // omega_Phi
};

/// Least squares over (omega_q_motional, Omega_Phi) with the Lambda-type model;
/// Delta1 = wqM - w_p, Delta2 = wqM - w_r~ - w_Phi, delta = Delta1 - Delta2.
inline LambdaFit fit_eit(const Spectrum& sp, const EitFixedParams& fixed,
                         double omega_phi_rabi_guess = 0.0) {
    if (sp.omega_p.size() < 5) throw DomainError("fit_eit: too few points");
    size_t i_min = 0;
    for (size_t i = 0; i < sp.t_c.size(); ++i) {
        if (std::abs(sp.t_c[i]) < std::abs(sp.t_c[i_min])) i_min = i;
    }
    Eigen::VectorXd x0(2);
    x0 << sp.omega_p[i_min],
        (omega_phi_rabi_guess > 0 ? omega_phi_rabi_guess
                                  : 0.1 * fixed.gamma_total);
    auto residual = [&](const Eigen::VectorXd& x) {
        std::vector<Complex> model(sp.omega_p.size());
        const double wqm = x[0], om = x[1];
        const double d2 = wqm - fixed.omega_r_dressed - fixed.mod_freq;
        for (size_t i = 0; i < sp.omega_p.size(); ++i) {
            const double d1 = wqm - sp.omega_p[i];
            model[i] = analytic_transmission(d1 - d2, d2, fixed.gamma_relax,
                                             fixed.gamma_total, fixed.kappa, om);
        }
        return detail::stack_residuals(sp, model);
    };
    const LsqResult res = levenberg_marquardt(residual, x0);
    if (!res.converged) {
        throw FitError("fit_eit: no convergence, residual " +
                           std::to_string(res.residual_norm),
                       res.residual_norm);
    }
    // Omega_Phi enters squared; absorb the sign into the phase convention.
    return {res.x[0], std::abs(res.x[1]), res.residual_norm, res.covariance};
}

/// In-place phase unwrapping (removes 2 pi jumps).
inline std::vector<double> unwrap_phase(const std::vector<Complex>& t_c) {
    std::vector<double> theta(t_c.size());
    double offset = 0.0;
    for (size_t i = 0; i < t_c.size(); ++i) {
        double raw = std::arg(t_c[i]);
        if (i > 0) {
            double prev = theta[i - 1];
            while (raw + offset - prev > M_PI) offset -= units::two_pi;
            while (raw + offset - prev < -M_PI) offset += units::two_pi;
        }
        theta[i] = raw + offset;
    }
    return theta;
}

struct PhaseDelay {
    double signed_ns = 0.0;     // -d theta / d omega_p (e^{-i w t} carrier)
    double magnitude_ns = 0.0;
};

/// Delay from the phase slope at omega0 via a 5-point central difference on
/// the unwrapped phase. Requires a uniform-enough grid around omega0.
inline PhaseDelay delay_from_phase(const Spectrum& sp, double omega0) {
    const auto& w = sp.omega_p;
    if (w.size() < 5) throw DomainError("delay_from_phase: need >= 5 points");
    if (omega0 < w[2] || omega0 > w[w.size() - 3]) {
        throw DomainError("delay_from_phase: omega0 must be interior to the grid");
    }
    const std::vector<double> theta = unwrap_phase(sp.t_c);
    for (size_t i = 1; i < theta.size(); ++i) {
        if (std::abs(theta[i] - theta[i - 1]) > M_PI) {
            throw DomainError("delay_from_phase: phase jump > pi between grid "
                              "points; use a finer grid");
        }
    }
    size_t c = 2;
    for (size_t i = 2; i + 2 < w.size(); ++i) {
        if (std::abs(w[i] - omega0) < std::abs(w[c] - omega0)) c = i;
    }
    const double h = (w[c + 1] - w[c - 1]) / 2.0;
    const double dtheta = (theta[c - 2] - 8.0 * theta[c - 1] +
                           8.0 * theta[c + 1] - theta[c + 2]) / (12.0 * h);
    PhaseDelay d;
    d.signed_ns = -dtheta;
    d.magnitude_ns = std::abs(dtheta);
    return d;
}

/// FWHM of the EIT window: gamma_EIT ~ sqrt(ln 2) Omega_Phi^2 / (2 sqrt(Gamma gamma)).
inline double eit_fwhm(double omega_phi_rabi, double gamma_relax,
                       double gamma_total) {
    if (gamma_relax <= 0.0 || gamma_total <= 0.0) {
        throw DomainError("eit_fwhm: Gamma and gamma must be > 0");
    }
    return std::sqrt(std::log(2.0)) * omega_phi_rabi * omega_phi_rabi /
           (2.0 * std::sqrt(gamma_relax * gamma_total));
}

struct ShiftConstants {
    double c0 = 0.0; // rad/ns per dPhi^2
    double c1 = 0.0; // rad/ns per dPhi
};

/// Regress the fitted (Omega_Phi, center) values onto delta_Phi:
/// C1 = slope of Omega_Phi vs dPhi through the origin,
/// C0 = slope of (omega_q - fitted center) vs dPhi^2 through the origin.
inline ShiftConstants calibrate_shift_constants(
    const std::vector<std::pair<double, LambdaFit>>& fits,
    double omega_q_unmodulated) {
    std::vector<double> distinct;
    for (const auto& [dphi, fit] : fits) {
        (void)fit;
        bool seen = false;
        for (double d : distinct) {
            if (std::abs(d - dphi) < 1e-15) seen = true;
        }
        if (!seen) distinct.push_back(dphi);
    }
    if (distinct.size() < 3) {
        throw DomainError("calibrate_shift_constants: need >= 3 distinct "
                          "delta_Phi values");
    }
    double sxx1 = 0, sxy1 = 0, sxx0 = 0, sxy0 = 0;
    for (const auto& [dphi, fit] : fits) {
        sxx1 += dphi * dphi;
        sxy1 += dphi * fit.omega_phi_rabi;
        const double x0 = dphi * dphi;
        sxx0 += x0 * x0;
        sxy0 += x0 * (omega_q_unmodulated - fit.omega_q_motional);
    }
    if (sxx1 < 1e-30 || sxx0 < 1e-30) {
        throw DomainError("calibrate_shift_constants: rank-deficient regression");
    }
    return {sxy0 / sxx0, sxy1 / sxx1};
}

} // namespace eitsim
