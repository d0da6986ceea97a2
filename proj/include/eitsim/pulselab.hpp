#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "eitsim/dynamics.hpp"

// Time-domain experiments: slow light, storage/retrieval, pulse shaping, and
// the pulse metrics (delay, group velocity, <N_R>, eta, eta_c).

namespace eitsim {

/// Gaussian probe pulse Omega_p(t) = amp * exp(-(t - t0)^2 / tau_d^2).
struct ProbePulse {
    double amp = 0.0;      // Omega_p^s, rad/ns
    double tau_d = 0.0;    // ns
    double t0 = 0.0;       // center, ns
    double carrier = 0.0;  // omega_p, rad/ns
};

inline double gaussian_probe(double t, const ProbePulse& p) {
    const double u = (t - p.t0) / p.tau_d;
    return p.amp * std::exp(-u * u);
}

/// Piecewise-constant modulation levels joined by raised-cosine ramps centered
/// on the segment boundaries; exact level inside segment interiors.
struct ModulationSchedule {
    struct Segment {
        double t_start = 0.0; // ns
        double t_end = 0.0;
        double level = 0.0;   // Omega_Phi target, rad/ns
    };
    std::vector<Segment> segments;
    double ramp = 20.0; // ns, transition duration

    void validate() const {
        for (size_t i = 0; i < segments.size(); ++i) {
            if (segments[i].t_end <= segments[i].t_start) {
                throw DomainError("schedule: segment has non-positive duration");
            }
            if (segments[i].level < 0.0) {
                throw DomainError("schedule: negative level");
            }
            if (i > 0 && segments[i].t_start < segments[i - 1].t_end) {
                throw DomainError("schedule: overlapping or unordered segments");
            }
        }
        if (ramp < 0.0) throw DomainError("schedule: negative ramp");
    }
};

inline double schedule_envelope(double t, const ModulationSchedule& sched) {
    // level and boundary structure: outside all segments the level is 0
    auto level_at = [&](double tt) {
        for (const auto& s : sched.segments) {
            if (tt >= s.t_start && tt < s.t_end) return s.level;
        }
        return 0.0;
    };
    if (sched.ramp <= 0.0) return level_at(t);
    // collect boundary crossings within ramp/2 of t
    std::vector<double> boundaries;
    for (const auto& s : sched.segments) {
        boundaries.push_back(s.t_start);
        boundaries.push_back(s.t_end);
    }
    for (double tb : boundaries) {
        if (std::abs(t - tb) <= 0.5 * sched.ramp) {
            const double before = level_at(tb - 0.51 * sched.ramp);
            const double after = level_at(tb + 0.51 * sched.ramp);
            if (before == after) continue;
            const double s = (t - (tb - 0.5 * sched.ramp)) / sched.ramp;
            return before + (after - before) * 0.5 * (1.0 - std::cos(M_PI * s));
        }
    }
    return level_at(t);
}

struct PulseTrace {
    std::vector<double> times;          // ns
    std::vector<double> alpha_out_abs;  // |alpha_out|
    std::vector<double> alpha_in_abs;   // |alpha_in| (diagnostic)
    std::vector<double> res_pop;        // <a^dag a>
    std::vector<double> qubit_pop;      // <sigma^dag sigma>
    std::vector<double> mod_envelope;   // Omega_Phi(t), rad/ns
};

enum class PropagationFrame { Effective, Lab };

struct PropagateOptions {
    PropagationFrame frame = PropagationFrame::Effective;
    double mod_freq = 0.0;  // omega_Phi, rad/ns (required)
    int n_fock = 4;
    double tol = 1e-8;
    // Lab frame only: bare-device override of the qubit frequency. When unset
    // the device's omega_q() is used directly.
    std::optional<double> omega_q_lab;
    std::optional<double> omega_r_lab;
};

/// Integrate the master equation with time-dependent Omega_p(t) and
/// Omega_Phi(t); forms |alpha_out| = |alpha_in + i sqrt(Gamma/2) <sigma>| with
/// alpha_in = Omega_p/sqrt(2 Gamma). In the lab frame <sigma>(t) is low-pass
/// filtered by a moving average over one modulation period first.
inline PulseTrace propagate(const DeviceParams& device, const ProbePulse& pulse,
                            const ModulationSchedule& schedule,
                            const std::vector<double>& t_grid,
                            const PropagateOptions& opts) {
    schedule.validate();
    if (opts.mod_freq <= 0.0) throw ConfigError("propagate: mod_freq required");
    if (t_grid.size() < 3) throw DomainError("propagate: grid too short");
    const LindbladRates rates{device.gamma_relax, device.kappa, device.gamma_phi};
    const detail::SpaceOps ops(opts.n_fock);
    const detail::DissipatorCache diss(ops, rates);

    Trajectory traj;
    if (opts.frame == PropagationFrame::Effective) {
        const double d_q = device.omega_q() - pulse.carrier;
        const double d_r =
            device.omega_r_effective() - pulse.carrier + opts.mod_freq;
        const OperatorMatrix h0 = d_q * ops.nq + d_r * ops.na;
        auto rhs = [&](double t, const DensityMatrix& rho) {
            const OperatorMatrix h =
                h0 + 0.5 * schedule_envelope(t, schedule) * ops.sideband -
                0.5 * gaussian_probe(t, pulse) * ops.drive_x;
            return diss.apply(h, rho);
        };
        const double cap = std::min(pulse.tau_d / 10.0,
                                    schedule.ramp > 0 ? schedule.ramp / 5.0
                                                      : pulse.tau_d / 10.0);
        traj = integrate_master(rhs, ground_state(opts.n_fock), t_grid, opts.tol,
                                cap, false);
    } else {
        // Lab frame: schedule levels are Omega_Phi targets; invert the Bessel
        // relation to recover the flux-modulation magnitude per time.
        const double wq = opts.omega_q_lab.value_or(device.omega_q());
        const double wr = opts.omega_r_lab.value_or(device.omega_r);
        const OperatorMatrix h0 = (wq - pulse.carrier) * ops.nq +
                                  (wr - pulse.carrier) * ops.na +
                                  device.g * ops.jc;
        auto eps_of = [&](double t) {
            const double target = schedule_envelope(t, schedule);
            if (target <= 0.0) return 0.0;
            return 2.0 * opts.mod_freq *
                   bessel_j1_inverse(target / (2.0 * device.g));
        };
        auto rhs = [&](double t, const DensityMatrix& rho) {
            const double mod =
                0.5 * eps_of(t) * std::sin(opts.mod_freq * t);
            const OperatorMatrix h = h0 + mod * ops.nq -
                                     0.5 * gaussian_probe(t, pulse) * ops.drive_x;
            return diss.apply(h, rho);
        };
        const double period = units::two_pi / opts.mod_freq;
        traj = integrate_master(rhs, ground_state(opts.n_fock), t_grid, opts.tol,
                                period / 20.0, false);
    }

    // Lab frame: moving average of <sigma> over one modulation period.
    std::vector<Complex> sigma = traj.sigma_exp;
    if (opts.frame == PropagationFrame::Lab) {
        const double period = units::two_pi / opts.mod_freq;
        std::vector<Complex> filtered(sigma.size());
        for (size_t i = 0; i < sigma.size(); ++i) {
            Complex acc(0, 0);
            int n = 0;
            for (size_t j = 0; j < sigma.size(); ++j) {
                if (std::abs(t_grid[j] - t_grid[i]) <= 0.5 * period) {
                    acc += sigma[j];
                    ++n;
                }
            }
            filtered[i] = acc / double(n);
        }
        sigma = filtered;
    }

    PulseTrace trace;
    trace.times = t_grid;
    trace.alpha_out_abs.resize(t_grid.size());
    trace.alpha_in_abs.resize(t_grid.size());
    trace.res_pop = traj.res_pop;
    trace.qubit_pop = traj.qubit_pop;
    trace.mod_envelope.resize(t_grid.size());
    const double root_half_gamma = std::sqrt(0.5 * device.gamma_relax);
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const double a_in =
            gaussian_probe(t_grid[i], pulse) / std::sqrt(2.0 * device.gamma_relax);
        trace.alpha_in_abs[i] = a_in;
        trace.alpha_out_abs[i] =
            std::abs(a_in + Complex(0, 1) * root_half_gamma * sigma[i]);
        trace.mod_envelope[i] = schedule_envelope(t_grid[i], schedule);
    }
    return trace;
}

struct DelayAnalysis {
    double delta_t_ns = 0.0;
    double group_velocity_km_s = 0.0; // L / Delta_t (um/ns = km/s)
    double effective_depth = 0.0;     // D = Delta_t Omega_Phi^2 / Gamma
};

namespace detail {

/// Sub-sample peak location by 3-point parabolic interpolation around argmax.
inline double interpolated_peak_time(const std::vector<double>& t,
                                     const std::vector<double>& y) {
    size_t i = std::distance(y.begin(), std::max_element(y.begin(), y.end()));
    double spread = *std::max_element(y.begin(), y.end()) -
                    *std::min_element(y.begin(), y.end());
    if (spread < 1e-9) throw DomainError("peak localization: flat trace");
    if (i == 0 || i + 1 == y.size()) return t[i];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) < 1e-300) return t[i];
    const double shift = 0.5 * (y0 - y2) / denom;
    return t[i] + shift * (t[i + 1] - t[i]);
}

} // namespace detail

/// Pulse-peak delay of trace vs the reference center, with group velocity
/// v_g = L / Delta_t and effective depth D = Delta_t Omega_Phi^2 / Gamma.
inline DelayAnalysis delay_time(const PulseTrace& trace,
                                const PulseTrace& reference,
                                const DeviceParams& device,
                                double omega_phi_rabi) {
    if (trace.times.size() != reference.times.size()) {
        throw DimensionError("delay_time: traces not on a common grid");
    }
    const double t_peak =
        detail::interpolated_peak_time(trace.times, trace.alpha_out_abs);
    const double t_ref =
        detail::interpolated_peak_time(reference.times, reference.alpha_out_abs);
    DelayAnalysis d;
    d.delta_t_ns = t_peak - t_ref;
    if (std::abs(d.delta_t_ns) > 1e-12) {
        d.group_velocity_km_s = device.length_um / d.delta_t_ns;
    }
    if (device.gamma_relax > 0.0) {
        d.effective_depth =
            d.delta_t_ns * omega_phi_rabi * omega_phi_rabi / device.gamma_relax;
    }
    return d;
}

/// <N_R> = Omega_p^2 tau_d sqrt(pi/2) / (2 Gamma), the mean photon number of
/// the input pulse (the power relation divided by hbar omega cancels hbar omega).
inline double mean_input_photons(const ProbePulse& pulse, double gamma_relax) {
    if (gamma_relax <= 0.0) throw DomainError("mean_input_photons: Gamma <= 0");
    return pulse.amp * pulse.amp * pulse.tau_d * std::sqrt(M_PI / 2.0) /
           (2.0 * gamma_relax);
}

namespace detail {

inline double trapezoid_energy(const PulseTrace& tr, double t_a, double t_b) {
    double acc = 0.0;
    for (size_t i = 1; i < tr.times.size(); ++i) {
        const double lo = std::max(tr.times[i - 1], t_a);
        const double hi = std::min(tr.times[i], t_b);
        if (hi <= lo) continue;
        // linear interpolation of |alpha|^2 onto the clipped interval
        auto val = [&](double t) {
            const double f = (t - tr.times[i - 1]) / (tr.times[i] - tr.times[i - 1]);
            const double a = tr.alpha_out_abs[i - 1] +
                             f * (tr.alpha_out_abs[i] - tr.alpha_out_abs[i - 1]);
            return a * a;
        };
        acc += 0.5 * (val(lo) + val(hi)) * (hi - lo);
    }
    return acc;
}

} // namespace detail

/// eta = (retrieved-pulse energy within the window) / (total reference energy).
inline double storage_efficiency(const PulseTrace& trace,
                                 const PulseTrace& reference, double window_a,
                                 double window_b) {
    if (window_b <= window_a) throw DomainError("storage_efficiency: empty window");
    if (window_a < trace.times.front() || window_b > trace.times.back()) {
        throw DomainError("storage_efficiency: window outside grid");
    }
    const double ref = detail::trapezoid_energy(
        reference, reference.times.front(), reference.times.back());
    if (ref <= 0.0) throw DomainError("storage_efficiency: empty reference");
    return detail::trapezoid_energy(trace, window_a, window_b) / ref;
}

struct CaptureResult {
    double eta_c = 0.0;
    double t_measured = 0.0; // first sample after the turn-off ramp completes
    bool no_input = false;   // N_R below threshold, eta_c forced to 0
};

/// eta_c = <a^dag a>(t*) / <N_R>, with t* the first sample after Tc at which
/// the modulation envelope has ramped to (almost) zero.
inline CaptureResult capture_efficiency(const PulseTrace& trace, double t_c,
                                        double n_r) {
    if (t_c > trace.times.back()) {
        throw DomainError("capture_efficiency: Tc after grid end");
    }
    if (n_r < 1e-12) return {0.0, t_c, true};
    const double peak_level =
        *std::max_element(trace.mod_envelope.begin(), trace.mod_envelope.end());
    size_t idx = trace.times.size() - 1;
    for (size_t i = 0; i < trace.times.size(); ++i) {
        if (trace.times[i] >= t_c && trace.mod_envelope[i] <= 0.01 * peak_level) {
            idx = i;
            break;
        }
    }
    return {trace.res_pop[idx] / n_r, trace.times[idx], false};
}

/// Storage preset schedule: write level until Tc, off during Ts, retrieval
/// level afterwards. Returns the schedule and the retrieval turn-on time.
inline ModulationSchedule storage_schedule(double t_begin, double t_c, double t_s,
                                           double write_level,
                                           double retrieve_level, double t_end,
                                           double ramp = 20.0) {
    ModulationSchedule s;
    s.ramp = ramp;
    const double t_off = t_c + ramp;      // off after the turn-off ramp
    const double t_on = t_off + t_s;      // retrieval turn-on starts here
    s.segments.push_back({t_begin, t_c + 0.5 * ramp, write_level});
    s.segments.push_back({t_on + 0.5 * ramp, t_end, retrieve_level});
    s.validate();
    return s;
}

/// Storage-and-retrieval run with independent write/retrieve levels.
inline PulseTrace retrieve_shaped(const DeviceParams& device,
                                  const ProbePulse& pulse, double t_s,
                                  double write_level, double retrieve_level,
                                  const std::vector<double>& t_grid,
                                  const PropagateOptions& opts,
                                  double t_c = 0.0, double ramp = 20.0) {
    if (t_c == 0.0) t_c = pulse.t0 + pulse.tau_d; // end of the Gaussian
    const ModulationSchedule sched =
        storage_schedule(t_grid.front() - 1.0, t_c, t_s, write_level,
                         retrieve_level, t_grid.back() + 1.0, ramp);
    return propagate(device, pulse, sched, t_grid, opts);
}

struct DecayFit {
    double rate = 0.0; // angular, rad/ns
    double residual_norm = 0.0;
    bool underdetermined = false; // exact fit through <= 2 points
};

/// Linear regression of ln(eta) vs T_s; returns the decay rate (-slope).
inline DecayFit storage_decay_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw DomainError("storage_decay_fit: need >= 2 points");
    for (const auto& [ts, eta] : points) {
        (void)ts;
        if (eta <= 0.0) throw DomainError("storage_decay_fit: non-positive eta");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(points.size());
    for (const auto& [ts, eta] : points) {
        const double y = std::log(eta);
        sx += ts;
        sy += y;
        sxx += ts * ts;
        sxy += ts * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) {
        throw DomainError("storage_decay_fit: degenerate abscissae");
    }
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double rss = 0.0;
    for (const auto& [ts, eta] : points) {
        const double r = std::log(eta) - (intercept + slope * ts);
        rss += r * r;
    }
    return {-slope, std::sqrt(rss), points.size() <= 2};
}

} // namespace eitsim
