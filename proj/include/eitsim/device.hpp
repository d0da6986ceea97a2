#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "eitsim/errors.hpp"
#include "eitsim/units.hpp"

// Circuit/flux parameter maps: transmon spectrum, parametric Rabi frequency,
// coupling and power calibrations. Pure stateless functions over immutable
// parameter records.

namespace eitsim {

/// J1 by power series, accurate to better than 1e-10 on the arguments the
/// model uses (|x| < 1). The alternating factorial series converges for all x.
inline double bessel_j1(double x) {
    const double q = 0.25 * x * x;
    double term = 0.5 * x; // k = 0: (x/2) / (0! 1!)
    double sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= -q / (double(k) * double(k + 1));
        sum += term;
        if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
    }
    return sum;
}

/// Inverse of J1 on the monotone branch [0, 1.84]. Used to map a target
/// sideband Rabi rate back onto a flux-modulation magnitude.
inline double bessel_j1_inverse(double y) {
    if (y < 0.0) throw DomainError("bessel_j1_inverse: negative argument");
    const double j1_max = bessel_j1(1.8411837813406593);
    if (y > j1_max) {
        throw DomainError("bessel_j1_inverse: value " + std::to_string(y) +
                          " above J1 maximum " + std::to_string(j1_max));
    }
    double x = 2.0 * y; // small-argument seed J1(x) ~ x/2
    for (int i = 0; i < 60; ++i) {
        const double f = bessel_j1(x) - y;
        const double h = 1e-7;
        const double df = (bessel_j1(x + h) - bessel_j1(x - h)) / (2.0 * h);
        const double step = f / df;
        x -= step;
        if (std::abs(step) < 1e-14) break;
    }
    return x;
}

/// E_J(phi) = E_J0 sqrt(cos^2(pi phi) + d^2 sin^2(pi phi)), phi in Phi_0 units.
/// Equals E_J0 cos(pi phi) sqrt(1 + d^2 tan^2(pi phi)) away from half-integer
/// flux and extends it continuously through the limit E_J0 * d.
inline double josephson_energy(double phi, double ej0, double d) {
    const double c = std::cos(M_PI * phi);
    const double s = std::sin(M_PI * phi);
    return ej0 * std::sqrt(c * c + d * d * s * s);
}

/// Transmon transition frequency omega_q(phi) = sqrt(8 E_c E_J(phi)) - E_c.
inline double qubit_frequency(double phi, double ec, double ej0, double d) {
    const double ej = josephson_energy(phi, ej0, d);
    if (ej <= 0.0) throw DomainError("qubit_frequency: E_J(phi) <= 0");
    return std::sqrt(8.0 * ec * ej) - ec;
}

/// d omega_q / d phi by central difference, step 1e-6 Phi_0. Used to derive
/// eps_Phi from delta_Phi.
inline double flux_slope(double phi, double ec, double ej0, double d) {
    const double h = 1e-6;
    return (qubit_frequency(phi + h, ec, ej0, d) -
            qubit_frequency(phi - h, ec, ej0, d)) / (2.0 * h);
}

/// Sideband Rabi rate Omega_Phi = 2 g J1(eps_Phi / (2 omega_Phi)).
inline double parametric_rabi(double eps_phi, double omega_phi, double g) {
    if (omega_phi <= 0.0) throw DomainError("parametric_rabi: omega_phi <= 0");
    return 2.0 * g * bessel_j1(eps_phi / (2.0 * omega_phi));
}

/// g = sqrt((omega_r - omega_r_dressed)(omega_q - omega_r)).
inline double coupling_from_shift(double omega_r_bare, double omega_r_dressed,
                                  double omega_q) {
    const double prod = (omega_r_bare - omega_r_dressed) * (omega_q - omega_r_bare);
    if (prod < 0.0) {
        throw DomainError("coupling_from_shift: inconsistent inputs, "
                          "(w_r - w_r~)(w_q - w_r) < 0");
    }
    return std::sqrt(prod);
}

/// P_p = hbar omega_q Omega_p^2 / (2 Gamma), all angular inputs in rad/ns.
/// Returns watts.
inline double probe_power(double omega_q_dressed, double probe_rabi, double gamma_relax) {
    if (omega_q_dressed <= 0.0 || probe_rabi <= 0.0 || gamma_relax <= 0.0) {
        throw DomainError("probe_power: non-positive input");
    }
    // rad/ns -> rad/s carries one factor 1e9 per frequency; net 1e18.
    return units::hbar_J_s * 1e18 * omega_q_dressed * probe_rabi * probe_rabi /
           (2.0 * gamma_relax);
}

/// Inverse of probe_power: Omega_p from power in watts.
inline double probe_rabi_from_power(double power_watts, double omega_q_dressed,
                                    double gamma_relax) {
    if (power_watts <= 0.0 || omega_q_dressed <= 0.0 || gamma_relax <= 0.0) {
        throw DomainError("probe_rabi_from_power: non-positive input");
    }
    return std::sqrt(power_watts * 2.0 * gamma_relax /
                     (units::hbar_J_s * 1e18 * omega_q_dressed));
}

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

/// Static circuit constants. Angular frequencies in rad/ns, flux in Phi_0
/// units, interaction length in micrometers.
struct DeviceParams {
    double ec = 0.0;           // charging energy E_c
    double ej0 = 0.0;          // E_J(Phi = 0)
    double d = 0.0;            // junction asymmetry, in [0, 1)
    double g = 0.0;            // qubit-resonator coupling
    double gamma_relax = 0.0;  // qubit relaxation rate Gamma
    double gamma_phi = 0.0;    // pure dephasing rate
    double kappa = 0.0;        // resonator loss rate
    double omega_r = 0.0;      // bare resonator frequency
    double omega_r_dressed = 0.0;
    double flux_bias = 0.0;    // Phi in Phi_0 units
    double length_um = 0.0;    // interaction length L
    std::optional<double> shift_c0;   // motional shift constant, rad/ns per dPhi^2
    std::optional<double> rabi_c1;    // sideband constant, rad/ns per dPhi
    std::optional<double> omega_q_override; // dressed/calibrated qubit frequency

    /// gamma = gamma_phi + Gamma/2, derived, never stored.
    double gamma_total() const { return gamma_phi + 0.5 * gamma_relax; }

    /// Qubit frequency used by Hamiltonians: the calibrated override when
    /// present, else the bare transmon formula at the flux bias.
    double omega_q() const {
        if (omega_q_override) return *omega_q_override;
        return qubit_frequency(flux_bias, ec, ej0, d);
    }

    /// Resonator frequency for the effective (dressed) frame.
    double omega_r_effective() const {
        return omega_r_dressed > 0.0 ? omega_r_dressed : omega_r;
    }

    void validate() const {
        if (d < 0.0 || d >= 1.0) throw ConfigError("device: d must be in [0, 1)");
        const double vals[] = {ec, ej0, g, gamma_relax, gamma_phi, kappa, omega_r};
        for (double v : vals) {
            if (v < 0.0) throw ConfigError("device: negative rate or frequency");
        }
    }
};

/// Probe and flux-modulation settings. Angular frequencies in rad/ns.
struct DriveConfig {
    double probe_rabi = 0.0;  // Omega_p
    double probe_freq = 0.0;  // omega_p
    double delta_phi = 0.0;   // flux modulation magnitude, Phi_0 units
    double mod_freq = 0.0;    // omega_Phi
    std::optional<double> eps_phi;        // frequency-modulation magnitude
    std::optional<double> omega_phi_rabi; // explicit Omega_Phi override

    /// eps_Phi, derived from delta_phi via the first-order flux slope at the
    /// bias point when not given explicitly.
    double resolved_eps_phi(const DeviceParams& dev) const {
        if (eps_phi) return *eps_phi;
        return std::abs(flux_slope(dev.flux_bias, dev.ec, dev.ej0, dev.d)) * delta_phi;
    }

    /// Small-argument check: the model assumes eps_Phi << 2 omega_Phi.
    /// Returns the ratio; callers warn above 0.5 and reject at >= 1.
    double modulation_ratio(const DeviceParams& dev) const {
        if (mod_freq <= 0.0) return 0.0;
        return resolved_eps_phi(dev) / (2.0 * mod_freq);
    }
};

} // namespace eitsim
