#pragma once

#include <numbers>

// Internal unit system: angular frequency in rad/ns, time in ns.
// All paper-scale frequencies then land in O(1)-O(40) magnitudes.
// IO layers convert to/from ordinary GHz / MHz.

namespace eitsim::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double hbar_J_s = 1.054571817e-34;

// ordinary frequency -> angular rad/ns
inline constexpr double ghz(double f) { return two_pi * f; }
inline constexpr double mhz(double f) { return two_pi * 1e-3 * f; }

// angular rad/ns -> ordinary frequency
inline constexpr double to_ghz(double w) { return w / two_pi; }
inline constexpr double to_mhz(double w) { return 1e3 * w / two_pi; }

} // namespace eitsim::units
