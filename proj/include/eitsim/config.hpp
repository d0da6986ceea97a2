#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eitsim/device.hpp"
#include "eitsim/errors.hpp"
#include "eitsim/pulselab.hpp"
#include "eitsim/units.hpp"

// Strict JSON configuration. Every dimensional key carries its unit suffix
// (GHz, MHz, ns, um, Phi0) and is converted to internal rad/ns at the
// boundary; unknown keys are rejected by name.

namespace eitsim {

struct SolverConfig {
    int n_fock = 4;
    double tol = 1e-8;
    std::string frame = "effective"; // "effective" | "lab"
};

struct SweepConfig {
    std::string axis;
    double start = 0.0;
    double stop = 0.0;
    int points = 0;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

struct ExperimentConfig {
    DeviceParams device;
    DriveConfig drive;
    ProbePulse pulse;
    ModulationSchedule schedule;
    SolverConfig solver;
    std::optional<SweepConfig> sweep;
    OutputConfig output;
    nlohmann::ordered_json raw; // snapshot for manifests
};

namespace detail {

using Json = nlohmann::ordered_json;

inline void reject_unknown(const Json& obj, const std::set<std::string>& known,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

inline double require_number(const Json& obj, const std::string& key,
                             const std::string& where) {
    if (!obj.contains(key)) {
        throw ConfigError("missing key '" + key + "' in " + where);
    }
    if (!obj[key].is_number()) {
        throw ConfigError("key '" + key + "' in " + where + " must be a number");
    }
    return obj[key].get<double>();
}

inline std::optional<double> optional_number(const Json& obj,
                                             const std::string& key,
                                             const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj[key].is_number()) {
        throw ConfigError("key '" + key + "' in " + where + " must be a number");
    }
    return obj[key].get<double>();
}

inline DeviceParams parse_device(const Json& j) {
    reject_unknown(j,
                   {"ec_GHz", "ej0_GHz", "asymmetry", "g_MHz", "gamma_MHz",
                    "gamma_phi_MHz", "kappa_MHz", "omega_r_GHz",
                    "omega_r_dressed_GHz", "flux_bias_Phi0", "length_um",
                    "shift_c0_MHz_per_mPhi0_sq", "rabi_c1_MHz_per_mPhi0",
                    "omega_q_GHz"},
                   "device");
    DeviceParams d;
    d.ec = units::ghz(require_number(j, "ec_GHz", "device"));
    d.ej0 = units::ghz(require_number(j, "ej0_GHz", "device"));
    d.d = require_number(j, "asymmetry", "device");
    d.g = units::mhz(require_number(j, "g_MHz", "device"));
    d.gamma_relax = units::mhz(require_number(j, "gamma_MHz", "device"));
    d.gamma_phi = units::mhz(require_number(j, "gamma_phi_MHz", "device"));
    d.kappa = units::mhz(require_number(j, "kappa_MHz", "device"));
    d.omega_r = units::ghz(require_number(j, "omega_r_GHz", "device"));
    if (auto v = optional_number(j, "omega_r_dressed_GHz", "device")) {
        d.omega_r_dressed = units::ghz(*v);
    }
    d.flux_bias = require_number(j, "flux_bias_Phi0", "device");
    d.length_um = require_number(j, "length_um", "device");
    // C0 in MHz per (mPhi0)^2 and C1 in MHz per mPhi0, the natural scales of
    // the calibration sweep; internal units are rad/ns per Phi0 powers.
    if (auto v = optional_number(j, "shift_c0_MHz_per_mPhi0_sq", "device")) {
        d.shift_c0 = units::mhz(*v) * 1e6;
    }
    if (auto v = optional_number(j, "rabi_c1_MHz_per_mPhi0", "device")) {
        d.rabi_c1 = units::mhz(*v) * 1e3;
    }
    if (auto v = optional_number(j, "omega_q_GHz", "device")) {
        d.omega_q_override = units::ghz(*v);
    }
    d.validate();
    return d;
}

inline DriveConfig parse_drive(const Json& j) {
    reject_unknown(j,
                   {"probe_rabi_MHz", "probe_freq_GHz", "delta_phi_mPhi0",
                    "mod_freq_MHz", "eps_phi_MHz", "omega_phi_rabi_MHz"},
                   "drive");
    DriveConfig dr;
    dr.probe_rabi = units::mhz(require_number(j, "probe_rabi_MHz", "drive"));
    dr.probe_freq = units::ghz(require_number(j, "probe_freq_GHz", "drive"));
    dr.delta_phi = 1e-3 * require_number(j, "delta_phi_mPhi0", "drive");
    dr.mod_freq = units::mhz(require_number(j, "mod_freq_MHz", "drive"));
    if (auto v = optional_number(j, "eps_phi_MHz", "drive")) {
        dr.eps_phi = units::mhz(*v);
    }
    if (auto v = optional_number(j, "omega_phi_rabi_MHz", "drive")) {
        dr.omega_phi_rabi = units::mhz(*v);
    }
    if (dr.probe_rabi < 0 || dr.mod_freq < 0) {
        throw ConfigError("drive: negative rate");
    }
    return dr;
}

inline ProbePulse parse_pulse(const Json& j) {
    reject_unknown(j, {"amp_MHz", "tau_d_ns", "t0_ns", "carrier_GHz"}, "pulse");
    ProbePulse p;
    p.amp = units::mhz(require_number(j, "amp_MHz", "pulse"));
    p.tau_d = require_number(j, "tau_d_ns", "pulse");
    p.t0 = require_number(j, "t0_ns", "pulse");
    p.carrier = units::ghz(require_number(j, "carrier_GHz", "pulse"));
    if (p.tau_d <= 0) throw ConfigError("pulse: tau_d_ns must be positive");
    if (p.amp < 0) throw ConfigError("pulse: negative amp_MHz");
    return p;
}

inline ModulationSchedule parse_schedule(const Json& j) {
    reject_unknown(j, {"ramp_ns", "segments"}, "schedule");
    ModulationSchedule s;
    if (auto v = optional_number(j, "ramp_ns", "schedule")) s.ramp = *v;
    if (j.contains("segments")) {
        if (!j["segments"].is_array()) {
            throw ConfigError("schedule.segments must be an array");
        }
        for (const auto& seg : j["segments"]) {
            reject_unknown(seg, {"t_start_ns", "t_end_ns", "level_MHz"},
                           "schedule.segments[]");
            ModulationSchedule::Segment out;
            out.t_start = require_number(seg, "t_start_ns", "schedule segment");
            out.t_end = require_number(seg, "t_end_ns", "schedule segment");
            out.level = units::mhz(require_number(seg, "level_MHz", "schedule segment"));
            s.segments.push_back(out);
        }
    }
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline SolverConfig parse_solver(const Json& j) {
    reject_unknown(j, {"n_fock", "tol", "frame"}, "solver");
    SolverConfig s;
    if (j.contains("n_fock")) {
        if (!j["n_fock"].is_number_integer()) {
            throw ConfigError("solver.n_fock must be an integer");
        }
        s.n_fock = j["n_fock"].get<int>();
        if (s.n_fock < 2 || 2 * s.n_fock > 64) {
            throw ConfigError("solver.n_fock out of range [2, 32]");
        }
    }
    if (auto v = optional_number(j, "tol", "solver")) {
        s.tol = *v;
        if (s.tol <= 0) throw ConfigError("solver.tol must be positive");
    }
    if (j.contains("frame")) {
        s.frame = j["frame"].get<std::string>();
        if (s.frame != "effective" && s.frame != "lab") {
            throw ConfigError("solver.frame must be 'effective' or 'lab'");
        }
    }
    return s;
}

inline SweepConfig parse_sweep(const Json& j) {
    reject_unknown(j, {"axis", "start", "stop", "points"}, "sweep");
    SweepConfig s;
    if (!j.contains("axis") || !j["axis"].is_string()) {
        throw ConfigError("sweep.axis must be a string");
    }
    s.axis = j["axis"].get<std::string>();
    s.start = require_number(j, "start", "sweep");
    s.stop = require_number(j, "stop", "sweep");
    s.points = int(require_number(j, "points", "sweep"));
    if (s.points < 2) throw ConfigError("sweep.points must be >= 2");
    return s;
}

inline OutputConfig parse_output(const Json& j) {
    reject_unknown(j, {"directory", "formats"}, "output");
    OutputConfig o;
    if (j.contains("directory")) o.directory = j["directory"].get<std::string>();
    if (j.contains("formats")) {
        o.formats.clear();
        for (const auto& f : j["formats"]) {
            const std::string s = f.get<std::string>();
            if (s != "csv" && s != "json" && s != "svg") {
                throw ConfigError("output.formats: unsupported format '" + s + "'");
            }
            o.formats.push_back(s);
        }
    }
    return o;
}

} // namespace detail

inline ExperimentConfig parse_config_json(const nlohmann::ordered_json& j) {
    detail::reject_unknown(
        j, {"device", "drive", "pulse", "schedule", "solver", "sweep", "output"},
        "top level");
    if (!j.contains("device")) throw ConfigError("missing 'device' block");
    ExperimentConfig cfg;
    try {
        cfg.device = detail::parse_device(j["device"]);
        if (j.contains("drive")) cfg.drive = detail::parse_drive(j["drive"]);
        if (j.contains("pulse")) cfg.pulse = detail::parse_pulse(j["pulse"]);
        if (j.contains("schedule")) {
            cfg.schedule = detail::parse_schedule(j["schedule"]);
        }
        if (j.contains("solver")) cfg.solver = detail::parse_solver(j["solver"]);
        if (j.contains("sweep")) cfg.sweep = detail::parse_sweep(j["sweep"]);
        if (j.contains("output")) cfg.output = detail::parse_output(j["output"]);
    } catch (const DimensionError& e) {
        throw ConfigError(e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    cfg.raw = j;
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config_json(j);
}

} // namespace eitsim
