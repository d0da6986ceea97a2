// Propagates a 300 ns Gaussian probe through the transparency window and
// prints the peak delay against the input pulse.

#include <cstdio>

#include "eitsim/pulselab.hpp"

int main() {
    using namespace eitsim;

    DeviceParams dev;
    dev.ec = units::ghz(0.29);
    dev.ej0 = units::ghz(19.6);
    dev.d = 0.32;
    dev.g = units::mhz(73.3);
    dev.gamma_relax = units::mhz(121.0);
    dev.gamma_phi = units::mhz(3.0);
    dev.kappa = units::mhz(0.78);
    dev.omega_r = units::ghz(5.539);
    dev.omega_r_dressed = units::ghz(5.532);
    dev.flux_bias = -0.11;
    dev.length_um = 340.0;
    dev.omega_q_override = units::ghz(6.2565);

    ProbePulse pulse;
    pulse.amp = units::mhz(7.0);
    pulse.tau_d = 300.0;
    pulse.t0 = 900.0;
    pulse.carrier = dev.omega_q();

    const double level = units::mhz(13.3);
    ModulationSchedule sched;
    sched.ramp = 0.0;
    sched.segments.push_back({-1.0, 2500.0, level});

    std::vector<double> grid;
    for (double t = 0.0; t <= 2400.0; t += 2.0) grid.push_back(t);

    PropagateOptions opts;
    opts.mod_freq = units::mhz(724.5);
    const PulseTrace trace = propagate(dev, pulse, sched, grid, opts);

    PulseTrace ref;
    ref.times = grid;
    for (double t : grid) {
        ref.alpha_out_abs.push_back(gaussian_probe(t, pulse) /
                                    std::sqrt(2.0 * dev.gamma_relax));
    }
    const DelayAnalysis d = delay_time(trace, ref, dev, level);
    std::printf("peak delay: %.1f ns, v_g = %.2f km/s, depth D = %.2f\n",
                d.delta_t_ns, d.group_velocity_km_s, d.effective_depth);
    return 0;
}
