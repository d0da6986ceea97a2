#include <catch2/catch_amalgamated.hpp>

#include "eitsim/pulselab.hpp"

using namespace eitsim;

namespace {

DeviceParams paper_device() {
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
    return dev;
}

std::vector<double> time_grid(double t_end, double dt) {
    std::vector<double> g;
    for (double t = 0.0; t <= t_end; t += dt) g.push_back(t);
    return g;
}

PulseTrace reference_trace(const ProbePulse& pulse,
                           const std::vector<double>& grid, double gamma) {
    PulseTrace tr;
    tr.times = grid;
    for (double t : grid) {
        const double a = gaussian_probe(t, pulse) / std::sqrt(2.0 * gamma);
        tr.alpha_out_abs.push_back(a);
        tr.alpha_in_abs.push_back(a);
        tr.res_pop.push_back(0.0);
        tr.qubit_pop.push_back(0.0);
        tr.mod_envelope.push_back(0.0);
    }
    return tr;
}

double trace_energy(const PulseTrace& tr, const std::vector<double>& series) {
    double acc = 0.0;
    for (size_t i = 1; i < tr.times.size(); ++i) {
        acc += 0.5 * (series[i] * series[i] + series[i - 1] * series[i - 1]) *
               (tr.times[i] - tr.times[i - 1]);
    }
    return acc;
}

} // namespace

TEST_CASE("gaussian probe envelope") {
    ProbePulse p{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
    SECTION("peak and 1/e points") {
        CHECK(gaussian_probe(150.0, p) == Catch::Approx(p.amp));
        CHECK(gaussian_probe(100.0, p) == Catch::Approx(p.amp / std::exp(1.0)));
        CHECK(gaussian_probe(200.0, p) == Catch::Approx(p.amp / std::exp(1.0)));
    }
    SECTION("energy integral matches the closed form") {
        // quadrature oracle vs amp^2 tau sqrt(pi/2)
        double acc = 0.0;
        const double dt = 0.01;
        for (double t = -400.0; t <= 700.0; t += dt) {
            const double w = gaussian_probe(t, p);
            acc += w * w * dt;
        }
        CHECK(acc == Catch::Approx(p.amp * p.amp * p.tau_d *
                                   std::sqrt(M_PI / 2.0)).epsilon(1e-6));
    }
}

TEST_CASE("modulation schedule envelope") {
    SECTION("single all-covering segment is constant") {
        ModulationSchedule s;
        s.ramp = 20.0;
        s.segments.push_back({-100.0, 1000.0, units::mhz(18.0)});
        for (double t : {0.0, 113.0, 700.0}) {
            CHECK(schedule_envelope(t, s) == Catch::Approx(units::mhz(18.0)));
        }
    }
    SECTION("ramp midpoint is the mean of the adjacent levels") {
        ModulationSchedule s;
        s.ramp = 20.0;
        s.segments.push_back({0.0, 100.0, units::mhz(18.0)});
        s.segments.push_back({100.0, 200.0, units::mhz(10.0)});
        CHECK(schedule_envelope(100.0, s) ==
              Catch::Approx(units::mhz(14.0)).epsilon(1e-12));
        // off-to-on boundary at t = 0
        CHECK(schedule_envelope(0.0, s) == Catch::Approx(units::mhz(9.0)));
    }
    SECTION("maximum ramp slope") {
        ModulationSchedule s;
        s.ramp = 20.0;
        const double b = units::mhz(18.0);
        s.segments.push_back({0.0, 500.0, b});
        // slope at the boundary center via finite difference
        const double h = 1e-5;
        const double slope =
            (schedule_envelope(h, s) - schedule_envelope(-h, s)) / (2.0 * h);
        CHECK(slope == Catch::Approx(M_PI * b / (2.0 * s.ramp)).epsilon(1e-6));
        // and nowhere steeper
        double worst = 0.0;
        for (double t = -15.0; t <= 15.0; t += 0.05) {
            const double d =
                (schedule_envelope(t + h, s) - schedule_envelope(t - h, s)) /
                (2.0 * h);
            worst = std::max(worst, std::abs(d));
        }
        CHECK(worst <= M_PI * b / (2.0 * s.ramp) * (1.0 + 1e-6));
    }
    SECTION("invalid schedules rejected") {
        ModulationSchedule s;
        s.segments.push_back({10.0, 5.0, 1.0});
        CHECK_THROWS_AS(s.validate(), DomainError);
        s.segments.clear();
        s.segments.push_back({0.0, 50.0, 1.0});
        s.segments.push_back({40.0, 90.0, 2.0});
        CHECK_THROWS_AS(s.validate(), DomainError);
    }
}

TEST_CASE("pulse propagation basics") {
    const DeviceParams dev = paper_device();
    PropagateOptions opts;
    opts.mod_freq = units::mhz(724.5);

    SECTION("far-detuned qubit transmits the pulse unchanged") {
        DeviceParams far = dev;
        far.omega_q_override = units::ghz(8.0); // ~ 1.7 GHz off the carrier
        ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
        ModulationSchedule off; // no modulation at all
        const auto grid = time_grid(400.0, 1.0);
        const PulseTrace tr = propagate(far, pulse, off, grid, opts);
        const PulseTrace ref = reference_trace(pulse, grid, far.gamma_relax);
        double peak = 0.0, worst = 0.0;
        for (size_t i = 0; i < grid.size(); ++i) {
            peak = std::max(peak, ref.alpha_out_abs[i]);
            worst = std::max(worst,
                             std::abs(tr.alpha_out_abs[i] - ref.alpha_out_abs[i]));
        }
        CHECK(worst < 0.01 * peak);
    }
    SECTION("passivity: no energy gain") {
        ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
        ModulationSchedule s;
        s.ramp = 20.0;
        s.segments.push_back({-50.0, 500.0, units::mhz(18.0)});
        const auto grid = time_grid(450.0, 1.0);
        const PulseTrace tr = propagate(dev, pulse, s, grid, opts);
        const double e_out = trace_energy(tr, tr.alpha_out_abs);
        const double e_in = trace_energy(tr, tr.alpha_in_abs);
        CHECK(e_out <= e_in * (1.0 + 1e-6));
    }
    SECTION("physical populations along the trace") {
        ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
        ModulationSchedule s;
        s.ramp = 20.0;
        s.segments.push_back({-50.0, 500.0, units::mhz(18.0)});
        const auto grid = time_grid(400.0, 2.0);
        const PulseTrace tr = propagate(dev, pulse, s, grid, opts);
        for (size_t i = 0; i < grid.size(); ++i) {
            CHECK(tr.qubit_pop[i] >= -1e-9);
            CHECK(tr.qubit_pop[i] <= 1.0 + 1e-9);
            CHECK(tr.res_pop[i] >= -1e-9);
            CHECK(tr.res_pop[i] <= double(opts.n_fock));
        }
    }
}

TEST_CASE("delay analysis") {
    const DeviceParams dev = paper_device();
    SECTION("identical traces have zero delay") {
        ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
        const auto grid = time_grid(400.0, 1.0);
        const PulseTrace ref = reference_trace(pulse, grid, dev.gamma_relax);
        const DelayAnalysis d = delay_time(ref, ref, dev, units::mhz(13.3));
        CHECK(std::abs(d.delta_t_ns) < 1e-9);
    }
    SECTION("95 ns over 340 um gives 3.6 km/s") {
        // synthetic shifted Gaussians
        ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
        ProbePulse late = pulse;
        late.t0 = 245.0;
        const auto grid = time_grid(500.0, 1.0);
        const PulseTrace a = reference_trace(late, grid, dev.gamma_relax);
        const PulseTrace b = reference_trace(pulse, grid, dev.gamma_relax);
        const DelayAnalysis d = delay_time(a, b, dev, units::mhz(13.3));
        CHECK(d.delta_t_ns == Catch::Approx(95.0).margin(0.01));
        CHECK(d.group_velocity_km_s == Catch::Approx(340.0 / 95.0).epsilon(1e-6));
    }
    SECTION("flat trace rejected") {
        PulseTrace flat;
        flat.times = time_grid(10.0, 1.0);
        flat.alpha_out_abs.assign(flat.times.size(), 0.5);
        CHECK_THROWS_AS(delay_time(flat, flat, dev, units::mhz(13.3)),
                        DomainError);
    }
}

TEST_CASE("mean input photon number") {
    SECTION("paper storage pulse carries 0.08 photons") {
        ProbePulse p{units::mhz(7.0), 50.0, 0.0, 0.0};
        CHECK(mean_input_photons(p, units::mhz(121.0)) ==
              Catch::Approx(0.080).margin(0.002));
    }
    SECTION("zero amplitude") {
        ProbePulse p{0.0, 50.0, 0.0, 0.0};
        CHECK(mean_input_photons(p, units::mhz(121.0)) == 0.0);
    }
    SECTION("closed form equals quadrature") {
        ProbePulse p{units::mhz(7.0), 50.0, 300.0, 0.0};
        const double gam = units::mhz(121.0);
        double acc = 0.0;
        const double dt = 0.001;
        for (double t = 0.0; t <= 600.0; t += dt) {
            const double w = gaussian_probe(t, p);
            acc += w * w / (2.0 * gam) * dt;
        }
        CHECK(mean_input_photons(p, gam) == Catch::Approx(acc).epsilon(1e-6));
    }
}

TEST_CASE("storage efficiency bookkeeping") {
    ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
    const auto grid = time_grid(600.0, 1.0);
    const PulseTrace ref =
        reference_trace(pulse, grid, units::mhz(121.0));
    SECTION("window with no signal") {
        PulseTrace silent = ref;
        silent.alpha_out_abs.assign(grid.size(), 0.0);
        CHECK(storage_efficiency(silent, ref, 400.0, 590.0) == 0.0);
    }
    SECTION("full window over an identical trace gives 1") {
        CHECK(storage_efficiency(ref, ref, grid.front(), grid.back()) ==
              Catch::Approx(1.0).epsilon(1e-9));
    }
    SECTION("empty or out-of-range windows rejected") {
        CHECK_THROWS_AS(storage_efficiency(ref, ref, 500.0, 400.0), DomainError);
        CHECK_THROWS_AS(storage_efficiency(ref, ref, 500.0, 700.0), DomainError);
    }
}

TEST_CASE("capture efficiency guards") {
    PulseTrace tr;
    tr.times = time_grid(100.0, 1.0);
    tr.res_pop.assign(tr.times.size(), 0.02);
    tr.mod_envelope.assign(tr.times.size(), 0.0);
    SECTION("no input flagged, not divided") {
        const CaptureResult c = capture_efficiency(tr, 50.0, 0.0);
        CHECK(c.no_input);
        CHECK(c.eta_c == 0.0);
    }
    SECTION("turn-off time beyond the grid rejected") {
        CHECK_THROWS_AS(capture_efficiency(tr, 150.0, 0.08), DomainError);
    }
    SECTION("reads the first sample after the ramp closes") {
        PulseTrace t2 = tr;
        for (size_t i = 0; i < t2.times.size(); ++i) {
            t2.mod_envelope[i] = t2.times[i] < 60.0 ? units::mhz(18.0) : 0.0;
        }
        const CaptureResult c = capture_efficiency(t2, 50.0, 0.08);
        CHECK_FALSE(c.no_input);
        CHECK(c.t_measured == Catch::Approx(60.0).margin(1.0));
        CHECK(c.eta_c == Catch::Approx(0.02 / 0.08));
    }
}

TEST_CASE("retrieval without a read-out tone only decays") {
    const DeviceParams dev = paper_device();
    ProbePulse pulse{units::mhz(7.0), 50.0, 150.0, units::ghz(6.2565)};
    PropagateOptions opts;
    opts.mod_freq = units::mhz(724.5);
    const auto grid = time_grid(700.0, 1.0);
    const PulseTrace tr = retrieve_shaped(dev, pulse, 125.0, units::mhz(18.0),
                                          0.0, grid, opts);
    // after the write window closes, n_res decays at kappa
    size_t i0 = 0, i1 = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= 300.0) i0 = i;
        if (grid[i] <= 600.0) i1 = i;
    }
    REQUIRE(tr.res_pop[i0] > 1e-4);
    const double rate = std::log(tr.res_pop[i0] / tr.res_pop[i1]) /
                        (grid[i1] - grid[i0]);
    CHECK(rate == Catch::Approx(dev.kappa).epsilon(0.10));
}

TEST_CASE("storage decay regression") {
    SECTION("exact log-linear data recovers the rate") {
        const double kappa = units::mhz(0.78);
        std::vector<std::pair<double, double>> pts;
        for (double ts : {50.0, 100.0, 150.0, 200.0, 250.0}) {
            pts.emplace_back(ts, 0.05 * std::exp(-kappa * ts));
        }
        const DecayFit fit = storage_decay_fit(pts);
        CHECK(fit.rate == Catch::Approx(kappa).epsilon(1e-6));
        CHECK_FALSE(fit.underdetermined);
    }
    SECTION("two points are an exact, flagged fit") {
        std::vector<std::pair<double, double>> pts = {{50.0, 0.05}, {150.0, 0.02}};
        const DecayFit fit = storage_decay_fit(pts);
        CHECK(fit.underdetermined);
        CHECK(fit.residual_norm < 1e-12);
    }
    SECTION("non-positive efficiencies rejected") {
        std::vector<std::pair<double, double>> pts = {{50.0, 0.05}, {150.0, 0.0}};
        CHECK_THROWS_AS(storage_decay_fit(pts), DomainError);
    }
}
