#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "eitsim/dynamics.hpp"
#include "eitsim/spectroscopy.hpp"

using namespace eitsim;

namespace {

std::mt19937 rng(77);

DensityMatrix random_density(int dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    OperatorMatrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(u(rng), u(rng));
    DensityMatrix rho = m * m.adjoint();
    rho /= rho.trace().real();
    return rho;
}

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

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / double(n - 1);
    return v;
}

// excited qubit, vacuum resonator
DensityMatrix excited_state(int n_fock) {
    DensityMatrix rho = DensityMatrix::Zero(2 * n_fock, 2 * n_fock);
    rho(basis_index(1, 0, n_fock), basis_index(1, 0, n_fock)) = 1.0;
    return rho;
}

} // namespace

TEST_CASE("lab-frame Hamiltonian") {
    HamiltonianSpec spec;
    spec.frame = Frame::LabRotatingAtProbe;
    spec.device = paper_device();
    spec.drive.mod_freq = units::mhz(724.5);

    SECTION("all-resonant undriven case leaves only the coupling block") {
        HamiltonianSpec s = spec;
        s.device.omega_r = s.device.omega_q();
        s.drive.probe_freq = s.device.omega_q();
        s.drive.probe_rabi = 0.0;
        s.drive.delta_phi = 0.0;
        const OperatorMatrix h = lab_hamiltonian(0.37, s);
        const detail::SpaceOps ops(s.n_fock);
        CHECK((h - s.device.g * ops.jc).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("Hermitian at random times") {
        HamiltonianSpec s = spec;
        s.drive.probe_rabi = units::mhz(7.8);
        s.drive.probe_freq = units::ghz(6.25);
        s.drive.delta_phi = 0.08;
        std::uniform_real_distribution<double> u(0.0, 100.0);
        for (int k = 0; k < 10; ++k) {
            const OperatorMatrix h = lab_hamiltonian(u(rng), s);
            CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SECTION("qubit frequency time-averages to the static value") {
        HamiltonianSpec s = spec;
        s.drive.delta_phi = 0.08;
        s.drive.probe_freq = units::ghz(6.25);
        const detail::SpaceOps ops(s.n_fock);
        const int iq = basis_index(1, 0, s.n_fock);
        // composite Simpson over one modulation period
        const double period = units::two_pi / s.drive.mod_freq;
        const int n = 2000;
        double acc = 0.0;
        // the (e,0) diagonal entry is omega_q(t) - omega_p
        auto wq_at = [&](int j) {
            const OperatorMatrix h = lab_hamiltonian(j * period / n, s);
            return h(iq, iq).real() + s.drive.probe_freq;
        };
        for (int i = 0; i < n; i += 2) {
            acc += (wq_at(i) + 4.0 * wq_at(i + 1) + wq_at(i + 2)) *
                   (period / n / 3.0);
        }
        const double mean = acc / period;
        CHECK(mean == Catch::Approx(s.device.omega_q()).epsilon(1e-10));
    }
}

TEST_CASE("effective-frame Hamiltonian") {
    HamiltonianSpec spec;
    spec.device = paper_device();
    spec.drive.mod_freq = units::mhz(724.5);
    spec.drive.probe_freq = units::ghz(6.2565);
    spec.drive.omega_phi_rabi = units::mhz(18.0);

    SECTION("no modulation leaves the shifted resonator term only") {
        HamiltonianSpec s = spec;
        s.drive.omega_phi_rabi = 0.0;
        s.drive.probe_rabi = 0.0;
        const OperatorMatrix h = effective_hamiltonian(s);
        const detail::SpaceOps ops(s.n_fock);
        const double dr =
            s.device.omega_r_effective() - s.drive.probe_freq + s.drive.mod_freq;
        const double dq = s.device.omega_q() - s.drive.probe_freq;
        CHECK((h - dq * ops.nq - dr * ops.na).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(dr) > 0.0); // the +omega_Phi displacement is present
    }
    SECTION("single-excitation splitting is +-Omega_Phi/2 at two-photon resonance") {
        HamiltonianSpec s = spec;
        s.drive.probe_rabi = 0.0;
        // two-photon resonance: both single-excitation states degenerate
        s.device.omega_q_override = units::ghz(6.2565);
        s.drive.probe_freq = s.device.omega_q();
        s.device.omega_r_dressed = s.device.omega_q() - s.drive.mod_freq;
        const OperatorMatrix h = effective_hamiltonian(s);
        const int ie0 = basis_index(1, 0, s.n_fock);
        const int ig1 = basis_index(0, 1, s.n_fock);
        Eigen::Matrix2cd block;
        block << h(ie0, ie0), h(ie0, ig1), h(ig1, ie0), h(ig1, ig1);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(block);
        const double om = s.resolved_omega_phi_rabi();
        CHECK(es.eigenvalues()(0) == Catch::Approx(-0.5 * om).margin(1e-10));
        CHECK(es.eigenvalues()(1) == Catch::Approx(0.5 * om).margin(1e-10));
    }
    SECTION("Hermiticity of the sideband term") {
        HamiltonianSpec s = spec;
        s.drive.probe_rabi = units::mhz(7.8);
        const OperatorMatrix h = effective_hamiltonian(s);
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("unresolved sideband rate rejected") {
        HamiltonianSpec s = spec;
        s.drive.omega_phi_rabi.reset();
        s.device.rabi_c1.reset();
        CHECK_THROWS_AS(effective_hamiltonian(s), ConfigError);
    }
}

TEST_CASE("Lindblad generator") {
    const int nf = 4;
    const LindbladRates rates{units::mhz(121.0), units::mhz(0.78), units::mhz(3.0)};

    SECTION("free decay rate of the excited state is Gamma") {
        const DensityMatrix rho = excited_state(nf);
        const OperatorMatrix h = OperatorMatrix::Zero(2 * nf, 2 * nf);
        const Eigen::MatrixXcd drho = liouvillian_apply(h, rho, rates);
        const detail::SpaceOps ops(nf);
        const double dpop = (drho * ops.nq).trace().real();
        CHECK(dpop == Catch::Approx(-rates.gamma_relax).epsilon(1e-12));
    }
    SECTION("trace preserving") {
        for (int k = 0; k < 5; ++k) {
            const DensityMatrix rho = random_density(2 * nf);
            HamiltonianSpec s;
            s.device = paper_device();
            s.drive.probe_freq = units::ghz(6.25);
            s.drive.probe_rabi = units::mhz(7.8);
            s.drive.omega_phi_rabi = units::mhz(18.0);
            s.drive.mod_freq = units::mhz(724.5);
            const Eigen::MatrixXcd drho =
                liouvillian_apply(effective_hamiltonian(s), rho, rates);
            CHECK(std::abs(drho.trace()) < 1e-12 * units::mhz(121.0));
        }
    }
    SECTION("zero Hamiltonian, zero rates, zero generator") {
        const Eigen::MatrixXcd drho =
            liouvillian_apply(OperatorMatrix::Zero(2 * nf, 2 * nf),
                              random_density(2 * nf), {0, 0, 0});
        CHECK(drho.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("negative rates rejected") {
        CHECK_THROWS_AS(
            liouvillian_apply(OperatorMatrix::Zero(2 * nf, 2 * nf),
                              random_density(2 * nf), {-1.0, 0.0, 0.0}),
            DomainError);
    }
    SECTION("linearity") {
        const OperatorMatrix h = effective_hamiltonian([] {
            HamiltonianSpec s;
            s.device = paper_device();
            s.drive.probe_freq = units::ghz(6.25);
            s.drive.omega_phi_rabi = units::mhz(14.0);
            s.drive.mod_freq = units::mhz(724.5);
            return s;
        }());
        for (int k = 0; k < 5; ++k) {
            const DensityMatrix r1 = random_density(2 * nf);
            const DensityMatrix r2 = random_density(2 * nf);
            const Complex a(0.3, 0.1), b(0.6, -0.2);
            const Eigen::MatrixXcd lhs =
                liouvillian_apply(h, a * r1 + b * r2, rates);
            const Eigen::MatrixXcd rhs = a * liouvillian_apply(h, r1, rates) +
                                         b * liouvillian_apply(h, r2, rates);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <
                  1e-12 * lhs.cwiseAbs().maxCoeff() + 1e-15);
        }
    }
    SECTION("matrix form agrees with direct application") {
        HamiltonianSpec s;
        s.device = paper_device();
        s.drive.probe_freq = units::ghz(6.25);
        s.drive.probe_rabi = units::mhz(5.0);
        s.drive.omega_phi_rabi = units::mhz(14.0);
        s.drive.mod_freq = units::mhz(724.5);
        const OperatorMatrix h = effective_hamiltonian(s);
        const Eigen::MatrixXcd l = liouvillian_matrix(h, rates);
        const DensityMatrix rho = random_density(2 * nf);
        const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), rho.size());
        const Eigen::VectorXcd lv = l * v;
        const Eigen::MatrixXcd direct = liouvillian_apply(h, rho, rates);
        const Eigen::Map<const Eigen::VectorXcd> dv(direct.data(), direct.size());
        CHECK((lv - dv).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("master equation integration") {
    SECTION("free exponential decay") {
        HamiltonianSpec s;
        s.device = paper_device();
        s.drive.probe_freq = s.device.omega_q(); // zero effective H detuning
        s.drive.probe_rabi = 0.0;
        s.drive.omega_phi_rabi = 0.0;
        s.drive.mod_freq = units::mhz(724.5);
        s.device.omega_r_dressed = s.device.omega_q() - s.drive.mod_freq;
        const LindbladRates rates{units::mhz(121.0), 0.0, 0.0};
        const auto grid = linspace(0.0, 3.0, 31);
        const Trajectory tr = evolve(excited_state(4), s, grid, rates, 1e-10);
        for (size_t i = 0; i < grid.size(); ++i) {
            const double expect = std::exp(-rates.gamma_relax * grid[i]);
            if (expect > 1e-8) {
                CHECK(tr.qubit_pop[i] == Catch::Approx(expect).epsilon(1e-6));
            }
        }
    }
    SECTION("undriven ground state is stationary") {
        HamiltonianSpec s;
        s.device = paper_device();
        s.drive.probe_freq = units::ghz(6.2);
        s.drive.omega_phi_rabi = units::mhz(10.0);
        s.drive.mod_freq = units::mhz(724.5);
        const Trajectory tr = evolve(ground_state(4), s, linspace(0.0, 10.0, 11),
                                     {units::mhz(121.0), units::mhz(0.78),
                                      units::mhz(3.0)});
        for (const auto& rho : tr.states) {
            CHECK((rho - ground_state(4)).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
    SECTION("lossless resonant Rabi oscillation") {
        HamiltonianSpec s;
        s.device = paper_device();
        s.device.g = 0.0;
        s.drive.probe_freq = s.device.omega_q();
        s.drive.probe_rabi = units::mhz(20.0);
        s.drive.omega_phi_rabi = 0.0;
        s.drive.mod_freq = units::mhz(724.5);
        const auto grid = linspace(0.0, 50.0, 51);
        const Trajectory tr = evolve(ground_state(4), s, grid, {0, 0, 0}, 1e-10);
        for (size_t i = 0; i < grid.size(); ++i) {
            const double expect =
                std::pow(std::sin(0.5 * s.drive.probe_rabi * grid[i]), 2);
            CHECK(tr.qubit_pop[i] == Catch::Approx(expect).margin(1e-6));
        }
    }
    SECTION("trajectory states stay physical") {
        HamiltonianSpec s;
        s.device = paper_device();
        s.drive.probe_freq = units::ghz(6.2565);
        s.drive.probe_rabi = units::mhz(7.8);
        s.drive.omega_phi_rabi = units::mhz(18.0);
        s.drive.mod_freq = units::mhz(724.5);
        const Trajectory tr =
            evolve(ground_state(4), s, linspace(0.0, 100.0, 41),
                   {units::mhz(121.0), units::mhz(0.78), units::mhz(3.0)});
        for (const auto& rho : tr.states) {
            const DensityCheck c = check_density_matrix(rho);
            INFO(c.reason);
            CHECK(c.ok);
        }
    }
}

TEST_CASE("effective-frame steady state") {
    HamiltonianSpec s;
    s.device = paper_device();
    s.drive.probe_freq = units::ghz(6.2565);
    s.drive.probe_rabi = units::mhz(0.8);
    s.drive.omega_phi_rabi = units::mhz(18.0);
    s.drive.mod_freq = units::mhz(724.5);
    const LindbladRates rates = s.rates();

    SECTION("undriven steady state is the ground state") {
        HamiltonianSpec s0 = s;
        s0.drive.probe_rabi = 0.0;
        const DensityMatrix rho = steady_state(s0, rates);
        CHECK((rho - ground_state(s.n_fock)).cwiseAbs().maxCoeff() < 1e-9);
    }
    SECTION("weak-probe two-level limit matches the analytic form") {
        HamiltonianSpec s2 = s;
        s2.drive.omega_phi_rabi = 0.0;
        s2.drive.probe_rabi = 0.04 * s2.device.gamma_total(); // Omega_p/gamma = 0.04
        for (double det_mhz : {-40.0, -10.0, 0.0, 15.0, 35.0}) {
            s2.drive.probe_freq = s2.device.omega_q() + units::mhz(det_mhz);
            const DensityMatrix rho = steady_state(s2, rates);
            const Complex sig = expectation(rho, qubit_lowering(s2.n_fock));
            const Complex tc = transmission_from_sigma(
                sig, s2.device.gamma_relax, s2.drive.probe_rabi);
            const double d1 = s2.device.omega_q() - s2.drive.probe_freq;
            const Complex expect =
                1.0 + Complex(0, 1) * 0.5 * s2.device.gamma_relax /
                          Complex(d1, -s2.device.gamma_total());
            CHECK(std::abs(tc - expect) < 0.01);
        }
    }
    SECTION("agrees with long-time integration") {
        const DensityMatrix direct = steady_state(s, rates);
        const double t_end = 50.0 / rates.min_positive();
        const Trajectory tr =
            evolve(ground_state(s.n_fock), s, {0.0, t_end}, rates, 1e-10);
        // trace distance = (1/2) sum |eig|
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            direct - tr.states.back());
        CHECK(0.5 * es.eigenvalues().cwiseAbs().sum() < 1e-6);
    }
    SECTION("truncation convergence at paper drive strengths") {
        HamiltonianSpec s8 = s;
        s8.n_fock = 8;
        const DensityMatrix r4 = steady_state(s, rates);
        const DensityMatrix r8 = steady_state(s8, rates);
        const Complex s4v = expectation(r4, qubit_lowering(4));
        const Complex s8v = expectation(r8, qubit_lowering(8));
        CHECK(std::abs(s4v - s8v) < 1e-6);
        const double n4 =
            expectation(r4, OperatorMatrix(resonator_lowering(4).adjoint() *
                                           resonator_lowering(4)))
                .real();
        const double n8 =
            expectation(r8, OperatorMatrix(resonator_lowering(8).adjoint() *
                                           resonator_lowering(8)))
                .real();
        CHECK(std::abs(n4 - n8) < 1e-6);
    }
}

TEST_CASE("lab-frame periodic response") {
    DeviceParams dev = paper_device();
    // bare parameters reproducing the dressed pair at the coupling g
    double wq_bare = 0.0, wr_bare = 0.0;
    bare_from_dressed(units::ghz(6.2565), units::ghz(5.532), dev.g, wq_bare,
                      wr_bare);
    dev.omega_q_override = wq_bare;
    dev.omega_r = wr_bare;

    HamiltonianSpec lab;
    lab.frame = Frame::LabRotatingAtProbe;
    lab.device = dev;
    lab.drive.mod_freq = units::mhz(724.5);
    lab.drive.probe_rabi = units::mhz(0.8);
    lab.drive.probe_freq = units::ghz(6.2565);
    const LindbladRates rates = lab.rates();

    SECTION("no modulation reduces to the static steady state") {
        HamiltonianSpec off = lab;
        off.drive.delta_phi = 0.0;
        off.drive.eps_phi = 0.0;
        const Complex sig_lab = periodic_steady_state_sigma(off, rates);
        // static steady state of the same lab Hamiltonian (time-independent
        // once eps = 0): use the effective machinery with the bare JC pieces
        // by direct null-space solve of the constant generator.
        const OperatorMatrix h = lab_hamiltonian(0.0, off);
        const Eigen::MatrixXcd l = liouvillian_matrix(h, rates);
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(l);
        lu.setThreshold(1e-10 * l.cwiseAbs().maxCoeff());
        const Eigen::MatrixXcd kernel = lu.kernel();
        DensityMatrix rho = Eigen::Map<const Eigen::MatrixXcd>(
            kernel.col(0).data(), h.rows(), h.rows());
        rho = 0.5 * (rho + rho.adjoint().eval());
        rho /= rho.trace().real();
        const Complex sig_static = expectation(rho, qubit_lowering(lab.n_fock));
        CHECK(std::abs(sig_lab - sig_static) < 1e-6);
    }
    SECTION("frame equivalence at the two-photon resonance") {
        HamiltonianSpec on = lab;
        on.drive.delta_phi = 0.0803; // Omega_Phi about 13.3 MHz
        const Complex sig_lab = periodic_steady_state_sigma(on, rates);
        const Complex t_lab = transmission_from_sigma(
            sig_lab, dev.gamma_relax, on.drive.probe_rabi);

        // The linearized flux term has no motional shift; the effective model
        // uses the dressed frequencies *and* the dressed decay rates (the
        // resonator-like branch inherits (g/Delta)^2 Gamma of Purcell-type
        // decay from the qubit dissipator) with the Bessel-rate sideband.
        HamiltonianSpec eff;
        eff.device = dressed_effective_params(dev);
        eff.drive = on.drive;
        const double eps = on.drive.resolved_eps_phi(dev);
        eff.drive.omega_phi_rabi =
            parametric_rabi(eps, on.drive.mod_freq, dev.g);
        const DensityMatrix rho = steady_state(eff, eff.rates());
        const Complex t_eff = transmission_from_sigma(
            expectation(rho, qubit_lowering(eff.n_fock)),
            eff.device.gamma_relax, eff.drive.probe_rabi);
        CHECK(std::abs(std::abs(t_lab) - std::abs(t_eff)) < 0.03);
    }
    SECTION("doubling the averaging window is inert") {
        HamiltonianSpec on = lab;
        on.drive.delta_phi = 0.05;
        PeriodicSteadyStateOptions o1;
        PeriodicSteadyStateOptions o2;
        o2.window_periods = 2 * o1.window_periods;
        const Complex a = periodic_steady_state_sigma(on, rates, o1);
        const Complex b = periodic_steady_state_sigma(on, rates, o2);
        CHECK(std::abs(a - b) < 1e-6);
    }
}

TEST_CASE("dressing map round trip") {
    const double g = units::mhz(73.3);
    double wq_bare = 0.0, wr_bare = 0.0;
    bare_from_dressed(units::ghz(6.282), units::ghz(5.532), g, wq_bare, wr_bare);
    SECTION("bare pair reproduces the dressed frequencies") {
        DeviceParams dev;
        dev.ec = units::ghz(0.29);
        dev.ej0 = units::ghz(19.6);
        dev.d = 0.32;
        dev.g = g;
        dev.gamma_relax = units::mhz(121.0);
        dev.gamma_phi = units::mhz(3.0);
        dev.kappa = units::mhz(0.78);
        dev.omega_r = wr_bare;
        dev.flux_bias = -0.11;
        dev.length_um = 340.0;
        dev.omega_q_override = wq_bare;
        const DeviceParams dressed = dressed_effective_params(dev);
        CHECK(units::to_ghz(dressed.omega_q()) ==
              Catch::Approx(6.282).margin(2e-4));
        CHECK(units::to_ghz(dressed.omega_r_dressed) ==
              Catch::Approx(5.532).margin(2e-4));
        // hybridization pushes resonator loss up (inverse Purcell effect)
        CHECK(dressed.kappa > dev.kappa);
    }
    SECTION("splitting below 2g rejected") {
        double a = 0.0, b = 0.0;
        CHECK_THROWS_AS(
            bare_from_dressed(units::ghz(5.6), units::ghz(5.55), g, a, b),
            DomainError);
    }
}
