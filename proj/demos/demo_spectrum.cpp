// Minimal walkthrough: steady-state transmission of a weak probe with the
// sideband drive on, printed as a small table.

#include <cstdio>

#include "eitsim/spectroscopy.hpp"

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

    HamiltonianSpec spec;
    spec.device = dev;
    spec.drive.probe_rabi = units::mhz(0.8);
    spec.drive.mod_freq = units::mhz(724.5);
    spec.drive.omega_phi_rabi = units::mhz(13.3);

    const double wq = dev.omega_q();
    std::vector<double> grid;
    for (int i = 0; i <= 80; ++i) {
        grid.push_back(wq + units::mhz(-20.0 + 0.5 * i));
    }
    const Spectrum sp = sweep_spectrum(grid, spec, SpectrumEngine::Effective);

    std::printf("# omega_p (GHz)   |t_c|\n");
    for (size_t i = 0; i < grid.size(); i += 8) {
        std::printf("%12.6f  %8.5f\n", units::to_ghz(grid[i]),
                    std::abs(sp.t_c[i]));
    }
    return 0;
}
