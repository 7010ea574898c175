// Propagates the analytic field of a point source from one plane to another
// with the discrete pressure propagator and prints the error against the
// analytic pressure as the sampling of the intermediate plane is refined.

#include <cstdio>

#include "nah/nah.hpp"

int main() {
    const nah::PhysicalConstants air;
    const double omega = 2.0 * nah::kPi * 1000.0;
    const nah::Point3 src{0.0, 0.0, -0.02};
    const nah::Complex strength{1e-4, 0.0};
    const double aperture = 0.6;

    const auto target = nah::centered_plane_grid(9, 9, 0.0375, 0.0375, 0.03);
    const auto exact = nah::monopole_field(src, strength, omega, target, air).pressure;

    std::printf("%8s %14s\n", "points", "rel. error");
    for (std::size_t n : {16, 32, 64}) {
        const double d = aperture / static_cast<double>(n);
        const auto mid = nah::centered_plane_grid(n, n, d, d, 0.0);
        const auto f = nah::monopole_field(src, strength, omega, mid, air);
        const auto p = nah::theta2(f.pressure, f.velocity, target, air);
        const double err = (p.values - exact.values).norm() / exact.values.norm();
        std::printf("%5zux%-3zu %14.6e\n", n, n, err);
    }
    return 0;
}
