#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "nah/kh_propagator.hpp"
#include "nah/scene.hpp"

namespace nah {

/// Isotropic thin plate. Defaults: 3 mm aluminium.
struct PlateMaterial {
    double youngs_modulus = 69e9; ///< Pa
    double poisson_ratio = 0.33;
    double density = 2700.0; ///< kg/m^3
    double thickness = 0.003; ///< m

    double bending_stiffness() const {
        return youngs_modulus * thickness * thickness * thickness / (12.0 * (1.0 - poisson_ratio * poisson_ratio));
    }
};

/// Simply supported rectangular plate mode (m, n) centred on (center_x, center_y).
struct PlateModeSpec {
    int m = 1;
    int n = 1;
    double lx = 0.2;
    double ly = 0.8;
    double amplitude = 1.0; ///< m/s
    std::optional<double> frequency_hz;
    PlateMaterial material;
    double center_x = 0.0;
    double center_y = 0.0;

    void validate() const {
        if (m < 1 || n < 1) {
            throw ConfigError("plate mode indices must be >= 1");
        }
        if (!(lx > 0.0) || !(ly > 0.0)) {
            throw ConfigError("plate dimensions must be positive");
        }
        if (frequency_hz && !(*frequency_hz > 0.0)) {
            throw ConfigError("plate mode frequency must be positive");
        }
        if (!std::isfinite(amplitude)) {
            throw ConfigError("plate mode amplitude must be finite");
        }
    }
};

/// Kirchhoff-Love natural frequency of a simply supported plate in Hz.
inline double modal_frequency(int m, int n, double lx, double ly, const PlateMaterial& mat) {
    const double a = static_cast<double>(m) / lx;
    const double b = static_cast<double>(n) / ly;
    return 0.5 * kPi * std::sqrt(mat.bending_stiffness() / (mat.density * mat.thickness)) * (a * a + b * b);
}

inline double mode_frequency(const PlateModeSpec& spec) {
    spec.validate();
    return spec.frequency_hz ? *spec.frequency_hz : modal_frequency(spec.m, spec.n, spec.lx, spec.ly, spec.material);
}

/// Modal velocity amplitude * sin(m pi x'/lx) sin(n pi y'/ly), with x', y'
/// measured from the plate's lower-left corner.
inline ComplexField plate_mode_velocity(const PlateModeSpec& spec, const PlaneGrid& grid) {
    spec.validate();
    const double x0 = spec.center_x - 0.5 * spec.lx;
    const double y0 = spec.center_y - 0.5 * spec.ly;
    const double tol = 1e-12 * std::max(spec.lx, spec.ly);
    const double gx_lo = grid.x_at(0) - x0;
    const double gx_hi = grid.x_at(grid.nx - 1) - x0;
    const double gy_lo = grid.y_at(0) - y0;
    const double gy_hi = grid.y_at(grid.ny - 1) - y0;
    if (gx_lo < -tol || gy_lo < -tol || gx_hi > spec.lx + tol || gy_hi > spec.ly + tol) {
        throw ConfigError("grid extends beyond the plate footprint");
    }
    ComplexField v = ComplexField::zeros(grid, 2.0 * kPi * mode_frequency(spec), FieldKind::velocity);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        const double sx = std::sin(spec.m * kPi * (grid.x_at(i) - x0) / spec.lx);
        for (std::size_t j = 0; j < grid.ny; ++j) {
            const double sy = std::sin(spec.n * kPi * (grid.y_at(j) - y0) / spec.ly);
            v.values[static_cast<Eigen::Index>(grid.index(i, j))] = Complex(spec.amplitude * sx * sy, 0.0);
        }
    }
    return v;
}

struct MonopoleFields {
    ComplexField pressure;
    ComplexField velocity;
};

/// Free-field point source: p = j omega rho s g, v_z = s dg/dz.
inline MonopoleFields monopole_field(const Point3& pos, Complex strength, double omega, const PlaneGrid& grid,
                                     const PhysicalConstants& constants) {
    if (!(omega > 0.0)) {
        throw ContractError("monopole needs a positive angular frequency");
    }
    const double k = constants.wavenumber(omega);
    MonopoleFields out{ComplexField::zeros(grid, omega, FieldKind::pressure),
                       ComplexField::zeros(grid, omega, FieldKind::velocity)};
    const Complex jwr(0.0, omega * constants.rho);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Point3 r = grid.point(n);
        const double rx = r.x - pos.x;
        const double ry = r.y - pos.y;
        const double rz = r.z - pos.z;
        const double d = std::sqrt(rx * rx + ry * ry + rz * rz);
        if (d == 0.0) {
            throw SingularityError("monopole sits on a grid sample");
        }
        const Complex e = std::exp(Complex(0.0, -k * d));
        const Complex g = e / (4.0 * kPi * d);
        const Complex dg_dz = -e * Complex(1.0, k * d) * rz / (4.0 * kPi * d * d * d);
        out.pressure.values[static_cast<Eigen::Index>(n)] = jwr * strength * g;
        out.velocity.values[static_cast<Eigen::Index>(n)] = strength * dg_dz;
    }
    return out;
}

/// Hologram pressure radiated by a source-plane velocity.
inline ComplexField forward_holography(const ComplexField& v_s, const SceneConfig& scene) {
    if (v_s.omega != scene.omega) {
        throw ContractError("source field frequency differs from the scene frequency");
    }
    const ComplexField p_s = theta1(v_s, scene.constants);
    return theta2(p_s, v_s, scene.hologram, scene.constants, scene.kernels);
}

struct NoiseSpec {
    double snr_db = 30.0;
    std::uint64_t seed = 0;
};

/// Adds circular complex white Gaussian noise at the requested SNR, where the
/// signal power is the mean of |p|^2 over the field.
inline ComplexField add_noise(const ComplexField& p, const NoiseSpec& spec) {
    p.check_consistent();
    if (!std::isfinite(spec.snr_db)) {
        throw ConfigError("SNR must be finite");
    }
    const double power = p.values.squaredNorm() / static_cast<double>(p.values.size());
    if (!(power > 0.0)) {
        throw ContractError("SNR is undefined for an all-zero field");
    }
    const double sigma = std::sqrt(0.5 * power / std::pow(10.0, spec.snr_db / 10.0));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexField out = p;
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        out.values[i] += sigma * Complex(re, im);
    }
    return out;
}

} // namespace nah
