#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "nah/geometry.hpp"
#include "nah/physics.hpp"
#include "nah/scene.hpp"
#include "nah/types.hpp"

namespace nah {

/// Free-field Green's function and its normal derivatives between two points
/// of parallel z-normal planes, as closed forms in d and dz = |z_dst - z_src|:
///
///   g     =  e^{-jkd} / (4 pi d)
///   g_dn  = -e^{-jkd} (1 + jkd) dz / (4 pi d^3)
///   g_dnn =  e^{-jkd} (-k^2 d + 3 + 3jkd) dz / (4 pi d^3)
struct GreenKernels {
    Complex g;
    Complex g_dn;
    Complex g_dnn;
};

inline GreenKernels green_kernels(double d, double dz, double k) {
    if (!(d > 0.0)) {
        throw SingularityError("Green's kernel evaluated at coincident points (d = 0)");
    }
    const Complex e = std::exp(Complex(0.0, -k * d));
    const double four_pi_d3 = 4.0 * kPi * d * d * d;
    GreenKernels out;
    out.g = e / (4.0 * kPi * d);
    out.g_dn = -e * Complex(1.0, k * d) * dz / four_pi_d3;
    out.g_dnn = e * Complex(3.0 - k * k * d, 3.0 * k * d) * dz / four_pi_d3;
    return out;
}

/// Second derivative of g along the plane normal, taken at the field point:
/// e^{-jkd} [(3 + 3jkd - k^2 d^2) dz^2 - (1 + jkd) d^2] / (4 pi d^5).
inline Complex green_dnn_exact(double d, double dz, double k) {
    if (!(d > 0.0)) {
        throw SingularityError("Green's kernel evaluated at coincident points (d = 0)");
    }
    const Complex e = std::exp(Complex(0.0, -k * d));
    const double d2 = d * d;
    const Complex bracket = Complex(3.0 - k * k * d2, 3.0 * k * d) * (dz * dz) - Complex(1.0, k * d) * d2;
    return e * bracket / (4.0 * kPi * d2 * d2 * d);
}

/// Per-pair weights of one plane-to-plane hop, before the source cell area:
///   p_dst += (p_to_p * p + v_to_p * v) dA     (pressure propagator)
///   v_dst += (p_to_v * p + v_to_v * v) dA     (velocity propagator)
struct HopCoefficients {
    Complex p_to_p;
    Complex v_to_p;
    Complex p_to_v;
    Complex v_to_v;
};

inline HopCoefficients hop_coefficients(double d, double dz, double k, double omega, double rho,
                                        KernelConvention convention) {
    const GreenKernels gk = green_kernels(d, dz, k);
    const Complex jwr(0.0, omega * rho);
    HopCoefficients h;
    h.v_to_p = -jwr * gk.g;
    h.v_to_v = -gk.g_dn;
    if (convention == KernelConvention::exact) {
        // Source-point normal derivative is the negative of the field-point one.
        h.p_to_p = -gk.g_dn;
        h.p_to_v = -green_dnn_exact(d, dz, k) / jwr;
    } else {
        h.p_to_p = gk.g_dn;
        h.p_to_v = gk.g_dnn / jwr;
    }
    return h;
}

/// Weight of one pair of the on-plane pressure operator. Coincident points
/// use the regular limit of the Green's function, -jk/(4 pi).
inline Complex theta1_coefficient(double d, double k, double omega, double rho) {
    if (d == 0.0) {
        return Complex(-(1.0 / (2.0 * kPi)) * (omega * omega / (omega / k)) * rho, 0.0);
    }
    return -(1.0 / (2.0 * kPi)) * Complex(0.0, omega * rho) * std::exp(Complex(0.0, -k * d)) / d;
}

namespace detail {

inline void require_nonzero_frequency(double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw ContractError("propagation needs a positive angular frequency");
    }
}

inline void require_separated(const PlaneGrid& src, const PlaneGrid& dst) {
    if (src.z == dst.z) {
        throw ContractError("source and destination planes coincide (dz = 0); use the on-plane operator");
    }
}

inline void require_pair(const ComplexField& p, const ComplexField& v) {
    p.check_consistent();
    v.check_consistent();
    if (p.kind != FieldKind::pressure || v.kind != FieldKind::velocity) {
        throw ContractError("expected a (pressure, velocity) pair");
    }
    if (!(p.grid == v.grid)) {
        throw ContractError("pressure and velocity must share one grid");
    }
    if (p.omega != v.omega) {
        throw ContractError("pressure and velocity must share one frequency");
    }
    require_nonzero_frequency(p.omega);
}

inline Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

} // namespace detail

/// On-plane pressure produced by a normal velocity distribution.
inline ComplexField theta1(const ComplexField& v, const PhysicalConstants& constants) {
    v.check_consistent();
    if (v.kind != FieldKind::velocity) {
        throw ContractError("on-plane operator expects a velocity field");
    }
    detail::require_nonzero_frequency(v.omega);
    const double k = constants.wavenumber(v.omega);
    const double area = v.grid.cell_area();
    const DistanceTable dist = pairwise_distances(v.grid, v.grid);
    ComplexField p = ComplexField::zeros(v.grid, v.omega, FieldKind::pressure);
    for (std::size_t m = 0; m < v.grid.size(); ++m) {
        Complex acc{};
        for (std::size_t n = 0; n < v.grid.size(); ++n) {
            const double d = dist.d(detail::idx(m), detail::idx(n));
            acc += theta1_coefficient(d, k, v.omega, constants.rho) * v.values[detail::idx(n)];
        }
        p.values[detail::idx(m)] = acc * area;
    }
    return p;
}

namespace detail {

template <bool Velocity>
ComplexField hop(const ComplexField& p, const ComplexField& v, const PlaneGrid& dst,
                 const PhysicalConstants& constants, KernelConvention convention) {
    require_pair(p, v);
    require_separated(p.grid, dst);
    const double k = constants.wavenumber(p.omega);
    const double area = p.grid.cell_area();
    const DistanceTable dist = pairwise_distances(p.grid, dst);
    ComplexField out = ComplexField::zeros(dst, p.omega, Velocity ? FieldKind::velocity : FieldKind::pressure);
    for (std::size_t m = 0; m < dst.size(); ++m) {
        Complex acc{};
        for (std::size_t n = 0; n < p.grid.size(); ++n) {
            const auto h = hop_coefficients(dist.d(idx(m), idx(n)), dist.dz, k, p.omega, constants.rho, convention);
            if constexpr (Velocity) {
                acc += h.p_to_v * p.values[idx(n)] + h.v_to_v * v.values[idx(n)];
            } else {
                acc += h.p_to_p * p.values[idx(n)] + h.v_to_p * v.values[idx(n)];
            }
        }
        out.values[idx(m)] = acc * area;
    }
    return out;
}

} // namespace detail

/// Pressure on `dst` radiated by a (pressure, velocity) pair on a parallel plane.
inline ComplexField theta2(const ComplexField& p, const ComplexField& v, const PlaneGrid& dst,
                           const PhysicalConstants& constants,
                           KernelConvention convention = KernelConvention::exact) {
    return detail::hop<false>(p, v, dst, constants, convention);
}

/// Normal velocity on `dst` radiated by a (pressure, velocity) pair on a parallel plane.
inline ComplexField theta3(const ComplexField& p, const ComplexField& v, const PlaneGrid& dst,
                           const PhysicalConstants& constants,
                           KernelConvention convention = KernelConvention::exact) {
    return detail::hop<true>(p, v, dst, constants, convention);
}

// ---------------------------------------------------------------------------
// Dense matrix forms

inline CMatrix theta1_matrix(const PlaneGrid& grid, double omega, const PhysicalConstants& constants) {
    detail::require_nonzero_frequency(omega);
    const double k = constants.wavenumber(omega);
    const double area = grid.cell_area();
    const DistanceTable dist = pairwise_distances(grid, grid);
    CMatrix m(detail::idx(grid.size()), detail::idx(grid.size()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = theta1_coefficient(dist.d(r, c), k, omega, constants.rho) * area;
        }
    }
    return m;
}

/// dst = from_pressure * p + from_velocity * v
struct HopMatrices {
    CMatrix from_pressure;
    CMatrix from_velocity;
};

namespace detail {

template <bool Velocity>
HopMatrices hop_matrices(const PlaneGrid& src, const PlaneGrid& dst, double omega,
                         const PhysicalConstants& constants, KernelConvention convention) {
    require_nonzero_frequency(omega);
    require_separated(src, dst);
    const double k = constants.wavenumber(omega);
    const double area = src.cell_area();
    const DistanceTable dist = pairwise_distances(src, dst);
    HopMatrices h{CMatrix(idx(dst.size()), idx(src.size())), CMatrix(idx(dst.size()), idx(src.size()))};
    for (Eigen::Index c = 0; c < dist.d.cols(); ++c) {
        for (Eigen::Index r = 0; r < dist.d.rows(); ++r) {
            const auto w = hop_coefficients(dist.d(r, c), dist.dz, k, omega, constants.rho, convention);
            h.from_pressure(r, c) = (Velocity ? w.p_to_v : w.p_to_p) * area;
            h.from_velocity(r, c) = (Velocity ? w.v_to_v : w.v_to_p) * area;
        }
    }
    return h;
}

} // namespace detail

inline HopMatrices theta2_matrices(const PlaneGrid& src, const PlaneGrid& dst, double omega,
                                   const PhysicalConstants& constants,
                                   KernelConvention convention = KernelConvention::exact) {
    return detail::hop_matrices<false>(src, dst, omega, constants, convention);
}

inline HopMatrices theta3_matrices(const PlaneGrid& src, const PlaneGrid& dst, double omega,
                                   const PhysicalConstants& constants,
                                   KernelConvention convention = KernelConvention::exact) {
    return detail::hop_matrices<true>(src, dst, omega, constants, convention);
}

/// Velocity on `src` -> pressure on `dst`, through the on-plane pressure of `src`.
inline CMatrix assemble_direct(const PlaneGrid& src, const PlaneGrid& dst, double omega,
                               const PhysicalConstants& constants, KernelConvention convention) {
    const CMatrix t1 = theta1_matrix(src, omega, constants);
    const HopMatrices h = theta2_matrices(src, dst, omega, constants, convention);
    CMatrix a = h.from_velocity;
    a.noalias() += h.from_pressure * t1;
    return a;
}

/// Velocity on `src` -> pressure on `dst` through the (pressure, velocity)
/// pair reconstructed on the intermediate plane `mid`.
inline CMatrix assemble_via(const PlaneGrid& src, const PlaneGrid& mid, const PlaneGrid& dst, double omega,
                            const PhysicalConstants& constants, KernelConvention convention) {
    const CMatrix t1 = theta1_matrix(src, omega, constants);
    const HopMatrices to_mid_p = theta2_matrices(src, mid, omega, constants, convention);
    const HopMatrices to_mid_v = theta3_matrices(src, mid, omega, constants, convention);
    const HopMatrices to_dst = theta2_matrices(mid, dst, omega, constants, convention);
    // Associate from the short (destination) side: every product has dst rows.
    CMatrix through_p(to_dst.from_pressure.rows(), src.size());
    through_p.noalias() = to_dst.from_pressure * to_mid_p.from_pressure;
    through_p.noalias() += to_dst.from_velocity * to_mid_v.from_pressure;
    CMatrix b(to_dst.from_pressure.rows(), src.size());
    b.noalias() = to_dst.from_pressure * to_mid_p.from_velocity;
    b.noalias() += to_dst.from_velocity * to_mid_v.from_velocity;
    b.noalias() += through_p * t1;
    return b;
}

/// Velocity on `src` -> velocity on `dst`.
inline CMatrix assemble_reconstruction(const PlaneGrid& src, const PlaneGrid& dst, double omega,
                                       const PhysicalConstants& constants, KernelConvention convention) {
    const CMatrix t1 = theta1_matrix(src, omega, constants);
    const HopMatrices h = theta3_matrices(src, dst, omega, constants, convention);
    CMatrix r = h.from_velocity;
    r.noalias() += h.from_pressure * t1;
    return r;
}

/// Monopole Green's matrix g * dA_src (equivalent-source model).
inline CMatrix monopole_matrix(const PlaneGrid& src, const PlaneGrid& dst, double omega,
                               const PhysicalConstants& constants) {
    detail::require_nonzero_frequency(omega);
    const double k = constants.wavenumber(omega);
    const double area = src.cell_area();
    const DistanceTable dist = pairwise_distances(src, dst);
    CMatrix g(dist.d.rows(), dist.d.cols());
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            g(r, c) = green_kernels(dist.d(r, c), dist.dz, k).g * area;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Scene-level path operators

struct PathTag {
    enum class Kind { direct, via_virtual, source_reconstruction, esm_monopole };
    Kind kind = Kind::direct;
    std::size_t virtual_index = 0; ///< 1-based, only for via_virtual

    static PathTag direct() { return {Kind::direct, 0}; }
    static PathTag via_virtual(std::size_t i) { return {Kind::via_virtual, i}; }
    static PathTag source_reconstruction() { return {Kind::source_reconstruction, 0}; }
    static PathTag esm_monopole() { return {Kind::esm_monopole, 0}; }

    std::string name() const {
        switch (kind) {
        case Kind::direct:
            return "direct";
        case Kind::via_virtual:
            return "via_virtual(" + std::to_string(virtual_index) + ")";
        case Kind::source_reconstruction:
            return "source_reconstruction";
        case Kind::esm_monopole:
            return "esm_monopole";
        }
        return "unknown";
    }
};

/// Dense linear map between stacked plane fields at one frequency.
struct PropagatorMatrix {
    CMatrix entries;
    double omega = 0.0;
    PlaneGrid src;
    PlaneGrid dst;
    PathTag tag;

    CVector apply(const CVector& x) const {
        if (x.size() != entries.cols()) {
            throw ContractError("operator " + tag.name() + " expects " + std::to_string(entries.cols()) +
                                " unknowns, got " + std::to_string(x.size()));
        }
        return entries * x;
    }
};

inline PropagatorMatrix assemble_path_operator(const SceneConfig& scene, PathTag tag) {
    const auto& c = scene.constants;
    const double w = scene.omega;
    auto separated = [](const PlaneGrid& a, const PlaneGrid& b, const char* what) {
        if (a.z == b.z) {
            throw ConfigError(std::string("planes of the ") + what + " hop coincide (dz = 0)");
        }
    };
    PropagatorMatrix out;
    out.omega = w;
    out.tag = tag;
    out.src = scene.equivalent;
    switch (tag.kind) {
    case PathTag::Kind::direct:
        separated(scene.equivalent, scene.hologram, "equivalent->hologram");
        out.dst = scene.hologram;
        out.entries = assemble_direct(scene.equivalent, scene.hologram, w, c, scene.kernels);
        break;
    case PathTag::Kind::via_virtual: {
        if (tag.virtual_index < 1 || tag.virtual_index > scene.virtual_count()) {
            throw ContractError("virtual plane index " + std::to_string(tag.virtual_index) + " out of range 1.." +
                                std::to_string(scene.virtual_count()));
        }
        const PlaneGrid& mid = scene.virtual_planes[tag.virtual_index - 1];
        separated(scene.equivalent, mid, "equivalent->virtual");
        separated(mid, scene.hologram, "virtual->hologram");
        out.dst = scene.hologram;
        out.entries = assemble_via(scene.equivalent, mid, scene.hologram, w, c, scene.kernels);
        break;
    }
    case PathTag::Kind::source_reconstruction:
        separated(scene.equivalent, scene.source, "equivalent->source");
        out.dst = scene.source;
        out.entries = assemble_reconstruction(scene.equivalent, scene.source, w, c, scene.kernels);
        break;
    case PathTag::Kind::esm_monopole:
        separated(scene.equivalent, scene.hologram, "equivalent->hologram");
        out.dst = scene.hologram;
        out.entries = monopole_matrix(scene.equivalent, scene.hologram, w, c);
        break;
    }
    return out;
}

} // namespace nah
