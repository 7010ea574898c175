#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "nah/geometry.hpp"
#include "nah/types.hpp"

namespace nah {

/// Medium properties. Defaults are air at 20 degrees Celsius.
struct PhysicalConstants {
    double c = 343.0;   ///< sound speed [m/s]
    double rho = 1.225; ///< density [kg/m^3]

    double wavenumber(double omega) const { return omega / c; }

    void validate() const {
        if (!(c > 0.0) || !(rho > 0.0) || !std::isfinite(c) || !std::isfinite(rho)) {
            throw ConfigError("sound speed and density must be positive and finite");
        }
    }
};

/// Which closed forms the plane-to-plane propagators use.
///
/// `exact`: the pressure term of the Kirchhoff-Helmholtz sum uses the normal
/// derivative taken at the integration (source) point, and the velocity
/// propagator uses the exact mixed second derivative. These reproduce
/// free-field radiation and are the default.
///
/// `literal`: the pressure term uses the field-point derivative
/// -e^{-jkd}(1+jkd)dz/(4 pi d^3) and the velocity propagator uses
/// e^{-jkd}(-k^2 d + 3 + 3jkd)dz/(4 pi d^3). Kept for comparison; it does not
/// reproduce free-field propagation (see the monopole tests).
enum class KernelConvention { exact, literal };

inline std::string_view to_string(KernelConvention c) {
    return c == KernelConvention::exact ? "exact" : "literal";
}

inline KernelConvention parse_kernel_convention(std::string_view s) {
    if (s == "exact") {
        return KernelConvention::exact;
    }
    if (s == "literal") {
        return KernelConvention::literal;
    }
    throw ConfigError("unknown kernel convention '" + std::string(s) + "'");
}

enum class FieldKind { pressure, velocity };

inline std::string_view to_string(FieldKind k) {
    return k == FieldKind::pressure ? "pressure" : "velocity";
}

inline FieldKind parse_field_kind(std::string_view s) {
    if (s == "pressure") {
        return FieldKind::pressure;
    }
    if (s == "velocity") {
        return FieldKind::velocity;
    }
    throw ConfigError("unknown field kind '" + std::string(s) + "'");
}

/// Complex single-frequency field sampled on a plane grid.
///
/// Pressure is in Pa. Velocity is the normal component along +z in m/s,
/// related to pressure through dp/dz = j*omega*rho*v.
struct ComplexField {
    PlaneGrid grid;
    double omega = 0.0;
    FieldKind kind = FieldKind::pressure;
    CVector values;

    static ComplexField zeros(const PlaneGrid& grid, double omega, FieldKind kind) {
        return {grid, omega, kind, CVector::Zero(static_cast<Eigen::Index>(grid.size()))};
    }

    void check_consistent() const {
        if (static_cast<std::size_t>(values.size()) != grid.size()) {
            throw ContractError("field has " + std::to_string(values.size()) + " values for a " +
                                std::to_string(grid.size()) + "-point grid");
        }
    }

    bool all_finite() const { return values.allFinite(); }
};

} // namespace nah
