#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "nah/types.hpp"

namespace nah {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Uniform rectangular sampling of a z-normal plane.
///
/// Point (i, j) sits at (origin_x + i*dx, origin_y + j*dy, z) and is stored at
/// flat index i*ny + j. Every field, matrix row and matrix column in the
/// library follows this enumeration.
struct PlaneGrid {
    std::size_t nx = 1;
    std::size_t ny = 1;
    double dx = 1.0;
    double dy = 1.0;
    double z = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const { return i * ny + j; }
    double x_at(std::size_t i) const { return origin_x + static_cast<double>(i) * dx; }
    double y_at(std::size_t j) const { return origin_y + static_cast<double>(j) * dy; }
    Point3 point(std::size_t flat) const { return {x_at(flat / ny), y_at(flat % ny), z}; }
    double cell_area() const { return dx * dy; }
    double center_x() const { return origin_x + 0.5 * static_cast<double>(nx - 1) * dx; }
    double center_y() const { return origin_y + 0.5 * static_cast<double>(ny - 1) * dy; }

    bool operator==(const PlaneGrid&) const = default;
};

inline PlaneGrid build_plane_grid(std::size_t nx, std::size_t ny, double dx, double dy, double z,
                                  double origin_x, double origin_y) {
    if (nx == 0 || ny == 0) {
        throw ConfigError("plane grid needs at least one point per axis");
    }
    if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy)) {
        throw ConfigError("plane grid spacing must be positive and finite");
    }
    if (!std::isfinite(z) || !std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        throw ConfigError("plane grid offsets must be finite");
    }
    return PlaneGrid{nx, ny, dx, dy, z, origin_x, origin_y};
}

/// Grid whose samples are centred on (center_x, center_y): the outer samples
/// sit half a spacing inside an nx*dx by ny*dy aperture.
inline PlaneGrid centered_plane_grid(std::size_t nx, std::size_t ny, double dx, double dy, double z,
                                     double center_x = 0.0, double center_y = 0.0) {
    if (nx == 0 || ny == 0) {
        throw ConfigError("plane grid needs at least one point per axis");
    }
    const double ox = center_x - 0.5 * static_cast<double>(nx - 1) * dx;
    const double oy = center_y - 0.5 * static_cast<double>(ny - 1) * dy;
    return build_plane_grid(nx, ny, dx, dy, z, ox, oy);
}

/// d(m, n) is the distance from source point n to destination point m.
struct DistanceTable {
    RMatrix d;
    double dz = 0.0;
};

inline DistanceTable pairwise_distances(const PlaneGrid& src, const PlaneGrid& dst) {
    DistanceTable table;
    table.dz = std::abs(dst.z - src.z);
    table.d.resize(static_cast<Eigen::Index>(dst.size()), static_cast<Eigen::Index>(src.size()));
    // Offsets are differenced before the index terms so that a common shift of
    // both grids cancels exactly whenever the shifted origins are representable.
    const double ox = dst.origin_x - src.origin_x;
    const double oy = dst.origin_y - src.origin_y;
    const double rz = dst.z - src.z;
    for (std::size_t m = 0; m < dst.size(); ++m) {
        const double im = static_cast<double>(m / dst.ny) * dst.dx;
        const double jm = static_cast<double>(m % dst.ny) * dst.dy;
        for (std::size_t n = 0; n < src.size(); ++n) {
            const double in = static_cast<double>(n / src.ny) * src.dx;
            const double jn = static_cast<double>(n % src.ny) * src.dy;
            const double rx = ox + (im - in);
            const double ry = oy + (jm - jn);
            table.d(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
                std::sqrt(rx * rx + ry * ry + rz * rz);
        }
    }
    return table;
}

inline std::string describe(const PlaneGrid& g) {
    return std::to_string(g.nx) + "x" + std::to_string(g.ny) + " grid at z=" + std::to_string(g.z);
}

} // namespace nah
