#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nah/geometry.hpp"
#include "nah/physics.hpp"

namespace nah {

enum class ParamMode { direct, network };

inline std::string_view to_string(ParamMode m) { return m == ParamMode::direct ? "direct" : "network"; }

inline ParamMode parse_param_mode(std::string_view s) {
    if (s == "direct") {
        return ParamMode::direct;
    }
    if (s == "network") {
        return ParamMode::network;
    }
    throw ConfigError("unknown optimizer mode '" + std::string(s) + "'");
}

/// Adam, learning-rate plateau schedule and early stopping for the
/// equivalent-source optimizer.
struct OptimizerSettings {
    ParamMode mode = ParamMode::direct;
    double learning_rate = 0.01;
    double lr_factor = 0.1;
    std::size_t lr_patience = 200;
    double lr_floor = 0.001;
    std::size_t early_stop_patience = 50;
    /// Early stopping only counts stagnant epochs once the learning rate has
    /// reached its floor; otherwise it competes with the plateau schedule.
    bool early_stop_after_floor = true;
    std::size_t max_epochs = 20000;
    /// Relative decrease of the best loss that counts as an improvement.
    double improvement_tolerance = 1e-12;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    /// Hidden widths of the complex network used in network mode.
    std::vector<std::size_t> hidden_widths{256, 512};

    void validate() const {
        if (!(learning_rate > 0.0) || !(lr_floor > 0.0) || lr_floor > learning_rate) {
            throw ConfigError("learning rate and floor must satisfy 0 < floor <= rate");
        }
        if (!(lr_factor > 0.0) || !(lr_factor < 1.0)) {
            throw ConfigError("learning-rate factor must lie in (0, 1)");
        }
        if (max_epochs == 0) {
            throw ConfigError("max_epochs must be positive");
        }
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
            throw ConfigError("Adam betas must lie in [0, 1) and eps must be positive");
        }
        for (auto w : hidden_widths) {
            if (w == 0) {
                throw ConfigError("hidden layer widths must be positive");
            }
        }
    }
};

/// Everything a reconstruction run needs to know about the setup: medium,
/// frequency, the equivalent-source (E), actual-source (S) and hologram (H)
/// planes, the virtual planes, and the solver settings.
struct SceneConfig {
    PhysicalConstants constants;
    double omega = 2.0 * kPi * 1000.0;
    PlaneGrid equivalent;
    PlaneGrid source;
    PlaneGrid hologram;
    std::vector<PlaneGrid> virtual_planes;
    double lambda = 1e-6;
    double alpha = 0.01;
    KernelConvention kernels = KernelConvention::exact;
    OptimizerSettings optimizer;

    std::size_t virtual_count() const { return virtual_planes.size(); }
    double wavenumber() const { return constants.wavenumber(omega); }

    void validate() const {
        constants.validate();
        if (!(omega > 0.0) || !std::isfinite(omega)) {
            throw ConfigError("angular frequency must be positive and finite");
        }
        for (const PlaneGrid* g : {&equivalent, &source, &hologram}) {
            build_plane_grid(g->nx, g->ny, g->dx, g->dy, g->z, g->origin_x, g->origin_y);
        }
        if (!(equivalent.z < source.z) || !(source.z <= hologram.z)) {
            throw ConfigError("planes must be ordered z_E < z_S <= z_H");
        }
        for (std::size_t i = 0; i < virtual_planes.size(); ++i) {
            const auto& v = virtual_planes[i];
            build_plane_grid(v.nx, v.ny, v.dx, v.dy, v.z, v.origin_x, v.origin_y);
            if (v.z == equivalent.z || v.z == hologram.z) {
                throw ConfigError("virtual plane " + std::to_string(i + 1) +
                                  " coincides with the equivalent-source or hologram plane");
            }
        }
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw ConfigError("regularization weight must be non-negative");
        }
        if (!(alpha > 0.0) || alpha > 1.0) {
            throw ConfigError("normalization factor alpha must lie in (0, 1]");
        }
        optimizer.validate();
    }
};

/// Default layout: 16x64 source, equivalent and virtual grids spanning
/// 0.20 m x 0.80 m, an 8x8 hologram over the same aperture, z_S = 0,
/// z_H = 3.12 cm, z_E = -5 cm and virtual planes at 0, -0.1 cm, +0.1 cm.
inline SceneConfig reference_scene(double frequency_hz, std::size_t n_virtual = 3) {
    if (n_virtual > 3) {
        throw ConfigError("the reference layout defines at most three virtual planes");
    }
    SceneConfig s;
    s.omega = 2.0 * kPi * frequency_hz;
    s.source = centered_plane_grid(16, 64, 0.0125, 0.0125, 0.0);
    s.equivalent = centered_plane_grid(16, 64, 0.0125, 0.0125, -0.05);
    s.hologram = centered_plane_grid(8, 8, 0.2 / 8.0, 0.8 / 8.0, 0.0312);
    const double vz[3] = {0.0, -0.001, 0.001};
    for (std::size_t i = 0; i < n_virtual; ++i) {
        s.virtual_planes.push_back(centered_plane_grid(16, 64, 0.0125, 0.0125, vz[i]));
    }
    s.lambda = 1e-6;
    s.alpha = 0.01;
    return s;
}

} // namespace nah
