#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nah/esm.hpp"
#include "nah/field_io.hpp"
#include "nah/field_synth.hpp"
#include "nah/scene.hpp"

namespace nah {

enum class SourceKind { plate, monopole, file };

struct MonopoleSpec {
    Point3 position{0.0, 0.0, -0.02};
    Complex strength{1e-4, 0.0}; ///< volume velocity, m^3/s
};

struct SourceSpec {
    SourceKind kind = SourceKind::plate;
    PlateModeSpec plate;
    MonopoleSpec monopole;
    std::string path; ///< velocity field file for kind = file
};

enum class Method { cesm, pinnsfd_direct, pinnsfd_network };

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::cesm:
        return "cesm";
    case Method::pinnsfd_direct:
        return "pinnsfd_direct";
    case Method::pinnsfd_network:
        return "pinnsfd_network";
    }
    return "unknown";
}

inline Method parse_method(std::string_view s) {
    if (s == "cesm") {
        return Method::cesm;
    }
    if (s == "pinnsfd_direct") {
        return Method::pinnsfd_direct;
    }
    if (s == "pinnsfd_network") {
        return Method::pinnsfd_network;
    }
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

struct ExperimentConfig {
    SceneConfig scene = reference_scene(1000.0);
    /// Unset: taken from the source (plate modal frequency or field file).
    std::optional<double> frequency_hz;
    SourceSpec source;
    NoiseSpec noise;
    std::vector<Method> methods{Method::cesm, Method::pinnsfd_direct};
    std::vector<double> cesm_lambdas = default_lambda_candidates();
    std::string output_dir = "out";

    void validate() const {
        if (methods.empty()) {
            throw ConfigError("method list is empty");
        }
        if (cesm_lambdas.empty()) {
            throw ConfigError("C-ESM lambda list is empty");
        }
        if (source.kind == SourceKind::plate) {
            source.plate.validate();
        }
        if (source.kind == SourceKind::file && source.path.empty()) {
            throw ConfigError("source.path is required for a file source");
        }
        if (source.kind == SourceKind::monopole && !frequency_hz) {
            throw ConfigError("scene.frequency_hz is required for a monopole source");
        }
        scene.validate();
    }
};

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

inline std::vector<double> parse_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(parse_double(item, key));
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
    }
    return out;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + format_double(v[i]);
    }
    return s;
}

class IniReader {
public:
    explicit IniReader(const boost::property_tree::ptree& pt) : pt_(pt) {}

    bool has(const std::string& section, const std::string& key) const {
        used_.insert(section + "." + key);
        const auto sec = pt_.get_child_optional(boost::property_tree::ptree::path_type(section, '/'));
        return sec && sec->get_child_optional(boost::property_tree::ptree::path_type(key, '/'));
    }

    std::string str(const std::string& section, const std::string& key) const {
        const auto& sec = pt_.get_child(boost::property_tree::ptree::path_type(section, '/'));
        return sec.get<std::string>(boost::property_tree::ptree::path_type(key, '/'));
    }

    template <class T>
    void get(const std::string& section, const std::string& key, T& out) const {
        if (!has(section, key)) {
            return;
        }
        const std::string v = str(section, key);
        if constexpr (std::is_same_v<T, std::string>) {
            out = v;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1") {
                out = true;
            } else if (v == "false" || v == "0") {
                out = false;
            } else {
                throw ConfigError(section + "." + key + ": expected true or false, got '" + v + "'");
            }
        } else if constexpr (std::is_integral_v<T>) {
            try {
                out = static_cast<T>(parse_uint(v, section + "." + key));
            } catch (const IoError& e) {
                throw ConfigError(e.what());
            }
        } else {
            try {
                out = parse_double(v, section + "." + key);
            } catch (const IoError& e) {
                throw ConfigError(e.what());
            }
        }
    }

    /// Every key present in the file must have been looked up.
    void reject_unknown() const {
        for (const auto& [section, sec] : pt_) {
            if (sec.empty() && !sec.data().empty()) {
                throw ConfigError("key '" + section + "' outside any section");
            }
            for (const auto& [key, value] : sec) {
                if (!used_.count(section + "." + key)) {
                    throw ConfigError("unknown config key '" + section + "." + key + "'");
                }
            }
        }
    }

private:
    const boost::property_tree::ptree& pt_;
    mutable std::set<std::string> used_;
};

struct GridKeys {
    std::size_t nx;
    std::size_t ny;
    double dx;
    double dy;
    double center_x;
    double center_y;
};

inline GridKeys grid_keys(const PlaneGrid& g) {
    return {g.nx, g.ny, g.dx, g.dy, g.center_x(), g.center_y()};
}

inline GridKeys read_grid_keys(const IniReader& r, const std::string& section, const PlaneGrid& defaults) {
    GridKeys k = grid_keys(defaults);
    r.get(section, "nx", k.nx);
    r.get(section, "ny", k.ny);
    r.get(section, "dx", k.dx);
    r.get(section, "dy", k.dy);
    r.get(section, "center_x", k.center_x);
    r.get(section, "center_y", k.center_y);
    return k;
}

inline PlaneGrid read_grid(const IniReader& r, const std::string& section, const PlaneGrid& defaults) {
    const GridKeys k = read_grid_keys(r, section, defaults);
    double z = defaults.z;
    r.get(section, "z", z);
    return centered_plane_grid(k.nx, k.ny, k.dx, k.dy, z, k.center_x, k.center_y);
}

inline void write_grid(std::ostream& os, const std::string& section, const PlaneGrid& g, bool with_z = true) {
    os << "[" << section << "]\nnx = " << g.nx << "\nny = " << g.ny << "\ndx = " << format_double(g.dx)
       << "\ndy = " << format_double(g.dy) << "\ncenter_x = " << format_double(g.center_x())
       << "\ncenter_y = " << format_double(g.center_y()) << "\n";
    if (with_z) {
        os << "z = " << format_double(g.z) << "\n";
    }
    os << "\n";
}

} // namespace detail

/// Reads an INI experiment description. Missing keys keep the reference
/// defaults; unknown keys are rejected.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    const detail::IniReader r(pt);
    ExperimentConfig cfg;
    SceneConfig& s = cfg.scene;

    r.get("physics", "c", s.constants.c);
    r.get("physics", "rho", s.constants.rho);

    if (r.has("scene", "frequency_hz")) {
        double f = 0.0;
        r.get("scene", "frequency_hz", f);
        cfg.frequency_hz = f;
    }
    r.get("scene", "lambda", s.lambda);
    r.get("scene", "alpha", s.alpha);
    if (r.has("scene", "kernels")) {
        s.kernels = parse_kernel_convention(r.str("scene", "kernels"));
    }

    s.source = detail::read_grid(r, "source_grid", s.source);
    s.equivalent = detail::read_grid(r, "equivalent_grid", s.equivalent);
    s.hologram = detail::read_grid(r, "hologram_grid", s.hologram);
    const PlaneGrid vdef = s.virtual_planes.empty() ? s.source : s.virtual_planes.front();
    const detail::GridKeys vk = detail::read_grid_keys(r, "virtual_grid", vdef);
    std::vector<double> vz;
    for (const auto& v : s.virtual_planes) {
        vz.push_back(v.z);
    }
    if (r.has("virtual_grid", "z")) {
        vz = detail::parse_list(r.str("virtual_grid", "z"), "virtual_grid.z");
    }
    s.virtual_planes.clear();
    for (double z : vz) {
        s.virtual_planes.push_back(centered_plane_grid(vk.nx, vk.ny, vk.dx, vk.dy, z, vk.center_x, vk.center_y));
    }

    if (r.has("source", "type")) {
        const std::string t = r.str("source", "type");
        if (t == "plate") {
            cfg.source.kind = SourceKind::plate;
        } else if (t == "monopole") {
            cfg.source.kind = SourceKind::monopole;
        } else if (t == "file") {
            cfg.source.kind = SourceKind::file;
        } else {
            throw ConfigError("unknown source type '" + t + "'");
        }
    }
    auto& plate = cfg.source.plate;
    plate.center_x = s.source.center_x();
    plate.center_y = s.source.center_y();
    r.get("source", "m", plate.m);
    r.get("source", "n", plate.n);
    r.get("source", "lx", plate.lx);
    r.get("source", "ly", plate.ly);
    r.get("source", "amplitude", plate.amplitude);
    r.get("source", "youngs_modulus", plate.material.youngs_modulus);
    r.get("source", "poisson_ratio", plate.material.poisson_ratio);
    r.get("source", "density", plate.material.density);
    r.get("source", "thickness", plate.material.thickness);
    auto& mono = cfg.source.monopole;
    r.get("source", "x", mono.position.x);
    r.get("source", "y", mono.position.y);
    r.get("source", "z", mono.position.z);
    double sr = mono.strength.real();
    double si = mono.strength.imag();
    r.get("source", "strength_re", sr);
    r.get("source", "strength_im", si);
    mono.strength = {sr, si};
    r.get("source", "path", cfg.source.path);

    r.get("noise", "snr_db", cfg.noise.snr_db);
    r.get("noise", "seed", cfg.noise.seed);

    auto& o = s.optimizer;
    if (r.has("optimizer", "mode")) {
        o.mode = parse_param_mode(r.str("optimizer", "mode"));
    }
    r.get("optimizer", "learning_rate", o.learning_rate);
    r.get("optimizer", "lr_factor", o.lr_factor);
    r.get("optimizer", "lr_patience", o.lr_patience);
    r.get("optimizer", "lr_floor", o.lr_floor);
    r.get("optimizer", "early_stop_patience", o.early_stop_patience);
    r.get("optimizer", "early_stop_after_floor", o.early_stop_after_floor);
    r.get("optimizer", "max_epochs", o.max_epochs);
    r.get("optimizer", "improvement_tolerance", o.improvement_tolerance);
    r.get("optimizer", "seed", o.seed);
    if (r.has("optimizer", "hidden_widths")) {
        o.hidden_widths.clear();
        for (double w : detail::parse_list(r.str("optimizer", "hidden_widths"), "optimizer.hidden_widths")) {
            if (!(w >= 1.0) || w != static_cast<double>(static_cast<std::size_t>(w))) {
                throw ConfigError("optimizer.hidden_widths must be positive integers");
            }
            o.hidden_widths.push_back(static_cast<std::size_t>(w));
        }
    }

    if (r.has("cesm", "lambdas")) {
        cfg.cesm_lambdas = detail::parse_list(r.str("cesm", "lambdas"), "cesm.lambdas");
    }
    if (r.has("experiment", "methods")) {
        cfg.methods.clear();
        std::stringstream ss(r.str("experiment", "methods"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            if (b == std::string::npos) {
                continue;
            }
            cfg.methods.push_back(parse_method(item.substr(b, item.find_last_not_of(" \t") - b + 1)));
        }
    }
    r.get("experiment", "output_dir", cfg.output_dir);
    r.reject_unknown();

    if (cfg.source.kind == SourceKind::plate && cfg.frequency_hz) {
        plate.frequency_hz = cfg.frequency_hz;
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path + "'");
    }
    return parse_experiment_config(in);
}

/// Canonical text of the effective configuration. Its FNV-1a hash, taken
/// without the output directory, is the config hash embedded in every output.
inline std::string to_ini(const ExperimentConfig& cfg, bool with_output_dir = true) {
    const SceneConfig& s = cfg.scene;
    std::ostringstream os;
    os << "[physics]\nc = " << format_double(s.constants.c) << "\nrho = " << format_double(s.constants.rho) << "\n\n";
    os << "[scene]\n";
    if (cfg.frequency_hz) {
        os << "frequency_hz = " << format_double(*cfg.frequency_hz) << "\n";
    }
    os << "lambda = " << format_double(s.lambda) << "\nalpha = " << format_double(s.alpha)
       << "\nkernels = " << to_string(s.kernels) << "\n\n";
    detail::write_grid(os, "source_grid", s.source);
    detail::write_grid(os, "equivalent_grid", s.equivalent);
    detail::write_grid(os, "hologram_grid", s.hologram);
    if (!s.virtual_planes.empty()) {
        detail::write_grid(os, "virtual_grid", s.virtual_planes.front(), false);
    } else {
        os << "[virtual_grid]\n";
    }
    std::vector<double> vz;
    for (const auto& v : s.virtual_planes) {
        vz.push_back(v.z);
    }
    os << "z = " << detail::join(vz) << "\n\n[source]\n";
    switch (cfg.source.kind) {
    case SourceKind::plate: {
        const auto& p = cfg.source.plate;
        os << "type = plate\nm = " << p.m << "\nn = " << p.n << "\nlx = " << format_double(p.lx)
           << "\nly = " << format_double(p.ly) << "\namplitude = " << format_double(p.amplitude)
           << "\nyoungs_modulus = " << format_double(p.material.youngs_modulus)
           << "\npoisson_ratio = " << format_double(p.material.poisson_ratio)
           << "\ndensity = " << format_double(p.material.density)
           << "\nthickness = " << format_double(p.material.thickness) << "\n";
        break;
    }
    case SourceKind::monopole: {
        const auto& m = cfg.source.monopole;
        os << "type = monopole\nx = " << format_double(m.position.x) << "\ny = " << format_double(m.position.y)
           << "\nz = " << format_double(m.position.z) << "\nstrength_re = " << format_double(m.strength.real())
           << "\nstrength_im = " << format_double(m.strength.imag()) << "\n";
        break;
    }
    case SourceKind::file:
        os << "type = file\npath = " << cfg.source.path << "\n";
        break;
    }
    os << "\n[noise]\nsnr_db = " << format_double(cfg.noise.snr_db) << "\nseed = " << cfg.noise.seed << "\n\n";
    const auto& o = s.optimizer;
    os << "[optimizer]\nmode = " << to_string(o.mode) << "\nlearning_rate = " << format_double(o.learning_rate)
       << "\nlr_factor = " << format_double(o.lr_factor) << "\nlr_patience = " << o.lr_patience
       << "\nlr_floor = " << format_double(o.lr_floor) << "\nearly_stop_patience = " << o.early_stop_patience
       << "\nearly_stop_after_floor = " << (o.early_stop_after_floor ? "true" : "false")
       << "\nmax_epochs = " << o.max_epochs << "\nimprovement_tolerance = " << format_double(o.improvement_tolerance)
       << "\nseed = " << o.seed << "\nhidden_widths = ";
    for (std::size_t i = 0; i < o.hidden_widths.size(); ++i) {
        os << (i ? ", " : "") << o.hidden_widths[i];
    }
    os << "\n\n[cesm]\nlambdas = " << detail::join(cfg.cesm_lambdas) << "\n\n[experiment]\nmethods = ";
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
        os << (i ? ", " : "") << to_string(cfg.methods[i]);
    }
    os << "\n";
    if (with_output_dir) {
        os << "output_dir = " << cfg.output_dir << "\n";
    }
    return os.str();
}

inline std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(to_ini(cfg, false))); }

} // namespace nah
