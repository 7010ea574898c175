#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>

#include "nah/cvnn.hpp"
#include "nah/metrics.hpp"
#include "nah/physics.hpp"

namespace nah {

inline constexpr int kFieldFormatVersion = 1;

/// Shortest-round-trip text for a double; always parses back bit-exactly.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& what) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("cannot parse " + what + " from '" + std::string(s) + "'");
    }
    return x;
}

inline std::uint64_t parse_uint(std::string_view s, const std::string& what) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("cannot parse " + what + " from '" + std::string(s) + "'");
    }
    return x;
}

/// Descriptive header fields carried alongside a field file.
struct FieldMeta {
    std::string provenance;
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// File payload kind: a physical field or a 0/1 point mask.
enum class FileKind { pressure, velocity, mask };

struct FieldFile {
    ComplexField field;
    FileKind kind = FileKind::pressure;
    FieldMeta meta;
};

namespace detail {

inline std::string_view to_string(FileKind k) {
    switch (k) {
    case FileKind::pressure:
        return "pressure";
    case FileKind::velocity:
        return "velocity";
    case FileKind::mask:
        return "mask";
    }
    return "unknown";
}

inline void write_grid_header(std::ostream& os, const PlaneGrid& g) {
    os << "# nx: " << g.nx << "\n# ny: " << g.ny << "\n# dx: " << format_double(g.dx)
       << "\n# dy: " << format_double(g.dy) << "\n# z: " << format_double(g.z)
       << "\n# origin_x: " << format_double(g.origin_x) << "\n# origin_y: " << format_double(g.origin_y) << "\n";
}

inline void write_body(std::ostream& os, const PlaneGrid& g, const CVector& values) {
    os << "ix,iy,re,im\n";
    for (std::size_t i = 0; i < g.nx; ++i) {
        for (std::size_t j = 0; j < g.ny; ++j) {
            const Complex v = values[static_cast<Eigen::Index>(g.index(i, j))];
            os << i << ',' << j << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
        }
    }
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

} // namespace detail

inline std::string serialize_field(const ComplexField& f, FileKind kind, const FieldMeta& meta) {
    f.check_consistent();
    std::ostringstream os;
    os << "# format_version: " << kFieldFormatVersion << "\n# kind: " << detail::to_string(kind)
       << "\n# omega: " << format_double(f.omega) << "\n";
    detail::write_grid_header(os, f.grid);
    os << "# provenance: " << meta.provenance << "\n# config_hash: " << meta.config_hash << "\n# seed: " << meta.seed
       << "\n";
    detail::write_body(os, f.grid, f.values);
    return os.str();
}

inline void write_field(const std::string& path, const ComplexField& f, const FieldMeta& meta = {}) {
    const FileKind kind = f.kind == FieldKind::pressure ? FileKind::pressure : FileKind::velocity;
    detail::write_text(path, serialize_field(f, kind, meta));
}

inline FieldFile parse_field(std::istream& in, const std::string& name) {
    std::map<std::string, std::string> header;
    std::string line;
    std::size_t line_no = 0;
    bool saw_columns = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ", 2);
            if (colon == std::string::npos) {
                throw IoError(name + ":" + std::to_string(line_no) + ": malformed header line");
            }
            header[line.substr(2, colon - 2)] = line.substr(colon + 2);
            continue;
        }
        if (line == "ix,iy,re,im") {
            saw_columns = true;
            break;
        }
        throw IoError(name + ":" + std::to_string(line_no) + ": expected header or column line");
    }
    if (!saw_columns) {
        throw IoError(name + ": missing 'ix,iy,re,im' column line");
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = header.find(key);
        if (it == header.end()) {
            throw IoError(name + ": missing header key '" + key + "'");
        }
        return it->second;
    };
    if (parse_uint(need("format_version"), "format_version") != static_cast<std::uint64_t>(kFieldFormatVersion)) {
        throw IoError(name + ": unsupported format version " + need("format_version"));
    }
    FieldFile ff;
    const std::string& kind = need("kind");
    if (kind == "pressure") {
        ff.kind = FileKind::pressure;
    } else if (kind == "velocity") {
        ff.kind = FileKind::velocity;
    } else if (kind == "mask") {
        ff.kind = FileKind::mask;
    } else {
        throw IoError(name + ": unknown kind '" + kind + "'");
    }
    PlaneGrid g;
    try {
        g = build_plane_grid(parse_uint(need("nx"), "nx"), parse_uint(need("ny"), "ny"), parse_double(need("dx"), "dx"),
                             parse_double(need("dy"), "dy"), parse_double(need("z"), "z"),
                             parse_double(need("origin_x"), "origin_x"), parse_double(need("origin_y"), "origin_y"));
    } catch (const ConfigError& e) {
        throw IoError(name + ": " + e.what());
    }
    ff.field.grid = g;
    ff.field.omega = parse_double(need("omega"), "omega");
    ff.field.kind = ff.kind == FileKind::pressure ? FieldKind::pressure : FieldKind::velocity;
    ff.field.values = CVector::Zero(static_cast<Eigen::Index>(g.size()));
    if (header.count("provenance")) {
        ff.meta.provenance = header["provenance"];
    }
    if (header.count("config_hash")) {
        ff.meta.config_hash = header["config_hash"];
    }
    if (header.count("seed")) {
        ff.meta.seed = parse_uint(header["seed"], "seed");
    }
    std::vector<std::uint8_t> seen(g.size(), 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::string_view sv(line);
        std::string_view cols[4];
        for (int c = 0; c < 4; ++c) {
            const auto comma = sv.find(',');
            if ((c < 3) == (comma == std::string_view::npos)) {
                throw IoError(name + ":" + std::to_string(line_no) + ": expected four comma-separated columns");
            }
            cols[c] = sv.substr(0, comma);
            sv = c < 3 ? sv.substr(comma + 1) : std::string_view{};
        }
        const auto i = parse_uint(cols[0], "ix");
        const auto j = parse_uint(cols[1], "iy");
        if (i >= g.nx || j >= g.ny) {
            throw IoError(name + ":" + std::to_string(line_no) + ": index out of range");
        }
        const std::size_t flat = g.index(i, j);
        if (seen[flat]) {
            throw IoError(name + ":" + std::to_string(line_no) + ": duplicate point");
        }
        seen[flat] = 1;
        ff.field.values[static_cast<Eigen::Index>(flat)] =
            Complex(parse_double(cols[2], "re"), parse_double(cols[3], "im"));
        ++rows;
    }
    if (rows != g.size()) {
        throw IoError(name + ": expected " + std::to_string(g.size()) + " rows, found " + std::to_string(rows));
    }
    return ff;
}

inline FieldFile read_field_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    return parse_field(in, path);
}

inline ComplexField read_field(const std::string& path) {
    FieldFile ff = read_field_file(path);
    if (ff.kind == FileKind::mask) {
        throw IoError("'" + path + "' holds a mask, not a field");
    }
    return ff.field;
}

struct MaskFile {
    BinaryMask mask;
    PlaneGrid grid;
};

inline void write_mask(const std::string& path, const PlaneGrid& grid, const BinaryMask& mask,
                       const FieldMeta& meta = {}) {
    if (mask.flags.size() != grid.size()) {
        throw ContractError("mask length does not match its grid");
    }
    ComplexField f = ComplexField::zeros(grid, 0.0, FieldKind::pressure);
    for (std::size_t i = 0; i < mask.flags.size(); ++i) {
        f.values[static_cast<Eigen::Index>(i)] = mask.flags[i] ? 1.0 : 0.0;
    }
    detail::write_text(path, serialize_field(f, FileKind::mask, meta));
}

inline MaskFile read_mask(const std::string& path) {
    FieldFile ff = read_field_file(path);
    if (ff.kind != FileKind::mask) {
        throw IoError("'" + path + "' is not a mask file");
    }
    MaskFile mf;
    mf.grid = ff.field.grid;
    mf.mask.flags.resize(ff.field.grid.size());
    for (std::size_t i = 0; i < mf.mask.flags.size(); ++i) {
        const Complex v = ff.field.values[static_cast<Eigen::Index>(i)];
        if (v != Complex(0.0, 0.0) && v != Complex(1.0, 0.0)) {
            throw IoError("'" + path + "': mask entries must be 0 or 1");
        }
        mf.mask.flags[i] = v.real() != 0.0 ? 1 : 0;
    }
    return mf;
}

/// Network parameters: a "# layers:" header listing each layer as
/// affine:<out>x<in> or cardioid:<width>, then one ix,iy,re,im block per
/// affine layer (weights, bias as column `in`).
inline void write_network(const std::string& path, const ComplexNetwork& net, const FieldMeta& meta = {}) {
    net.validate();
    std::ostringstream os;
    os << "# format_version: " << kFieldFormatVersion << "\n# kind: network\n# layers:";
    for (const auto& l : net.layers) {
        if (const auto* a = std::get_if<AffineLayer>(&l)) {
            os << " affine:" << a->weight.rows() << "x" << a->weight.cols();
        } else {
            os << " cardioid:" << std::get<CardioidLayer>(l).width;
        }
    }
    os << "\n# provenance: " << meta.provenance << "\n# config_hash: " << meta.config_hash << "\n# seed: " << meta.seed
       << "\n";
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto* a = std::get_if<AffineLayer>(&net.layers[k]);
        if (!a) {
            continue;
        }
        os << "layer," << k << "\nix,iy,re,im\n";
        for (Eigen::Index r = 0; r < a->weight.rows(); ++r) {
            for (Eigen::Index c = 0; c <= a->weight.cols(); ++c) {
                const Complex v = c < a->weight.cols() ? a->weight(r, c) : a->bias[r];
                os << r << ',' << c << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
            }
        }
    }
    detail::write_text(path, os.str());
}

inline ComplexNetwork read_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::string line;
    ComplexNetwork net;
    while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
        if (line.rfind("# layers:", 0) != 0) {
            continue;
        }
        std::istringstream ls(line.substr(9));
        std::string tok;
        while (ls >> tok) {
            if (tok.rfind("affine:", 0) == 0) {
                const auto x = tok.find('x', 7);
                if (x == std::string::npos) {
                    throw IoError(path + ": malformed layer '" + tok + "'");
                }
                const auto out = static_cast<Eigen::Index>(parse_uint(std::string_view(tok).substr(7, x - 7), "rows"));
                const auto inn = static_cast<Eigen::Index>(parse_uint(std::string_view(tok).substr(x + 1), "cols"));
                net.layers.emplace_back(AffineLayer{CMatrix::Zero(out, inn), CVector::Zero(out)});
            } else if (tok.rfind("cardioid:", 0) == 0) {
                net.layers.emplace_back(
                    CardioidLayer{static_cast<Eigen::Index>(parse_uint(std::string_view(tok).substr(9), "width"))});
            } else {
                throw IoError(path + ": unknown layer '" + tok + "'");
            }
        }
    }
    if (net.layers.empty()) {
        throw IoError(path + ": no layer list");
    }
    AffineLayer* current = nullptr;
    do {
        if (line.rfind("layer,", 0) == 0) {
            const auto k = parse_uint(std::string_view(line).substr(6), "layer index");
            if (k >= net.layers.size() || !(current = std::get_if<AffineLayer>(&net.layers[k]))) {
                throw IoError(path + ": layer block " + std::to_string(k) + " is not an affine layer");
            }
            continue;
        }
        if (line.empty() || line == "ix,iy,re,im") {
            continue;
        }
        if (!current) {
            throw IoError(path + ": parameter row before any layer block");
        }
        std::istringstream ls(line);
        std::string a, b, c, d;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ',') ||
            !std::getline(ls, d)) {
            throw IoError(path + ": malformed parameter row");
        }
        const auto r = static_cast<Eigen::Index>(parse_uint(a, "row"));
        const auto col = static_cast<Eigen::Index>(parse_uint(b, "col"));
        const Complex v(parse_double(c, "re"), parse_double(d, "im"));
        if (r >= current->weight.rows() || col > current->weight.cols()) {
            throw IoError(path + ": parameter index out of range");
        }
        if (col == current->weight.cols()) {
            current->bias[r] = v;
        } else {
            current->weight(r, col) = v;
        }
    } while (std::getline(in, line));
    try {
        net.validate();
    } catch (const ConfigError& e) {
        throw IoError(path + ": " + e.what());
    }
    return net;
}

} // namespace nah
