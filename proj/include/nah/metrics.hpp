#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "nah/types.hpp"

namespace nah {

/// Reported when the estimate matches exactly (log of zero).
inline constexpr double kNmseExactMatchDb = -400.0;

/// Per-point selection flags in grid enumeration order.
struct BinaryMask {
    std::vector<std::uint8_t> flags;

    std::size_t count() const {
        return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](auto f) { return f != 0; }));
    }
};

namespace detail {

inline void check_metric_inputs(const CVector& x_hat, const CVector& x, const BinaryMask* mask) {
    if (x_hat.size() != x.size()) {
        throw ContractError("metric inputs differ in length");
    }
    if (mask) {
        if (mask->flags.size() != static_cast<std::size_t>(x.size())) {
            throw ContractError("mask length does not match the fields");
        }
        if (mask->count() == 0) {
            throw ContractError("mask selects no points");
        }
    }
}

// |z|^2 as re^2 + im^2; std::norm may go through abs().
inline double sq(Complex z) { return z.real() * z.real() + z.imag() * z.imag(); }

inline bool selected(const BinaryMask* mask, Eigen::Index i) {
    return !mask || mask->flags[static_cast<std::size_t>(i)] != 0;
}

} // namespace detail

/// 10 log10(|x_hat - x|^2 / |x|^2) over the selected points, in dB.
inline double nmse(const CVector& x_hat, const CVector& x, const BinaryMask* mask = nullptr) {
    detail::check_metric_inputs(x_hat, x, mask);
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (detail::selected(mask, i)) {
            num += detail::sq(x_hat[i] - x[i]);
            den += detail::sq(x[i]);
        }
    }
    if (!(den > 0.0)) {
        throw ContractError("NMSE reference is zero on the selected points");
    }
    if (num == 0.0) {
        return kNmseExactMatchDb;
    }
    return 10.0 * std::log10(num / den);
}

/// |x_hat^H x| / (|x_hat| |x|) over the selected points, in [0, 1].
inline double ncc(const CVector& x_hat, const CVector& x, const BinaryMask* mask = nullptr) {
    detail::check_metric_inputs(x_hat, x, mask);
    Complex inner{};
    double a = 0.0;
    double b = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (detail::selected(mask, i)) {
            inner += std::conj(x_hat[i]) * x[i];
            a += detail::sq(x_hat[i]);
            b += detail::sq(x[i]);
        }
    }
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ContractError("NCC is undefined for a zero vector");
    }
    return std::min(1.0, std::abs(inner) / std::sqrt(a * b));
}

inline CVector compact(const CVector& x, const BinaryMask& mask) {
    CVector out(static_cast<Eigen::Index>(mask.count()));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (mask.flags[static_cast<std::size_t>(i)] != 0) {
            out[k++] = x[i];
        }
    }
    return out;
}

} // namespace nah
