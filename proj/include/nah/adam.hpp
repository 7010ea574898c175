#pragma once

#include <cmath>
#include <string>

#include "nah/types.hpp"

namespace nah {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moments of one complex parameter block. The real and
/// imaginary parts of `m` and `v` track the real and imaginary components of
/// the parameter independently.
struct AdamMoments {
    CVector m;
    CVector v;

    explicit AdamMoments(Eigen::Index n = 0) : m(CVector::Zero(n)), v(CVector::Zero(n)) {}
};

/// One Adam step on a contiguous complex block. `grad_conj` holds dL/dz-bar;
/// the real-component gradients are 2 Re and 2 Im of it. `step` is 1-based.
inline void adam_update(Complex* param, const Complex* grad_conj, AdamMoments& mom, Eigen::Index n,
                        std::size_t step, double lr, const AdamConfig& cfg, const std::string& path) {
    if (mom.m.size() != n || mom.v.size() != n) {
        throw ContractError("Adam state for '" + path + "' has the wrong size");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(grad_conj[i].real()) || !std::isfinite(grad_conj[i].imag())) {
            throw SolverError("non-finite gradient in '" + path + "' at element " + std::to_string(i));
        }
    }
    const double t = static_cast<double>(step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    auto component = [&](double g, double& m, double& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        return lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        double mr = mom.m[i].real();
        double mi = mom.m[i].imag();
        double vr = mom.v[i].real();
        double vi = mom.v[i].imag();
        const double dr = component(2.0 * grad_conj[i].real(), mr, vr);
        const double di = component(2.0 * grad_conj[i].imag(), mi, vi);
        mom.m[i] = Complex(mr, mi);
        mom.v[i] = Complex(vr, vi);
        param[i] -= Complex(dr, di);
    }
}

} // namespace nah
