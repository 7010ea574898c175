#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "nah/adam.hpp"
#include "nah/types.hpp"

namespace nah {

/// 1/2 (1 + cos arg z) z, with f(0) = 0.
inline Complex cardioid(Complex z) {
    const double r = std::abs(z);
    if (r == 0.0) {
        return {0.0, 0.0};
    }
    return 0.5 * (1.0 + z.real() / r) * z;
}

struct WirtingerPair {
    Complex dz;    ///< df/dz
    Complex dzbar; ///< df/dz-bar
};

inline WirtingerPair cardioid_derivatives(Complex z) {
    const double r = std::abs(z);
    if (r == 0.0) {
        return {{0.5, 0.0}, {0.0, 0.0}};
    }
    const double c = z.real() / r;
    const double s = z.imag() / r;
    // z / conj(z) = e^{2j theta}
    const Complex rot(c * c - s * s, 2.0 * c * s);
    return {Complex(0.5 + 0.5 * c, 0.25 * s), Complex(0.0, -0.25 * s) * rot};
}

struct AffineLayer {
    CMatrix weight; ///< out x in
    CVector bias;
};

struct CardioidLayer {
    Eigen::Index width = 0;
};

using Layer = std::variant<AffineLayer, CardioidLayer>;

struct ComplexNetwork {
    std::vector<Layer> layers;
    /// Bumped on every parameter change; tapes remember the value they saw.
    std::uint64_t version = 0;

    Eigen::Index input_size() const { return width_at(0, true); }
    Eigen::Index output_size() const { return width_at(layers.size() - 1, false); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) {
            if (const auto* a = std::get_if<AffineLayer>(&l)) {
                n += static_cast<std::size_t>(a->weight.size() + a->bias.size());
            }
        }
        return n;
    }

    /// Checks that adjacent layer widths chain.
    void validate() const {
        if (layers.empty()) {
            throw ConfigError("network has no layers");
        }
        Eigen::Index width = -1;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const Eigen::Index in = width_at(i, true);
            if (width >= 0 && in != width) {
                throw ConfigError("layer " + std::to_string(i) + " expects width " + std::to_string(in) +
                                  ", previous layer produces " + std::to_string(width));
            }
            if (const auto* a = std::get_if<AffineLayer>(&layers[i])) {
                if (a->bias.size() != a->weight.rows()) {
                    throw ConfigError("layer " + std::to_string(i) + " bias does not match its weight rows");
                }
            }
            width = width_at(i, false);
        }
    }

    bool all_finite() const {
        for (const auto& l : layers) {
            if (const auto* a = std::get_if<AffineLayer>(&l)) {
                if (!a->weight.allFinite() || !a->bias.allFinite()) {
                    return false;
                }
            }
        }
        return true;
    }

private:
    Eigen::Index width_at(std::size_t i, bool input) const {
        if (i >= layers.size()) {
            throw ContractError("layer index out of range");
        }
        if (const auto* a = std::get_if<AffineLayer>(&layers[i])) {
            return input ? a->weight.cols() : a->weight.rows();
        }
        return std::get<CardioidLayer>(layers[i]).width;
    }
};

/// Affine layers with cardioid activations between them (none after the last).
/// Weight components ~ N(0, 1/(fan_in + fan_out)), biases zero.
inline ComplexNetwork make_network(const std::vector<Eigen::Index>& widths, std::uint64_t seed) {
    if (widths.size() < 2) {
        throw ConfigError("a network needs at least input and output widths");
    }
    std::mt19937_64 rng(seed);
    ComplexNetwork net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const Eigen::Index in = widths[l];
        const Eigen::Index out = widths[l + 1];
        if (in <= 0 || out <= 0) {
            throw ConfigError("layer widths must be positive");
        }
        std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / static_cast<double>(in + out)));
        AffineLayer a{CMatrix(out, in), CVector::Zero(out)};
        for (Eigen::Index c = 0; c < in; ++c) {
            for (Eigen::Index r = 0; r < out; ++r) {
                const double re = normal(rng);
                const double im = normal(rng);
                a.weight(r, c) = Complex(re, im);
            }
        }
        net.layers.emplace_back(std::move(a));
        if (l + 2 < widths.size()) {
            net.layers.emplace_back(CardioidLayer{out});
        }
    }
    return net;
}

inline ComplexNetwork identity_network(Eigen::Index n) {
    ComplexNetwork net;
    net.layers.emplace_back(AffineLayer{CMatrix::Identity(n, n), CVector::Zero(n)});
    return net;
}

/// Inputs of every layer from one forward pass.
struct Tape {
    std::vector<CVector> inputs;
    std::uint64_t version = 0;
    const ComplexNetwork* net = nullptr;
};

struct ForwardResult {
    CVector output;
    Tape tape;
};

inline ForwardResult forward(const ComplexNetwork& net, const CVector& x) {
    if (x.size() != net.input_size()) {
        throw ContractError("network input has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(net.input_size()));
    }
    ForwardResult res;
    res.tape.net = &net;
    res.tape.version = net.version;
    res.tape.inputs.reserve(net.layers.size());
    CVector h = x;
    for (const auto& layer : net.layers) {
        res.tape.inputs.push_back(h);
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            CVector y = a->bias;
            y.noalias() += a->weight * h;
            h = std::move(y);
        } else {
            h = h.unaryExpr([](Complex z) { return cardioid(z); });
        }
    }
    res.output = std::move(h);
    return res;
}

/// Conjugate Wirtinger derivatives dL/dz-bar, one entry per layer (empty for
/// activations).
struct LayerGradient {
    CMatrix weight;
    CVector bias;
};

struct GradientSet {
    std::vector<LayerGradient> layers;
    CVector input; ///< dL/dx-bar
};

/// Back-propagates dL/dy-bar of the network output.
inline GradientSet backward(const ComplexNetwork& net, const Tape& tape, const CVector& output_cotangent) {
    if (tape.net != &net || tape.version != net.version || tape.inputs.size() != net.layers.size()) {
        throw ContractError("tape does not belong to the current network state");
    }
    if (output_cotangent.size() != net.output_size()) {
        throw ContractError("output cotangent has the wrong length");
    }
    GradientSet grads;
    grads.layers.resize(net.layers.size());
    CVector c = output_cotangent;
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        const CVector& x = tape.inputs[i];
        if (const auto* a = std::get_if<AffineLayer>(&net.layers[i])) {
            grads.layers[i].weight.noalias() = c * x.adjoint();
            grads.layers[i].bias = c;
            CVector next(a->weight.cols());
            next.noalias() = a->weight.adjoint() * c;
            c = std::move(next);
        } else {
            for (Eigen::Index k = 0; k < c.size(); ++k) {
                const WirtingerPair w = cardioid_derivatives(x[k]);
                c[k] = std::conj(c[k]) * w.dzbar + c[k] * std::conj(w.dz);
            }
        }
    }
    grads.input = std::move(c);
    return grads;
}

/// Adam state for every affine layer of a network.
struct NetworkAdamState {
    std::size_t step = 0;
    std::vector<AdamMoments> weight;
    std::vector<AdamMoments> bias;

    explicit NetworkAdamState(const ComplexNetwork& net) {
        for (const auto& l : net.layers) {
            if (const auto* a = std::get_if<AffineLayer>(&l)) {
                weight.emplace_back(a->weight.size());
                bias.emplace_back(a->bias.size());
            } else {
                weight.emplace_back(0);
                bias.emplace_back(0);
            }
        }
    }
};

inline void adam_step(ComplexNetwork& net, const GradientSet& grads, NetworkAdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
    if (grads.layers.size() != net.layers.size() || state.weight.size() != net.layers.size()) {
        throw ContractError("gradient or optimizer state does not match the network");
    }
    // Validate every block before touching any parameter.
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (const auto* a = std::get_if<AffineLayer>(&net.layers[i])) {
            const auto& g = grads.layers[i];
            if (g.weight.rows() != a->weight.rows() || g.weight.cols() != a->weight.cols() ||
                g.bias.size() != a->bias.size()) {
                throw ContractError("gradient shape mismatch at layers[" + std::to_string(i) + "]");
            }
            if (!g.weight.allFinite()) {
                throw SolverError("non-finite gradient in 'layers[" + std::to_string(i) + "].weight'");
            }
            if (!g.bias.allFinite()) {
                throw SolverError("non-finite gradient in 'layers[" + std::to_string(i) + "].bias'");
            }
        }
    }
    ++state.step;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (auto* a = std::get_if<AffineLayer>(&net.layers[i])) {
            const std::string base = "layers[" + std::to_string(i) + "]";
            adam_update(a->weight.data(), grads.layers[i].weight.data(), state.weight[i], a->weight.size(),
                        state.step, lr, cfg, base + ".weight");
            adam_update(a->bias.data(), grads.layers[i].bias.data(), state.bias[i], a->bias.size(), state.step, lr,
                        cfg, base + ".bias");
        }
    }
    ++net.version;
}

} // namespace nah
