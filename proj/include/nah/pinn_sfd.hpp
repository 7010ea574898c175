#pragma once

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nah/adam.hpp"
#include "nah/cvnn.hpp"
#include "nah/kh_propagator.hpp"
#include "nah/metrics.hpp"
#include "nah/scene.hpp"

namespace nah {

// ---------------------------------------------------------------------------
// Field-level propagation chains

struct DirectPathFields {
    ComplexField p_E;
    ComplexField p_H;
};

inline DirectPathFields direct_path(const ComplexField& v_E, const SceneConfig& scene) {
    if (!(v_E.grid == scene.equivalent)) {
        throw ContractError("velocity is not on the equivalent-source grid");
    }
    DirectPathFields out;
    out.p_E = theta1(v_E, scene.constants);
    out.p_H = theta2(out.p_E, v_E, scene.hologram, scene.constants, scene.kernels);
    return out;
}

struct VirtualPathFields {
    ComplexField p_V;
    ComplexField v_V;
    ComplexField p_H;
};

/// E -> V_i -> H with a 1-based virtual plane index.
inline VirtualPathFields virtual_path(const ComplexField& v_E, const SceneConfig& scene, std::size_t i) {
    if (i < 1 || i > scene.virtual_count()) {
        throw ContractError("virtual plane index " + std::to_string(i) + " out of range 1.." +
                            std::to_string(scene.virtual_count()));
    }
    if (!(v_E.grid == scene.equivalent)) {
        throw ContractError("velocity is not on the equivalent-source grid");
    }
    const PlaneGrid& mid = scene.virtual_planes[i - 1];
    const ComplexField p_E = theta1(v_E, scene.constants);
    VirtualPathFields out;
    out.p_V = theta2(p_E, v_E, mid, scene.constants, scene.kernels);
    out.v_V = theta3(p_E, v_E, mid, scene.constants, scene.kernels);
    out.p_H = theta2(out.p_V, out.v_V, scene.hologram, scene.constants, scene.kernels);
    return out;
}

/// v_S = Theta3(Theta1(v_E), v_E, S)
inline ComplexField reconstruct_source(const ComplexField& v_E, const SceneConfig& scene) {
    if (!(v_E.grid == scene.equivalent)) {
        throw ContractError("velocity is not on the equivalent-source grid");
    }
    const ComplexField p_E = theta1(v_E, scene.constants);
    return theta3(p_E, v_E, scene.source, scene.constants, scene.kernels);
}

// ---------------------------------------------------------------------------
// Loss

struct LossParts {
    double direct_mae = 0.0;
    std::vector<double> virtual_mae;
    double reg = 0.0;
    double total = 0.0;
};

namespace detail {

inline double mean_abs(const CVector& r) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        s += std::abs(r[i]);
    }
    return s / static_cast<double>(r.size());
}

inline double l1(const CVector& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += std::abs(v[i]);
    }
    return s;
}

inline void finish_parts(LossParts& parts) {
    parts.total = parts.direct_mae;
    for (double v : parts.virtual_mae) {
        parts.total += v;
    }
    parts.total += parts.reg;
}

inline void require_finite(const CVector& x, const std::string& what) {
    if (!x.allFinite()) {
        throw SolverError("non-finite values in the " + what + " prediction");
    }
}

} // namespace detail

/// L = (1/M)(|p_H - p_H^E|_1 + sum_i |p_H - p_H^{V_i}|_1) + lambda |v_E|_1
inline LossParts loss(const ComplexField& p_H_meas, const ComplexField& v_E, const SceneConfig& scene) {
    p_H_meas.check_consistent();
    if (!(p_H_meas.grid == scene.hologram) || p_H_meas.kind != FieldKind::pressure) {
        throw ContractError("measured pressure must be on the hologram grid");
    }
    LossParts parts;
    const auto d = direct_path(v_E, scene);
    detail::require_finite(d.p_H.values, "direct path");
    parts.direct_mae = detail::mean_abs(p_H_meas.values - d.p_H.values);
    for (std::size_t i = 1; i <= scene.virtual_count(); ++i) {
        const auto vp = virtual_path(v_E, scene, i);
        detail::require_finite(vp.p_H.values, "virtual path " + std::to_string(i));
        parts.virtual_mae.push_back(detail::mean_abs(p_H_meas.values - vp.p_H.values));
    }
    parts.reg = scene.lambda * detail::l1(v_E.values);
    detail::finish_parts(parts);
    return parts;
}

/// Dense path matrices from v_E to hologram pressure.
struct PathOperators {
    CMatrix direct;
    std::vector<CMatrix> via_virtual;

    std::size_t path_count() const { return 1 + via_virtual.size(); }
    const CMatrix& path(std::size_t k) const { return k == 0 ? direct : via_virtual[k - 1]; }
};

/// Builds the direct and all virtual-plane matrices, one thread per path.
inline PathOperators build_path_operators(const SceneConfig& scene) {
    std::vector<std::future<PropagatorMatrix>> jobs;
    jobs.push_back(std::async(std::launch::async, [&] { return assemble_path_operator(scene, PathTag::direct()); }));
    for (std::size_t i = 1; i <= scene.virtual_count(); ++i) {
        jobs.push_back(std::async(std::launch::async,
                                  [&, i] { return assemble_path_operator(scene, PathTag::via_virtual(i)); }));
    }
    PathOperators ops;
    ops.direct = jobs[0].get().entries;
    for (std::size_t k = 1; k < jobs.size(); ++k) {
        ops.via_virtual.push_back(jobs[k].get().entries);
    }
    return ops;
}

inline LossParts loss(const CVector& p_H, const CVector& v_E, const PathOperators& ops, double lambda) {
    LossParts parts;
    for (std::size_t k = 0; k < ops.path_count(); ++k) {
        const CVector pred = ops.path(k) * v_E;
        detail::require_finite(pred, k == 0 ? std::string("direct path") : "virtual path " + std::to_string(k));
        const double mae = detail::mean_abs(p_H - pred);
        if (k == 0) {
            parts.direct_mae = mae;
        } else {
            parts.virtual_mae.push_back(mae);
        }
    }
    parts.reg = lambda * detail::l1(v_E);
    detail::finish_parts(parts);
    return parts;
}

/// z / |z|, and 0 at 0.
inline Complex unit_phase(Complex z) {
    const double a = std::abs(z);
    return a == 0.0 ? Complex(0.0, 0.0) : z / a;
}

/// dL/dv_E-bar. The MAE terms contribute -(1/2M) P^H sign(p_H - P v_E) per
/// path and the l1 term (lambda/2) sign(v_E).
inline CVector loss_gradient(const CVector& p_H, const CVector& v_E, const PathOperators& ops, double lambda) {
    const double M = static_cast<double>(p_H.size());
    CVector sgn(p_H.size());
    CVector grad = CVector::Zero(v_E.size());
    for (std::size_t k = 0; k < ops.path_count(); ++k) {
        const CMatrix& P = ops.path(k);
        const CVector r = p_H - P * v_E;
        for (Eigen::Index m = 0; m < r.size(); ++m) {
            sgn[m] = unit_phase(r[m]);
        }
        grad.noalias() -= (0.5 / M) * (P.adjoint() * sgn);
    }
    for (Eigen::Index n = 0; n < v_E.size(); ++n) {
        grad[n] += 0.5 * lambda * unit_phase(v_E[n]);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Optimizer

enum class StopReason { early_stop, max_epochs, lr_floor_converged, diverged };

inline std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::early_stop:
        return "early_stop";
    case StopReason::max_epochs:
        return "max_epochs";
    case StopReason::lr_floor_converged:
        return "lr_floor_converged";
    case StopReason::diverged:
        return "diverged";
    }
    return "unknown";
}

struct SolverReport {
    std::vector<double> loss_trace;
    std::vector<double> nmse_trace; ///< dB per epoch; empty without truth
    std::vector<double> lr_trace;
    ComplexField v_E_hat;
    ComplexField v_S_hat;
    ComplexField p_H_hat;
    LossParts final_parts;
    StopReason stop_reason = StopReason::max_epochs;
    std::size_t epochs = 0;
    std::size_t best_epoch = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    double normalization = 0.0; ///< beta = alpha * max |p_H|
    ParamMode mode = ParamMode::direct;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
};

/// Raised when the loss stops being finite. Carries the report up to the
/// failing epoch.
class DivergenceError : public SolverError {
public:
    DivergenceError(const std::string& msg, SolverReport partial)
        : SolverError(msg), report(std::move(partial)) {}
    SolverReport report;
};

struct OptimizeOptions {
    /// Reuses prebuilt path matrices (must match the scene).
    const PathOperators* operators = nullptr;
    /// E -> S velocity operator for the per-epoch NMSE trace; built on demand.
    const CMatrix* reconstruction = nullptr;
};

namespace detail {

/// Plateau schedule and early stopping over the training loss.
class PlateauTracker {
public:
    explicit PlateauTracker(const OptimizerSettings& s) : s_(s), lr_(s.learning_rate) {}

    double lr() const { return lr_; }
    double best() const { return best_; }

    /// Returns true when `value` improves on the best loss so far.
    bool observe(double value) {
        if (value < best_ - s_.improvement_tolerance * std::abs(best_) || !std::isfinite(best_)) {
            best_ = value;
            lr_stale_ = 0;
            es_stale_ = 0;
            return true;
        }
        ++lr_stale_;
        if (!s_.early_stop_after_floor || at_floor()) {
            ++es_stale_;
        }
        if (lr_stale_ >= s_.lr_patience && !at_floor()) {
            lr_ = std::max(lr_ * s_.lr_factor, s_.lr_floor);
            lr_stale_ = 0;
        }
        return false;
    }

    bool should_stop() const { return es_stale_ >= s_.early_stop_patience; }
    bool at_floor() const { return lr_ <= s_.lr_floor; }

private:
    const OptimizerSettings& s_;
    double lr_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t lr_stale_ = 0;
    std::size_t es_stale_ = 0;
};

} // namespace detail

/// Self-supervised fit of the equivalent-source velocity to one hologram
/// measurement. Direct mode optimizes v_E = beta * u with u starting at zero;
/// network mode optimizes a complex network mapping p_H / beta to u.
inline SolverReport optimize(const ComplexField& p_H_meas, const SceneConfig& scene,
                             const std::optional<ComplexField>& truth_v_S = std::nullopt,
                             const OptimizeOptions& options = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    scene.validate();
    p_H_meas.check_consistent();
    if (!(p_H_meas.grid == scene.hologram) || p_H_meas.kind != FieldKind::pressure) {
        throw ContractError("measured pressure must be on the hologram grid");
    }
    if (!p_H_meas.all_finite()) {
        throw ContractError("measured pressure contains non-finite values");
    }
    const double peak = p_H_meas.values.cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) {
        throw ContractError("cannot normalize an all-zero hologram");
    }
    if (truth_v_S) {
        truth_v_S->check_consistent();
        if (!(truth_v_S->grid == scene.source)) {
            throw ContractError("ground-truth velocity must be on the source grid");
        }
    }
    const OptimizerSettings& os = scene.optimizer;
    const double beta = scene.alpha * peak;

    std::optional<PathOperators> own_ops;
    if (!options.operators) {
        own_ops = build_path_operators(scene);
    }
    const PathOperators& ops = options.operators ? *options.operators : *own_ops;
    std::optional<CMatrix> own_recon;
    const CMatrix* recon = options.reconstruction;
    if (truth_v_S && !recon) {
        own_recon = assemble_path_operator(scene, PathTag::source_reconstruction()).entries;
        recon = &*own_recon;
    }

    const Eigen::Index N = static_cast<Eigen::Index>(scene.equivalent.size());
    const CVector& p = p_H_meas.values;
    const AdamConfig adam_cfg{os.beta1, os.beta2, os.eps};

    SolverReport rep;
    rep.mode = os.mode;
    rep.seed = os.seed;
    rep.normalization = beta;

    // Direct-mode state.
    CVector u = CVector::Zero(N);
    AdamMoments u_moments(N);
    // Network-mode state.
    std::optional<ComplexNetwork> net;
    std::optional<NetworkAdamState> net_state;
    CVector net_input;
    if (os.mode == ParamMode::network) {
        std::vector<Eigen::Index> widths{static_cast<Eigen::Index>(p.size())};
        for (auto w : os.hidden_widths) {
            widths.push_back(static_cast<Eigen::Index>(w));
        }
        widths.push_back(N);
        net = make_network(widths, os.seed);
        net_state.emplace(*net);
        net_input = p / beta;
    }

    CVector best_v = CVector::Zero(N);
    detail::PlateauTracker tracker(os);
    for (std::size_t epoch = 0; epoch < os.max_epochs; ++epoch) {
        std::optional<ForwardResult> fwd;
        if (net) {
            fwd = forward(*net, net_input);
            u = fwd->output;
        }
        const CVector v = beta * u;
        LossParts parts;
        try {
            parts = loss(p, v, ops, scene.lambda);
        } catch (const SolverError&) {
            rep.stop_reason = StopReason::diverged;
            break;
        }
        if (!std::isfinite(parts.total)) {
            rep.stop_reason = StopReason::diverged;
            break;
        }
        rep.loss_trace.push_back(parts.total);
        rep.lr_trace.push_back(tracker.lr());
        if (truth_v_S) {
            const CVector v_s = *recon * v;
            rep.nmse_trace.push_back(nmse(v_s, truth_v_S->values));
        }
        ++rep.epochs;
        if (tracker.observe(parts.total)) {
            best_v = v;
            rep.best_epoch = epoch;
            rep.best_loss = parts.total;
            rep.final_parts = parts;
        }
        if (tracker.should_stop()) {
            rep.stop_reason = os.early_stop_after_floor ? StopReason::lr_floor_converged : StopReason::early_stop;
            break;
        }
        if (epoch + 1 == os.max_epochs) {
            rep.stop_reason = StopReason::max_epochs;
            break;
        }
        const CVector g_v = loss_gradient(p, v, ops, scene.lambda);
        if (net) {
            const GradientSet grads = backward(*net, fwd->tape, beta * g_v);
            adam_step(*net, grads, *net_state, tracker.lr(), adam_cfg);
        } else {
            const CVector g_u = beta * g_v;
            adam_update(u.data(), g_u.data(), u_moments, N, epoch + 1, tracker.lr(), adam_cfg, "v_E");
        }
    }

    const auto finish = [&] {
        rep.v_E_hat = ComplexField{scene.equivalent, scene.omega, FieldKind::velocity, best_v};
        rep.p_H_hat = ComplexField{scene.hologram, scene.omega, FieldKind::pressure, ops.direct * best_v};
        if (recon) {
            rep.v_S_hat = ComplexField{scene.source, scene.omega, FieldKind::velocity, *recon * best_v};
        } else {
            rep.v_S_hat = reconstruct_source(rep.v_E_hat, scene);
        }
        rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    finish();
    if (rep.stop_reason == StopReason::diverged) {
        throw DivergenceError("loss became non-finite after " + std::to_string(rep.epochs) + " epochs",
                              std::move(rep));
    }
    return rep;
}

} // namespace nah
