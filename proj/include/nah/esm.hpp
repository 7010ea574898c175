#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <vector>

#include "nah/kh_propagator.hpp"
#include "nah/scene.hpp"

namespace nah {

/// Monopole model of the equivalent sources: G_H maps source strengths to
/// hologram pressure, G_S_dn to the normal derivative on the source plane.
/// The cell area of the equivalent grid is folded into both.
struct EsmMatrices {
    CMatrix G_H;
    CMatrix G_S_dn;
    PlaneGrid equivalent;
    PlaneGrid source;
    PlaneGrid hologram;
    double omega = 0.0;
};

inline EsmMatrices build_esm_matrices(const SceneConfig& scene) {
    if (scene.equivalent.z == scene.hologram.z || scene.equivalent.z == scene.source.z) {
        throw ConfigError("equivalent-source plane coincides with the source or hologram plane");
    }
    EsmMatrices mats;
    mats.equivalent = scene.equivalent;
    mats.source = scene.source;
    mats.hologram = scene.hologram;
    mats.omega = scene.omega;
    mats.G_H = monopole_matrix(scene.equivalent, scene.hologram, scene.omega, scene.constants);

    const double k = scene.wavenumber();
    const double area = scene.equivalent.cell_area();
    const DistanceTable dist = pairwise_distances(scene.equivalent, scene.source);
    // exact: derivative along the normal at the equivalent source, so that
    // -(1/j omega rho) G_S_dn q is the radiated normal velocity.
    const double sign = scene.kernels == KernelConvention::exact ? -1.0 : 1.0;
    mats.G_S_dn.resize(dist.d.rows(), dist.d.cols());
    for (Eigen::Index c = 0; c < dist.d.cols(); ++c) {
        for (Eigen::Index r = 0; r < dist.d.rows(); ++r) {
            mats.G_S_dn(r, c) = sign * green_kernels(dist.d(r, c), dist.dz, k).g_dn * area;
        }
    }
    return mats;
}

struct LassoSolution {
    CVector q_hat;
    std::vector<double> objective_trace;
    std::size_t iterations = 0;
    bool converged = false;
    double lambda = 0.0;
};

struct FistaOptions {
    std::size_t max_iterations = 50000;
    /// Stop when the proximal step from the extrapolated point is this small
    /// relative to the iterate.
    double relative_tolerance = 1e-10;
    std::size_t power_iterations = 100;
    double lipschitz_safety = 1.01;
};

inline double lasso_objective(const CMatrix& G, const CVector& p, const CVector& q, double lambda) {
    return (p - G * q).squaredNorm() + lambda * q.cwiseAbs().sum();
}

/// Largest eigenvalue of G^H G by power iteration from a fixed start vector.
inline double gram_spectral_norm(const CMatrix& G, std::size_t iterations) {
    CVector x = CVector::Ones(G.cols()) / std::sqrt(static_cast<double>(G.cols()));
    double estimate = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        const CVector y = G.adjoint() * (G * x);
        const double nrm = y.norm();
        if (nrm == 0.0) {
            return 0.0;
        }
        estimate = nrm;
        x = y / nrm;
    }
    return estimate;
}

inline Complex soft_threshold(Complex z, double tau) {
    const double a = std::abs(z);
    return a <= tau ? Complex(0.0, 0.0) : z * (1.0 - tau / a);
}

/// min_q ||p - G q||^2 + lambda ||q||_1 by FISTA with monotone restarts.
inline LassoSolution solve_lasso(const CMatrix& G, const CVector& p, double lambda, const FistaOptions& opt = {}) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ContractError("lambda must be finite and non-negative");
    }
    if (p.size() != G.rows()) {
        throw ContractError("measurement length does not match the Green's matrix");
    }
    if (!G.allFinite() || !p.allFinite()) {
        throw SolverError("non-finite input to the LASSO solver");
    }
    LassoSolution sol;
    sol.lambda = lambda;
    sol.q_hat = CVector::Zero(G.cols());
    double L = 2.0 * gram_spectral_norm(G, opt.power_iterations) * opt.lipschitz_safety;
    if (L == 0.0) {
        sol.converged = true;
        sol.objective_trace.push_back(lasso_objective(G, p, sol.q_hat, lambda));
        return sol;
    }
    const CMatrix Gh = G.adjoint();
    CVector x = sol.q_hat;
    CVector y = x;
    double t = 1.0;
    double F = lasso_objective(G, p, x, lambda);
    const double F0 = F;
    sol.objective_trace.push_back(F);
    bool restarted = false;
    CVector x_new(x.size());
    for (sol.iterations = 0; sol.iterations < opt.max_iterations; ++sol.iterations) {
        const CVector grad = 2.0 * (Gh * (G * y - p));
        const double tau = lambda / L;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x_new[i] = soft_threshold(y[i] - grad[i] / L, tau);
        }
        const double F_new = lasso_objective(G, p, x_new, lambda);
        if (!std::isfinite(F_new)) {
            throw SolverError("LASSO objective became non-finite");
        }
        if (F_new > F) {
            if (restarted) {
                L *= 2.0;
            }
            restarted = true;
            t = 1.0;
            y = x;
            continue;
        }
        restarted = false;
        const double step = (x_new - y).norm();
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x_new + ((t - 1.0) / t_new) * (x_new - x);
        t = t_new;
        x.swap(x_new);
        F = F_new;
        sol.objective_trace.push_back(F);
        if (step <= opt.relative_tolerance * x.norm() || F <= 1e-24 * F0) {
            sol.converged = true;
            ++sol.iterations;
            break;
        }
    }
    sol.q_hat = x;
    return sol;
}

inline LassoSolution solve_cesm(const ComplexField& p_H, const EsmMatrices& mats, double lambda,
                                const FistaOptions& opt = {}) {
    p_H.check_consistent();
    if (p_H.kind != FieldKind::pressure) {
        throw ContractError("C-ESM expects hologram pressure");
    }
    if (!(p_H.grid == mats.hologram)) {
        throw ContractError("hologram field is not on the matrices' hologram grid");
    }
    return solve_lasso(mats.G_H, p_H.values, lambda, opt);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

/// Default C-ESM sweep: five values evenly spaced in [0.005, 0.1].
inline std::vector<double> default_lambda_candidates() { return linspace(0.005, 0.1, 5); }

struct LambdaSweep {
    double lambda = 0.0;
    std::size_t best_index = 0;
    std::vector<double> candidates;
    std::vector<LassoSolution> solutions;
    std::vector<double> hologram_mae;

    const LassoSolution& best() const { return solutions[best_index]; }
};

/// Solves every candidate (concurrently) and keeps the one with the smallest
/// mean |p_H - G_H q|; ties go to the larger lambda.
inline LambdaSweep select_lambda(const ComplexField& p_H, const EsmMatrices& mats,
                                 const std::vector<double>& candidates, const FistaOptions& opt = {}) {
    if (candidates.empty()) {
        throw ConfigError("lambda candidate list is empty");
    }
    for (double c : candidates) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw ConfigError("lambda candidates must be positive");
        }
    }
    std::vector<std::future<LassoSolution>> jobs;
    jobs.reserve(candidates.size());
    for (double c : candidates) {
        jobs.push_back(std::async(std::launch::async, [&, c] { return solve_cesm(p_H, mats, c, opt); }));
    }
    LambdaSweep sweep;
    sweep.candidates = candidates;
    std::string first_error;
    bool any = false;
    double best_mae = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            sweep.solutions.push_back(jobs[i].get());
        } catch (const Error& e) {
            if (first_error.empty()) {
                first_error = e.what();
            }
            sweep.solutions.push_back(LassoSolution{});
            sweep.hologram_mae.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const CVector r = p_H.values - mats.G_H * sweep.solutions.back().q_hat;
        const double mae = r.cwiseAbs().sum() / static_cast<double>(r.size());
        sweep.hologram_mae.push_back(mae);
        const bool tie_larger = mae == best_mae && candidates[i] > candidates[sweep.best_index];
        if (mae < best_mae || tie_larger) {
            best_mae = mae;
            sweep.best_index = i;
            any = true;
        }
    }
    if (!any) {
        throw SolverError("every lambda candidate failed: " + first_error);
    }
    sweep.lambda = candidates[sweep.best_index];
    return sweep;
}

/// v_S = -(1 / j omega rho) G_S_dn q
inline ComplexField reconstruct_velocity_esm(const LassoSolution& sol, const EsmMatrices& mats,
                                             const PhysicalConstants& constants, double omega) {
    if (sol.q_hat.size() != mats.G_S_dn.cols()) {
        throw ContractError("coefficient vector length does not match the equivalent grid");
    }
    ComplexField v = ComplexField::zeros(mats.source, omega, FieldKind::velocity);
    v.values = -(mats.G_S_dn * sol.q_hat) / Complex(0.0, omega * constants.rho);
    return v;
}

} // namespace nah
