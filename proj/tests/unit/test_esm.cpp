#include <gtest/gtest.h>

#include <random>

#include "nah/esm.hpp"
#include "oracles.hpp"

using namespace nah;
using nah::testing::lasso_coordinate_descent;
using nah::testing::random_cmatrix;
using nah::testing::random_cvector;

namespace {

SceneConfig tiny_scene() {
    SceneConfig s;
    s.omega = 2.0 * kPi * 1000.0;
    s.equivalent = centered_plane_grid(4, 4, 0.02, 0.02, -0.05);
    s.source = centered_plane_grid(4, 4, 0.02, 0.02, 0.0);
    s.hologram = centered_plane_grid(3, 3, 0.03, 0.03, 0.0312);
    return s;
}

// max |2 G^H (G q - p)|_i + lambda q_i/|q_i| over the support, and the
// worst ratio |2 G^H (G q - p)|_i / lambda off the support.
std::pair<double, double> kkt(const CMatrix& G, const CVector& p, const CVector& q, double lambda) {
    const CVector g = 2.0 * (G.adjoint() * (G * q - p));
    double on = 0.0;
    double off = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (q[i] != Complex(0.0, 0.0)) {
            on = std::max(on, std::abs(g[i] + lambda * q[i] / std::abs(q[i])));
        } else {
            off = std::max(off, std::abs(g[i]) / lambda);
        }
    }
    return {on, off};
}

} // namespace

TEST(EsmMatrices, SingleAxialPair) {
    SceneConfig s = tiny_scene();
    s.equivalent = build_plane_grid(1, 1, 0.01, 0.02, -0.05, 0.0, 0.0);
    s.source = build_plane_grid(1, 1, 0.01, 0.02, 0.0, 0.0, 0.0);
    s.hologram = build_plane_grid(1, 1, 0.01, 0.02, 0.0312, 0.0, 0.0);
    const auto m = build_esm_matrices(s);
    const double d = 0.0812;
    const double k = s.wavenumber();
    const Complex want = std::exp(Complex(0.0, -k * d)) / (4.0 * kPi * d) * 2e-4;
    EXPECT_LT(std::abs(m.G_H(0, 0) - want), 1e-14 * std::abs(want));
}

TEST(EsmMatrices, RowNormsDecreaseWithDistance) {
    SceneConfig s = tiny_scene();
    double prev = std::numeric_limits<double>::infinity();
    for (double z : {0.02, 0.04, 0.08, 0.16}) {
        s.hologram = build_plane_grid(1, 1, 0.01, 0.01, z, 0.0, 0.0);
        const double n = build_esm_matrices(s).G_H.row(0).norm();
        EXPECT_LT(n, prev);
        prev = n;
    }
}

TEST(EsmMatrices, CoincidentPlanesRejected) {
    SceneConfig s = tiny_scene();
    s.hologram.z = s.equivalent.z;
    EXPECT_THROW(build_esm_matrices(s), ConfigError);
}

TEST(Lasso, LargeLambdaGivesZero) {
    std::mt19937_64 rng(1);
    const CMatrix G = random_cmatrix(6, 8, rng);
    const CVector p = random_cvector(6, rng);
    const double lmax = 2.0 * (G.adjoint() * p).cwiseAbs().maxCoeff();
    const auto sol = solve_lasso(G, p, lmax);
    EXPECT_EQ(sol.q_hat.norm(), 0.0);
    EXPECT_TRUE(sol.converged);
}

TEST(Lasso, ZeroLambdaSolvesSquareSystem) {
    std::mt19937_64 rng(2);
    CMatrix G = random_cmatrix(4, 4, rng);
    G += 4.0 * CMatrix::Identity(4, 4);
    const CVector p = random_cvector(4, rng);
    const CVector direct = G.partialPivLu().solve(p);
    const auto sol = solve_lasso(G, p, 0.0);
    EXPECT_LT((sol.q_hat - direct).norm(), 1e-6 * direct.norm());
}

TEST(Lasso, MatchesCoordinateDescentAndKkt) {
    std::mt19937_64 rng(3);
    for (int inst = 0; inst < 5; ++inst) {
        const CMatrix G = random_cmatrix(6, 8, rng);
        const CVector p = random_cvector(6, rng);
        const double lambda = 0.1;
        const auto sol = solve_lasso(G, p, lambda);
        const CVector q_cd = lasso_coordinate_descent(G, p, lambda);
        EXPECT_NEAR(lasso_objective(G, p, sol.q_hat, lambda), lasso_objective(G, p, q_cd, lambda), 1e-6);
        const auto [on, off] = kkt(G, p, sol.q_hat, lambda);
        EXPECT_LT(on, 1e-4 * lambda);
        EXPECT_LE(off, 1.0 + 1e-4);
    }
}

TEST(Lasso, ObjectiveTraceIsMonotone) {
    std::mt19937_64 rng(4);
    const CMatrix G = random_cmatrix(10, 30, rng);
    const CVector p = random_cvector(10, rng);
    const auto sol = solve_lasso(G, p, 0.05);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
        EXPECT_LE(sol.objective_trace[i], sol.objective_trace[i - 1]);
    }
}

TEST(Lasso, RejectsBadInputs) {
    const CMatrix G = CMatrix::Identity(2, 2);
    EXPECT_THROW(solve_lasso(G, CVector::Zero(3), 0.1), ContractError);
    EXPECT_THROW(solve_lasso(G, CVector::Zero(2), -1.0), ContractError);
    CVector bad = CVector::Zero(2);
    bad[0] = Complex(std::nan(""), 0.0);
    EXPECT_THROW(solve_lasso(G, bad, 0.1), SolverError);
}

TEST(Lasso, SparsityDoesNotGrowWithLambda) {
    std::mt19937_64 rng(5);
    const CMatrix G = random_cmatrix(8, 20, rng);
    const CVector p = random_cvector(8, rng);
    std::size_t prev = 1000;
    for (double lambda : linspace(0.05, 2.0, 8)) {
        const auto sol = solve_lasso(G, p, lambda);
        std::size_t nnz = 0;
        for (Eigen::Index i = 0; i < sol.q_hat.size(); ++i) {
            nnz += std::abs(sol.q_hat[i]) > 1e-9 ? 1 : 0;
        }
        EXPECT_LE(nnz, prev);
        prev = nnz;
    }
}

TEST(SelectLambda, DefaultCandidates) {
    const auto c = default_lambda_candidates();
    ASSERT_EQ(c.size(), 5u);
    EXPECT_DOUBLE_EQ(c.front(), 0.005);
    EXPECT_DOUBLE_EQ(c[1], 0.02875);
    EXPECT_DOUBLE_EQ(c.back(), 0.1);
}

TEST(SelectLambda, SingletonAndNoiselessPreferenceForSmallest) {
    const SceneConfig s = tiny_scene();
    const auto mats = build_esm_matrices(s);
    std::mt19937_64 rng(6);
    CVector q = CVector::Zero(mats.G_H.cols());
    q[5] = Complex(0.3, 0.1);
    q[10] = Complex(-0.2, 0.4);
    ComplexField p{s.hologram, s.omega, FieldKind::pressure, mats.G_H * q};
    const auto single = select_lambda(p, mats, {0.02});
    EXPECT_EQ(single.lambda, 0.02);
    EXPECT_EQ(single.solutions.size(), 1u);
    // Smaller lambda shrinks less, so the hologram fit is strictly better.
    const double scale = (mats.G_H.adjoint() * p.values).cwiseAbs().maxCoeff();
    const std::vector<double> cands{0.01 * scale, 0.1 * scale, 0.5 * scale};
    const auto sweep = select_lambda(p, mats, cands);
    EXPECT_EQ(sweep.best_index, 0u);
    EXPECT_LT(sweep.hologram_mae[0], sweep.hologram_mae[1]);
    EXPECT_THROW(select_lambda(p, mats, {}), ConfigError);
    EXPECT_THROW(select_lambda(p, mats, {-1.0}), ConfigError);
}

TEST(ReconstructVelocity, ZeroLinearAndAxialDominance) {
    SceneConfig s = tiny_scene();
    const auto mats = build_esm_matrices(s);
    LassoSolution sol;
    sol.q_hat = CVector::Zero(mats.G_H.cols());
    EXPECT_EQ(reconstruct_velocity_esm(sol, mats, s.constants, s.omega).values.norm(), 0.0);
    sol.q_hat[6] = Complex(1.0, -0.5);
    const auto v1 = reconstruct_velocity_esm(sol, mats, s.constants, s.omega);
    LassoSolution sol2 = sol;
    sol2.q_hat *= 2.0;
    const auto v2 = reconstruct_velocity_esm(sol2, mats, s.constants, s.omega);
    EXPECT_LT((v2.values - 2.0 * v1.values).norm(), 1e-15 * v2.values.norm());
    Eigen::Index imax = 0;
    v1.values.cwiseAbs().maxCoeff(&imax);
    EXPECT_EQ(imax, 6);
    LassoSolution bad;
    bad.q_hat = CVector::Zero(3);
    EXPECT_THROW(reconstruct_velocity_esm(bad, mats, s.constants, s.omega), ContractError);
}

TEST(ReconstructVelocity, MatchesMonopoleVelocity) {
    // One unit equivalent source: v = (1/j omega rho) d(G q)/dz on the source plane.
    SceneConfig s = tiny_scene();
    const auto mats = build_esm_matrices(s);
    LassoSolution sol;
    sol.q_hat = CVector::Zero(mats.G_H.cols());
    sol.q_hat[0] = 1.0;
    const auto v = reconstruct_velocity_esm(sol, mats, s.constants, s.omega);
    const double k = s.wavenumber();
    const Point3 e = s.equivalent.point(0);
    for (std::size_t n = 0; n < s.source.size(); ++n) {
        const Point3 r = s.source.point(n);
        const double dx = r.x - e.x;
        const double dy = r.y - e.y;
        const double dz = r.z - e.z;
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        const Complex dgdz = -std::exp(Complex(0.0, -k * d)) * Complex(1.0, k * d) * dz / (4.0 * kPi * d * d * d);
        const Complex want = dgdz * s.equivalent.cell_area() / Complex(0.0, s.omega * s.constants.rho);
        EXPECT_LT(std::abs(v.values[static_cast<Eigen::Index>(n)] - want), 1e-12 * std::abs(want));
    }
}
