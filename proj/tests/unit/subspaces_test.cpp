#include "support.hpp"

#include <gtest/gtest.h>

using namespace morsespec;
using namespace testing_support;

namespace {

double penrose_defect(const Matrix& a, const Matrix& p)
{
    const double scale = std::max(1.0, a.norm() * std::max(1.0, p.norm()));
    double worst = (a * p * a - a).norm() / std::max(1.0, a.norm());
    worst = std::max(worst, (p * a * p - p).norm() / std::max(1.0, p.norm()));
    worst = std::max(worst, ((a * p).transpose() - a * p).norm() / scale);
    worst = std::max(worst, ((p * a).transpose() - p * a).norm() / scale);
    return worst;
}

Matrix random_rank(std::mt19937_64& rng, int rows, int cols, int rank)
{
    if (rank == 0)
        return Matrix::Zero(rows, cols);
    return random_matrix(rng, rows, rank) * random_matrix(rng, rank, cols);
}

} // namespace

TEST(MoorePenrose, Examples)
{
    EXPECT_LT((moore_penrose(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-14);
    EXPECT_LT((moore_penrose(diag2(2, 0)) - diag2(0.5, 0)).norm(), 1e-14);
    const Matrix ones = Matrix::Ones(2, 2);
    const Matrix p = moore_penrose(ones);
    EXPECT_LT((p - Matrix::Constant(2, 2, 0.25)).norm(), 1e-14);
    EXPECT_LT(penrose_defect(ones, p), 1e-12);
}

TEST(MoorePenrose, PenroseIdentitiesOnRandomMatrices)
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int k = 0; k < kCases; ++k) {
        const int r = dim(rng);
        const int c = dim(rng);
        std::uniform_int_distribution<int> rank(0, std::min(r, c));
        const Matrix a = random_rank(rng, r, c, rank(rng));
        ASSERT_LT(penrose_defect(a, moore_penrose(a)), 1e-8);
    }
}

TEST(MoorePenrose, LimitFormulaAgrees)
{
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> dim(1, 5);
    for (int k = 0; k < 200; ++k) {
        const int r = dim(rng);
        const int c = dim(rng);
        std::uniform_int_distribution<int> rank(1, std::min(r, c));
        const Matrix a = random_rank(rng, r, c, rank(rng));
        Eigen::JacobiSVD<Matrix> svd(a);
        const auto& s = svd.singularValues();
        const int rk = static_cast<int>((s.array() > 1e-10 * s(0)).count());
        if (s(0) / s(rk - 1) > 1e3)
            continue;
        const Matrix svd_inv = moore_penrose(a);
        ASSERT_LT((moore_penrose_limit(a) - svd_inv).norm() / svd_inv.norm(), 1e-5);
    }
}

TEST(ObliqueProjector, Examples)
{
    EXPECT_LT((oblique_projector(col2(1, 0), col2(0, 1)) - diag2(1, 0)).norm(), 1e-14);
    const double e = std::exp(1.0);
    Matrix expected(2, 2);
    expected << e / (e - 1), 1 / (1 - e), e / (e - 1), 1 / (1 - e);
    EXPECT_LT((oblique_projector(col2(1, 1), col2(1, e)) - expected).norm(), 1e-12);
    EXPECT_THROW(oblique_projector(col2(1, 1), col2(2, 2)), DegenerateSplitting);
    EXPECT_THROW(oblique_projector(col2(1, 1), Matrix(2, 0)), DegenerateSplitting);
}

TEST(ObliqueProjector, RangeKernelIdempotencyAndComplement)
{
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<int> dim(2, 5);
    for (int k = 0; k < kCases; ++k) {
        const int d = dim(rng);
        std::uniform_int_distribution<int> split(0, d);
        const int ku = split(rng);
        const Matrix u = random_matrix(rng, d, ku);
        const Matrix v = random_matrix(rng, d, d - ku);
        Matrix joined(d, d);
        joined << u, v;
        Eigen::JacobiSVD<Matrix> svd(joined);
        if (svd.singularValues()(d - 1) < 1e-3)
            continue;
        const Matrix p = oblique_projector(u, v);
        const Matrix q = oblique_projector(v, u);
        const double s = std::max(1.0, p.norm());
        ASSERT_LT((p * p - p).norm() / s, 1e-8);
        if (ku > 0)
            ASSERT_LT((p * u - u).norm() / (s * u.norm()), 1e-8);
        if (ku < d)
            ASSERT_LT((p * v).norm() / (s * v.norm()), 1e-8);
        ASSERT_LT((p + q - Matrix::Identity(d, d)).norm() / s, 1e-8);
    }
}

TEST(ProjectorNormAngle, Examples)
{
    const auto orth = projector_norm_angle(col2(1, 0), col2(0, 1));
    EXPECT_NEAR(orth.a, 0.0, 1e-15);
    EXPECT_NEAR(orth.norm, 1.0, 1e-15);

    const double e = std::exp(1.0);
    const auto na = projector_norm_angle(col2(1, 1), col2(1, e));
    EXPECT_NEAR(na.a, (1 + e) / (std::sqrt(2.0) * std::sqrt(1 + e * e)), 1e-12);
    EXPECT_NEAR(na.norm, operator_norm(oblique_projector(col2(1, 1), col2(1, e))), 1e-10);
    EXPECT_NEAR(na.norm, 2.384, 1e-3);

    const double eps = 1e-3;
    const auto close = projector_norm_angle(col2(1, 0), col2(std::cos(eps), std::sin(eps)));
    EXPECT_NEAR(close.norm, 1.0 / eps, 0.01 / eps);
}

TEST(ProjectorNormAngle, MatchesSpectralNorm)
{
    std::mt19937_64 rng(34);
    std::uniform_int_distribution<int> dim(2, 5);
    for (int k = 0; k < kCases; ++k) {
        const int d = dim(rng);
        std::uniform_int_distribution<int> split(1, d - 1);
        const int ku = split(rng);
        const Matrix u = random_matrix(rng, d, ku);
        const Matrix v = random_matrix(rng, d, d - ku);
        Matrix joined(d, d);
        joined << u, v;
        Eigen::JacobiSVD<Matrix> svd(joined);
        if (svd.singularValues()(d - 1) < 1e-3)
            continue;
        const auto na = projector_norm_angle(u, v);
        const double norm = operator_norm(oblique_projector(u, v));
        ASSERT_NEAR(na.norm, norm, 1e-6 * std::max(1.0, norm));
        ASSERT_NEAR(na.norm, 1.0 / std::sqrt(1.0 - na.a * na.a), 1e-6 * std::max(1.0, norm * norm * norm));
    }
}

TEST(ProjectorNormAngle, TrivialSplittings)
{
    EXPECT_EQ(projector_norm_angle(Matrix(2, 0), Matrix::Identity(2, 2)).norm, 0.0);
    EXPECT_EQ(projector_norm_angle(Matrix::Identity(2, 2), Matrix(2, 0)).norm, 1.0);
}

TEST(CheckInvariantProjector, CommutingDiagonals)
{
    const auto sys = constant_system(diag2(2, 0.5), golden_rotation(), "d");
    const ProjectorFamily pf{constant_family(col2(1, 0), "e1"), constant_family(col2(0, 1), "e2")};
    EXPECT_LT(check_invariant_projector(sys, pf, circle_point(0.2), 20), 1e-12);
}

TEST(CheckInvariantProjector, RotatedProjectorNotInvariant)
{
    const auto sys = constant_system(diag2(2, 0.5), golden_rotation(), "d");
    const ProjectorFamily pf{constant_family(col2(1, 1), "diag"), constant_family(col2(1, -1), "anti")};
    EXPECT_GT(check_invariant_projector(sys, pf, circle_point(0.2), 5), 0.1);
}

namespace {

SubspaceFamily coord_change_repeller()
{
    SubspaceFamily f;
    f.d = 2;
    f.dim_sub = 1;
    f.label = "h";
    f.basis_at = [](const OmegaPoint& w) {
        const double x = w.circle().value();
        return orthonormal_basis(col2(std::exp(x), std::exp(1 - x)));
    };
    return f;
}

} // namespace

TEST(CheckInvariantProjector, ConjugatedBlockProjector)
{
    const Scenario sc = build_scenario("coord-change");
    const ProjectorFamily pf{constant_family(col2(1, 1), "attractor"), coord_change_repeller()};
    for (int k = 0; k < 5; ++k) {
        const OmegaPoint w = sample_omega(sc.system.driver, 50 + static_cast<std::uint64_t>(k));
        // P(omega) = H(omega) diag(1, 0) H(omega)^{-1}, checked directly first.
        const Matrix h = coord_change_h(w.circle());
        ASSERT_LT((pf.P_at(w) - h * diag2(1, 0) * h.inverse()).norm(), 1e-8 * pf.P_at(w).norm());
        EXPECT_LT(check_invariant_projector(sc.system, pf, w, 20), 1e-8);
    }
}

TEST(GapTemperedness, ConstantOrthogonalSplitting)
{
    const auto sys = constant_system(diag2(2, 0.5), golden_rotation(), "d");
    EXPECT_EQ(gap_temperedness(sys, constant_family(col2(1, 0), "e1"), constant_family(col2(0, 1), "e2"),
                               circle_point(0.3), 100),
              0.0);
}

TEST(GapTemperedness, CoordinateChangePairIsTempered)
{
    const Scenario sc = build_scenario("coord-change");
    const OmegaPoint w = sample_omega(sc.system.driver, 7);
    const auto r = constant_family(col2(1, 1), "attractor");
    const auto n = coord_change_repeller();
    const double slope = gap_temperedness(sc.system, r, n, w, 5000);
    EXPECT_LE(slope, kDefaultTauTemper);
    double worst = 0.0;
    for (const auto& b : bases_along(n, sc.system.driver, w, -5000, 5000))
        worst = std::max(worst, projector_norm_angle(col2(1, 1), b).norm);
    EXPECT_GT(worst, 100.0);
}

TEST(GapTemperedness, InjectedCollapseIsFlagged)
{
    const Driver drv = bernoulli_shift(2, {0.5, 0.5}, 1);
    const auto sys = constant_system(Matrix::Identity(2, 2), drv, "id");
    SubspaceFamily collapsing;
    collapsing.d = 2;
    collapsing.dim_sub = 1;
    collapsing.label = "collapsing";
    collapsing.basis_at = [](const OmegaPoint& w) {
        const auto t = static_cast<double>(std::abs(w.bernoulli().offset));
        const double angle = std::exp(-0.2 * t);
        return col2(std::cos(angle), std::sin(angle));
    };
    const double slope = gap_temperedness(sys, constant_family(col2(1, 0), "e1"), collapsing,
                                          sample_omega(drv, 1), 100);
    EXPECT_NEAR(slope, 0.2, 0.01);
    EXPECT_GT(slope, kDefaultTauTemper);
}

TEST(OrbitMemo, ReturnsCachedValue)
{
    OrbitMemo<int> memo;
    int calls = 0;
    const OmegaPoint w = circle_point(0.25);
    EXPECT_EQ(memo.get(w, 0, 3, [&] { return ++calls; }), 1);
    EXPECT_EQ(memo.get(w, 0, 3, [&] { return ++calls; }), 1);
    EXPECT_EQ(memo.get(w, 0, 4, [&] { return ++calls; }), 2);
}
