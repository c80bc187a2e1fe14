#include "support.hpp"

#include <gtest/gtest.h>

using namespace morsespec;
using namespace testing_support;

namespace {

Vector v2(double x, double y)
{
    Vector v(2);
    v << x, y;
    return v;
}

/// Independent evaluation of the two-branch metric for raw (unnormalised) vectors.
double metric_oracle(const Vector& x, const Vector& y)
{
    const Vector a = x / x.norm();
    const Vector b = y / y.norm();
    return std::min((a - b).norm(), (a + b).norm());
}

} // namespace

TEST(ProjPoint, NormalisationAndSign)
{
    EXPECT_LT((proj_point(v2(0, -3)).rep() - v2(0, 1)).norm(), 1e-15);
    EXPECT_LT((proj_point(v2(2, 0)).rep() - v2(1, 0)).norm(), 1e-15);
    EXPECT_LT((proj_point(v2(-1, -1)).rep() - v2(1, 1) / std::sqrt(2.0)).norm(), 1e-15);
    EXPECT_THROW(proj_point(v2(0, 1e-13)), ZeroVector);
}

TEST(ProjMetric, Examples)
{
    EXPECT_NEAR(proj_metric(proj_point(v2(1, 0)), proj_point(v2(0, 1))), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(proj_metric(proj_point(v2(3, -2)), proj_point(v2(-3, 2))), 0.0, 1e-15);
    const double expected = metric_oracle(v2(1, 0), v2(1, 1));
    EXPECT_NEAR(expected, std::sqrt(2.0 - std::sqrt(2.0)), 1e-15);
    EXPECT_NEAR(proj_metric(proj_point(v2(1, 0)), proj_point(v2(1, 1))), expected, 1e-15);
}

TEST(ProjMetric, AxiomsOnRandomTriples)
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dim(2, 5);
    for (int k = 0; k < kCases; ++k) {
        const int d = dim(rng);
        const Vector x = random_vector(rng, d);
        const Vector y = random_vector(rng, d);
        const Vector z = random_vector(rng, d);
        const ProjPoint p(x), q(y), r(z);
        const double pq = proj_metric(p, q);
        ASSERT_EQ(pq, proj_metric(q, p));
        ASSERT_LE(pq, std::sqrt(2.0) + 1e-15);
        ASSERT_GE(pq, 0.0);
        ASSERT_LE(proj_metric(p, r), pq + proj_metric(q, r) + 1e-12);
        ASSERT_NEAR(proj_metric(p, ProjPoint(-2.5 * x)), 0.0, 1e-12);
        ASSERT_NEAR(pq, metric_oracle(x, y), 1e-12);
        ASSERT_NEAR(p.rep().norm(), 1.0, 1e-10);
    }
}

TEST(ProjApply, Examples)
{
    const auto sys = constant_system(diag2(2, 1), golden_rotation(), "d");
    const OmegaPoint w = circle_point(0.3);
    const ProjPoint p = proj_point(v2(1, 1));
    EXPECT_NEAR(proj_metric(proj_apply(sys, w, 1, p), proj_point(v2(2, 1))), 0.0, 1e-15);
    EXPECT_EQ(proj_apply(sys, w, 0, p).rep(), p.rep());
    EXPECT_LE(proj_metric(proj_apply(sys, w, 20, p), proj_point(v2(1, 0))), 1e-5);
}

TEST(ProjApply, Composes)
{
    std::mt19937_64 rng(22);
    std::uniform_int_distribution<int> time(-15, 15);
    for (int k = 0; k < kCases; ++k) {
        const auto sys = random_circle_system(rng, 3, 4);
        const OmegaPoint w = sample_omega(sys.driver, rng());
        const ProjPoint p(random_vector(rng, 3));
        const int t = time(rng);
        const int s = time(rng);
        const ProjPoint once = proj_apply(sys, w, t + s, p);
        const ProjPoint twice = proj_apply(sys, theta_step(sys.driver, w, s), t, proj_apply(sys, w, s, p));
        ASSERT_LE(proj_metric(once, twice), 1e-8);
    }
}

TEST(HausdorffSemidist, Conventions)
{
    ProjPointSet a{{proj_point(v2(1, 0)), proj_point(v2(1, 2))}};
    const ProjPointSet empty;
    EXPECT_EQ(hausdorff_semidist(a, a), 0.0);
    EXPECT_EQ(hausdorff_semidist(empty, a), 0.0);
    EXPECT_TRUE(std::isinf(hausdorff_semidist(a, empty)));
    const ProjPointSet one{{proj_point(v2(1, 0))}};
    const ProjPointSet b{{proj_point(v2(0, 1)), proj_point(v2(1, 1))}};
    EXPECT_NEAR(hausdorff_semidist(one, b), metric_oracle(v2(1, 0), v2(1, 1)), 1e-15);
}

TEST(SetMinDist, Examples)
{
    const ProjPointSet a{{proj_point(v2(1, 0)), proj_point(v2(1, 1))}};
    const ProjPointSet b{{proj_point(v2(1, 1)), proj_point(v2(0, 1))}};
    EXPECT_EQ(set_min_dist(a, b), 0.0);
    EXPECT_NEAR(set_min_dist(ProjPointSet{{proj_point(v2(1, 0))}}, ProjPointSet{{proj_point(v2(0, 1))}}),
                std::sqrt(2.0), 1e-15);
    EXPECT_EQ(set_min_dist(a, ProjPointSet{}), 0.0);
}

TEST(SetMinDist, LineCloudsMatchAngleFormula)
{
    std::mt19937_64 rng(23);
    const ProjPointSet a = sample_subspace_cloud(col2(1, 1), 100, rng);
    const ProjPointSet b = sample_subspace_cloud(col2(1, std::exp(1.0)), 100, rng);
    const double angle = std::acos((1 + std::exp(1.0)) / (std::sqrt(2.0) * std::sqrt(1 + std::exp(2.0))));
    EXPECT_NEAR(set_min_dist(a, b), 2 * std::sin(angle / 2), 1e-3);
}

TEST(DistToSubspace, LimitOfDenseClouds)
{
    std::mt19937_64 rng(24);
    Matrix plane(3, 2);
    plane << 1, 0, 0, 1, 0, 0;
    const ProjPointSet cloud = sample_subspace_cloud(plane, 20000, rng);
    for (int k = 0; k < 20; ++k) {
        const ProjPoint p(random_vector(rng, 3));
        const ProjPointSet single{{p}};
        EXPECT_NEAR(dist_to_subspace(p, plane), hausdorff_semidist(single, cloud), 1e-3);
    }
}
