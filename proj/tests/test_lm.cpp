#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace regnewton;
using namespace regnewton::testing;

namespace {

const Vector kOne = Vector::Ones(1);

} // namespace

TEST(LMStep, IdentityResidual) {
    const auto s = lm_step(scalar_affine(0.0), kOne, 1.0);
    EXPECT_NEAR(s.lambda, 1.0, 1e-15);
    EXPECT_NEAR(s.x_next[0], 0.5, 1e-15);
    EXPECT_NEAR(s.r, 0.5, 1e-15);
    EXPECT_EQ(s.factorization, FactorizationKind::cholesky);
}

TEST(LMStep, ScalarSquare) {
    const auto s = lm_step(scalar_square(), kOne, 4.0);
    EXPECT_NEAR(s.lambda, std::sqrt(8.0), 1e-15);
    EXPECT_NEAR(s.x_next[0], 1.0 - 2.0 / (4.0 + std::sqrt(8.0)), 1e-15);
    EXPECT_NEAR(s.x_next[0], 0.707107, 1e-6);
}

TEST(LMStep, StationaryPointUnchanged) {
    const auto s = lm_step(scalar_affine(2.0), Vector::Constant(1, 2.0), 1.0);
    EXPECT_EQ(s.x_next[0], 2.0);
    EXPECT_EQ(s.lambda, 0.0);
}

TEST(LMStep, IdentityAndLambdaRBoundOnRandomPoints) {
    std::mt19937_64 rng(8);
    const auto o = make_componentwise_quadratic(Vector::Constant(4, 0.5));
    for (int p = 0; p < 30; ++p) {
        const Vector x = random_point(rng, 4, 1.5);
        const auto s = lm_step(o, x, 2.0);
        const Matrix j = o.jacobian(x);
        const Vector f = o.residual(x);
        const Vector d = s.x_next - x;
        const double gnorm = (j.transpose() * f).norm();
        EXPECT_LE((s.lambda * d + j.transpose() * (f + j * d)).norm(), 1e-8 * std::max(1.0, gnorm));
        EXPECT_LE(s.lambda * s.r, gnorm * (1.0 + 1e-10));
    }
}

TEST(RunLM, RootStartConvergesImmediately) {
    const auto r = run_lm(scalar_affine(2.0), Vector::Constant(1, 2.0), LMConfig{});
    EXPECT_EQ(r.status, RunStatus::converged);
    ASSERT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.trace[0].k, 0);
}

TEST(RunLM, ComponentwiseQuadraticMonotoneAndConverges) {
    const auto o = make_componentwise_quadratic(Vector::Ones(3));
    LMConfig cfg;
    cfg.c_const = cubic_growth_sweep(o, -3.0, 3.0, 20000, 3);
    cfg.max_iters = 200;
    cfg.check_invariants = true;
    const auto r = run_lm(o, Vector::Constant(3, 2.0), cfg);
    EXPECT_EQ(r.status, RunStatus::converged);
    EXPECT_TRUE(r.invariant_violations.empty());
    for (std::size_t i = 0; i + 1 < r.trace.size(); ++i)
        EXPECT_LE(r.trace[i + 1].residual_norm, r.trace[i].residual_norm);
    EXPECT_LT(r.trace.back().grad_norm, 1e-8);
    EXPECT_NEAR((r.final_x - Vector::Ones(3)).norm(), 0.0, 1e-8);
}

TEST(RunLM, MinGradNormIsRunningMinimum) {
    LMConfig cfg;
    cfg.c_const = 10.0;
    const auto r = run_lm(make_componentwise_quadratic(Vector::Constant(2, 4.0)), Vector::Constant(2, 0.3), cfg);
    ASSERT_EQ(r.min_grad_norm.size(), r.trace.size());
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        running = std::min(running, r.trace[i].grad_norm);
        EXPECT_EQ(r.min_grad_norm[i], running);
    }
}

TEST(RunLM, AdaptiveConstantConverges) {
    LMConfig cfg;
    cfg.adaptive_c = true;
    const auto r = run_lm(make_componentwise_quadratic(Vector::Ones(5)), Vector::Constant(5, 3.0), cfg);
    EXPECT_EQ(r.status, RunStatus::converged);
}

TEST(LMMk, HandValuesAndAffine) {
    EXPECT_NEAR(lm_mk(scalar_square(), kOne, Vector::Constant(1, 0.5)), 1.0, 1e-15);
    EXPECT_EQ(lm_mk(make_affine_residual(Vector::Ones(3)), Vector::Zero(3), Vector::Constant(3, 2.0)), 0.0);
    EXPECT_THROW(lm_mk(scalar_square(), kOne, kOne), DegenerateStep);
}

TEST(CubicGrowthSweep, AffineIsZeroAndDeterministic) {
    EXPECT_LE(cubic_growth_sweep(make_affine_residual(Vector::Ones(2)), -1.0, 1.0, 500, 1), 1e-12);
    const auto o = make_componentwise_quadratic(Vector::Ones(3));
    EXPECT_EQ(cubic_growth_sweep(o, -3.0, 3.0, 1000, 4), cubic_growth_sweep(o, -3.0, 3.0, 1000, 4));
}
