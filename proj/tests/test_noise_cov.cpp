#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "weakfactor/errors.hpp"
#include "weakfactor/noise_cov.hpp"

using namespace wf;

namespace {

ThresholdRule rule_of(ThresholdKind kind, double c, double eps) {
    ThresholdRule r;
    r.kind = kind;
    r.c = c;
    r.eps_nt = eps;
    return r;
}

Matrix gaussian(Index rows, Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

}  // namespace

TEST(PilotCov, ZeroAndSingleRow) {
    EXPECT_EQ(pilot_cov(Matrix::Zero(3, 4)).cwiseAbs().maxCoeff(), 0.0);
    Matrix e(1, 4);
    e << 1, -2, 3, 0.5;
    EXPECT_NEAR(pilot_cov(e)(0, 0), (1 + 4 + 9 + 0.25) / 4.0, 1e-15);
}

TEST(PilotCov, MatchesDoubleLoop) {
    Matrix e(3, 5);
    e << 0.3, -1.2, 2.0, 0.1, -0.4, 1.1, 0.0, -0.7, 0.9, 2.2, -0.5, 0.6, 0.8, -1.5, 0.2;
    EXPECT_LE((pilot_cov(e) - oracle::pilot(e)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(pilot_cov(Matrix::Zero(3, 1)), ValidationError);
}

TEST(PilotCov, SymmetricPsd) {
    const Matrix s = pilot_cov(gaussian(10, 6, 1));
    EXPECT_EQ((s - s.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff(), -1e-12);
}

TEST(AdaptiveThreshold, HugeEpsKeepsDiagonalOnly) {
    const Matrix s = pilot_cov(gaussian(5, 20, 2));
    const Matrix t = adaptive_threshold(s, rule_of(ThresholdKind::hard, 2.0, 1e6));
    EXPECT_EQ((t - Matrix(s.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdaptiveThreshold, ZeroThresholdIsIdentity) {
    const Matrix s = pilot_cov(gaussian(5, 20, 3));
    EXPECT_EQ((adaptive_threshold(s, rule_of(ThresholdKind::hard, 0.0, 0.3)) - s).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((adaptive_threshold(s, rule_of(ThresholdKind::hard, 2.0, 0.0)) - s).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdaptiveThreshold, TwoByTwoHardRule) {
    Matrix s(2, 2);
    s << 1, 0.3, 0.3, 1;
    const Matrix kept = adaptive_threshold(s, rule_of(ThresholdKind::hard, 2.0, 0.1));
    EXPECT_EQ(kept(0, 1), 0.3);
    EXPECT_EQ(kept(1, 0), 0.3);
    const Matrix killed = adaptive_threshold(s, rule_of(ThresholdKind::hard, 2.0, 0.2));
    EXPECT_EQ(killed(0, 1), 0.0);
    EXPECT_EQ(killed(1, 0), 0.0);
}

TEST(AdaptiveThreshold, MatchesOracleHardRule) {
    const Matrix s = pilot_cov(gaussian(8, 12, 4));
    const Matrix t = adaptive_threshold(s, rule_of(ThresholdKind::hard, 2.0, 0.25));
    EXPECT_EQ((t - oracle::hard_threshold(s, 2.0, 0.25)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdaptiveThreshold, RuleRequirementsAndInvariants) {
    const Matrix s = pilot_cov(gaussian(12, 15, 5));
    for (auto kind : {ThresholdKind::hard, ThresholdKind::soft, ThresholdKind::scad}) {
        const ThresholdRule rule = rule_of(kind, 1.0, 0.3);
        const Matrix t = adaptive_threshold(s, rule);
        EXPECT_LE((t - t.transpose()).cwiseAbs().maxCoeff(), 1e-10);
        for (Index i = 0; i < 12; ++i) {
            EXPECT_EQ(t(i, i), s(i, i));
            for (Index j = 0; j < 12; ++j) {
                if (i == j) continue;
                const double tau = 0.3 * std::sqrt(s(i, i) * s(j, j));
                if (std::abs(s(i, j)) < tau) EXPECT_EQ(t(i, j), 0.0);
                EXPECT_TRUE(t(i, j) == 0.0 || std::abs(t(i, j) - s(i, j)) <= tau * (1.0 + 1e-12));
            }
        }
    }
}

TEST(Shrink, PiecewiseRules) {
    EXPECT_EQ(shrink(ThresholdKind::hard, 0.5, 1.0), 0.0);
    EXPECT_EQ(shrink(ThresholdKind::hard, -1.5, 1.0), -1.5);
    EXPECT_DOUBLE_EQ(shrink(ThresholdKind::soft, 1.5, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(shrink(ThresholdKind::soft, -1.5, 1.0), -0.5);
    EXPECT_DOUBLE_EQ(shrink(ThresholdKind::scad, 1.5, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(shrink(ThresholdKind::scad, 3.0, 1.0, 3.7), (2.7 * 3.0 - 3.7) / 1.7);
    EXPECT_EQ(shrink(ThresholdKind::scad, 5.0, 1.0, 3.7), 5.0);
    // SCAD is continuous at 2 tau and a tau.
    EXPECT_NEAR(shrink(ThresholdKind::scad, 2.0 + 1e-12, 1.0), 1.0, 1e-9);
    EXPECT_NEAR(shrink(ThresholdKind::scad, 3.7 - 1e-12, 1.0), 3.7, 1e-9);
}

TEST(AdaptiveThreshold, Errors) {
    Matrix s = Matrix::Identity(2, 2);
    s(1, 1) = -0.1;
    try {
        adaptive_threshold(s, rule_of(ThresholdKind::hard, 2.0, 0.1));
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("invalid pilot"), std::string::npos);
    }
    ThresholdRule bad = rule_of(ThresholdKind::scad, 1.0, 0.1);
    bad.scad_a = 2.0;
    EXPECT_THROW(adaptive_threshold(Matrix::Identity(2, 2), bad), ValidationError);
    EXPECT_THROW(adaptive_threshold(Matrix::Identity(2, 2), rule_of(ThresholdKind::hard, -1.0, 0.1)),
                 ValidationError);
    EXPECT_THROW(parse_threshold_kind("median"), ValidationError);
}

TEST(DefaultRule, RateFormula) {
    EXPECT_NEAR(default_eps_nt(300, 200), std::sqrt(std::log(300.0) / 200.0), 1e-15);
    const ThresholdRule r = ThresholdRule::defaults(100, 400);
    EXPECT_NEAR(r.eps_nt, std::sqrt(std::log(400.0) / 400.0), 1e-15);
    EXPECT_EQ(r.c, 2.0);
}

TEST(Sparsity, Examples) {
    EXPECT_DOUBLE_EQ(sparsity_measure(Matrix::Identity(4, 4), 0.0), 1.0);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 1;
    EXPECT_DOUBLE_EQ(sparsity_measure(d, 0.0), 4.0);
    Matrix eq = Matrix::Constant(3, 3, 0.5);
    eq.diagonal().setOnes();
    double best = 0.0;
    for (int i = 0; i < 3; ++i) {
        double row = 0.0;
        for (int j = 0; j < 3; ++j) row += std::pow(eq(i, i) * eq(j, j), 0.25) * std::pow(std::abs(eq(i, j)), 0.5);
        best = std::max(best, row);
    }
    EXPECT_NEAR(sparsity_measure(eq, 0.5), best, 1e-14);
    EXPECT_THROW(sparsity_measure(eq, 1.0), ValidationError);
}

TEST(NoiseCovEstimate, BundlesPilotAndThresholded) {
    const Matrix e = gaussian(6, 30, 6);
    const ThresholdRule rule = ThresholdRule::defaults(6, 30);
    const NoiseCovEstimate est = estimate_noise_cov(e, rule, 0.0);
    EXPECT_EQ((est.pilot - pilot_cov(e)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((est.thresholded.diagonal() - est.pilot.diagonal()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(est.rule.eps_nt, rule.eps_nt);
}
