#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "weakfactor/errors.hpp"
#include "weakfactor/linalg.hpp"

using namespace wf;

namespace {

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    return qr.householderQ() * Matrix::Identity(n, n);
}

Matrix fixed_3x4() {
    Matrix m(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = ((i + 1) * (j + 2)) % 7;
    return m;
}

}  // namespace

TEST(TruncatedSvd, DiagonalMatrix) {
    Matrix m(2, 2);
    m << 3, 0, 0, 1;
    const TruncatedSvd s = truncated_svd(m, 1);
    EXPECT_NEAR(s.sigma(0), 3.0, 1e-14);
    EXPECT_NEAR(s.u(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(s.u(1, 0), 0.0, 1e-14);
    EXPECT_NEAR(s.v(0, 0), 1.0, 1e-14);
}

TEST(TruncatedSvd, ExactLowRankReconstruction) {
    std::mt19937_64 rng(7);
    const Matrix m = random_matrix(9, 3, rng) * random_matrix(3, 7, rng);
    const TruncatedSvd s = truncated_svd(m, 3);
    EXPECT_LE((m - s.reconstruct()).norm(), 1e-8 * m.norm());
}

TEST(TruncatedSvd, MatchesJacobiOracleOnFixed3x4) {
    const Matrix m = fixed_3x4();
    const TruncatedSvd s = truncated_svd(m, 2);
    const Vector ref = oracle::singular_values(m, 2);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(s.sigma(k), ref(k), 1e-10 * ref(0));
}

TEST(TruncatedSvd, OrthonormalFactorsAndOrdering) {
    std::mt19937_64 rng(11);
    const Matrix m = random_matrix(12, 8, rng);
    const TruncatedSvd s = truncated_svd(m, 5);
    EXPECT_LE((s.u.transpose() * s.u - Matrix::Identity(5, 5)).norm(), 1e-10);
    EXPECT_LE((s.v.transpose() * s.v - Matrix::Identity(5, 5)).norm(), 1e-10);
    for (int k = 1; k < 5; ++k) EXPECT_GE(s.sigma(k - 1), s.sigma(k));
    EXPECT_GE(s.sigma(4), 0.0);
}

TEST(TruncatedSvd, SignConventionLargestEntryPositive) {
    std::mt19937_64 rng(3);
    const Matrix m = random_matrix(10, 6, rng);
    const TruncatedSvd s = truncated_svd(m, 4);
    for (Index k = 0; k < 4; ++k) {
        Index arg = 0;
        s.u.col(k).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(s.u(arg, k), 0.0);
    }
    const TruncatedSvd neg = truncated_svd(-m, 4);
    EXPECT_LE((neg.u - s.u).norm(), 1e-10);
    EXPECT_LE((neg.v + s.v).norm(), 1e-10);
}

TEST(TruncatedSvd, RejectsBadInput) {
    const Matrix m = fixed_3x4();
    EXPECT_THROW(truncated_svd(m, 0), ValidationError);
    EXPECT_THROW(truncated_svd(m, 4), ValidationError);
    Matrix bad = m;
    bad(1, 1) = std::nan("");
    EXPECT_THROW(truncated_svd(bad, 1), ValidationError);
}

TEST(TruncatedSvd, EckartYoungSpotCheck) {
    std::mt19937_64 rng(2024);
    const Matrix m = random_matrix(8, 6, rng);
    const Index r = 2;
    const double best = (m - truncated_svd(m, r).reconstruct()).norm();
    for (int k = 0; k < 50; ++k) {
        const Matrix p = random_matrix(8, r, rng) * random_matrix(r, 6, rng);
        EXPECT_LE(best, (m - p).norm() * (1.0 + 1e-9));
    }
}

TEST(SgnAlign, IdentityAndNegation) {
    const Matrix i3 = Matrix::Identity(3, 3);
    EXPECT_LE((sgn_align(i3) - i3).norm(), 1e-12);
    EXPECT_LE((sgn_align(-i3) + i3).norm(), 1e-12);
}

TEST(SgnAlign, MatchesClosedForm2x2) {
    Matrix h(2, 2);
    h << 2, 0, 1, 1;
    const Matrix o = sgn_align(h);
    const Matrix ref = oracle::polar_2x2(h);
    EXPECT_LE((o - ref).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((o.transpose() * o - Matrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(SgnAlign, RankDeficientThrows) {
    Matrix h(2, 2);
    h << 1, 2, 2, 4;
    try {
        sgn_align(h);
        FAIL() << "expected DegenerateError";
    } catch (const DegenerateError& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate alignment"), std::string::npos);
    }
}

TEST(SgnAlign, OptimalAgainstRandomRotations) {
    std::mt19937_64 rng(99);
    const Matrix u_hat = random_orthogonal(4, rng);
    const Matrix u = random_orthogonal(4, rng) * 0.9 + 0.1 * random_matrix(4, 4, rng);
    const Matrix o = sgn_align(u_hat.transpose() * u);
    const double best = (u_hat * o - u).norm();
    for (int k = 0; k < 100; ++k) {
        EXPECT_LE(best, (u_hat * random_orthogonal(4, rng) - u).norm() + 1e-10);
    }
}

TEST(PinvTall, OrthonormalColumnsGiveTranspose) {
    std::mt19937_64 rng(5);
    Eigen::HouseholderQR<Matrix> qr(random_matrix(6, 3, rng));
    const Matrix q = qr.householderQ() * Matrix::Identity(6, 3);
    EXPECT_LE((pinv_tall(q) - q.transpose()).norm(), 1e-12);
}

TEST(PinvTall, LeastSquaresMean) {
    Matrix m(2, 1);
    m << 1, 1;
    const Matrix p = pinv_tall(m);
    EXPECT_NEAR(p(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(p(0, 1), 0.5, 1e-14);
}

TEST(PinvTall, MatchesNormalEquationsOracle) {
    Matrix m(5, 2);
    m << 1, 2, 3, -1, 0.5, 4, -2, 1, 1.5, 0;
    EXPECT_LE((pinv_tall(m) - oracle::normal_equations_pinv(m)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((pinv_tall(m) * m - Matrix::Identity(2, 2)).norm(), 1e-8);
}

TEST(PinvTall, RankDeficientThrows) {
    Matrix m(3, 2);
    m << 1, 2, 2, 4, 3, 6;
    EXPECT_THROW(pinv_tall(m), DegenerateError);
    EXPECT_THROW(pinv_tall(Matrix(2, 3)), ValidationError);
}

TEST(Projector, BasicCases) {
    Matrix e1 = Matrix::Zero(3, 1);
    e1(0) = 1;
    const Matrix p = projector(e1);
    Matrix ref = Matrix::Zero(3, 3);
    ref(0, 0) = 1;
    EXPECT_LE((p - ref).norm(), 1e-14);
    EXPECT_THROW(projector(Matrix::Zero(3, 2)), DegenerateError);
}

TEST(Projector, IdempotentSymmetricAgainstOracle) {
    Matrix m(4, 2);
    m << 1, 0.5, -2, 1, 0, 3, 1, 1;
    const Matrix p = projector(m);
    EXPECT_LE((p - p.transpose()).norm(), 1e-14);
    EXPECT_LE((p * p - p).norm(), 1e-8);
    EXPECT_NEAR(p.trace(), 2.0, 1e-6);
    EXPECT_LE((p - oracle::normal_equations_projector(m)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Projector, FixesColumnSpace) {
    std::mt19937_64 rng(17);
    const Matrix m = random_matrix(7, 3, rng);
    const Matrix p = projector(m);
    for (int k = 0; k < 20; ++k) {
        const Vector v = m * random_matrix(3, 1, rng);
        EXPECT_LE((p * v - v).norm(), 1e-8 * v.norm());
    }
}

TEST(Norms, IdentityAndDiagonal) {
    const MatrixNorms a = norms(Matrix::Identity(3, 3));
    EXPECT_NEAR(a.spectral, 1.0, 1e-14);
    EXPECT_NEAR(a.frobenius, std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(a.two_inf, 1.0, 1e-14);
    EXPECT_NEAR(a.max_row_l1, 1.0, 1e-14);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = -3;
    const MatrixNorms b = norms(d);
    EXPECT_NEAR(b.spectral, 3.0, 1e-14);
    EXPECT_NEAR(b.max_row_l1, 3.0, 1e-14);
}

TEST(Norms, SpectralMatchesPowerIteration) {
    Matrix m(3, 3);
    m << 2, -1, 0.5, 0.3, 4, 1, -1, 0.2, 1.5;
    const MatrixNorms n = norms(m);
    EXPECT_NEAR(n.spectral, oracle::power_spectral_norm(m), 1e-8);
    double two_inf = 0, l1 = 0;
    for (int i = 0; i < 3; ++i) {
        two_inf = std::max(two_inf, m.row(i).norm());
        l1 = std::max(l1, m.row(i).cwiseAbs().sum());
    }
    EXPECT_NEAR(n.two_inf, two_inf, 1e-14);
    EXPECT_NEAR(n.max_row_l1, l1, 1e-14);
}
