#include "weakfactor/inference.hpp"

#include <cmath>
#include <string>

#include "weakfactor/distributions.hpp"
#include "weakfactor/errors.hpp"

namespace wf {

namespace {

constexpr double kCovRankTol = 1e-12;

void check_sigma_tau(const FactorFit& fit, const Matrix& sigma_tau) {
    if (sigma_tau.rows() != fit.n_units || sigma_tau.cols() != fit.n_units) {
        throw ValidationError("noise covariance must be N x N with N = " +
                              std::to_string(fit.n_units));
    }
}

void check_unit(const FactorFit& fit, Index i) {
    if (i < 0 || i >= fit.n_units) {
        throw ValidationError("unit index " + std::to_string(i) + " out of range");
    }
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
}

double positive_noise_diag(const Matrix& sigma_tau, Index i) {
    const double s = sigma_tau(i, i);
    if (!(s > 0.0)) {
        throw DegenerateError("nonpositive noise variance estimate for unit " + std::to_string(i));
    }
    return s;
}

}  // namespace

double EllipsoidRegion::mahalanobis_sq(const Vector& x) const {
    if (x.size() != center.size()) {
        throw ValidationError("EllipsoidRegion: dimension mismatch");
    }
    const Vector d = x - center;
    return d.dot(shape.ldlt().solve(d));
}

Matrix factor_cov(const FactorFit& fit, const Matrix& sigma_tau) {
    check_sigma_tau(fit, sigma_tau);
    const Vector& s = fit.svd.sigma;
    if (!(s(s.size() - 1) > 1e-10 * s(0))) {
        throw DegenerateError("factor_cov: near-singular singular-value matrix");
    }
    const Matrix w = fit.svd.u * s.cwiseInverse().asDiagonal();
    return symmetrized(w.transpose() * sigma_tau * w);
}

Matrix loading_cov(const FactorFit& fit, const Matrix& sigma_tau, Index i) {
    check_sigma_tau(fit, sigma_tau);
    check_unit(fit, i);
    const double s = positive_noise_diag(sigma_tau, i);
    return (s / static_cast<double>(fit.n_periods)) * Matrix::Identity(fit.rank, fit.rank);
}

EllipsoidRegion confidence_region(const Vector& center, const Matrix& cov, double alpha) {
    check_alpha(alpha);
    const Index r = center.size();
    if (cov.rows() != r || cov.cols() != r || r == 0) {
        throw ValidationError("confidence_region: covariance must be r x r");
    }
    require_finite(cov, "confidence_region");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(cov), Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    if (!(ev(r - 1) > 0.0) || ev(0) <= kCovRankTol * ev(r - 1)) {
        throw DegenerateError("degenerate covariance");
    }
    EllipsoidRegion region;
    region.center = center;
    region.shape = cov;
    region.radius_sq = chisq_quantile(1.0 - alpha, static_cast<int>(r));
    return region;
}

double systemic_risk_se(const FactorFit& fit, const Matrix& sigma_tau, Index i) {
    check_sigma_tau(fit, sigma_tau);
    check_unit(fit, i);
    const double s = positive_noise_diag(sigma_tau, i);
    return 2.0 / std::sqrt(static_cast<double>(fit.n_periods)) * std::sqrt(s) *
           fit.b_hat.row(i).norm();
}

Interval systemic_risk_ci(const FactorFit& fit, const Matrix& sigma_tau, Index i, double alpha) {
    check_alpha(alpha);
    const double se = systemic_risk_se(fit, sigma_tau, i);
    const double center = fit.b_hat.row(i).squaredNorm();
    const double half = se * gauss_quantile(1.0 - 0.5 * alpha);
    return Interval{center - half, center + half};
}

}  // namespace wf
