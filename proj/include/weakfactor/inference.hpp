#pragma once

#include "weakfactor/linalg.hpp"
#include "weakfactor/pca.hpp"

namespace wf {

/// Ellipsoid {x : (x - c)^T shape^{-1} (x - c) <= radius_sq}.
struct EllipsoidRegion {
    Vector center;
    Matrix shape;
    double radius_sq = 0.0;

    double mahalanobis_sq(const Vector& x) const;
    bool contains(const Vector& x) const { return mahalanobis_sq(x) <= radius_sq; }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Plug-in covariance of a row of F_hat:
///   Sigma_hat^{-1} U_hat^T S U_hat Sigma_hat^{-1}.
/// The same matrix serves every period t.
Matrix factor_cov(const FactorFit& fit, const Matrix& sigma_tau);

/// Plug-in covariance (1/T) S_ii I_r of row i of B_hat.
Matrix loading_cov(const FactorFit& fit, const Matrix& sigma_tau, Index i);

/// Gaussian ellipsoid with radius_sq = chi2_{1-alpha}(r). Errors with
/// "degenerate covariance" when cov is not safely positive definite.
EllipsoidRegion confidence_region(const Vector& center, const Matrix& cov, double alpha);

/// Standard error 2 T^{-1/2} sqrt(S_ii) ||B_hat_i|| of the systematic risk.
double systemic_risk_se(const FactorFit& fit, const Matrix& sigma_tau, Index i);

/// ||B_hat_i||^2 -/+ se * z_{1-alpha/2}.
Interval systemic_risk_ci(const FactorFit& fit, const Matrix& sigma_tau, Index i, double alpha);

}  // namespace wf
