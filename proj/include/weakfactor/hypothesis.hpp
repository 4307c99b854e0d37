#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "weakfactor/linalg.hpp"
#include "weakfactor/noise_cov.hpp"
#include "weakfactor/panel.hpp"
#include "weakfactor/pca.hpp"

namespace wf {

/// Outcome of a chi-square test. reject <=> statistic > critical, and
/// p_value is the upper tail of chi2(df) at the statistic.
struct TestReport {
    double statistic = 0.0;
    int df = 0;
    double alpha = 0.05;
    double critical = 0.0;
    double p_value = 1.0;
    bool reject = false;
    std::map<std::string, std::string> meta;
};

TestReport make_report(double statistic, int df, double alpha);

/// Strictly increasing period indices within [0, T).
struct SubsetSpec {
    std::vector<Index> indices;

    /// Periods [begin, end).
    static SubsetSpec range(Index begin, Index end);
    Index size() const { return static_cast<Index>(indices.size()); }
    void validate(Index n_periods) const;
};

/// Tests H0: v lies in the span of the latent factors over the periods in s.
///
/// The statistic is v^T (I - P) v / phi_hat, with P the projector onto the
/// rows of V_hat indexed by s and phi_hat the plug-in variance of the
/// projection residual. Reference distribution chi2(|s| - r).
TestReport factor_spec_test(const FactorFit& fit, const Matrix& sigma_tau, const SubsetSpec& s,
                            const Vector& v, double alpha);

/// Produces the noise covariance used by a test from a fitted model.
using SigmaProvider = std::function<Matrix(const FactorFit&)>;

/// Thresholded residual covariance; a rule with eps_nt <= 0 is replaced by
/// the defaults for the fitted panel's dimensions.
SigmaProvider thresholded_sigma(ThresholdRule rule = {});

/// Tests H0: unit i has the same loadings in panels x1 and x2 (same units,
/// consecutive or separated periods). One PCA fit on the merged panel
/// supplies the factors and the noise covariance. Reference chi2(r).
TestReport structural_break_test(const Matrix& x1, const Matrix& x2, Index r,
                                 const SigmaProvider& sigma, Index i, double alpha);
TestReport structural_break_test(const PanelMatrix& x1, const PanelMatrix& x2, Index r,
                                 const SigmaProvider& sigma, Index i, double alpha);

/// Tests H0: units i and j share the same loadings. Reference chi2(r).
TestReport two_sample_test(const FactorFit& fit, const Matrix& sigma_tau, Index i, Index j,
                           double alpha);

}  // namespace wf
