#pragma once

namespace wf {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chisq_cdf(double x, int df);
/// Upper tail 1 - cdf, computed without cancellation.
double chisq_sf(double x, int df);
/// Inverse of chisq_cdf by bisection; q must lie in (0, 1).
double chisq_quantile(double q, int df);

double gauss_cdf(double x);
/// Standard normal quantile; p must lie in (0, 1).
double gauss_quantile(double p);

/// Chi-square reference distribution with df >= 1 degrees of freedom.
class ChiSq {
public:
    explicit ChiSq(int df);

    int df() const { return df_; }
    double cdf(double x) const { return chisq_cdf(x, df_); }
    double sf(double x) const { return chisq_sf(x, df_); }
    double quantile(double q) const { return chisq_quantile(q, df_); }

private:
    int df_;
};

}  // namespace wf
