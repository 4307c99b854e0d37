#include "weakfactor/hypothesis.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "weakfactor/distributions.hpp"
#include "weakfactor/errors.hpp"
#include "weakfactor/inference.hpp"

namespace wf {

namespace {

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
}

void check_sigma_tau(const Matrix& sigma_tau, Index n) {
    if (sigma_tau.rows() != n || sigma_tau.cols() != n) {
        throw ValidationError("noise covariance must be N x N with N = " + std::to_string(n));
    }
}

}  // namespace

TestReport make_report(double statistic, int df, double alpha) {
    check_alpha(alpha);
    TestReport rep;
    rep.statistic = statistic;
    rep.df = df;
    rep.alpha = alpha;
    rep.critical = chisq_quantile(1.0 - alpha, df);
    rep.p_value = chisq_sf(statistic, df);
    rep.reject = statistic > rep.critical;
    return rep;
}

SubsetSpec SubsetSpec::range(Index begin, Index end) {
    if (begin < 0 || end < begin) {
        throw ValidationError("SubsetSpec::range: invalid bounds");
    }
    SubsetSpec s;
    for (Index t = begin; t < end; ++t) {
        s.indices.push_back(t);
    }
    return s;
}

void SubsetSpec::validate(Index n_periods) const {
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] < 0 || indices[k] >= n_periods) {
            throw ValidationError("subset index " + std::to_string(indices[k]) + " out of range");
        }
        if (k > 0 && indices[k] <= indices[k - 1]) {
            throw ValidationError("subset indices must be strictly increasing");
        }
    }
}

TestReport factor_spec_test(const FactorFit& fit, const Matrix& sigma_tau, const SubsetSpec& s,
                            const Vector& v, double alpha) {
    check_alpha(alpha);
    check_sigma_tau(sigma_tau, fit.n_units);
    s.validate(fit.n_periods);
    const Index r = fit.rank;
    const Index m = s.size();
    if (m <= r) {
        throw ValidationError("subset too small: need |S| > r");
    }
    if (v.size() != m) {
        throw ValidationError("observed series length must equal |S|");
    }
    if (!v.allFinite()) {
        throw ValidationError("observed series has missing or non-finite values");
    }

    Matrix v_s(m, r);
    for (Index k = 0; k < m; ++k) {
        v_s.row(k) = fit.svd.v.row(s.indices[k]);
    }

    Matrix proj;
    Matrix pinv;
    try {
        proj = projector(v_s);
        pinv = pinv_tall(v_s);
    } catch (const DegenerateError&) {
        throw DegenerateError("degenerate subset: V_hat rows on S are rank deficient");
    }

    const Vector resid = v - proj * v;
    const double numerator = resid.squaredNorm();
    const Vector a = pinv * v;
    const double phi = a.dot(factor_cov(fit, sigma_tau) * a) / static_cast<double>(fit.n_periods);
    if (!(phi > 0.0)) {
        throw DegenerateError(
            "degenerate variance: plug-in variance is not positive; raise the threshold "
            "constant or eps_nt");
    }

    TestReport rep = make_report(numerator / phi, static_cast<int>(m - r), alpha);
    rep.meta["test"] = "factor_spec";
    rep.meta["subset_size"] = std::to_string(m);
    rep.meta["rank"] = std::to_string(r);
    rep.meta["subset_first"] = std::to_string(s.indices.front());
    rep.meta["subset_last"] = std::to_string(s.indices.back());
    rep.meta["phi_hat"] = fmt_double(phi);
    return rep;
}

SigmaProvider thresholded_sigma(ThresholdRule rule) {
    return [rule](const FactorFit& fit) {
        ThresholdRule use = rule;
        if (!(use.eps_nt > 0.0)) {
            use.eps_nt = default_eps_nt(fit.n_units, fit.n_periods);
        }
        return adaptive_threshold(pilot_cov(fit.residual), use);
    };
}

TestReport structural_break_test(const Matrix& x1, const Matrix& x2, Index r,
                                 const SigmaProvider& sigma, Index i, double alpha) {
    check_alpha(alpha);
    if (x1.rows() != x2.rows()) {
        throw ValidationError("structural_break_test: panels must have the same units");
    }
    const Index n = x1.rows();
    const Index t1 = x1.cols();
    const Index t2 = x2.cols();
    if (i < 0 || i >= n) {
        throw ValidationError("unit index " + std::to_string(i) + " out of range");
    }
    if (std::min(t1, t2) <= r) {
        throw ValidationError("structural_break_test: each period must be longer than r");
    }

    Matrix merged(n, t1 + t2);
    merged << x1, x2;
    const FactorFit fit = fit_pca(merged, r);
    const Matrix sigma_tau = sigma(fit);
    check_sigma_tau(sigma_tau, n);

    const Matrix f1 = fit.f_hat.topRows(t1);
    const Matrix f2 = fit.f_hat.bottomRows(t2);
    const Matrix gram1 = f1.transpose() * f1;
    const Matrix gram2 = f2.transpose() * f2;

    auto regress = [&](const Matrix& gram, const Matrix& f, const Vector& y) {
        Eigen::LDLT<Matrix> ldlt(gram);
        const Vector d = ldlt.vectorD();
        if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-12 * d.maxCoeff())) {
            throw DegenerateError("structural_break_test: singular Gram matrix");
        }
        return Vector(ldlt.solve(f.transpose() * y));
    };
    const Vector b1 = regress(gram1, f1, x1.row(i).transpose());
    const Vector b2 = regress(gram2, f2, x2.row(i).transpose());
    const Vector d = b1 - b2;

    // phi_i = (S + P S + S P + P S P)_{ii} with P = U_hat U_hat^T.
    const Matrix& u = fit.svd.u;
    const Vector u_i = u.row(i).transpose();
    const Vector ut_s_i = u.transpose() * sigma_tau.col(i);
    const Matrix ut_s_u = u.transpose() * sigma_tau * u;
    const double phi = sigma_tau(i, i) + 2.0 * u_i.dot(ut_s_i) + u_i.dot(ut_s_u * u_i);
    if (!(phi > 0.0)) {
        throw DegenerateError(
            "degenerate variance: plug-in variance is not positive; raise the threshold "
            "constant or eps_nt");
    }

    const double t = static_cast<double>(t1 + t2);
    const double raw = d.dot(gram1 * (gram2 * d));
    double quad = raw;
    bool clamped = false;
    if (quad < 0.0) {
        clamped = raw < -1e-10;
        quad = 0.0;
    }

    TestReport rep = make_report(quad / (t * phi), static_cast<int>(r), alpha);
    rep.meta["test"] = "structural_break";
    rep.meta["unit"] = std::to_string(i);
    rep.meta["rank"] = std::to_string(r);
    rep.meta["n_periods_1"] = std::to_string(t1);
    rep.meta["n_periods_2"] = std::to_string(t2);
    rep.meta["phi_hat"] = fmt_double(phi);
    if (clamped) {
        rep.meta["warning"] = "negative quadratic form " + fmt_double(raw) + " clamped to 0";
    }
    return rep;
}

TestReport structural_break_test(const PanelMatrix& x1, const PanelMatrix& x2, Index r,
                                 const SigmaProvider& sigma, Index i, double alpha) {
    if (x1.has_missing() || x2.has_missing()) {
        throw ValidationError("structural_break_test: panels have missing entries; impute first");
    }
    return structural_break_test(x1.values, x2.values, r, sigma, i, alpha);
}

TestReport two_sample_test(const FactorFit& fit, const Matrix& sigma_tau, Index i, Index j,
                           double alpha) {
    check_alpha(alpha);
    check_sigma_tau(sigma_tau, fit.n_units);
    if (i < 0 || i >= fit.n_units || j < 0 || j >= fit.n_units) {
        throw ValidationError("two_sample_test: unit index out of range");
    }
    if (i == j) {
        throw ValidationError("two_sample_test: units must be distinct");
    }
    const double denom = sigma_tau(i, i) + sigma_tau(j, j) - 2.0 * sigma_tau(i, j);
    if (!(denom > 0.0)) {
        throw DegenerateError("degenerate pair: nonpositive variance of the loading difference");
    }
    const double dist = (fit.b_hat.row(i) - fit.b_hat.row(j)).squaredNorm();
    TestReport rep =
        make_report(static_cast<double>(fit.n_periods) * dist / denom, static_cast<int>(fit.rank), alpha);
    rep.meta["test"] = "two_sample";
    rep.meta["unit_i"] = std::to_string(i);
    rep.meta["unit_j"] = std::to_string(j);
    rep.meta["rank"] = std::to_string(fit.rank);
    return rep;
}

}  // namespace wf
