#include "weakfactor/pca.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "weakfactor/errors.hpp"

namespace wf {

FactorFit fit_pca(const Matrix& x, Index r) {
    const Index n = x.rows();
    const Index t = x.cols();
    if (r < 1 || r >= std::min(n, t)) {
        throw ValidationError("fit_pca: rank " + std::to_string(r) +
                              " must satisfy 1 <= r < min(N, T) = " +
                              std::to_string(std::min(n, t)));
    }
    if (!x.allFinite()) {
        throw ValidationError("fit_pca: panel has missing or non-finite entries; impute first");
    }

    const double sqrt_t = std::sqrt(static_cast<double>(t));
    FactorFit fit;
    fit.svd = truncated_svd(x / sqrt_t, r);
    fit.f_hat = sqrt_t * fit.svd.v;
    fit.b_hat = fit.svd.u * fit.svd.sigma.asDiagonal();
    fit.residual = x - fit.b_hat * fit.f_hat.transpose();
    fit.n_units = n;
    fit.n_periods = t;
    fit.rank = r;
    return fit;
}

FactorFit fit_pca(const PanelMatrix& x, Index r) {
    if (x.has_missing()) {
        throw ValidationError("fit_pca: panel has missing entries; impute first");
    }
    return fit_pca(x.values, r);
}

namespace {

// Thin QR returning (Q, R) with Q having orthonormal columns.
std::pair<Matrix, Matrix> thin_qr(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
    Matrix rr = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    return {std::move(q), std::move(rr)};
}

void require_full_column_rank(const Matrix& r_factor, const char* what) {
    Eigen::JacobiSVD<Matrix> svd(r_factor);
    const Vector& s = svd.singularValues();
    if (!(s(0) > 0.0) || s(s.size() - 1) <= kPinvRankTol * s(0)) {
        throw DegenerateError(std::string("ground_truth_alignment: ") + what +
                              " is rank deficient");
    }
}

}  // namespace

GroundTruthAlignment ground_truth_alignment(const FactorFit& fit, const Matrix& b,
                                            const Matrix& f) {
    const Index r = fit.rank;
    if (b.rows() != fit.n_units || b.cols() != r || f.rows() != fit.n_periods ||
        f.cols() != r) {
        throw ValidationError("ground_truth_alignment: B must be N x r and F must be T x r");
    }
    require_finite(b, "ground_truth_alignment(B)");
    require_finite(f, "ground_truth_alignment(F)");

    // SVD of T^{-1/2} B F^T through the r x r core of the two thin QRs.
    auto [q_b, r_b_factor] = thin_qr(b);
    auto [q_f, r_f_factor] = thin_qr(f);
    require_full_column_rank(r_b_factor, "B");
    require_full_column_rank(r_f_factor, "F");

    const double sqrt_t = std::sqrt(static_cast<double>(fit.n_periods));
    const Matrix core = r_b_factor * r_f_factor.transpose() / sqrt_t;
    Eigen::JacobiSVD<Matrix> core_svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);

    GroundTruthAlignment out;
    out.truth.u = q_b * core_svd.matrixU();
    out.truth.sigma = core_svd.singularValues();
    out.truth.v = q_f * core_svd.matrixV();
    canonicalize_signs(out.truth.u, out.truth.v);

    out.r_u = sgn_align(fit.svd.u.transpose() * out.truth.u);
    out.r_v = sgn_align(fit.svd.v.transpose() * out.truth.v);
    out.j = sqrt_t * pinv_tall(f) * out.truth.v;
    out.r_f = out.j * out.r_v.transpose();

    Eigen::FullPivLU<Matrix> lu(out.r_f);
    if (!lu.isInvertible()) {
        throw DegenerateError("ground_truth_alignment: R_F is singular");
    }
    out.r_b = lu.inverse().transpose();
    return out;
}

namespace {

Vector ratio_rows(const Matrix& psi, const Matrix& g) {
    const Vector g_rows = g.rowwise().norm();
    const double rms = std::sqrt(g_rows.squaredNorm() / static_cast<double>(g_rows.size()));
    const Vector psi_rows = psi.rowwise().norm();
    Vector out(psi_rows.size());
    for (Index k = 0; k < psi_rows.size(); ++k) {
        if (rms > 0.0) {
            out(k) = psi_rows(k) / rms;
        } else {
            out(k) = psi_rows(k) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

}  // namespace

ExpansionDiagnostic expansion_diagnostic(const FactorFit& fit,
                                         const GroundTruthAlignment& align,
                                         const Matrix& e) {
    if (e.rows() != fit.n_units || e.cols() != fit.n_periods) {
        throw ValidationError("expansion_diagnostic: noise matrix must be N x T");
    }
    const double inv_sqrt_t = 1.0 / std::sqrt(static_cast<double>(fit.n_periods));
    const Matrix& u = align.truth.u;
    const Matrix& v = align.truth.v;
    const Vector lambda_inv = align.truth.sigma.cwiseInverse();

    ExpansionDiagnostic out;
    out.g_u = inv_sqrt_t * (e * v) * lambda_inv.asDiagonal();
    out.g_v = inv_sqrt_t * (e.transpose() * u) * lambda_inv.asDiagonal();
    out.psi_u = fit.svd.u * align.r_u - u - out.g_u;
    out.psi_v = fit.svd.v * align.r_v - v - out.g_v;
    out.row_ratios_u = ratio_rows(out.psi_u, out.g_u);
    out.row_ratios_v = ratio_rows(out.psi_v, out.g_v);
    return out;
}

}  // namespace wf
