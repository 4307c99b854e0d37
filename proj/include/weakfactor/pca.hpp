#pragma once

#include "weakfactor/linalg.hpp"
#include "weakfactor/panel.hpp"

namespace wf {

/// Principal-component estimates from the rank-r SVD of T^{-1/2} X.
///
/// f_hat = sqrt(T) * V_hat satisfies (1/T) f_hat^T f_hat = I_r, and
/// b_hat = U_hat * Sigma_hat, so b_hat * f_hat^T is the best rank-r
/// approximation of X.
struct FactorFit {
    TruncatedSvd svd;  // of T^{-1/2} X
    Matrix f_hat;      // T x r
    Matrix b_hat;      // N x r
    Matrix residual;   // X - b_hat * f_hat^T
    Index n_units = 0;
    Index n_periods = 0;
    Index rank = 0;
};

/// Requires r < min(N, T) and finite data.
FactorFit fit_pca(const Matrix& x, Index r);
/// Same, but refuses panels that still carry missing cells.
FactorFit fit_pca(const PanelMatrix& x, Index r);

/// Simulation-only objects tying the estimates to the true (B, F).
struct GroundTruthAlignment {
    TruncatedSvd truth;  // rank-r SVD U Lambda V^T of T^{-1/2} B F^T
    Matrix r_u;          // sgn(U_hat^T U)
    Matrix r_v;          // sgn(V_hat^T V)
    Matrix j;            // V = T^{-1/2} F J
    Matrix r_f;          // J R_V^T; F_hat targets F R_F
    Matrix r_b;          // (R_F^{-1})^T; B_hat targets B R_B
};

GroundTruthAlignment ground_truth_alignment(const FactorFit& fit, const Matrix& b,
                                            const Matrix& f);

/// First-order split  U_hat R_U - U = G_U + Psi_U  (and likewise for V)
/// given the true noise matrix E.
///
/// Row ratios divide each remainder row norm by the root-mean-square of the
/// first-order row norms over all rows.
struct ExpansionDiagnostic {
    Matrix g_u;
    Matrix g_v;
    Matrix psi_u;
    Matrix psi_v;
    Vector row_ratios_u;
    Vector row_ratios_v;
};

ExpansionDiagnostic expansion_diagnostic(const FactorFit& fit,
                                         const GroundTruthAlignment& align,
                                         const Matrix& e);

}  // namespace wf
