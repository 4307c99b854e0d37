#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace wf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Rank tolerance (sigma_min / sigma_max) below which pinv_tall and
/// projector refuse the input.
inline constexpr double kPinvRankTol = 1e-10;
/// Rank tolerance used by sgn_align.
inline constexpr double kAlignRankTol = 1e-12;

/// Rank-r singular value decomposition m ~= u * diag(sigma) * v^T.
///
/// Columns of u and v are orthonormal and sigma is nonincreasing. Each
/// column of u has its largest-magnitude entry positive (first index wins
/// ties); the matching column of v is flipped with it.
struct TruncatedSvd {
    Matrix u;
    Vector sigma;
    Matrix v;

    Index rank() const { return sigma.size(); }
    Matrix reconstruct() const;
};

struct MatrixNorms {
    double spectral = 0.0;
    double frobenius = 0.0;
    double two_inf = 0.0;     // max row 2-norm
    double max_row_l1 = 0.0;  // max row 1-norm
};

/// Throws ValidationError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

/// Best rank-r approximation in Frobenius norm, via a bidiagonalizing
/// divide-and-conquer SVD. Requires 1 <= r <= min(rows, cols).
TruncatedSvd truncated_svd(const Matrix& m, Index r);

/// Applies the sign convention of TruncatedSvd in place.
void canonicalize_signs(Matrix& u, Matrix& v);

/// Orthogonal polar factor sgn(H) = U_H V_H^T of a square, full-rank H.
/// sgn(Uhat^T U) is the rotation O minimizing ||Uhat O - U||_F.
Matrix sgn_align(const Matrix& h, double rank_tol = kAlignRankTol);

/// Moore-Penrose inverse (m^T m)^{-1} m^T of a tall full-column-rank matrix.
Matrix pinv_tall(const Matrix& m, double rank_tol = kPinvRankTol);

/// Orthogonal projector onto col(m). Exactly symmetric.
Matrix projector(const Matrix& m, double rank_tol = kPinvRankTol);

MatrixNorms norms(const Matrix& m);

/// Exact symmetrization 0.5 * (m + m^T).
Matrix symmetrized(const Matrix& m);

}  // namespace wf
