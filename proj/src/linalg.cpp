#include "weakfactor/linalg.hpp"

#include <cmath>
#include <string>

#include "weakfactor/errors.hpp"

namespace wf {

Matrix TruncatedSvd::reconstruct() const {
    return u * sigma.asDiagonal() * v.transpose();
}

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) {
        throw ValidationError(std::string(what) + ": non-finite entry");
    }
}

void canonicalize_signs(Matrix& u, Matrix& v) {
    for (Index k = 0; k < u.cols(); ++k) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < u.rows(); ++i) {
            const double a = std::abs(u(i, k));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (u(arg, k) < 0.0) {
            u.col(k) = -u.col(k);
            v.col(k) = -v.col(k);
        }
    }
}

TruncatedSvd truncated_svd(const Matrix& m, Index r) {
    if (m.rows() < 1 || m.cols() < 1) {
        throw ValidationError("truncated_svd: empty matrix");
    }
    if (r < 1 || r > std::min(m.rows(), m.cols())) {
        throw ValidationError("truncated_svd: rank " + std::to_string(r) +
                              " out of range [1, " +
                              std::to_string(std::min(m.rows(), m.cols())) + "]");
    }
    require_finite(m, "truncated_svd");

    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    TruncatedSvd out;
    out.u = svd.matrixU().leftCols(r);
    out.sigma = svd.singularValues().head(r);
    out.v = svd.matrixV().leftCols(r);
    canonicalize_signs(out.u, out.v);
    return out;
}

namespace {

void check_rank(const Vector& sv, double rank_tol, const char* message) {
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    if (!(smax > 0.0) || smin <= rank_tol * smax) {
        throw DegenerateError(message);
    }
}

}  // namespace

Matrix sgn_align(const Matrix& h, double rank_tol) {
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw ValidationError("sgn_align: matrix must be square and nonempty");
    }
    require_finite(h, "sgn_align");
    Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    check_rank(svd.singularValues(), rank_tol, "degenerate alignment");
    return svd.matrixU() * svd.matrixV().transpose();
}

Matrix pinv_tall(const Matrix& m, double rank_tol) {
    if (m.rows() < m.cols() || m.cols() == 0) {
        throw ValidationError("pinv_tall: need rows >= cols >= 1");
    }
    require_finite(m, "pinv_tall");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    check_rank(svd.singularValues(), rank_tol, "singular design");
    const Vector inv = svd.singularValues().cwiseInverse();
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix projector(const Matrix& m, double rank_tol) {
    if (m.rows() < m.cols() || m.cols() == 0) {
        throw ValidationError("projector: need rows >= cols >= 1");
    }
    require_finite(m, "projector");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
    check_rank(svd.singularValues(), rank_tol, "singular design");
    const Matrix& q = svd.matrixU();
    return symmetrized(q * q.transpose());
}

MatrixNorms norms(const Matrix& m) {
    require_finite(m, "norms");
    MatrixNorms out;
    if (m.size() == 0) {
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(m);
    out.spectral = svd.singularValues()(0);
    out.frobenius = m.norm();
    out.two_inf = m.rowwise().norm().maxCoeff();
    out.max_row_l1 = m.cwiseAbs().rowwise().sum().maxCoeff();
    return out;
}

Matrix symmetrized(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

}  // namespace wf
