#include "weakfactor/noise_cov.hpp"

#include <algorithm>
#include <cmath>

#include "weakfactor/errors.hpp"

namespace wf {

ThresholdKind parse_threshold_kind(std::string_view name) {
    if (name == "hard") return ThresholdKind::hard;
    if (name == "soft") return ThresholdKind::soft;
    if (name == "scad") return ThresholdKind::scad;
    throw ValidationError("unknown threshold rule '" + std::string(name) +
                          "' (expected hard, soft or scad)");
}

std::string to_string(ThresholdKind kind) {
    switch (kind) {
        case ThresholdKind::hard: return "hard";
        case ThresholdKind::soft: return "soft";
        case ThresholdKind::scad: return "scad";
    }
    return "unknown";
}

double default_eps_nt(Index n_units, Index n_periods) {
    if (n_periods < 1) {
        throw ValidationError("default_eps_nt: T must be positive");
    }
    const double n = static_cast<double>(std::max(n_units, n_periods));
    return std::sqrt(std::log(n) / static_cast<double>(n_periods));
}

ThresholdRule ThresholdRule::defaults(Index n_units, Index n_periods) {
    ThresholdRule rule;
    rule.eps_nt = default_eps_nt(n_units, n_periods);
    return rule;
}

void ThresholdRule::validate() const {
    // Zero is allowed for c and eps_nt: it turns thresholding into the identity.
    if (!(c >= 0.0) || !std::isfinite(c)) {
        throw ValidationError("threshold rule: c must be finite and nonnegative");
    }
    if (!(eps_nt >= 0.0) || !std::isfinite(eps_nt)) {
        throw ValidationError("threshold rule: eps_nt must be finite and nonnegative");
    }
    if (kind == ThresholdKind::scad && !(scad_a > 2.0)) {
        throw ValidationError("threshold rule: SCAD shape a must exceed 2");
    }
}

double shrink(ThresholdKind kind, double z, double tau, double scad_a) {
    const double az = std::abs(z);
    if (az < tau) {
        return 0.0;
    }
    switch (kind) {
        case ThresholdKind::hard:
            return z;
        case ThresholdKind::soft:
            return std::copysign(az - tau, z);
        case ThresholdKind::scad:
            if (az <= 2.0 * tau) {
                return std::copysign(az - tau, z);
            }
            if (az <= scad_a * tau) {
                return ((scad_a - 1.0) * z - std::copysign(scad_a * tau, z)) / (scad_a - 2.0);
            }
            return z;
    }
    return z;
}

Matrix pilot_cov(const Matrix& residual) {
    if (residual.cols() < 2) {
        throw ValidationError("pilot_cov: need at least two periods");
    }
    require_finite(residual, "pilot_cov");
    Matrix s = Matrix::Zero(residual.rows(), residual.rows());
    s.selfadjointView<Eigen::Upper>().rankUpdate(residual, 1.0 / static_cast<double>(residual.cols()));
    s.triangularView<Eigen::StrictlyLower>() = s.transpose();
    return s;
}

Matrix adaptive_threshold(const Matrix& pilot, const ThresholdRule& rule) {
    rule.validate();
    if (pilot.rows() != pilot.cols()) {
        throw ValidationError("adaptive_threshold: pilot must be square");
    }
    require_finite(pilot, "adaptive_threshold");
    const Index n = pilot.rows();
    const Vector diag = pilot.diagonal();
    if ((diag.array() < 0.0).any()) {
        throw ValidationError("invalid pilot: negative diagonal entry");
    }
    const Vector root = diag.cwiseSqrt();
    const double scale = rule.c * rule.eps_nt;

    Matrix out(n, n);
    for (Index j = 0; j < n; ++j) {
        out(j, j) = pilot(j, j);
        for (Index i = 0; i < j; ++i) {
            const double tau = scale * root(i) * root(j);
            out(i, j) = shrink(rule.kind, pilot(i, j), tau, rule.scad_a);
            out(j, i) = out(i, j);
        }
    }
    return out;
}

double sparsity_measure(const Matrix& sigma, double q) {
    if (!(q >= 0.0 && q < 1.0)) {
        throw ValidationError("sparsity_measure: q must lie in [0, 1)");
    }
    if (sigma.rows() != sigma.cols()) {
        throw ValidationError("sparsity_measure: matrix must be square");
    }
    if ((sigma.diagonal().array() < 0.0).any()) {
        throw ValidationError("sparsity_measure: negative diagonal entry");
    }
    double best = 0.0;
    for (Index i = 0; i < sigma.rows(); ++i) {
        double row = 0.0;
        for (Index j = 0; j < sigma.cols(); ++j) {
            const double a = std::abs(sigma(i, j));
            if (a == 0.0) {
                continue;
            }
            const double scale = std::pow(sigma(i, i) * sigma(j, j), 0.5 * (1.0 - q));
            row += scale * std::pow(a, q);
        }
        best = std::max(best, row);
    }
    return best;
}

NoiseCovEstimate estimate_noise_cov(const Matrix& residual, const ThresholdRule& rule,
                                    double q) {
    if (!(q >= 0.0 && q < 1.0)) {
        throw ValidationError("estimate_noise_cov: q must lie in [0, 1)");
    }
    NoiseCovEstimate est;
    est.pilot = pilot_cov(residual);
    est.thresholded = adaptive_threshold(est.pilot, rule);
    est.rule = rule;
    est.q = q;
    return est;
}

}  // namespace wf
