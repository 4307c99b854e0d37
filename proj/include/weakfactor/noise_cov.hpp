#pragma once

#include <string>
#include <string_view>

#include "weakfactor/linalg.hpp"

namespace wf {

enum class ThresholdKind { hard, soft, scad };

ThresholdKind parse_threshold_kind(std::string_view name);
std::string to_string(ThresholdKind kind);

/// Entry-adaptive threshold tau_ij = c * eps_nt * sqrt(S_ii * S_jj).
struct ThresholdRule {
    ThresholdKind kind = ThresholdKind::hard;
    double c = 2.0;
    double eps_nt = 0.0;
    double scad_a = 3.7;

    /// Hard rule, c = 2, eps_nt = sqrt(log(max(N, T)) / T).
    static ThresholdRule defaults(Index n_units, Index n_periods);
    void validate() const;
};

double default_eps_nt(Index n_units, Index n_periods);

/// Thresholding function h(z, tau). Every kind satisfies h = 0 for |z| < tau
/// and |h - z| <= tau.
double shrink(ThresholdKind kind, double z, double tau, double scad_a = 3.7);

/// Pilot estimate T^{-1} E E^T of an N x T residual matrix.
Matrix pilot_cov(const Matrix& residual);

/// Keeps the pilot diagonal and replaces each off-diagonal entry by
/// h(S_ij, tau_ij). Only the upper triangle is computed; the result is its
/// mirror image, so it is exactly symmetric. No PSD repair is applied.
Matrix adaptive_threshold(const Matrix& pilot, const ThresholdRule& rule);

/// max_i sum_j (S_ii S_jj)^{(1-q)/2} |S_ij|^q, with 0^0 taken as 0.
double sparsity_measure(const Matrix& sigma, double q);

struct NoiseCovEstimate {
    Matrix pilot;
    Matrix thresholded;
    ThresholdRule rule;
    double q = 0.0;
};

NoiseCovEstimate estimate_noise_cov(const Matrix& residual, const ThresholdRule& rule,
                                    double q = 0.0);

}  // namespace wf
