#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "weakfactor/linalg.hpp"
#include "weakfactor/noise_cov.hpp"
#include "weakfactor/table.hpp"

namespace wf {

/// Observed series v = F_S w + delta * g over the window S starting at T/2.
struct FactorShift {
    double delta = 0.0;
    Vector w = (Vector(3) << 1.0, 1.0, 0.5).finished();
    Index subset_len = 12;
};

/// Unit `unit` switches from b to b + delta * ||b|| * 1 after period t1.
struct BetaBreak {
    double delta = 0.0;
    Index t1 = 100;
    Index t2 = 100;
    Index unit = 0;
};

using Alternative = std::variant<std::monostate, FactorShift, BetaBreak>;

struct SimScenario {
    Index n_units = 300;
    Index n_periods = 200;
    Index r = 3;
    Index n_blocks = 20;
    Index block_size = 15;
    double rho_lo = 0.0;
    double rho_hi = 0.5;
    double theta_target = 4.5;
    Index trials = 200;
    std::uint64_t seed = 20240601;
    bool duplicate_b2 = false;  // loadings of unit 1 := loadings of unit 0
    Alternative alternative;
    ThresholdRule rule;  // eps_nt <= 0 selects the defaults for (N, T)

    void validate() const;
};

/// The per-trial generator: a function of (seed, trial) only.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

/// Block-diagonal equicorrelation covariance; block k is
/// (1 - rho_k) I + rho_k 1 1^T of size m.
struct BlockEquicorrelation {
    Vector rho;
    Index m = 1;

    Index dim() const { return rho.size() * m; }
    Matrix dense() const;
    /// Sigma^{1/2} z for each column z, via the closed-form block square root.
    Matrix apply_sqrt(const Matrix& z) const;
    /// Largest eigenvalue, 1 + (m - 1) max_k rho_k.
    double spectral_norm() const;
};

BlockEquicorrelation draw_block_equicorrelation(Index j_blocks, Index m, double rho_lo,
                                                double rho_hi, std::mt19937_64& rng);
Matrix gen_block_cov(Index j_blocks, Index m, double rho_lo, double rho_hi, std::mt19937_64& rng);

struct SimDraw {
    Matrix x;        // N x T panel
    Matrix b;        // loadings (first regime under a break)
    Matrix b_after;  // loadings after the break; equals b otherwise
    Matrix f;        // T x r factors
    Matrix e;        // N x T noise
    Matrix sigma_eps;
    Vector rho;
    double theta_realized = 0.0;
    // Factor-shift alternative only.
    Index subset_begin = 0;
    Vector g;  // alternative direction, orthogonal to F_S
    Vector v;  // observed series
};

SimDraw gen_draw(const SimScenario& scn, std::uint64_t trial);

struct CoverageSummary {
    double mean = 0.0;
    double std = 0.0;
    Vector per_row;  // coverage frequency of each row across trials
};

struct CoverageTable {
    double theta = 0.0;
    double alpha = 0.05;
    Index trials = 0;
    CoverageSummary factor;
    CoverageSummary beta;
    CoverageSummary risk;

    Table to_table() const;
};

struct RejectionRow {
    double parameter = 0.0;  // delta for the factor and break tests
    Index unit_i = -1;
    Index unit_j = -1;
    Index rejections = 0;
    Index trials = 0;
    double rate = 0.0;
    double mean_statistic = 0.0;
};

struct RejectionTable {
    std::string experiment;
    double theta = 0.0;
    double alpha = 0.05;
    std::vector<RejectionRow> rows;

    Table to_table() const;
};

struct DominanceRow {
    double theta = 0.0;
    double median_ratio_u = 0.0;
    double median_ratio_v = 0.0;
    Index trials = 0;
};

struct DominanceTable {
    std::vector<DominanceRow> rows;

    Table to_table() const;
};

/// Coverage of the factor and loading ellipsoids and the systematic-risk
/// interval; each row's frequency is averaged over trials, then mean and
/// population std are taken across rows.
CoverageTable run_coverage(const SimScenario& scn, double alpha, unsigned workers = 1);

/// Rejection rates of the factor specification test for each delta. Uses
/// the scenario's FactorShift for w and |S| (defaults if none is set).
RejectionTable run_factor_power(const SimScenario& scn, double alpha,
                                const std::vector<double>& deltas, unsigned workers = 1);

/// Rejection rates of the structural break test for each Delta. Uses the
/// scenario's BetaBreak for T1, T2 and the tested unit (defaults: T/2 and 0).
RejectionTable run_break_power(const SimScenario& scn, double alpha,
                               const std::vector<double>& deltas, unsigned workers = 1);

RejectionTable run_twosample(const SimScenario& scn, double alpha,
                             const std::vector<std::pair<Index, Index>>& pairs,
                             unsigned workers = 1);

/// Median over trials of the per-trial median row ratio ||Psi row|| /
/// rms ||G row||, for each theta.
DominanceTable run_perturbation(const SimScenario& scn, const std::vector<double>& theta_grid,
                                unsigned workers = 1);

/// Defaults for the perturbation study: r = 1, N = T = 200, identity noise,
/// 50 trials.
SimScenario perturbation_scenario();

}  // namespace wf
