#include "weakfactor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weakfactor/errors.hpp"
#include "weakfactor/hypothesis.hpp"
#include "weakfactor/inference.hpp"
#include "weakfactor/parallel.hpp"
#include "weakfactor/pca.hpp"

namespace wf {

namespace {

void fill_normal(Matrix& m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) {
            m(r, c) = gauss(rng);
        }
    }
}

double smallest_singular_value(const Matrix& m) {
    const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
    return s(s.size() - 1);
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

double median_of(const Vector& v) {
    return median_of(std::vector<double>(v.data(), v.data() + v.size()));
}

CoverageSummary summarize(const Matrix& hits) {
    // hits: trials x rows, 1 when covered.
    CoverageSummary s;
    s.per_row = hits.colwise().mean().transpose();
    s.mean = s.per_row.mean();
    s.std = std::sqrt((s.per_row.array() - s.mean).square().mean());
    return s;
}

ThresholdRule resolve_rule(const SimScenario& scn) {
    ThresholdRule rule = scn.rule;
    if (!(rule.eps_nt > 0.0)) {
        rule.eps_nt = default_eps_nt(scn.n_units, scn.n_periods);
    }
    return rule;
}

FactorShift factor_shift_of(const SimScenario& scn) {
    if (const auto* fs = std::get_if<FactorShift>(&scn.alternative)) {
        return *fs;
    }
    FactorShift fs;
    fs.w = Vector::Ones(scn.r);
    if (scn.r == 3) {
        fs.w(2) = 0.5;
    }
    return fs;
}

BetaBreak beta_break_of(const SimScenario& scn) {
    if (const auto* bb = std::get_if<BetaBreak>(&scn.alternative)) {
        return *bb;
    }
    BetaBreak bb;
    bb.t1 = scn.n_periods / 2;
    bb.t2 = scn.n_periods - bb.t1;
    return bb;
}

}  // namespace

void SimScenario::validate() const {
    if (n_units < 2 || n_periods < 2) {
        throw ValidationError("scenario: need N >= 2 and T >= 2");
    }
    if (r < 1 || r >= std::min(n_units, n_periods)) {
        throw ValidationError("scenario: need 1 <= r < min(N, T)");
    }
    if (n_blocks < 1 || block_size < 1 || n_blocks * block_size != n_units) {
        throw ValidationError("scenario: N must equal n_blocks * block_size");
    }
    if (!(rho_lo >= 0.0 && rho_lo <= rho_hi && rho_hi < 1.0)) {
        throw ValidationError("scenario: rho range must satisfy 0 <= lo <= hi < 1");
    }
    if (!(theta_target > 0.0) || !std::isfinite(theta_target)) {
        throw ValidationError("scenario: theta must be positive");
    }
    if (trials < 1) {
        throw ValidationError("scenario: trials must be >= 1");
    }
    if (duplicate_b2 && n_units < 2) {
        throw ValidationError("scenario: duplicate_b2 needs two units");
    }
    if (const auto* fs = std::get_if<FactorShift>(&alternative)) {
        if (fs->w.size() != r) {
            throw ValidationError("scenario: factor weight vector must have length r");
        }
        if (fs->subset_len <= r || n_periods / 2 + fs->subset_len > n_periods) {
            throw ValidationError("scenario: subset length must exceed r and fit after T/2");
        }
    }
    if (const auto* bb = std::get_if<BetaBreak>(&alternative)) {
        if (bb->t1 + bb->t2 != n_periods || std::min(bb->t1, bb->t2) <= r) {
            throw ValidationError("scenario: break periods must sum to T and exceed r");
        }
        if (bb->unit < 0 || bb->unit >= n_units) {
            throw ValidationError("scenario: break unit out of range");
        }
    }
    if (rule.c < 0.0) {
        throw ValidationError("scenario: threshold constant must be nonnegative");
    }
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

Matrix BlockEquicorrelation::dense() const {
    const Index n = dim();
    Matrix s = Matrix::Zero(n, n);
    for (Index k = 0; k < rho.size(); ++k) {
        s.block(k * m, k * m, m, m).setConstant(rho(k));
        s.block(k * m, k * m, m, m).diagonal().setOnes();
    }
    return s;
}

Matrix BlockEquicorrelation::apply_sqrt(const Matrix& z) const {
    if (z.rows() != dim()) {
        throw ValidationError("apply_sqrt: dimension mismatch");
    }
    Matrix out(z.rows(), z.cols());
    const double md = static_cast<double>(m);
    for (Index k = 0; k < rho.size(); ++k) {
        const double p = rho(k);
        const double a = std::sqrt(1.0 - p);
        const double c = (std::sqrt(1.0 + (md - 1.0) * p) - a) / md;
        const auto zk = z.middleRows(k * m, m);
        const Eigen::RowVectorXd col_sums = zk.colwise().sum();
        out.middleRows(k * m, m) = a * zk;
        out.middleRows(k * m, m).rowwise() += c * col_sums;
    }
    return out;
}

double BlockEquicorrelation::spectral_norm() const {
    const double rmax = rho.size() ? rho.maxCoeff() : 0.0;
    return 1.0 + (static_cast<double>(m) - 1.0) * std::max(rmax, 0.0);
}

BlockEquicorrelation draw_block_equicorrelation(Index j_blocks, Index m, double rho_lo,
                                                double rho_hi, std::mt19937_64& rng) {
    if (j_blocks < 1 || m < 1) {
        throw ValidationError("block covariance: need at least one block of size >= 1");
    }
    if (!(rho_lo >= 0.0 && rho_lo <= rho_hi && rho_hi < 1.0)) {
        throw ValidationError("block covariance: rho range must satisfy 0 <= lo <= hi < 1");
    }
    BlockEquicorrelation bc;
    bc.m = m;
    bc.rho.resize(j_blocks);
    std::uniform_real_distribution<double> unif(rho_lo, rho_hi);
    for (Index k = 0; k < j_blocks; ++k) {
        bc.rho(k) = rho_hi > rho_lo ? unif(rng) : rho_lo;
    }
    return bc;
}

Matrix gen_block_cov(Index j_blocks, Index m, double rho_lo, double rho_hi, std::mt19937_64& rng) {
    return draw_block_equicorrelation(j_blocks, m, rho_lo, rho_hi, rng).dense();
}

SimDraw gen_draw(const SimScenario& scn, std::uint64_t trial) {
    scn.validate();
    const Index n = scn.n_units;
    const Index t_len = scn.n_periods;
    const Index r = scn.r;
    auto rng = trial_rng(scn.seed, trial);

    // Draw order is part of the reproducibility contract:
    // rho, loadings, factors, noise, then the alternative direction.
    const BlockEquicorrelation cov =
        draw_block_equicorrelation(scn.n_blocks, scn.block_size, scn.rho_lo, scn.rho_hi, rng);
    Matrix b_raw(n, r);
    fill_normal(b_raw, rng);
    if (scn.duplicate_b2) {
        b_raw.row(1) = b_raw.row(0);
    }
    SimDraw d;
    d.f.resize(t_len, r);
    fill_normal(d.f, rng);
    Matrix z(n, t_len);
    fill_normal(z, rng);

    const double noise_scale = std::sqrt(cov.spectral_norm());
    const double scale = scn.theta_target * noise_scale / smallest_singular_value(b_raw);
    d.b = scale * b_raw;
    d.theta_realized = smallest_singular_value(d.b) / noise_scale;
    d.rho = cov.rho;
    d.sigma_eps = cov.dense();
    d.e = cov.apply_sqrt(z);
    d.b_after = d.b;

    if (const auto* bb = std::get_if<BetaBreak>(&scn.alternative)) {
        const double shift = bb->delta * d.b.row(bb->unit).norm();
        d.b_after.row(bb->unit).array() += shift;
        d.x.resize(n, t_len);
        d.x.leftCols(bb->t1) = d.b * d.f.topRows(bb->t1).transpose();
        d.x.rightCols(bb->t2) = d.b_after * d.f.bottomRows(bb->t2).transpose();
        d.x += d.e;
    } else {
        d.x = d.b * d.f.transpose() + d.e;
    }

    if (const auto* fs = std::get_if<FactorShift>(&scn.alternative)) {
        const Index len = fs->subset_len;
        d.subset_begin = t_len / 2;
        const Matrix f_s = d.f.middleRows(d.subset_begin, len);
        Matrix u(len, 1);
        fill_normal(u, rng);
        const Vector u_perp = u.col(0) - projector(f_s) * u.col(0);
        d.g = 2.0 * u_perp / u_perp.norm() * f_s.norm() * fs->w.norm();
        d.v = f_s * fs->w + fs->delta * d.g;
    }
    return d;
}

Table CoverageTable::to_table() const {
    Table t({"target", "theta", "alpha", "trials", "mean_coverage", "std_coverage"});
    const std::pair<const char*, const CoverageSummary*> items[] = {
        {"factor", &factor}, {"beta", &beta}, {"risk", &risk}};
    for (const auto& [name, s] : items) {
        t.add_row({std::string(name), theta, alpha, static_cast<std::int64_t>(trials), s->mean, s->std});
    }
    return t;
}

Table RejectionTable::to_table() const {
    Table t({"experiment", "theta", "alpha", "parameter", "unit_i", "unit_j", "rejections", "trials",
             "rate", "mean_statistic"});
    for (const auto& row : rows) {
        t.add_row({experiment, theta, alpha, row.parameter, static_cast<std::int64_t>(row.unit_i),
                   static_cast<std::int64_t>(row.unit_j), static_cast<std::int64_t>(row.rejections),
                   static_cast<std::int64_t>(row.trials), row.rate, row.mean_statistic});
    }
    return t;
}

Table DominanceTable::to_table() const {
    Table t({"theta", "trials", "median_ratio_u", "median_ratio_v"});
    for (const auto& row : rows) {
        t.add_row({row.theta, static_cast<std::int64_t>(row.trials), row.median_ratio_u,
                   row.median_ratio_v});
    }
    return t;
}

CoverageTable run_coverage(const SimScenario& scn, double alpha, unsigned workers) {
    scn.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
    const Index n = scn.n_units;
    const Index t_len = scn.n_periods;
    const Index trials = scn.trials;
    const ThresholdRule rule = resolve_rule(scn);
    Matrix hit_f = Matrix::Zero(trials, t_len);
    Matrix hit_b = Matrix::Zero(trials, n);
    Matrix hit_r = Matrix::Zero(trials, n);

    parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t k) {
        const SimDraw d = gen_draw(scn, k);
        const FactorFit fit = fit_pca(d.x, scn.r);
        const Matrix sigma_tau = adaptive_threshold(pilot_cov(fit.residual), rule);
        const GroundTruthAlignment align = ground_truth_alignment(fit, d.b, d.f);
        const Matrix f_target = d.f * align.r_f;
        const Matrix b_target = d.b * align.r_b;
        const Index row = static_cast<Index>(k);

        const Matrix cov_f = factor_cov(fit, sigma_tau);
        for (Index t = 0; t < t_len; ++t) {
            const EllipsoidRegion region =
                confidence_region(fit.f_hat.row(t).transpose(), cov_f, alpha);
            hit_f(row, t) = region.contains(f_target.row(t).transpose()) ? 1.0 : 0.0;
        }
        for (Index i = 0; i < n; ++i) {
            const EllipsoidRegion region =
                confidence_region(fit.b_hat.row(i).transpose(), loading_cov(fit, sigma_tau, i), alpha);
            hit_b(row, i) = region.contains(b_target.row(i).transpose()) ? 1.0 : 0.0;
            const Interval ci = systemic_risk_ci(fit, sigma_tau, i, alpha);
            hit_r(row, i) = ci.contains(d.b.row(i).squaredNorm()) ? 1.0 : 0.0;
        }
    });

    CoverageTable out;
    out.theta = scn.theta_target;
    out.alpha = alpha;
    out.trials = trials;
    out.factor = summarize(hit_f);
    out.beta = summarize(hit_b);
    out.risk = summarize(hit_r);
    return out;
}

RejectionTable run_factor_power(const SimScenario& scn, double alpha,
                                const std::vector<double>& deltas, unsigned workers) {
    SimScenario base = scn;
    FactorShift fs = factor_shift_of(scn);
    fs.delta = 0.0;
    base.alternative = fs;
    base.validate();
    const ThresholdRule rule = resolve_rule(base);
    const std::size_t trials = static_cast<std::size_t>(base.trials);
    const std::size_t nd = deltas.size();
    std::vector<double> stats(trials * nd, 0.0);
    std::vector<char> rejects(trials * nd, 0);

    parallel_for(trials, workers, [&](std::size_t k) {
        const SimDraw d = gen_draw(base, k);
        const FactorFit fit = fit_pca(d.x, base.r);
        const Matrix sigma_tau = adaptive_threshold(pilot_cov(fit.residual), rule);
        const SubsetSpec s = SubsetSpec::range(d.subset_begin, d.subset_begin + fs.subset_len);
        const Vector v0 = d.f.middleRows(d.subset_begin, fs.subset_len) * fs.w;
        for (std::size_t q = 0; q < nd; ++q) {
            const TestReport rep = factor_spec_test(fit, sigma_tau, s, v0 + deltas[q] * d.g, alpha);
            stats[k * nd + q] = rep.statistic;
            rejects[k * nd + q] = rep.reject ? 1 : 0;
        }
    });

    RejectionTable out;
    out.experiment = "factor-power";
    out.theta = base.theta_target;
    out.alpha = alpha;
    for (std::size_t q = 0; q < nd; ++q) {
        RejectionRow row;
        row.parameter = deltas[q];
        row.trials = base.trials;
        double sum = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            row.rejections += rejects[k * nd + q];
            sum += stats[k * nd + q];
        }
        row.rate = static_cast<double>(row.rejections) / static_cast<double>(trials);
        row.mean_statistic = sum / static_cast<double>(trials);
        out.rows.push_back(row);
    }
    return out;
}

RejectionTable run_break_power(const SimScenario& scn, double alpha,
                               const std::vector<double>& deltas, unsigned workers) {
    SimScenario base = scn;
    const BetaBreak bb = beta_break_of(scn);
    base.alternative = bb;
    base.validate();
    const SigmaProvider sigma = thresholded_sigma(scn.rule);
    const std::size_t trials = static_cast<std::size_t>(base.trials);
    const std::size_t nd = deltas.size();
    std::vector<double> stats(trials * nd, 0.0);
    std::vector<char> rejects(trials * nd, 0);

    parallel_for(trials, workers, [&](std::size_t k) {
        for (std::size_t q = 0; q < nd; ++q) {
            SimScenario s = base;
            BetaBreak alt = bb;
            alt.delta = deltas[q];
            s.alternative = alt;
            const SimDraw d = gen_draw(s, k);
            const TestReport rep = structural_break_test(d.x.leftCols(bb.t1), d.x.rightCols(bb.t2),
                                                         base.r, sigma, bb.unit, alpha);
            stats[k * nd + q] = rep.statistic;
            rejects[k * nd + q] = rep.reject ? 1 : 0;
        }
    });

    RejectionTable out;
    out.experiment = "break-power";
    out.theta = base.theta_target;
    out.alpha = alpha;
    for (std::size_t q = 0; q < nd; ++q) {
        RejectionRow row;
        row.parameter = deltas[q];
        row.unit_i = bb.unit;
        row.trials = base.trials;
        double sum = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            row.rejections += rejects[k * nd + q];
            sum += stats[k * nd + q];
        }
        row.rate = static_cast<double>(row.rejections) / static_cast<double>(trials);
        row.mean_statistic = sum / static_cast<double>(trials);
        out.rows.push_back(row);
    }
    return out;
}

RejectionTable run_twosample(const SimScenario& scn, double alpha,
                             const std::vector<std::pair<Index, Index>>& pairs, unsigned workers) {
    scn.validate();
    for (const auto& [i, j] : pairs) {
        if (i < 0 || j < 0 || i >= scn.n_units || j >= scn.n_units || i == j) {
            throw ValidationError("twosample: invalid unit pair");
        }
    }
    const ThresholdRule rule = resolve_rule(scn);
    const std::size_t trials = static_cast<std::size_t>(scn.trials);
    const std::size_t np = pairs.size();
    std::vector<double> stats(trials * np, 0.0);
    std::vector<char> rejects(trials * np, 0);

    parallel_for(trials, workers, [&](std::size_t k) {
        const SimDraw d = gen_draw(scn, k);
        const FactorFit fit = fit_pca(d.x, scn.r);
        const Matrix sigma_tau = adaptive_threshold(pilot_cov(fit.residual), rule);
        for (std::size_t q = 0; q < np; ++q) {
            const TestReport rep = two_sample_test(fit, sigma_tau, pairs[q].first, pairs[q].second, alpha);
            stats[k * np + q] = rep.statistic;
            rejects[k * np + q] = rep.reject ? 1 : 0;
        }
    });

    RejectionTable out;
    out.experiment = "twosample";
    out.theta = scn.theta_target;
    out.alpha = alpha;
    for (std::size_t q = 0; q < np; ++q) {
        RejectionRow row;
        row.unit_i = pairs[q].first;
        row.unit_j = pairs[q].second;
        row.trials = scn.trials;
        double sum = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            row.rejections += rejects[k * np + q];
            sum += stats[k * np + q];
        }
        row.rate = static_cast<double>(row.rejections) / static_cast<double>(trials);
        row.mean_statistic = sum / static_cast<double>(trials);
        out.rows.push_back(row);
    }
    return out;
}

DominanceTable run_perturbation(const SimScenario& scn, const std::vector<double>& theta_grid,
                                unsigned workers) {
    scn.validate();
    const std::size_t trials = static_cast<std::size_t>(scn.trials);
    DominanceTable out;
    for (double theta : theta_grid) {
        SimScenario s = scn;
        s.theta_target = theta;
        s.validate();
        std::vector<double> med_u(trials, 0.0);
        std::vector<double> med_v(trials, 0.0);
        parallel_for(trials, workers, [&](std::size_t k) {
            const SimDraw d = gen_draw(s, k);
            const FactorFit fit = fit_pca(d.x, s.r);
            const GroundTruthAlignment align = ground_truth_alignment(fit, d.b, d.f);
            const ExpansionDiagnostic diag = expansion_diagnostic(fit, align, d.e);
            med_u[k] = median_of(diag.row_ratios_u);
            med_v[k] = median_of(diag.row_ratios_v);
        });
        DominanceRow row;
        row.theta = theta;
        row.trials = s.trials;
        row.median_ratio_u = median_of(med_u);
        row.median_ratio_v = median_of(med_v);
        out.rows.push_back(row);
    }
    return out;
}

SimScenario perturbation_scenario() {
    SimScenario s;
    s.n_units = 200;
    s.n_periods = 200;
    s.r = 1;
    s.n_blocks = 20;
    s.block_size = 10;
    s.rho_lo = 0.0;
    s.rho_hi = 0.0;
    s.trials = 50;
    return s;
}

}  // namespace wf
