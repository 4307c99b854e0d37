#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "weakfactor/errors.hpp"
#include "weakfactor/hypothesis.hpp"
#include "weakfactor/inference.hpp"
#include "weakfactor/noise_cov.hpp"
#include "weakfactor/panel.hpp"
#include "weakfactor/parallel.hpp"
#include "weakfactor/pca.hpp"
#include "weakfactor/rolling.hpp"
#include "weakfactor/sim.hpp"
#include "weakfactor/table.hpp"

namespace {

using namespace wf;

struct Common {
    std::string config;
    std::string output;
    Index rank = 1;
    double alpha = 0.05;
    bool no_unit_column = false;
    double max_missing = 0.5;
    std::string rule = "hard";
    double c = 2.0;
    double eps_nt = 0.0;
};

void add_output(CLI::App* cmd, Common& o) {
    cmd->add_option("--output,-o", o.output, "Write CSV (.csv) or JSON (anything else) instead of stdout");
    cmd->add_option("--config", o.config, "Key-value config file; keys mirror long flag names, flags win");
}

void add_panel_opts(CLI::App* cmd, Common& o) {
    cmd->add_flag("--no-unit-column", o.no_unit_column, "Input CSVs have no leading unit-label column");
    cmd->add_option("--max-missing", o.max_missing, "Drop units with a larger missing fraction")
        ->capture_default_str();
}

void add_rank(CLI::App* cmd, Common& o) {
    cmd->add_option("--rank,-r", o.rank, "Number of latent factors")->required();
}

void add_alpha(CLI::App* cmd, Common& o) {
    cmd->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
}

void add_threshold(CLI::App* cmd, Common& o) {
    cmd->add_option("--rule", o.rule, "Thresholding rule")
        ->check(CLI::IsMember({"hard", "soft", "scad"}))
        ->capture_default_str();
    cmd->add_option("--c", o.c, "Threshold constant C")->capture_default_str();
    cmd->add_option("--eps-nt", o.eps_nt, "Threshold rate; 0 selects sqrt(log max(N,T) / T)")
        ->capture_default_str();
}

ThresholdRule rule_of(const Common& o) {
    ThresholdRule rule;
    rule.kind = parse_threshold_kind(o.rule);
    rule.c = o.c;
    rule.eps_nt = o.eps_nt;
    if (rule.c < 0.0 || rule.eps_nt < 0.0) {
        throw ValidationError("threshold constant and rate must be nonnegative");
    }
    return rule;
}

Matrix sigma_for(const FactorFit& fit, const Common& o) {
    return thresholded_sigma(rule_of(o))(fit);
}

PanelMatrix load_panel(const std::string& path, const Common& o) {
    const PanelMatrix raw = load_csv(path, !o.no_unit_column);
    ImputeResult res = impute_and_filter(raw, o.max_missing);
    if (!res.dropped_units.empty()) {
        std::cerr << "note: dropped " << res.dropped_units.size() << " unit(s) from " << path
                  << " with missing fraction above " << o.max_missing << "\n";
    }
    return std::move(res.panel);
}

Index resolve_unit(const PanelMatrix& p, const std::string& spec) {
    for (std::size_t i = 0; i < p.unit_labels.size(); ++i) {
        if (p.unit_labels[i] == spec) {
            return static_cast<Index>(i);
        }
    }
    char* end = nullptr;
    const long idx = std::strtol(spec.c_str(), &end, 10);
    if (!spec.empty() && *end == '\0' && idx >= 0 && idx < p.n_units()) {
        return static_cast<Index>(idx);
    }
    throw ValidationError("unknown unit '" + spec + "' (not a label or an index in range)");
}

SubsetSpec parse_subset(const std::string& text, Index n_periods) {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string a = text.substr(0, colon);
        const std::string b = text.substr(colon + 1);
        try {
            const Index lo = a.empty() ? 0 : std::stol(a);
            const Index hi = b.empty() ? n_periods : std::stol(b);
            return SubsetSpec::range(lo, hi);
        } catch (const std::logic_error&) {
            throw ValidationError("subset must be 'a:b' or a comma-separated index list");
        }
    }
    SubsetSpec s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            s.indices.push_back(std::stol(item));
        } catch (const std::logic_error&) {
            throw ValidationError("subset must be 'a:b' or a comma-separated index list");
        }
    }
    return s;
}

std::vector<std::pair<Index, Index>> parse_pairs(const std::string& text) {
    std::vector<std::pair<Index, Index>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ValidationError("pairs must look like '0:1,0:2'");
        }
        try {
            out.emplace_back(std::stol(item.substr(0, colon)), std::stol(item.substr(colon + 1)));
        } catch (const std::logic_error&) {
            throw ValidationError("pairs must look like '0:1,0:2'");
        }
    }
    return out;
}

void emit(const Table& t, const Common& o) {
    if (o.output.empty()) {
        write_table_json(std::cout, t);
    } else {
        emit_table(t, o.output);
    }
}

Table estimate_table(const PanelMatrix& p, const FactorFit& fit) {
    std::vector<std::string> cols = {"kind", "label"};
    for (Index k = 0; k < fit.rank; ++k) {
        cols.push_back("c" + std::to_string(k + 1));
    }
    Table t(cols);
    auto add = [&](const std::string& kind, const std::string& label, const auto& row) {
        std::vector<Cell> cells = {kind, label};
        for (Index k = 0; k < fit.rank; ++k) {
            cells.emplace_back(static_cast<double>(row(k)));
        }
        t.add_row(std::move(cells));
    };
    add("singular_value", "", fit.svd.sigma);
    for (Index t_ = 0; t_ < fit.n_periods; ++t_) {
        add("factor", p.time_labels[static_cast<std::size_t>(t_)], fit.f_hat.row(t_));
    }
    for (Index i = 0; i < fit.n_units; ++i) {
        add("loading", p.unit_labels[static_cast<std::size_t>(i)], fit.b_hat.row(i));
    }
    return t;
}

struct SimOpts {
    std::string experiment = "coverage";
    double theta = 4.5;
    Index trials = 200;
    std::uint64_t seed = 20240601;
    unsigned workers = 1;
    Index n_units = 300;
    Index n_periods = 200;
    Index rank = 3;
    Index blocks = 20;
    Index block_size = 15;
    double rho_lo = 0.0;
    double rho_hi = 0.5;
    std::vector<double> deltas = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> thetas = {2.0, 4.0, 8.0, 16.0};
    std::string pairs = "0:1,0:2";
    Index subset_len = 12;
    std::vector<double> weights;
    bool duplicate_b2 = true;
};

const std::map<std::string, std::string> kShortAliases = {{"-r", "rank"}, {"-i", "input"}, {"-o", "output"}};

bool flag_given(const std::vector<std::string>& args, const std::string& key) {
    const std::string long_form = "--" + key;
    for (const auto& a : args) {
        if (a == long_form || a.rfind(long_form + "=", 0) == 0) {
            return true;
        }
        const auto it = kShortAliases.find(a);
        if (it != kShortAliases.end() && it->second == key) {
            return true;
        }
    }
    return false;
}

// Expands "--config FILE" into "--key=value" arguments for every key the
// command line does not already set. One file may serve several commands:
// keys owned only by other subcommands are skipped, keys no subcommand knows
// are rejected.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
    std::string path;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) {
            path = args[k + 1];
        } else if (args[k].rfind("--config=", 0) == 0) {
            path = args[k].substr(9);
        }
    }
    if (path.empty()) {
        return args;
    }
    const CLI::App* active = nullptr;
    for (const auto& a : args) {
        for (const CLI::App* sub : app.get_subcommands({})) {
            if (sub->get_name() == a) {
                active = sub;
                break;
            }
        }
        if (active) {
            break;
        }
    }
    auto knows = [](const CLI::App* sub, const std::string& key) {
        return sub->get_option_no_throw("--" + key) != nullptr;
    };
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::FileError& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    for (const auto& item : items) {
        const std::string key = item.name;
        if (key.empty() || key == "config" || key.find('+') != std::string::npos || flag_given(args, key)) {
            continue;
        }
        if (!active || !knows(active, key)) {
            bool elsewhere = false;
            for (const CLI::App* sub : app.get_subcommands({})) {
                elsewhere = elsewhere || knows(sub, key);
            }
            if (!elsewhere) {
                throw ValidationError("config: unknown key '" + key + "'");
            }
            continue;
        }
        std::string value;
        for (std::size_t k = 0; k < item.inputs.size(); ++k) {
            value += (k ? "," : "") + item.inputs[k];
        }
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

int run(int argc, char** argv) {
    CLI::App app{"Estimation and inference for weak latent factor models"};
    app.require_subcommand(1);
    Common o;
    std::string input, factor_series, subset, panel1, panel2, unit, unit_i, unit_j;
    bool no_time_column = false;
    Index window = 60, subset_len = 12, stride = 1, k_max = 10;
    unsigned workers = 1;
    SimOpts so;

    auto* estimate = app.add_subcommand("estimate", "Fit factors and loadings");
    estimate->add_option("--input,-i", input, "Panel CSV")->required();
    add_rank(estimate, o);
    add_panel_opts(estimate, o);
    add_output(estimate, o);

    auto* cov = app.add_subcommand("cov", "Thresholded noise covariance");
    cov->add_option("--input,-i", input, "Panel CSV")->required();
    add_rank(cov, o);
    add_threshold(cov, o);
    add_panel_opts(cov, o);
    add_output(cov, o);

    auto* tfactor = app.add_subcommand("test-factor", "Test whether observed series lie in the factor span");
    tfactor->add_option("--input,-i", input, "Panel CSV")->required();
    tfactor->add_option("--factor-series", factor_series, "Observed factors CSV (rows are periods)")
        ->required();
    tfactor->add_flag("--no-time-column", no_time_column, "Factor CSV has no leading period-label column");
    tfactor->add_option("--subset", subset, "Periods 'a:b' (half-open, 0-based) or 'i,j,k'")->required();
    add_rank(tfactor, o);
    add_alpha(tfactor, o);
    add_threshold(tfactor, o);
    add_panel_opts(tfactor, o);
    add_output(tfactor, o);

    auto* tbreak = app.add_subcommand("test-break", "Test a loading break for one unit between two panels");
    tbreak->add_option("--panel1", panel1, "Panel CSV before the break")->required();
    tbreak->add_option("--panel2", panel2, "Panel CSV after the break")->required();
    tbreak->add_option("--unit", unit, "Unit label or 0-based index")->required();
    add_rank(tbreak, o);
    add_alpha(tbreak, o);
    add_threshold(tbreak, o);
    add_panel_opts(tbreak, o);
    add_output(tbreak, o);

    auto* ttwo = app.add_subcommand("test-twosample", "Test equality of two units' loadings");
    ttwo->add_option("--input,-i", input, "Panel CSV")->required();
    ttwo->add_option("--unit-i", unit_i, "First unit label or index")->required();
    ttwo->add_option("--unit-j", unit_j, "Second unit label or index")->required();
    add_rank(ttwo, o);
    add_alpha(ttwo, o);
    add_threshold(ttwo, o);
    add_panel_opts(ttwo, o);
    add_output(ttwo, o);

    auto* cirisk = app.add_subcommand("ci-risk", "Confidence interval for systematic risk ||b_i||^2");
    cirisk->add_option("--input,-i", input, "Panel CSV")->required();
    cirisk->add_option("--unit", unit, "Unit label or index (default: every unit)");
    add_rank(cirisk, o);
    add_alpha(cirisk, o);
    add_threshold(cirisk, o);
    add_panel_opts(cirisk, o);
    add_output(cirisk, o);

    auto* rolling = app.add_subcommand("rolling", "Rolling-window factor specification tests");
    rolling->add_option("--input,-i", input, "Panel CSV")->required();
    rolling->add_option("--factor-series", factor_series, "Observed factors CSV (rows are periods)")
        ->required();
    rolling->add_flag("--no-time-column", no_time_column, "Factor CSV has no leading period-label column");
    rolling->add_option("--window", window, "Window length")->capture_default_str();
    rolling->add_option("--subset-len", subset_len, "Trailing subset length tested in each window")
        ->capture_default_str();
    rolling->add_option("--stride", stride, "Step between window starts")->capture_default_str();
    rolling->add_option("--workers", workers, "Worker threads")->capture_default_str();
    add_rank(rolling, o);
    add_alpha(rolling, o);
    add_threshold(rolling, o);
    add_panel_opts(rolling, o);
    add_output(rolling, o);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiments on synthetic panels");
    simulate->add_option("--experiment", so.experiment)
        ->check(CLI::IsMember({"coverage", "factor-power", "break-power", "twosample", "perturbation"}))
        ->capture_default_str();
    simulate->add_option("--theta", so.theta, "Signal-to-noise ratio")->capture_default_str();
    simulate->add_option("--trials", so.trials)->capture_default_str();
    simulate->add_option("--seed", so.seed)->capture_default_str();
    simulate->add_option("--workers", so.workers, "Worker threads (results do not depend on it)")
        ->capture_default_str();
    simulate->add_option("--n-units", so.n_units)->capture_default_str();
    simulate->add_option("--n-periods", so.n_periods)->capture_default_str();
    simulate->add_option("--rank,-r", so.rank)->capture_default_str();
    simulate->add_option("--blocks", so.blocks)->capture_default_str();
    simulate->add_option("--block-size", so.block_size)->capture_default_str();
    simulate->add_option("--rho-lo", so.rho_lo)->capture_default_str();
    simulate->add_option("--rho-hi", so.rho_hi)->capture_default_str();
    simulate->add_option("--deltas", so.deltas, "Alternative grid for the power experiments")
        ->delimiter(',')
        ->capture_default_str();
    simulate->add_option("--thetas", so.thetas, "SNR grid for the perturbation experiment")
        ->delimiter(',')
        ->capture_default_str();
    simulate->add_option("--pairs", so.pairs, "Unit pairs for the two-sample experiment")
        ->capture_default_str();
    simulate->add_option("--subset-len", so.subset_len)->capture_default_str();
    simulate->add_option("--weights", so.weights, "Factor weights w (default 1,...,1 with w3 = 0.5)")
        ->delimiter(',');
    simulate->add_option("--duplicate-b2", so.duplicate_b2,
                         "Two-sample experiment: give unit 1 the loadings of unit 0")
        ->capture_default_str();
    add_alpha(simulate, o);
    add_threshold(simulate, o);
    add_output(simulate, o);

    auto* scree = app.add_subcommand("scree", "Leading singular values of the scaled panel");
    scree->add_option("--input,-i", input, "Panel CSV")->required();
    scree->add_option("--k", k_max, "Number of values")->capture_default_str();
    add_panel_opts(scree, o);
    add_output(scree, o);

    try {
        std::vector<std::string> args = expand_config(std::vector<std::string>(argv + 1, argv + argc), app);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (estimate->parsed()) {
        const PanelMatrix p = load_panel(input, o);
        emit(estimate_table(p, fit_pca(p, o.rank)), o);
    } else if (cov->parsed()) {
        const PanelMatrix p = load_panel(input, o);
        const Matrix s = sigma_for(fit_pca(p, o.rank), o);
        std::vector<std::string> cols = {"unit"};
        cols.insert(cols.end(), p.unit_labels.begin(), p.unit_labels.end());
        Table t(cols);
        for (Index i = 0; i < s.rows(); ++i) {
            std::vector<Cell> row = {p.unit_labels[static_cast<std::size_t>(i)]};
            for (Index j = 0; j < s.cols(); ++j) {
                row.emplace_back(s(i, j));
            }
            t.add_row(std::move(row));
        }
        emit(t, o);
    } else if (tfactor->parsed()) {
        const PanelMatrix p = load_panel(input, o);
        const FactorSeries fs = load_factor_series(factor_series, !no_time_column);
        if (fs.n_periods() != p.n_periods()) {
            throw ValidationError("factor series and panel have different numbers of periods");
        }
        const FactorFit fit = fit_pca(p, o.rank);
        const Matrix s = sigma_for(fit, o);
        const SubsetSpec sub = parse_subset(subset, p.n_periods());
        sub.validate(p.n_periods());
        std::vector<std::pair<std::string, TestReport>> reports;
        for (Index k = 0; k < fs.n_factors(); ++k) {
            Vector v(sub.size());
            for (Index q = 0; q < sub.size(); ++q) {
                v(q) = fs.values(sub.indices[static_cast<std::size_t>(q)], k);
            }
            reports.emplace_back(fs.names[static_cast<std::size_t>(k)],
                                 factor_spec_test(fit, s, sub, v, o.alpha));
        }
        emit(reports_table(reports), o);
    } else if (tbreak->parsed()) {
        const PanelMatrix raw1 = load_csv(panel1, !o.no_unit_column);
        const PanelMatrix raw2 = load_csv(panel2, !o.no_unit_column);
        if (raw1.unit_labels != raw2.unit_labels) {
            throw ValidationError("the two panels must list the same units in the same order");
        }
        // Impute the merged panel so both periods keep the same units.
        PanelMatrix merged;
        merged.values.resize(raw1.n_units(), raw1.n_periods() + raw2.n_periods());
        merged.values << raw1.values, raw2.values;
        merged.missing_mask.resize(merged.values.rows(), merged.values.cols());
        merged.missing_mask << raw1.missing_mask, raw2.missing_mask;
        merged.unit_labels = raw1.unit_labels;
        merged.time_labels = raw1.time_labels;
        merged.time_labels.insert(merged.time_labels.end(), raw2.time_labels.begin(), raw2.time_labels.end());
        const PanelMatrix full = impute_and_filter(merged, o.max_missing).panel;
        const Index i = resolve_unit(full, unit);
        const TestReport rep = structural_break_test(
            slice_periods(full, 0, raw1.n_periods()), slice_periods(full, raw1.n_periods(), raw2.n_periods()),
            o.rank, thresholded_sigma(rule_of(o)), i, o.alpha);
        emit(reports_table({{full.unit_labels[static_cast<std::size_t>(i)], rep}}), o);
    } else if (ttwo->parsed()) {
        const PanelMatrix p = load_panel(input, o);
        const Index i = resolve_unit(p, unit_i);
        const Index j = resolve_unit(p, unit_j);
        const FactorFit fit = fit_pca(p, o.rank);
        const TestReport rep = two_sample_test(fit, sigma_for(fit, o), i, j, o.alpha);
        emit(reports_table({{p.unit_labels[static_cast<std::size_t>(i)] + "|" +
                                 p.unit_labels[static_cast<std::size_t>(j)],
                             rep}}),
             o);
    } else if (cirisk->parsed()) {
        const PanelMatrix p = load_panel(input, o);
        const FactorFit fit = fit_pca(p, o.rank);
        const Matrix s = sigma_for(fit, o);
        Table t({"unit", "estimate", "se", "lo", "hi", "alpha"});
        std::vector<Index> units;
        if (unit.empty()) {
            for (Index i = 0; i < p.n_units(); ++i) {
                units.push_back(i);
            }
        } else {
            units.push_back(resolve_unit(p, unit));
        }
        for (Index i : units) {
            const Interval ci = systemic_risk_ci(fit, s, i, o.alpha);
            t.add_row({p.unit_labels[static_cast<std::size_t>(i)], fit.b_hat.row(i).squaredNorm(),
                       systemic_risk_se(fit, s, i), ci.lo, ci.hi, o.alpha});
        }
        emit(t, o);
    } else if (rolling->parsed()) {
        const PanelMatrix p = load_csv(input, !o.no_unit_column);
        const FactorSeries fs = load_factor_series(factor_series, !no_time_column);
        RunConfig cfg;
        cfg.r = o.rank;
        cfg.alpha = o.alpha;
        cfg.rule = rule_of(o);
        cfg.window = window;
        cfg.subset_len = subset_len;
        cfg.stride = stride;
        cfg.max_missing_frac = o.max_missing;
        cfg.workers = workers;
        const auto reports = rolling_factor_test(p, fs, cfg);
        emit(rolling_table(p, reports), o);
    } else if (simulate->parsed()) {
        SimScenario scn;
        scn.n_units = so.n_units;
        scn.n_periods = so.n_periods;
        scn.r = so.rank;
        scn.n_blocks = so.blocks;
        scn.block_size = so.block_size;
        scn.rho_lo = so.rho_lo;
        scn.rho_hi = so.rho_hi;
        scn.theta_target = so.theta;
        scn.trials = so.trials;
        scn.seed = so.seed;
        scn.rule = rule_of(o);
        if (so.experiment == "coverage") {
            emit(run_coverage(scn, o.alpha, so.workers).to_table(), o);
        } else if (so.experiment == "factor-power") {
            FactorShift fs;
            fs.subset_len = so.subset_len;
            if (!so.weights.empty()) {
                fs.w = Eigen::Map<const Vector>(so.weights.data(), static_cast<Index>(so.weights.size()));
            } else {
                fs.w = Vector::Ones(scn.r);
                if (scn.r >= 3) {
                    fs.w(2) = 0.5;
                }
            }
            scn.alternative = fs;
            emit(run_factor_power(scn, o.alpha, so.deltas, so.workers).to_table(), o);
        } else if (so.experiment == "break-power") {
            BetaBreak bb;
            bb.t1 = scn.n_periods / 2;
            bb.t2 = scn.n_periods - bb.t1;
            scn.alternative = bb;
            emit(run_break_power(scn, o.alpha, so.deltas, so.workers).to_table(), o);
        } else if (so.experiment == "twosample") {
            scn.duplicate_b2 = so.duplicate_b2;
            emit(run_twosample(scn, o.alpha, parse_pairs(so.pairs), so.workers).to_table(), o);
        } else {
            emit(run_perturbation(scn, so.thetas, so.workers).to_table(), o);
        }
    } else if (scree->parsed()) {
        const PanelMatrix p = load_panel(input, o);
        const Vector s = scree_report(p, std::min<Index>(k_max, std::min(p.n_units(), p.n_periods())));
        Table t({"k", "singular_value", "eigenvalue"});
        for (Index k = 0; k < s.size(); ++k) {
            t.add_row({static_cast<std::int64_t>(k + 1), s(k), s(k) * s(k)});
        }
        emit(t, o);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const wf::DegenerateError& e) {
        std::cerr << "numerical degeneracy: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
