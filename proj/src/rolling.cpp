#include "weakfactor/rolling.hpp"

#include <cmath>
#include <set>

#include "weakfactor/errors.hpp"
#include "weakfactor/parallel.hpp"
#include "weakfactor/pca.hpp"

namespace wf {

void RunConfig::validate() const {
    if (r < 1) {
        throw ValidationError("rank must be >= 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
    rule.validate();
    if (!(q >= 0.0 && q < 1.0)) {
        throw ValidationError("q must lie in [0, 1)");
    }
    if (window <= r) {
        throw ValidationError("window must exceed the rank");
    }
    if (subset_len <= r || subset_len > window) {
        throw ValidationError("subset length must exceed the rank and fit in the window");
    }
    if (stride < 1) {
        throw ValidationError("stride must be >= 1");
    }
    if (!(max_missing_frac >= 0.0 && max_missing_frac <= 1.0)) {
        throw ValidationError("max missing fraction must lie in [0, 1]");
    }
}

FactorSeries load_factor_series(const std::string& path, bool has_time_column) {
    const PanelMatrix raw = load_csv(path, has_time_column);
    FactorSeries fs;
    fs.values = raw.values;
    fs.names = raw.time_labels;  // header row names the factors
    fs.time_labels = raw.unit_labels;
    return fs;
}

Index rolling_window_count(Index n_periods, Index window, Index stride) {
    if (window > n_periods || stride < 1) {
        return 0;
    }
    return (n_periods - window) / stride + 1;
}

std::vector<WindowReport> rolling_factor_test(const PanelMatrix& panel, const FactorSeries& observed,
                                              const RunConfig& cfg) {
    cfg.validate();
    panel.validate();
    if (observed.n_periods() != panel.n_periods()) {
        throw ValidationError("factor series has " + std::to_string(observed.n_periods()) +
                              " periods but the panel has " + std::to_string(panel.n_periods()));
    }
    if (cfg.window > panel.n_periods()) {
        throw ValidationError("window exceeds the number of periods");
    }
    const Index n_windows = rolling_window_count(panel.n_periods(), cfg.window, cfg.stride);
    const Index k = observed.n_factors();
    std::vector<WindowReport> out(static_cast<std::size_t>(n_windows * k));

    parallel_for(static_cast<std::size_t>(n_windows), cfg.workers, [&](std::size_t w) {
        const Index begin = static_cast<Index>(w) * cfg.stride;
        const Index end = begin + cfg.window;
        for (Index f = 0; f < k; ++f) {
            WindowReport& wr = out[w * static_cast<std::size_t>(k) + static_cast<std::size_t>(f)];
            wr.window = static_cast<Index>(w);
            wr.begin = begin;
            wr.end = end;
            wr.factor = observed.names[static_cast<std::size_t>(f)];
        }
        try {
            const PanelMatrix slice = impute_and_filter(slice_periods(panel, begin, cfg.window),
                                                        cfg.max_missing_frac)
                                          .panel;
            const FactorFit fit = fit_pca(slice, cfg.r);
            const Matrix sigma_tau = thresholded_sigma(cfg.rule)(fit);
            const SubsetSpec s = SubsetSpec::range(cfg.window - cfg.subset_len, cfg.window);
            for (Index f = 0; f < k; ++f) {
                WindowReport& wr = out[w * static_cast<std::size_t>(k) + static_cast<std::size_t>(f)];
                try {
                    const Vector v = observed.values.col(f).segment(end - cfg.subset_len, cfg.subset_len);
                    wr.report = factor_spec_test(fit, sigma_tau, s, v, cfg.alpha);
                    wr.ok = true;
                } catch (const std::exception& e) {
                    wr.error = e.what();
                }
            }
        } catch (const std::exception& e) {
            for (Index f = 0; f < k; ++f) {
                out[w * static_cast<std::size_t>(k) + static_cast<std::size_t>(f)].error = e.what();
            }
        }
    });
    return out;
}

Table rolling_table(const PanelMatrix& panel, const std::vector<WindowReport>& reports) {
    Table t({"window", "begin", "end", "factor", "status", "statistic", "df", "alpha", "critical",
             "p_value", "reject", "error"});
    const double nan = std::nan("");
    for (const auto& wr : reports) {
        const std::string first = panel.time_labels[static_cast<std::size_t>(wr.begin)];
        const std::string last = panel.time_labels[static_cast<std::size_t>(wr.end - 1)];
        if (wr.ok) {
            t.add_row({static_cast<std::int64_t>(wr.window), first, last, wr.factor, std::string("ok"),
                       wr.report.statistic, static_cast<std::int64_t>(wr.report.df), wr.report.alpha,
                       wr.report.critical, wr.report.p_value, wr.report.reject, std::string()});
        } else {
            t.add_row({static_cast<std::int64_t>(wr.window), first, last, wr.factor,
                       std::string("failed"), nan, std::int64_t{0}, nan, nan, nan, false, wr.error});
        }
    }
    return t;
}

Vector scree_report(const PanelMatrix& panel, Index k_max) {
    panel.validate();
    if (panel.has_missing()) {
        throw ValidationError("scree: panel has missing entries; impute first");
    }
    require_finite(panel.values, "panel");
    const Index k_all = std::min(panel.n_units(), panel.n_periods());
    if (k_max < 1 || k_max > k_all) {
        throw ValidationError("scree: k must lie in [1, min(N, T)]");
    }
    const Matrix scaled = panel.values / std::sqrt(static_cast<double>(panel.n_periods()));
    const Vector s = Eigen::BDCSVD<Matrix>(scaled).singularValues();
    return s.head(k_max);
}

Table reports_table(const std::vector<std::pair<std::string, TestReport>>& reports) {
    std::set<std::string> keys;
    for (const auto& [label, rep] : reports) {
        for (const auto& [key, value] : rep.meta) {
            keys.insert(key);
        }
    }
    std::vector<std::string> cols = {"label", "statistic", "df", "alpha", "critical", "p_value", "reject"};
    cols.insert(cols.end(), keys.begin(), keys.end());
    Table t(cols);
    for (const auto& [label, rep] : reports) {
        std::vector<Cell> row = {label,        rep.statistic, static_cast<std::int64_t>(rep.df),
                                 rep.alpha,    rep.critical,  rep.p_value,
                                 rep.reject};
        for (const auto& key : keys) {
            const auto it = rep.meta.find(key);
            row.emplace_back(it == rep.meta.end() ? std::string() : it->second);
        }
        t.add_row(std::move(row));
    }
    return t;
}

}  // namespace wf
