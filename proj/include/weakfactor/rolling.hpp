#pragma once

#include <string>
#include <vector>

#include "weakfactor/hypothesis.hpp"
#include "weakfactor/noise_cov.hpp"
#include "weakfactor/panel.hpp"
#include "weakfactor/table.hpp"

namespace wf {

/// Settings shared by the data-facing commands.
struct RunConfig {
    Index r = 1;
    double alpha = 0.05;
    ThresholdRule rule;  // eps_nt <= 0 selects the defaults for each fitted panel
    double q = 0.0;
    Index window = 60;
    Index subset_len = 12;
    Index stride = 1;
    double max_missing_frac = 0.5;
    unsigned workers = 1;

    void validate() const;
};

/// Observed factor series: T rows (periods) by K named columns.
struct FactorSeries {
    Matrix values;
    std::vector<std::string> names;
    std::vector<std::string> time_labels;

    Index n_periods() const { return values.rows(); }
    Index n_factors() const { return values.cols(); }
};

/// Reads a CSV whose rows are periods and whose columns are factors; the
/// first column holds period labels when `has_time_column` is set.
FactorSeries load_factor_series(const std::string& path, bool has_time_column);

struct WindowReport {
    Index window = 0;
    Index begin = 0;  // first period of the window
    Index end = 0;    // one past the last period
    std::string factor;
    bool ok = false;
    std::string error;
    TestReport report;
};

/// Number of windows a sweep visits: max(0, floor((T - window) / stride) + 1).
Index rolling_window_count(Index n_periods, Index window, Index stride);

/// For each window start: slice, impute, fit, threshold, and test every
/// observed factor over the window's trailing subset_len periods. A window
/// that fails is reported with its error and does not stop the sweep.
std::vector<WindowReport> rolling_factor_test(const PanelMatrix& panel, const FactorSeries& observed,
                                              const RunConfig& cfg);

Table rolling_table(const PanelMatrix& panel, const std::vector<WindowReport>& reports);

/// Leading k singular values of T^{-1/2} X.
Vector scree_report(const PanelMatrix& panel, Index k_max);

/// One row per report: label, statistic, df, alpha, critical, p_value,
/// reject, then the union of meta keys in sorted order.
Table reports_table(const std::vector<std::pair<std::string, TestReport>>& reports);

}  // namespace wf
