#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "weakfactor/linalg.hpp"

namespace wf {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// N x T panel: rows are units (assets), columns are time periods.
/// Missing cells hold NaN in `values` and are flagged in `missing_mask`.
struct PanelMatrix {
    Matrix values;
    std::vector<std::string> unit_labels;
    std::vector<std::string> time_labels;
    Mask missing_mask;

    /// Wraps a complete matrix with generated labels ("u0", "t0", ...).
    static PanelMatrix from_values(Matrix values);

    Index n_units() const { return values.rows(); }
    Index n_periods() const { return values.cols(); }
    bool has_missing() const { return missing_mask.size() > 0 && missing_mask.any(); }

    /// Throws ValidationError if labels or mask disagree with the value shape.
    void validate() const;
};

/// Rows are units, columns are periods, the header row holds time labels and
/// the optional first column holds unit labels. Empty cells are missing.
PanelMatrix parse_csv(std::istream& in, bool has_unit_column);
PanelMatrix load_csv(const std::filesystem::path& path, bool has_unit_column);

/// Writes values with 17 significant digits; missing cells are left empty.
void write_csv(std::ostream& out, const PanelMatrix& panel, bool with_unit_column = true);
void save_csv(const std::filesystem::path& path, const PanelMatrix& panel,
              bool with_unit_column = true);

struct ImputeResult {
    PanelMatrix panel;
    std::vector<std::string> dropped_units;
};

/// Drops units whose missing fraction exceeds `max_missing_frac`, then fills
/// the remaining gaps of each unit with the median of its observed values.
ImputeResult impute_and_filter(const PanelMatrix& panel, double max_missing_frac = 0.5);

/// Columns [begin, begin + count) with their labels and mask.
PanelMatrix slice_periods(const PanelMatrix& panel, Index begin, Index count);

}  // namespace wf
