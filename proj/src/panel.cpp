#include "weakfactor/panel.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "weakfactor/errors.hpp"

namespace wf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\"");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\"");
    return s.substr(b, e - b + 1);
}

std::string format_value(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

PanelMatrix PanelMatrix::from_values(Matrix values) {
    PanelMatrix p;
    p.unit_labels.reserve(static_cast<std::size_t>(values.rows()));
    for (Index i = 0; i < values.rows(); ++i) {
        p.unit_labels.push_back("u" + std::to_string(i));
    }
    for (Index t = 0; t < values.cols(); ++t) {
        p.time_labels.push_back("t" + std::to_string(t));
    }
    p.missing_mask = values.array().isNaN();
    p.values = std::move(values);
    return p;
}

void PanelMatrix::validate() const {
    if (static_cast<Index>(unit_labels.size()) != values.rows()) {
        throw ValidationError("panel: unit label count does not match rows");
    }
    if (static_cast<Index>(time_labels.size()) != values.cols()) {
        throw ValidationError("panel: time label count does not match columns");
    }
    if (missing_mask.rows() != values.rows() || missing_mask.cols() != values.cols()) {
        throw ValidationError("panel: missing mask shape does not match values");
    }
}

PanelMatrix parse_csv(std::istream& in, bool has_unit_column) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_line(line);
            break;
        }
    }
    if (header.empty()) {
        throw ValidationError("csv: empty input");
    }
    const std::size_t offset = has_unit_column ? 1 : 0;
    if (header.size() <= offset) {
        throw ValidationError("csv: header has no time columns");
    }
    PanelMatrix p;
    for (std::size_t k = offset; k < header.size(); ++k) {
        p.time_labels.push_back(trim(header[k]));
    }
    const std::size_t n_cols = p.time_labels.size();

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError("csv: ragged row at line " + std::to_string(line_no) + " (" +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()) + ")");
        }
        if (has_unit_column) {
            p.unit_labels.push_back(trim(cells[0]));
        } else {
            p.unit_labels.push_back("u" + std::to_string(rows.size()));
        }
        std::vector<double> row(n_cols);
        for (std::size_t k = 0; k < n_cols; ++k) {
            const std::string cell = trim(cells[k + offset]);
            if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
                row[k] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            char* end = nullptr;
            errno = 0;
            const double value = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(value)) {
                throw ValidationError("csv: non-numeric cell '" + cell + "' at line " +
                                      std::to_string(line_no) + ", column " +
                                      std::to_string(k + offset + 1));
            }
            row[k] = value;
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2 || n_cols < 2) {
        throw ValidationError("csv: need at least 2 units and 2 periods");
    }
    p.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(n_cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < n_cols; ++k) {
            p.values(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
        }
    }
    p.missing_mask = p.values.array().isNaN();
    return p;
}

PanelMatrix load_csv(const std::filesystem::path& path, bool has_unit_column) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "'");
    }
    return parse_csv(in, has_unit_column);
}

void write_csv(std::ostream& out, const PanelMatrix& panel, bool with_unit_column) {
    panel.validate();
    if (with_unit_column) {
        out << "unit";
    }
    for (std::size_t k = 0; k < panel.time_labels.size(); ++k) {
        if (with_unit_column || k > 0) {
            out << ',';
        }
        out << panel.time_labels[k];
    }
    out << '\n';
    for (Index i = 0; i < panel.n_units(); ++i) {
        if (with_unit_column) {
            out << panel.unit_labels[static_cast<std::size_t>(i)];
        }
        for (Index t = 0; t < panel.n_periods(); ++t) {
            if (with_unit_column || t > 0) {
                out << ',';
            }
            if (!panel.missing_mask(i, t)) {
                out << format_value(panel.values(i, t));
            }
        }
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const PanelMatrix& panel, bool with_unit_column) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    write_csv(out, panel, with_unit_column);
}

ImputeResult impute_and_filter(const PanelMatrix& panel, double max_missing_frac) {
    panel.validate();
    if (!(max_missing_frac >= 0.0 && max_missing_frac <= 1.0)) {
        throw ValidationError("max_missing_frac must lie in [0, 1]");
    }
    const Index n = panel.n_units();
    const Index t_len = panel.n_periods();
    std::vector<Index> keep;
    ImputeResult res;
    for (Index i = 0; i < n; ++i) {
        const Index missing = panel.missing_mask.row(i).count();
        const double frac = t_len > 0 ? static_cast<double>(missing) / static_cast<double>(t_len) : 1.0;
        if (frac > max_missing_frac || missing == t_len) {
            res.dropped_units.push_back(panel.unit_labels[static_cast<std::size_t>(i)]);
        } else {
            keep.push_back(i);
        }
    }
    if (keep.empty()) {
        throw ValidationError("empty panel: every unit exceeds the missing-value limit");
    }

    PanelMatrix& out = res.panel;
    out.time_labels = panel.time_labels;
    out.values.resize(static_cast<Index>(keep.size()), t_len);
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const Index i = keep[k];
        out.unit_labels.push_back(panel.unit_labels[static_cast<std::size_t>(i)]);
        std::vector<double> observed;
        for (Index t = 0; t < t_len; ++t) {
            if (!panel.missing_mask(i, t)) {
                observed.push_back(panel.values(i, t));
            }
        }
        double median = 0.0;
        if (static_cast<Index>(observed.size()) < t_len) {
            std::sort(observed.begin(), observed.end());
            const std::size_t h = observed.size() / 2;
            median = observed.size() % 2 == 1 ? observed[h] : 0.5 * (observed[h - 1] + observed[h]);
        }
        for (Index t = 0; t < t_len; ++t) {
            out.values(static_cast<Index>(k), t) =
                panel.missing_mask(i, t) ? median : panel.values(i, t);
        }
    }
    out.missing_mask = Mask::Constant(out.values.rows(), t_len, false);
    return res;
}

PanelMatrix slice_periods(const PanelMatrix& panel, Index begin, Index count) {
    panel.validate();
    if (begin < 0 || count < 0 || begin + count > panel.n_periods()) {
        throw ValidationError("slice_periods: range out of bounds");
    }
    PanelMatrix out;
    out.values = panel.values.middleCols(begin, count);
    out.missing_mask = panel.missing_mask.middleCols(begin, count);
    out.unit_labels = panel.unit_labels;
    out.time_labels.assign(panel.time_labels.begin() + begin, panel.time_labels.begin() + begin + count);
    return out;
}

}  // namespace wf
