#include "weakfactor/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <type_traits>

#include "weakfactor/errors.hpp"

namespace wf {

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& cell) {
    if (const auto* i = std::get_if<std::int64_t>(&cell)) {
        return std::to_string(*i);
    }
    if (const auto* d = std::get_if<double>(&cell)) {
        return format_double(*d);
    }
    if (const auto* b = std::get_if<bool>(&cell)) {
        return *b ? "true" : "false";
    }
    const auto& s = std::get<std::string>(cell);
    return csv_escape(s);
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw ValidationError("table row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

const Cell& Table::at(std::size_t row, const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == column) {
            return rows.at(row).at(c);
        }
    }
    throw ValidationError("unknown table column '" + column + "'");
}

double Table::number(std::size_t row, const std::string& column) const {
    const Cell& c = at(row, column);
    if (const auto* d = std::get_if<double>(&c)) {
        return *d;
    }
    if (const auto* i = std::get_if<std::int64_t>(&c)) {
        return static_cast<double>(*i);
    }
    throw ValidationError("table column '" + column + "' is not numeric");
}

void write_table_csv(std::ostream& out, const Table& table) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << (c ? "," : "") << csv_escape(table.columns[c]);
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "," : "") << cell_text(row[c]);
        }
        out << '\n';
    }
}

nlohmann::ordered_json table_to_json(const Table& table) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            std::visit(
                [&](const auto& v) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, double>) {
                        if (!std::isfinite(v)) {
                            obj[table.columns[c]] = nullptr;
                            return;
                        }
                    }
                    obj[table.columns[c]] = v;
                },
                row[c]);
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

void write_table_json(std::ostream& out, const Table& table) {
    out << table_to_json(table).dump(1) << '\n';
}

void emit_table(const Table& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    if (path.extension() == ".csv") {
        write_table_csv(out, table);
    } else {
        write_table_json(out, table);
    }
}

}  // namespace wf
