#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace wf {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

/// Column-named rows of scalars, emitted as CSV or JSON (an array of
/// objects). Both formats print doubles losslessly and byte-stably.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    Table() = default;
    explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}

    void add_row(std::vector<Cell> row);
    std::size_t size() const { return rows.size(); }
    const Cell& at(std::size_t row, const std::string& column) const;
    double number(std::size_t row, const std::string& column) const;
};

std::string format_double(double x);

void write_table_csv(std::ostream& out, const Table& table);
nlohmann::ordered_json table_to_json(const Table& table);
void write_table_json(std::ostream& out, const Table& table);

/// Chooses CSV for a ".csv" extension and JSON otherwise.
void emit_table(const Table& table, const std::filesystem::path& path);

}  // namespace wf
