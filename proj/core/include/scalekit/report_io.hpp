#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scalekit/complexity.hpp"
#include "scalekit/scaling.hpp"

namespace scalekit {

enum class TableFormat { Csv, JsonLines };

/// Parses "csv" or "json-lines". Throws LookupError.
TableFormat table_format_from_string(std::string_view name);
std::string_view file_extension(TableFormat format);

using Cell = std::variant<std::string, double, std::int64_t, bool>;

/// A tidy table rendered as CSV (header + rows) or one JSON object per line.
class Table {
 public:
  explicit Table(std::vector<std::string> columns);

  /// Throws std::invalid_argument when the row width does not match.
  void add_row(std::vector<Cell> row);
  std::string render(TableFormat format) const;

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Plain decimal: integral values without exponent or fraction, others in the
/// shortest form that round-trips.
std::string format_number(double v);
std::optional<double> parse_double(std::string_view text);

/// Rows {name, flops, params, acts}: the total under `name`, then one row per
/// breakdown entry under "name/label".
Table complexity_table(const std::string& name, const ComplexityReport& report);

/// Structured form of a report, including its breakdown.
std::string report_to_json(const std::string& name, const ComplexityReport& report);

/// Rows {name, policy, alpha, s, flops, params, acts, quantized}.
Table sweep_table(const std::string& name, const std::vector<ScaledSeries>& series);

}  // namespace scalekit
