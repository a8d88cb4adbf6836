#include "scalekit/report_io.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "scalekit/error.hpp"

namespace scalekit {
namespace {

using Json = nlohmann::ordered_json;

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

std::string csv_escape(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string cell_text(const Cell& c) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return csv_escape(s); }
    std::string operator()(double v) const { return format_number(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(Visitor{}, c);
}

Json number_json(double v) {
  if (std::isfinite(v) && v == std::round(v) && std::abs(v) < 1e15) {
    return Json(static_cast<std::int64_t>(v));
  }
  return Json(v);
}

Json cell_json(const Cell& c) {
  struct Visitor {
    Json operator()(const std::string& s) const { return Json(s); }
    Json operator()(double v) const { return number_json(v); }
    Json operator()(std::int64_t v) const { return Json(v); }
    Json operator()(bool v) const { return Json(v); }
  };
  return std::visit(Visitor{}, c);
}

}  // namespace

TableFormat table_format_from_string(std::string_view name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json-lines") return TableFormat::JsonLines;
  throw LookupError("unknown format '" + std::string(name) + "' (legal: csv, json-lines)");
}

std::string_view file_extension(TableFormat format) {
  return format == TableFormat::Csv ? ".csv" : ".jsonl";
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw std::invalid_argument("table row has " + std::to_string(row.size()) +
                                " cells, expected " + std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(row));
}

std::string Table::render(TableFormat format) const {
  std::string out;
  if (format == TableFormat::Csv) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      out += (i ? "," : "") + csv_escape(columns_[i]);
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
      out += '\n';
    }
    return out;
  }
  for (const auto& row : rows_) {
    Json obj = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[columns_[i]] = cell_json(row[i]);
    out += obj.dump() + '\n';
  }
  return out;
}

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::round(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<std::int64_t>(v));
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

Table complexity_table(const std::string& name, const ComplexityReport& report) {
  Table t({"name", "flops", "params", "acts"});
  t.add_row({name, report.flops, report.params, report.acts});
  for (const auto& e : report.breakdown) {
    t.add_row({name + "/" + e.label, e.flops, e.params, e.acts});
  }
  return t;
}

std::string report_to_json(const std::string& name, const ComplexityReport& report) {
  Json doc;
  doc["name"] = name;
  doc["flops"] = number_json(report.flops);
  doc["params"] = number_json(report.params);
  doc["acts"] = number_json(report.acts);
  Json rows = Json::array();
  for (const auto& e : report.breakdown) {
    Json r;
    r["label"] = e.label;
    r["flops"] = number_json(e.flops);
    r["params"] = number_json(e.params);
    r["acts"] = number_json(e.acts);
    rows.push_back(std::move(r));
  }
  doc["breakdown"] = std::move(rows);
  return doc.dump(2) + "\n";
}

Table sweep_table(const std::string& name, const std::vector<ScaledSeries>& series) {
  Table t({"name", "policy", "alpha", "s", "flops", "params", "acts", "quantized"});
  for (const auto& sr : series) {
    const Cell alpha = sr.policy.alpha ? Cell{*sr.policy.alpha} : Cell{std::string()};
    for (const auto& pt : sr.points) {
      t.add_row({name, sr.policy.name, alpha, pt.s, pt.report.flops, pt.report.params,
                 pt.report.acts, sr.quantized});
    }
  }
  return t;
}

}  // namespace scalekit
