#pragma once

// Typed result tables, RFC-4180 CSV output and parsing, and a JSON provenance sidecar.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "lowmode/errors.hpp"
#include "lowmode/experiments/config.hpp"
#include "lowmode/version.hpp"

namespace lowmode {

enum class ColumnKind { integer, real, text };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::real;
  bool timing = false;  // wall-clock cells are excluded from determinism checks
};

/// Empty cells (monostate) are written as empty CSV fields, e.g. an order on the first grid.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Provenance {
  std::string config_hash;
  std::string config_text;
  std::string version = LOWMODE_VERSION;
  std::string timestamp;
};

class ResultTable {
 public:
  ResultTable() = default;
  ResultTable(std::string experiment, std::vector<Column> columns)
      : experiment_(std::move(experiment)), columns_(std::move(columns)) {}

  const std::string& experiment() const noexcept { return experiment_; }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  Provenance& provenance() noexcept { return provenance_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  std::vector<std::string>& notes() noexcept { return notes_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

  void add_row(std::vector<Cell> row) {
    detail::require(row.size() == columns_.size(), ErrorCategory::invalid_argument,
                    experiment_ + ": row has " + std::to_string(row.size()) + " cells, schema has " +
                        std::to_string(columns_.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (std::holds_alternative<std::monostate>(row[c])) continue;
      const bool ok = (columns_[c].kind == ColumnKind::integer && std::holds_alternative<std::int64_t>(row[c])) ||
                      (columns_[c].kind == ColumnKind::real && std::holds_alternative<double>(row[c])) ||
                      (columns_[c].kind == ColumnKind::text && std::holds_alternative<std::string>(row[c]));
      detail::require(ok, ErrorCategory::invalid_argument, experiment_ + ": cell type mismatch in column '" + columns_[c].name + "'");
    }
    rows_.push_back(std::move(row));
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c)
      if (columns_[c].name == name) return c;
    detail::fail(ErrorCategory::invalid_argument, experiment_ + ": no column '" + name + "'");
  }

  const Cell& at(std::size_t row, const std::string& name) const { return rows_.at(row).at(column_index(name)); }

  double real(std::size_t row, const std::string& name) const {
    const Cell& c = at(row, name);
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    return std::nan("");
  }

  std::int64_t integer(std::size_t row, const std::string& name) const { return std::get<std::int64_t>(at(row, name)); }
  std::string text(std::size_t row, const std::string& name) const { return std::get<std::string>(at(row, name)); }
  bool empty_cell(std::size_t row, const std::string& name) const {
    return std::holds_alternative<std::monostate>(at(row, name));
  }

  /// Values of one column over the rows where `pred(row)` holds.
  template <class Pred>
  std::vector<double> column_values(const std::string& name, Pred pred) const {
    std::vector<double> out;
    for (std::size_t r = 0; r < rows_.size(); ++r)
      if (pred(r)) out.push_back(real(r, name));
    return out;
  }
  std::vector<double> column_values(const std::string& name) const {
    return column_values(name, [](std::size_t) { return true; });
  }

  /// A finished table holds no NaN or infinite real cells.
  void check_complete() const {
    for (std::size_t r = 0; r < rows_.size(); ++r)
      for (std::size_t c = 0; c < columns_.size(); ++c)
        if (const auto* d = std::get_if<double>(&rows_[r][c]); d && !std::isfinite(*d))
          detail::fail(ErrorCategory::evaluation, experiment_ + ": non-finite value in row " + std::to_string(r) +
                                                      ", column '" + columns_[c].name + "'");
  }

 private:
  std::string experiment_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
  Provenance provenance_;
  std::vector<std::string> notes_;
};

/// Raised when an experiment stops part-way; carries the rows finished so far.
class ExperimentFailure : public Error {
 public:
  ExperimentFailure(const Error& cause, ResultTable partial)
      : Error(cause.category(), std::string(cause.what()).substr(std::string(category_name(cause.category())).size() + 2)),
        partial_(std::move(partial)) {}
  const ResultTable& partial() const noexcept { return partial_; }

 private:
  ResultTable partial_;
};

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return "";
        else if constexpr (std::is_same_v<T, std::int64_t>)
          return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>)
          return format_real(v);
        else
          return csv_field(v);
      },
      c);
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Splits RFC-4180 text into records of raw (unquoted) fields; accepts CRLF or LF.
inline std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty() || !rec.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
      }
      rec.clear();
      field.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  require(!quoted, ErrorCategory::invalid_argument, "CSV: unterminated quoted field");
  if (any || !field.empty() || !rec.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace detail

/// CSV text: header row, then one record per row, CRLF line endings, reals as %.16e.
inline std::string to_csv(const ResultTable& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns().size(); ++c) out += (c ? "," : "") + detail::csv_field(t.columns()[c].name);
  out += "\r\n";
  for (const auto& row : t.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + detail::cell_text(row[c]);
    out += "\r\n";
  }
  return out;
}

/// Parses CSV text against a known schema; the header must match the column names.
inline ResultTable parse_csv(const std::string& text, const std::string& experiment, const std::vector<Column>& schema) {
  const auto records = detail::split_csv(text);
  detail::require(!records.empty(), ErrorCategory::invalid_argument, "CSV: missing header row");
  detail::require(records[0].size() == schema.size(), ErrorCategory::invalid_argument, "CSV: header width differs from schema");
  for (std::size_t c = 0; c < schema.size(); ++c)
    detail::require(records[0][c] == schema[c].name, ErrorCategory::invalid_argument,
                    "CSV: header '" + records[0][c] + "' where '" + schema[c].name + "' was expected");
  ResultTable t(experiment, schema);
  for (std::size_t r = 1; r < records.size(); ++r) {
    detail::require(records[r].size() == schema.size(), ErrorCategory::invalid_argument,
                    "CSV: record " + std::to_string(r) + " has the wrong number of fields");
    std::vector<Cell> row;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& f = records[r][c];
      if (f.empty() && schema[c].kind != ColumnKind::text) {
        row.emplace_back(std::monostate{});
      } else if (schema[c].kind == ColumnKind::integer) {
        row.emplace_back(static_cast<std::int64_t>(detail::parse_integer(schema[c].name, f)));
      } else if (schema[c].kind == ColumnKind::real) {
        row.emplace_back(detail::parse_real(schema[c].name, f));
      } else {
        row.emplace_back(f);
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

inline nlohmann::json provenance_json(const ResultTable& t) {
  nlohmann::json j;
  j["experiment"] = t.experiment();
  j["config_hash"] = t.provenance().config_hash;
  j["config"] = t.provenance().config_text;
  j["version"] = t.provenance().version;
  j["timestamp"] = t.provenance().timestamp;
  j["rows"] = t.size();
  nlohmann::json cols = nlohmann::json::array();
  for (const Column& c : t.columns()) {
    const char* kind = c.kind == ColumnKind::integer ? "integer" : c.kind == ColumnKind::real ? "real" : "text";
    cols.push_back({{"name", c.name}, {"kind", kind}, {"timing", c.timing}});
  }
  j["columns"] = cols;
  j["notes"] = t.notes();
  return j;
}

/// Stamps the table with the config hash, canonical config and current UTC time.
inline void stamp(ResultTable& t, const RunConfig& cfg) {
  t.provenance().config_hash = config_hash(cfg);
  t.provenance().config_text = canonical_text(cfg);
  t.provenance().timestamp = detail::utc_timestamp();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  detail::require(static_cast<bool>(out), ErrorCategory::io, "cannot write '" + path + "'");
  out << text;
  out.close();
  detail::require(!out.fail(), ErrorCategory::io, "write to '" + path + "' failed");
}

/// Writes `path` and the sidecar `path.meta.json`.
inline void emit_csv(const ResultTable& t, const std::string& path) {
  write_text_file(path, to_csv(t));
  write_text_file(path + ".meta.json", provenance_json(t).dump(2) + "\n");
}

}  // namespace lowmode
