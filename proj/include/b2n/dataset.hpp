#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "b2n/error.hpp"
#include "b2n/graph_io.hpp"

namespace b2n {

enum class ColumnType { Categorical, Continuous };

struct ColumnSchema {
  ColumnType type = ColumnType::Continuous;
  int cardinality = 0;  // categorical only

  static ColumnSchema categorical(int k) { return {ColumnType::Categorical, k}; }
  static ColumnSchema continuous() { return {ColumnType::Continuous, 0}; }
  bool operator==(const ColumnSchema&) const = default;
};

struct Column {
  std::string name;
  ColumnSchema schema;
  std::vector<int> categories;  // Categorical only
  std::vector<double> reals;    // Continuous only
};

/// Column-major table; immutable once built.
class Dataset {
 public:
  Dataset() = default;

  /// Validates shape, category ranges and name uniqueness.
  explicit Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
    std::map<std::string, int> seen;
    rows_ = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const Column& col = columns_[c];
      if (!seen.emplace(col.name, 0).second) {
        throw Error(ErrorCode::SchemaMismatch, "duplicate column name '" + col.name + "'");
      }
      const std::size_t n = col.schema.type == ColumnType::Categorical ? col.categories.size() : col.reals.size();
      if (c == 0) rows_ = n;
      if (n != rows_) throw Error(ErrorCode::RaggedRow, "column '" + col.name + "' has a different row count");
      if (col.schema.type == ColumnType::Categorical) {
        if (col.schema.cardinality <= 0) {
          throw Error(ErrorCode::SchemaMismatch, "column '" + col.name + "' needs a positive cardinality");
        }
        for (int v : col.categories) {
          if (v < 0 || v >= col.schema.cardinality) {
            throw Error(ErrorCode::SchemaMismatch, "column '" + col.name + "' has a category outside [0, cardinality)");
          }
        }
      }
    }
  }

  std::size_t row_count() const noexcept { return rows_; }
  std::size_t column_count() const noexcept { return columns_.size(); }
  const Column& column(std::size_t c) const { return columns_.at(c); }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (columns_[c].name == name) return c;
    }
    return std::nullopt;
  }

  bool all_categorical() const {
    for (const auto& c : columns_) {
      if (c.schema.type != ColumnType::Categorical) return false;
    }
    return true;
  }

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

struct LoadOptions {
  /// Integer columns with all values in [0, max] and max < this bound are
  /// inferred Categorical(max + 1).
  int max_inferred_cardinality = 32;
  std::map<std::string, ColumnSchema> overrides;
};

/// Parses `{"column": "categorical:K" | "continuous"}`.
inline std::map<std::string, ColumnSchema> parse_schema_overrides(const Json& j) {
  std::map<std::string, ColumnSchema> out;
  if (!j.is_object()) throw Error(ErrorCode::SchemaMismatch, "schema override must be a JSON object");
  for (const auto& [name, value] : j.items()) {
    if (!value.is_string()) throw Error(ErrorCode::SchemaMismatch, "schema for '" + name + "' must be a string");
    const std::string spec = value.get<std::string>();
    if (spec == "continuous") {
      out[name] = ColumnSchema::continuous();
    } else if (spec.rfind("categorical:", 0) == 0) {
      int k = 0;
      const std::string_view tail = std::string_view(spec).substr(12);
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
      if (ec != std::errc() || ptr != tail.data() + tail.size() || k <= 0) {
        throw Error(ErrorCode::SchemaMismatch, "bad cardinality in schema for '" + name + "'");
      }
      out[name] = ColumnSchema::categorical(k);
    } else {
      throw Error(ErrorCode::SchemaMismatch, "unknown schema '" + spec + "' for '" + name + "'");
    }
  }
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline void split_csv_line(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace detail

/// Reads a comma-separated file with a header row. Cells must be numeric;
/// empty cells are rejected.
inline Dataset parse_csv(std::istream& in, const LoadOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) throw Error(ErrorCode::EmptyFile, "empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string_view> cells;
  detail::split_csv_line(line, cells);
  std::vector<std::string> names(cells.begin(), cells.end());
  const std::size_t width = names.size();
  for (const auto& [name, schema] : options.overrides) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorCode::SchemaMismatch, "schema override names unknown column '" + name + "'");
    }
  }

  std::vector<std::vector<double>> values(width);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    detail::split_csv_line(line, cells);
    if (cells.size() != width) {
      throw Error(ErrorCode::RaggedRow, "ragged row at line " + std::to_string(line_no) + ": expected " +
                                            std::to_string(width) + " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string_view cell = cells[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::UnparseableCell, "unparseable cell '" + std::string(cell) + "' at line " +
                                                    std::to_string(line_no) + ", column '" + names[c] + "'");
      }
      values[c].push_back(v);
    }
  }

  std::vector<Column> columns(width);
  for (std::size_t c = 0; c < width; ++c) {
    Column& col = columns[c];
    col.name = names[c];
    std::vector<double>& v = values[c];
    auto override_it = options.overrides.find(col.name);
    ColumnSchema schema;
    if (override_it != options.overrides.end()) {
      schema = override_it->second;
    } else {
      bool integral = true;
      double max_v = -1.0;
      for (double x : v) {
        if (x < 0 || x != std::floor(x)) {
          integral = false;
          break;
        }
        max_v = std::max(max_v, x);
      }
      if (integral && !v.empty() && max_v + 1 <= options.max_inferred_cardinality) {
        schema = ColumnSchema::categorical(static_cast<int>(max_v) + 1);
      } else {
        schema = ColumnSchema::continuous();
      }
    }
    col.schema = schema;
    if (schema.type == ColumnType::Categorical) {
      col.categories.reserve(v.size());
      for (double x : v) {
        if (x != std::floor(x) || x < 0 || x >= schema.cardinality) {
          throw Error(ErrorCode::SchemaMismatch, "column '" + col.name + "' value out of categorical range");
        }
        col.categories.push_back(static_cast<int>(x));
      }
      std::vector<double>().swap(v);
    } else {
      col.reals = std::move(v);
    }
  }
  return Dataset(std::move(columns));
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_csv(in, options);
}

inline std::string to_csv(const Dataset& d) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t c = 0; c < d.column_count(); ++c) out << (c ? "," : "") << d.column(c).name;
  out << '\n';
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    for (std::size_t c = 0; c < d.column_count(); ++c) {
      const Column& col = d.column(c);
      if (c) out << ',';
      if (col.schema.type == ColumnType::Categorical) {
        out << col.categories[r];
      } else {
        out << col.reals[r];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace b2n
