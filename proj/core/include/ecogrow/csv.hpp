#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecogrow::csv {

// Minimal CSV support: UTF-8, comma separator, first row is the header.
// Fields containing commas, quotes or newlines are double-quoted.

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line of the row start in the source file
};

class Table {
 public:
  static Table read_file(const std::string& path);
  static Table read_string(std::string text, std::string name = "<string>");

  const std::string& path() const { return path_; }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }

  // Index of a named header column; throws ValidationError naming the file.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;

 private:
  std::string path_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

class Writer {
 public:
  explicit Writer(const std::string& path);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void write_row(const std::vector<std::string>& fields);

 private:
  struct Impl;
  Impl* impl_;
};

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);

// Parses a required double cell; throws ValidationError reporting file, line
// and column on failure.
double parse_double(std::string_view field, const std::string& file, std::size_t line,
                    std::string_view column);

// Parses a required integer cell with the same error reporting.
long long parse_int(std::string_view field, const std::string& file, std::size_t line,
                    std::string_view column);

}  // namespace ecogrow::csv
