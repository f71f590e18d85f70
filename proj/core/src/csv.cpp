#include "ecogrow/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ecogrow/errors.hpp"

namespace ecogrow::csv {
namespace {

bool needs_quoting(std::string_view field) {
  return field.find_first_of(",\"\n\r") != std::string_view::npos;
}

std::string quote(std::string_view field) {
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line = 1;
  const std::string& name;

  bool done() const { return pos >= text.size(); }

  // Parses one record; returns false at end of input.
  bool next_record(Row& row) {
    row.fields.clear();
    // skip blank lines
    while (!done() && (text[pos] == '\n' || text[pos] == '\r')) {
      if (text[pos] == '\n') ++line;
      ++pos;
    }
    if (done()) return false;
    row.line = line;
    while (true) {
      row.fields.push_back(parse_field());
      if (done()) break;
      if (text[pos] == ',') {
        ++pos;
        continue;
      }
      if (text[pos] == '\r') ++pos;
      if (!done() && text[pos] == '\n') {
        ++pos;
        ++line;
      }
      break;
    }
    return true;
  }

  std::string parse_field() {
    std::string out;
    if (!done() && text[pos] == '"') {
      ++pos;
      while (true) {
        if (done()) {
          throw ValidationError(name + ": unterminated quoted field starting near line " +
                                std::to_string(line));
        }
        char c = text[pos++];
        if (c == '"') {
          if (!done() && text[pos] == '"') {
            out.push_back('"');
            ++pos;
          } else {
            break;
          }
        } else {
          if (c == '\n') ++line;
          out.push_back(c);
        }
      }
      return out;
    }
    while (!done() && text[pos] != ',' && text[pos] != '\n' && text[pos] != '\r') {
      out.push_back(text[pos++]);
    }
    return out;
  }
};

}  // namespace

Table Table::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_string(buf.str(), path);
}

Table Table::read_string(std::string text, std::string name) {
  Table t;
  t.path_ = std::move(name);
  Parser p{text, 0, 1, t.path_};
  Row row;
  if (!p.next_record(row)) {
    throw ValidationError(t.path_ + ": empty file (missing header row)");
  }
  t.header_ = std::move(row.fields);
  while (p.next_record(row)) {
    if (row.fields.size() != t.header_.size()) {
      throw ValidationError(t.path_ + ":" + std::to_string(row.line) + ": expected " +
                            std::to_string(t.header_.size()) + " fields, got " +
                            std::to_string(row.fields.size()));
    }
    t.rows_.push_back(std::move(row));
    row = Row{};
  }
  return t;
}

std::size_t Table::column(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  throw ValidationError(path_ + ": missing required column '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

struct Writer::Impl {
  std::ofstream out;
  std::string path;
};

Writer::Writer(const std::string& path) : impl_(new Impl{std::ofstream(path, std::ios::binary), path}) {
  if (!impl_->out) {
    std::string msg = "cannot open file for writing: " + path;
    delete impl_;
    impl_ = nullptr;
    throw ValidationError(msg);
  }
}

Writer::~Writer() { delete impl_; }

void Writer::write_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line += needs_quoting(fields[i]) ? quote(fields[i]) : fields[i];
  }
  line.push_back('\n');
  impl_->out.write(line.data(), static_cast<std::streamsize>(line.size()));
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(std::string_view field, const std::string& file, std::size_t line,
                    std::string_view column) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError(file + ":" + std::to_string(line) + ": column '" + std::string(column) +
                          "': not a number: '" + std::string(field) + "'");
  }
  return v;
}

long long parse_int(std::string_view field, const std::string& file, std::size_t line,
                    std::string_view column) {
  long long v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError(file + ":" + std::to_string(line) + ": column '" + std::string(column) +
                          "': not an integer: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace ecogrow::csv
