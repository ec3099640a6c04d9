#pragma once

// Plain CSV tables: a header row, numeric rows written with 17 significant
// digits (enough to round-trip doubles) and trailing "# key=value" comments.

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace drg::harness {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> comments;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::out_of_range("no CSV column named '" + name + "'");
  }

  std::string comment(const std::string& key) const {
    for (const auto& [k, v] : comments) {
      if (k == key) return v;
    }
    throw std::out_of_range("no CSV comment '" + key + "'");
  }
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_csv(std::ostream& os, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::invalid_argument("CSV row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
  for (const auto& [k, v] : table.comments) os << "# " << k << '=' << v << '\n';
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, table);
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// strtod accepts nan and inf, which stream extraction does not.
inline double parse_number(const std::string& s, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw std::runtime_error("CSV line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.erase(body.begin());
      const auto eq = body.find('=');
      if (eq == std::string::npos) table.comments.emplace_back(body, "");
      else table.comments.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (!have_header) {
      table.header = detail::split(line);
      have_header = true;
      continue;
    }
    const auto cells = detail::split(line);
    if (cells.size() != table.header.size()) {
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected " +
                               std::to_string(table.header.size()) + " fields, got " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(detail::parse_number(c, lineno));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw std::runtime_error("CSV has no header row");
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace drg::harness
