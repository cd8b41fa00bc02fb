#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Core>

#include "nndm/errors.hpp"

namespace nndm {

// Shortest decimal representation that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

inline bool try_parse_double(std::string_view s, double& out) {
  // tolerate surrounding spaces, which to_chars never emits but humans do
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct CsvTable {
  std::vector<std::string> header;  // empty when the file had no header row
  Eigen::MatrixXd values;

  Eigen::Index column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<Eigen::Index>(j);
    return -1;
  }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace detail

// Comma-separated numeric table. A header row is auto-detected: if any field
// of the first non-comment row fails to parse as a number, the row is treated
// as column names. Lines starting with '#' are skipped.
inline CsvTable read_csv(std::istream& in, const std::string& source = "<stream>") {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  bool saw_data = false;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split_fields(line);
    if (!saw_data) {
      bool all_numeric = true;
      double tmp;
      for (const auto& f : fields)
        if (!try_parse_double(f, tmp)) {
          all_numeric = false;
          break;
        }
      if (!all_numeric) {
        for (const auto& f : fields) table.header.emplace_back(f);
        width = static_cast<Eigen::Index>(fields.size());
        saw_data = true;
        continue;
      }
    }
    if (width < 0) width = static_cast<Eigen::Index>(fields.size());
    if (static_cast<Eigen::Index>(fields.size()) != width)
      throw parse_error(source + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(width));
    saw_data = true;
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j)
      if (!try_parse_double(fields[j], row[j]))
        throw parse_error(source + ": line " + std::to_string(line_no) + ", column " +
                          std::to_string(j + 1) + ": not a number: '" + std::string(fields[j]) +
                          "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error(source + ": no data rows");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < width; ++j) table.values(static_cast<Eigen::Index>(i), j) = rows[i][j];
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open file");
  return read_csv(in, path);
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t j = 0; j < fields.size(); ++j) {
    if (j) out << ',';
    out << fields[j];
  }
  out << '\n';
}

}  // namespace nndm
