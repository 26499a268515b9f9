#include "reach/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "reach/errors.hpp"

namespace reach {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_double(values[i]);
  }
  return s;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << m.rows() << ',' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) out << csv_row(m.row(i)) << '\n';
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  while (*begin == ' ' || *begin == '\t') ++begin;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) throw ArgumentError("not a number: '" + s + "'");
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  if (*end != '\0') throw ArgumentError("not a number: '" + s + "'");
  return v;
}

Matrix read_matrix_csv(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw ArgumentError("matrix CSV: missing header");
  const auto header = split(line, ',');
  if (header.size() != 2) throw ArgumentError("matrix CSV: header must be 'n,m'");
  const double rows_d = parse_double(header[0]);
  const double cols_d = parse_double(header[1]);
  if (rows_d < 1 || cols_d < 1 || rows_d != static_cast<std::size_t>(rows_d) ||
      cols_d != static_cast<std::size_t>(cols_d))
    throw ArgumentError("matrix CSV: bad dimensions");
  Matrix m(static_cast<std::size_t>(rows_d), static_cast<std::size_t>(cols_d));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (!next_line()) throw ArgumentError("matrix CSV: too few rows");
    const auto cells = split(line, ',');
    if (cells.size() != m.cols()) throw ArgumentError("matrix CSV: wrong number of columns");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = parse_double(cells[j]);
  }
  return m;
}

}  // namespace reach
