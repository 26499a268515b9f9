#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reach/matrix.hpp"

namespace reach {

/// Decimal text with 17 significant digits; round-trips every double.
std::string format_double(double v);

/// Joins values as a CSV row (no trailing newline).
std::string csv_row(std::span<const double> values);

/// Matrix CSV: first line `n,m`, then n rows of m comma-separated values.
void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);

std::vector<std::string> split(const std::string& s, char sep);
double parse_double(const std::string& s);

}  // namespace reach
