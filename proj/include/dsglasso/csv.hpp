#pragma once

// Header-free, comma-separated, one row per line. Numbers are parsed and
// printed with std::from_chars / std::to_chars, so the decimal point never
// depends on the locale and printed values round-trip exactly.

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "dsglasso/core.hpp"

namespace dsglasso::csv {

Eigen::MatrixXd read_matrix(std::istream& in);
Eigen::MatrixXd read_matrix_file(const std::string& path);

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m);

DataMatrix read_data_file(const std::string& path);
// Throws InputError when the matrix is not symmetric within 1e-10 relative.
SymMatrix read_symmetric_file(const std::string& path);

// Shortest representation that parses back to the same double.
std::string format_double(double x);

}  // namespace dsglasso::csv
