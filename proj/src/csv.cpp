#include "dsglasso/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace dsglasso::csv {

namespace {

double parse_field(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw InputError("csv: malformed number '" + std::string(field) + "' on line " + std::to_string(line_no));
  }
  if (!std::isfinite(value)) throw InputError("csv: non-finite value on line " + std::to_string(line_no));
  return value;
}

}  // namespace

Eigen::MatrixXd read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      row.push_back(parse_field(rest.substr(0, comma), line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InputError("csv: ragged row on line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("csv: no data");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("csv: cannot open '" + path + "'");
  return read_matrix(in);
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw InputError("csv: cannot format number");
  return std::string(buf, ptr);
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw InputError("csv: cannot write '" + path + "'");
  write_matrix(out, m);
}

DataMatrix read_data_file(const std::string& path) { return DataMatrix(read_matrix_file(path)); }

SymMatrix read_symmetric_file(const std::string& path) { return SymMatrix::from_dense(read_matrix_file(path), 1e-10); }

}  // namespace dsglasso::csv
