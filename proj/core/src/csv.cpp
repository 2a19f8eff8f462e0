#include "sccovert/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sccovert {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix, const Eigen::VectorXd& v_tr) {
  const auto n = matrix.cols();
  out << "row";
  for (Eigen::Index j = 0; j < n; ++j) out << ",c" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    out << 'r' << (i + 1);
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_double(matrix(i, j));
    out << '\n';
  }
  out << "v_tr";
  for (Eigen::Index j = 0; j < v_tr.size(); ++j) out << ',' << format_double(v_tr[j]);
  out << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_cell(const std::string& cell) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw std::runtime_error("matrix csv: bad number '" + cell + "'");
  return v;
}

}  // namespace

MatrixCsv read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("matrix csv: empty input");
  const auto header = split(line);
  if (header.empty() || header[0] != "row") throw std::runtime_error("matrix csv: missing header");
  const auto n = static_cast<Eigen::Index>(header.size() - 1);

  MatrixCsv result;
  result.matrix.resize(n, n);
  result.v_tr.resize(n);
  for (Eigen::Index i = 0; i <= n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("matrix csv: truncated");
    const auto cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != n + 1)
      throw std::runtime_error("matrix csv: wrong column count");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = parse_cell(cells[static_cast<std::size_t>(j + 1)]);
      if (i < n) result.matrix(i, j) = v; else result.v_tr[j] = v;
    }
  }
  return result;
}

}  // namespace sccovert
