#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace sccovert {

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Matrix export used for R-parameters:
//
//   row,c1,...,cN
//   r1,R11,...,R1N
//   ...
//   rN,RN1,...,RNN
//   v_tr,V1,...,VN
//
// Values in ohms and volts.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix, const Eigen::VectorXd& v_tr);

struct MatrixCsv {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd v_tr;
};

// Inverse of write_matrix_csv. Throws std::runtime_error on malformed input.
MatrixCsv read_matrix_csv(std::istream& in);

}  // namespace sccovert
