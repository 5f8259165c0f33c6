#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace mmdq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;
using PointRef = Eigen::Ref<const Eigen::RowVectorXd>;

// Thrown when a (target, kernel) pairing has no closed-form potential/energy.
class unsupported_pairing : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when extending a Gram factor with a column whose Schur complement
// falls below the near-duplicate floor; the caller must skip the candidate.
class near_duplicate_error : public std::runtime_error {
public:
  explicit near_duplicate_error(double schur)
      : std::runtime_error("near-duplicate point: Schur complement " +
                           std::to_string(schur) + " below floor"),
        schur_complement(schur) {}
  double schur_complement;
};

class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace mmdq
