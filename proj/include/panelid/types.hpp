#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace panelid {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Bad configuration, malformed probabilities, unsupported model combinations.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// G loses column rank at the requested parameter (B = 1, C = 1, ...).
struct DegenerateModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InadmissibleFunctional : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyIdentifiedSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace panelid
