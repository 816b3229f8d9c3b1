#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfgp {

/// Numerical failure inside a model computation (factorization breakdown,
/// degenerate fit, inconsistent posterior).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input/output files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Absolute tolerance below which two fidelity values name the same level.
inline constexpr double kLevelTolerance = 1e-6;

inline bool same_level(double a, double b) {
  return std::abs(a - b) <= kLevelTolerance;
}

/// Axis-aligned box of input coordinates.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return lower.size(); }
  double width(Eigen::Index j) const { return upper[j] - lower[j]; }

  bool contains(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) return false;
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  /// [0,1]^d.
  static Box unit(Eigen::Index d) {
    return Box{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
  }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() == 0)
      throw std::invalid_argument("Box: lower/upper must be non-empty and of equal size");
    if (!lower.allFinite() || !upper.allFinite())
      throw std::invalid_argument("Box: bounds must be finite");
    for (Eigen::Index j = 0; j < lower.size(); ++j)
      if (!(lower[j] < upper[j]))
        throw std::invalid_argument("Box: lower must be strictly below upper in coordinate " +
                                    std::to_string(j));
  }
};

/// One simulator configuration: input location plus fidelity (mesh) value.
struct PointXT {
  Eigen::VectorXd x;
  double t = 0.0;
};

}  // namespace mfgp
