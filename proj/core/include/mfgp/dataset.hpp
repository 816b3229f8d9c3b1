#pragma once

#include <Eigen/Core>
#include <vector>

#include "mfgp/common.hpp"

namespace mfgp {

/// One distinct fidelity value and how many observations it carries.
struct LevelInfo {
  double value = 0.0;
  Eigen::Index count = 0;
};

/// Immutable training data for the multi-fidelity model: inputs, fidelities
/// and observed outputs. Distinct fidelity levels are grouped on construction
/// with kLevelTolerance.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd inputs, Eigen::VectorXd fidelities, Eigen::VectorXd outputs);

  Eigen::Index n() const { return inputs_.rows(); }
  Eigen::Index dim() const { return inputs_.cols(); }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& fidelities() const { return fidelities_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }

  /// Distinct fidelity values, ascending, with per-level counts.
  const std::vector<LevelInfo>& levels() const { return levels_; }

  /// Largest fidelity value (the coarsest mesh); default kernel t_scale.
  double max_fidelity() const { return levels_.back().value; }

  /// Index into levels() of the level containing t, or -1.
  int level_index(double t) const;

  /// Per-coordinate bounding box of the inputs.
  Box input_box() const;

  /// Same inputs/fidelities with replaced outputs.
  Dataset with_outputs(Eigen::VectorXd outputs) const;

  /// Copy with row i removed (n must stay >= 2).
  Dataset without_row(Eigen::Index i) const;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd fidelities_;
  Eigen::VectorXd outputs_;
  std::vector<LevelInfo> levels_;
};

}  // namespace mfgp
