#include "mfgp/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace mfgp {

Dataset::Dataset(Eigen::MatrixXd inputs, Eigen::VectorXd fidelities, Eigen::VectorXd outputs)
    : inputs_(std::move(inputs)),
      fidelities_(std::move(fidelities)),
      outputs_(std::move(outputs)) {
  const Eigen::Index n = inputs_.rows();
  if (n < 2) throw std::invalid_argument("Dataset: needs at least 2 observations");
  if (inputs_.cols() < 1) throw std::invalid_argument("Dataset: needs at least 1 input column");
  if (fidelities_.size() != n || outputs_.size() != n)
    throw std::invalid_argument("Dataset: inputs, fidelities and outputs must have equal length");
  if (!inputs_.allFinite() || !fidelities_.allFinite() || !outputs_.allFinite())
    throw std::invalid_argument("Dataset: all values must be finite");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(fidelities_[i] > 0.0))
      throw std::invalid_argument("Dataset: fidelities must be positive (row " +
                                  std::to_string(i) + ")");

  // Group fidelities into levels; the smallest member of a cluster names it.
  std::vector<double> sorted(fidelities_.data(), fidelities_.data() + n);
  std::sort(sorted.begin(), sorted.end());
  for (double t : sorted) {
    if (levels_.empty() || t - levels_.back().value > kLevelTolerance)
      levels_.push_back({t, 1});
    else
      ++levels_.back().count;
  }
}

int Dataset::level_index(double t) const {
  for (std::size_t k = 0; k < levels_.size(); ++k)
    if (same_level(levels_[k].value, t)) return static_cast<int>(k);
  return -1;
}

Box Dataset::input_box() const {
  return Box{inputs_.colwise().minCoeff(), inputs_.colwise().maxCoeff()};
}

Dataset Dataset::with_outputs(Eigen::VectorXd outputs) const {
  return Dataset(inputs_, fidelities_, std::move(outputs));
}

Dataset Dataset::without_row(Eigen::Index i) const {
  const Eigen::Index n = this->n();
  if (i < 0 || i >= n) throw std::invalid_argument("Dataset::without_row: index out of range");
  Eigen::MatrixXd X(n - 1, dim());
  Eigen::VectorXd t(n - 1), z(n - 1);
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    X.row(r) = inputs_.row(j);
    t[r] = fidelities_[j];
    z[r] = outputs_[j];
    ++r;
  }
  return Dataset(std::move(X), std::move(t), std::move(z));
}

}  // namespace mfgp
