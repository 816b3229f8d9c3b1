#pragma once

#include <Eigen/Core>
#include <string>
#include <variant>

#include "mfgp/common.hpp"

namespace mfgp {

/// Half-integer Matern smoothness. Restricted to the three values with
/// closed-form correlations so no Bessel evaluation is ever needed.
enum class Smoothness { kHalf, kThreeHalves, kFiveHalves };

double smoothness_value(Smoothness nu);
Smoothness smoothness_from_string(const std::string& s);  // "1/2" | "3/2" | "5/2"
std::string to_string(Smoothness nu);

/// The three model variants: the fidelity-aware sum kernel, a plain
/// stationary kernel over (x, t), and a single-fidelity kernel over x only.
enum class Variant { TwoScale, StationaryJoint, SingleLevel };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

/// Parameters of an anisotropic Matern covariance, one lengthscale per
/// input coordinate.
struct MaternParams {
  double variance = 1.0;           ///< sigma^2, output units squared
  Eigen::VectorXd lengthscales;    ///< rho_j > 0, input units
  Smoothness nu = Smoothness::kFiveHalves;

  Eigen::Index dim() const { return lengthscales.size(); }
  void validate() const;
};

/// Brownian-power fidelity correlation (min{t,t'}/t_scale)^exponent.
/// Valid covariance in t (a monotone time change of Brownian motion);
/// vanishes as the finer of the two fidelities tends to zero.
struct TemporalCorrParams {
  double exponent = 1.0;  ///< L > 0
  double t_scale = 1.0;   ///< normalization constant, > 0

  void validate() const;
};

/// Matern correlation M_nu(r) at scaled distance r >= 0. M_nu(0) = 1.
double matern_correlation(double r, Smoothness nu);

/// Anisotropic Matern covariance of a lag vector h:
/// sigma^2 * M_nu(sqrt(sum_j (h_j / rho_j)^2)).
double matern(const Eigen::VectorXd& h, const MaternParams& p);

/// (min{t,t2}/t_scale)^L for t, t2 > 0.
double temporal_corr(double t, double t2, const TemporalCorrParams& p);

/// Sum kernel for a simulator with a mesh parameter: a stationary part for
/// the ideal (zero-mesh) surface plus a fidelity-damped part for the
/// discretization error. Both spatial parts are anisotropic Matern.
struct TwoScaleKernel {
  MaternParams ideal;           ///< covariance of the ideal surface
  MaternParams discrepancy;     ///< spatial covariance of the mesh-error surface
  TemporalCorrParams temporal;  ///< damping of the error part across fidelities
};

/// Stationary anisotropic Matern over the concatenated (x, t) coordinates.
struct StationaryJointKernel {
  MaternParams joint;  ///< dim = d + 1; the last lengthscale acts on t
};

/// Matern over x only; fidelity is ignored. For single-level data.
struct SingleLevelKernel {
  MaternParams spatial;
};

/// Tagged union of the three kernel variants.
struct KernelSpec {
  std::variant<TwoScaleKernel, StationaryJointKernel, SingleLevelKernel> k;

  Variant variant() const;
  /// Dimension d of the x part expected by this kernel.
  Eigen::Index input_dim() const;
  void validate() const;

  const TwoScaleKernel& two_scale() const { return std::get<TwoScaleKernel>(k); }
  const StationaryJointKernel& stationary_joint() const {
    return std::get<StationaryJointKernel>(k);
  }
  const SingleLevelKernel& single_level() const { return std::get<SingleLevelKernel>(k); }
};

/// k((x,t), (x',t')) for the given spec. Symmetric in its two arguments.
double kernel_eval(const PointXT& a, const PointXT& b, const KernelSpec& spec);

/// Dense covariance between two point batches; entry (i, j) pairs row i of
/// (Xa, ta) with row j of (Xb, tb).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& Xa, const Eigen::VectorXd& ta,
                              const Eigen::MatrixXd& Xb, const Eigen::VectorXd& tb,
                              const KernelSpec& spec);

/// Symmetric covariance of one batch with itself (no noise on the diagonal).
Eigen::MatrixXd kernel_matrix_sym(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                                  const KernelSpec& spec);

/// Prior variances k(s_i, s_i) for a batch.
Eigen::VectorXd kernel_diag(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                            const KernelSpec& spec);

namespace detail {
/// In place: D2 holds squared scaled distances, becomes M_nu(sqrt(D2)).
void matern_correlation_from_sq(Eigen::MatrixXd& D2, Smoothness nu);
}  // namespace detail

}  // namespace mfgp
