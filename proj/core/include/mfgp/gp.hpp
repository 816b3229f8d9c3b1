#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mfgp/dataset.hpp"
#include "mfgp/kernels.hpp"

namespace mfgp {

/// Per-level observation-noise variances, stored on the log scale.
/// An entry of -inf represents an exactly noiseless level (test setups).
class NoiseModel {
 public:
  NoiseModel() = default;

  static NoiseModel from_log_variances(std::vector<std::pair<double, double>> level_logvar);
  static NoiseModel from_variances(const std::vector<std::pair<double, double>>& level_var);
  /// Same variance at every level of the dataset.
  static NoiseModel constant(const Dataset& ds, double variance);

  void set_log_variance(double level, double log_lambda);
  bool has_level(double t) const;
  double log_variance(double t) const;  ///< throws std::invalid_argument if t is unknown
  double variance(double t) const;      ///< exp of the stored entry

  /// Entries sorted by level value.
  const std::vector<std::pair<double, double>>& entries() const { return entries_; }

  /// Throws unless every level of ds has a noise entry.
  void validate_covers(const Dataset& ds) const;

 private:
  std::vector<std::pair<double, double>> entries_;  // (level, ln lambda), sorted
};

/// Lower-triangular Cholesky factor of the noisy Gram matrix, plus the jitter
/// that had to be added to the diagonal (0 when the bare factorization
/// succeeded).
struct GramFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;
  double log_det = 0.0;

  Eigen::Index n() const { return L.rows(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
};

/// K_n[i,j] = k((x_i,t_i),(x_j,t_j)) + 1{i=j} lambda(t_i). No factorization.
Eigen::MatrixXd noisy_gram_matrix(const Dataset& ds, const KernelSpec& kernel,
                                  const NoiseModel& noise);

/// Factorizes the noisy Gram matrix. On failure retries with jitter
/// 1e-10 * mean(diag), escalating x10 at most 3 times, then throws ModelError
/// naming the offending parameters.
GramFactor assemble_gram(const Dataset& ds, const KernelSpec& kernel, const NoiseModel& noise);

struct GlsMean {
  double mean = 0.0;         ///< (1' K^-1 z) / (1' K^-1 1)
  double denominator = 0.0;  ///< 1' K^-1 1
};

/// Generalized-least-squares estimate of the constant trend that was
/// integrated out under its improper uniform prior.
GlsMean fit_gls_mean(const Dataset& ds, const GramFactor& factor);

/// Profile log marginal likelihood of z under the integrated-mean GP:
/// -1/2 [ (n-1) ln 2pi + ln|K_n| + ln(1'K_n^-1 1) + (z-m1)' K_n^-1 (z-m1) ].
double profile_log_likelihood(const GramFactor& factor, const Eigen::VectorXd& z);

/// Immutable fitted GP: data, kernel, noise, Gram factorization and the
/// integrated-mean quantities. Safe to share across threads once built.
class FittedModel {
 public:
  FittedModel(Dataset ds, KernelSpec kernel, NoiseModel noise);

  const Dataset& dataset() const { return dataset_; }
  const KernelSpec& kernel() const { return kernel_; }
  const NoiseModel& noise() const { return noise_; }
  const GramFactor& gram() const { return gram_; }

  double gls_mean() const { return gls_.mean; }
  double gls_denominator() const { return gls_.denominator; }

  /// K^-1 (z - m 1); prediction means are m + k' * weights().
  const Eigen::VectorXd& weights() const { return weights_; }
  /// K^-1 1; feeds the integrated-mean variance correction.
  const Eigen::VectorXd& precision_ones() const { return precision_ones_; }

  double log_likelihood() const { return log_likelihood_; }

 private:
  Dataset dataset_;
  KernelSpec kernel_;
  NoiseModel noise_;
  GramFactor gram_;
  GlsMean gls_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd precision_ones_;
  double log_likelihood_ = 0.0;
};

/// Posterior of the latent mean at each requested point.
struct PredictionResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance_latent;
  /// variance_latent + lambda(t*), when requested.
  std::optional<Eigen::VectorXd> variance_observation;
};

/// Universal-kriging prediction with the constant trend integrated out:
///   mean = m + k' K^-1 (z - m 1)
///   var  = k(s*,s*) - k' K^-1 k + (1 - 1' K^-1 k)^2 / (1' K^-1 1).
/// Requesting observation variance requires lambda at every target level.
PredictionResult predict(const FittedModel& model, const Eigen::MatrixXd& Xs,
                         const Eigen::VectorXd& ts, bool observation_variance = false);

struct LooResult {
  Eigen::VectorXd mean;                 ///< mu_{-i}
  Eigen::VectorXd variance_latent;      ///< latent posterior variance without point i
  Eigen::VectorXd normalized_residual;  ///< (z_i - mu_{-i}) / sqrt(var_latent + lambda(t_i))
};

/// Closed-form leave-one-out under fixed hyperparameters, equivalent to
/// refitting without each point. Requires n >= 3.
LooResult loo_residuals(const FittedModel& model);

/// Joint posterior covariance of the latent mean at the given points,
/// including the GLS-mean uncertainty term.
Eigen::MatrixXd posterior_covariance(const FittedModel& model, const Eigen::MatrixXd& Xs,
                                     const Eigen::VectorXd& ts);

/// Factorized joint posterior at a fixed set of points, ready to draw
/// conditional simulations from. One dense factorization, reused by all
/// replicates; each replicate uses its own seed-derived stream.
class PosteriorSampler {
 public:
  PosteriorSampler(const FittedModel& model, const Eigen::MatrixXd& Xs,
                   const Eigen::VectorXd& ts);

  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::Index n_points() const { return mean_.size(); }

  /// One latent sample path.
  Eigen::VectorXd draw(std::uint64_t seed) const;

  /// One row per seed.
  Eigen::MatrixXd draw_rows(std::span<const std::uint64_t> seeds) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd transform_;  // T with T T' = posterior covariance
};

/// n_sim independent draws from the joint posterior of the latent mean.
/// Row s uses the stream derive_seed(seed, s).
Eigen::MatrixXd conditional_simulate(const FittedModel& model, const Eigen::MatrixXd& Xs,
                                     const Eigen::VectorXd& ts, int n_sim, std::uint64_t seed);

namespace detail {
/// Cholesky with the shared jitter ladder; `ok` is false when every attempt
/// failed. `context` feeds the error message.
struct PsdFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;
  bool ok = false;
};
PsdFactor cholesky_with_jitter(const Eigen::MatrixXd& A);

/// Precomputed pairwise pieces of a training covariance matrix so that a
/// hyperparameter search can rebuild the Gram without touching the inputs.
class GramCache {
 public:
  GramCache(const Eigen::MatrixXd& X, const Eigen::VectorXd& t);
  Eigen::MatrixXd gram(const KernelSpec& spec) const;  // no noise
  Eigen::Index n() const { return n_; }

 private:
  std::vector<Eigen::MatrixXd> coord_sqdiff_;
  Eigen::MatrixXd log_tmin_;
  Eigen::MatrixXd t_sqdiff_;
  Eigen::Index n_ = 0;
};
}  // namespace detail

}  // namespace mfgp
