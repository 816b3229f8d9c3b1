#include "mfgp/gp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mfgp/rng.hpp"

namespace mfgp {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kVarianceClampTol = 1e-9;

std::string describe_kernel(const KernelSpec& spec) {
  std::ostringstream os;
  os << to_string(spec.variant());
  switch (spec.variant()) {
    case Variant::TwoScale: {
      const auto& ts = spec.two_scale();
      os << "(var_ideal=" << ts.ideal.variance << ", var_disc=" << ts.discrepancy.variance
         << ", L=" << ts.temporal.exponent << ", t_scale=" << ts.temporal.t_scale << ")";
      break;
    }
    case Variant::StationaryJoint:
      os << "(var=" << spec.stationary_joint().joint.variance << ")";
      break;
    case Variant::SingleLevel:
      os << "(var=" << spec.single_level().spatial.variance << ")";
      break;
  }
  return os.str();
}

std::string describe_noise(const NoiseModel& noise) {
  std::ostringstream os;
  os << "lambda={";
  bool first = true;
  for (const auto& [level, logvar] : noise.entries()) {
    if (!first) os << ", ";
    os << level << ": " << std::exp(logvar);
    first = false;
  }
  os << "}";
  return os.str();
}

double clamped_variance(double v) {
  if (v >= 0.0) return v;
  if (v >= -kVarianceClampTol) return 0.0;
  throw ModelError("negative posterior variance " + std::to_string(v) +
                   " beyond the clamping tolerance; model is inconsistent");
}

void check_prediction_points(const FittedModel& model, const Eigen::MatrixXd& Xs,
                             const Eigen::VectorXd& ts) {
  if (Xs.cols() != model.dataset().dim())
    throw std::invalid_argument("prediction points: input dimension mismatch");
  if (ts.size() != Xs.rows())
    throw std::invalid_argument("prediction points: one fidelity per row required");
  for (Eigen::Index i = 0; i < ts.size(); ++i)
    if (!(ts[i] > 0.0) || !std::isfinite(ts[i]))
      throw std::invalid_argument("prediction points: fidelities must be positive and finite");
}

}  // namespace

NoiseModel NoiseModel::from_log_variances(std::vector<std::pair<double, double>> level_logvar) {
  NoiseModel m;
  for (const auto& [level, logvar] : level_logvar) m.set_log_variance(level, logvar);
  return m;
}

NoiseModel NoiseModel::from_variances(const std::vector<std::pair<double, double>>& level_var) {
  NoiseModel m;
  for (const auto& [level, var] : level_var) {
    if (var < 0.0) throw std::invalid_argument("NoiseModel: variance must be >= 0");
    m.set_log_variance(level, std::log(var));
  }
  return m;
}

NoiseModel NoiseModel::constant(const Dataset& ds, double variance) {
  if (variance < 0.0) throw std::invalid_argument("NoiseModel: variance must be >= 0");
  NoiseModel m;
  for (const auto& level : ds.levels()) m.set_log_variance(level.value, std::log(variance));
  return m;
}

void NoiseModel::set_log_variance(double level, double log_lambda) {
  if (!(level > 0.0)) throw std::invalid_argument("NoiseModel: level must be positive");
  if (std::isnan(log_lambda) || log_lambda == std::numeric_limits<double>::infinity())
    throw std::invalid_argument("NoiseModel: log variance must be finite or -inf");
  for (auto& e : entries_) {
    if (same_level(e.first, level)) {
      e.second = log_lambda;
      return;
    }
  }
  entries_.emplace_back(level, log_lambda);
  std::sort(entries_.begin(), entries_.end());
}

bool NoiseModel::has_level(double t) const {
  for (const auto& e : entries_)
    if (same_level(e.first, t)) return true;
  return false;
}

double NoiseModel::log_variance(double t) const {
  for (const auto& e : entries_)
    if (same_level(e.first, t)) return e.second;
  std::ostringstream os;
  os << "noise model has no entry for level t=" << t << "; known levels:";
  for (const auto& e : entries_) os << " " << e.first;
  throw std::invalid_argument(os.str());
}

double NoiseModel::variance(double t) const { return std::exp(log_variance(t)); }

void NoiseModel::validate_covers(const Dataset& ds) const {
  for (const auto& level : ds.levels())
    if (!has_level(level.value))
      throw std::invalid_argument("noise model missing training level t=" +
                                  std::to_string(level.value));
}

Eigen::VectorXd GramFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(rhs);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd GramFactor::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd y = L.triangularView<Eigen::Lower>().solve(rhs);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

namespace detail {

PsdFactor cholesky_with_jitter(const Eigen::MatrixXd& A) {
  const double base = 1e-10 * A.diagonal().mean();
  // Ladder: bare, then 1e-10*mean(diag) escalating x10 at most 3 times.
  const double jitters[5] = {0.0, base, 10.0 * base, 100.0 * base, 1000.0 * base};
  for (double jitter : jitters) {
    Eigen::MatrixXd B = A;
    B.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite() && (L.diagonal().array() > 0.0).all()) return {std::move(L), jitter, true};
    }
    if (!(base > 0.0)) break;  // nothing to escalate
  }
  return {};
}

}  // namespace detail

Eigen::MatrixXd noisy_gram_matrix(const Dataset& ds, const KernelSpec& kernel,
                                  const NoiseModel& noise) {
  noise.validate_covers(ds);
  Eigen::MatrixXd K = kernel_matrix_sym(ds.inputs(), ds.fidelities(), kernel);
  for (Eigen::Index i = 0; i < ds.n(); ++i) K(i, i) += noise.variance(ds.fidelities()[i]);
  return K;
}

GramFactor assemble_gram(const Dataset& ds, const KernelSpec& kernel, const NoiseModel& noise) {
  const Eigen::MatrixXd K = noisy_gram_matrix(ds, kernel, noise);
  detail::PsdFactor f = detail::cholesky_with_jitter(K);
  if (!f.ok)
    throw ModelError("Gram factorization failed even after jitter; ill-conditioned model: " +
                     describe_kernel(kernel) + ", " + describe_noise(noise));
  GramFactor out;
  out.L = std::move(f.L);
  out.jitter = f.jitter;
  out.log_det = 2.0 * out.L.diagonal().array().log().sum();
  return out;
}

GlsMean fit_gls_mean(const Dataset& ds, const GramFactor& factor) {
  if (factor.n() != ds.n()) throw std::invalid_argument("fit_gls_mean: size mismatch");
  const Eigen::VectorXd a = factor.solve(ds.outputs());
  const Eigen::VectorXd b = factor.solve(Eigen::VectorXd::Ones(ds.n()));
  GlsMean gls;
  gls.denominator = b.sum();
  gls.mean = a.sum() / gls.denominator;
  if (!std::isfinite(gls.mean) || !std::isfinite(gls.denominator))
    throw ModelError("GLS mean is not finite");
  return gls;
}

double profile_log_likelihood(const GramFactor& factor, const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  if (factor.n() != n) throw std::invalid_argument("profile_log_likelihood: size mismatch");
  const Eigen::VectorXd a = factor.solve(z);
  const Eigen::VectorXd b = factor.solve(Eigen::VectorXd::Ones(n));
  const double denom = b.sum();
  if (!(denom > 0.0)) throw ModelError("1' K^-1 1 is not positive");
  const double one_a = a.sum();
  const double quad = z.dot(a) - one_a * one_a / denom;
  return -0.5 * (static_cast<double>(n - 1) * std::log(kTwoPi) + factor.log_det +
                 std::log(denom) + quad);
}

FittedModel::FittedModel(Dataset ds, KernelSpec kernel, NoiseModel noise)
    : dataset_(std::move(ds)),
      kernel_(std::move(kernel)),
      noise_(std::move(noise)),
      gram_(assemble_gram(dataset_, kernel_, noise_)) {
  kernel_.validate();
  if (kernel_.input_dim() != dataset_.dim())
    throw std::invalid_argument("FittedModel: kernel dimension does not match data");
  gls_ = fit_gls_mean(dataset_, gram_);
  if (!(gls_.denominator > 0.0))
    throw ModelError("FittedModel: GLS denominator 1'K^-1 1 must be positive");
  const Eigen::VectorXd centered = dataset_.outputs().array() - gls_.mean;
  weights_ = gram_.solve(centered);
  precision_ones_ = gram_.solve(Eigen::VectorXd::Ones(dataset_.n()));
  log_likelihood_ = profile_log_likelihood(gram_, dataset_.outputs());
}

PredictionResult predict(const FittedModel& model, const Eigen::MatrixXd& Xs,
                         const Eigen::VectorXd& ts, bool observation_variance) {
  check_prediction_points(model, Xs, ts);
  const Dataset& ds = model.dataset();
  const Eigen::Index m = Xs.rows();

  const Eigen::MatrixXd Kc =
      kernel_matrix(ds.inputs(), ds.fidelities(), Xs, ts, model.kernel());  // n x m
  const Eigen::MatrixXd V = model.gram().solve(Kc);
  const Eigen::VectorXd kss = kernel_diag(Xs, ts, model.kernel());

  PredictionResult out;
  out.mean = Kc.transpose() * model.weights();
  out.mean.array() += model.gls_mean();

  out.variance_latent.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = Kc.col(j).dot(V.col(j));
    const double u = 1.0 - Kc.col(j).dot(model.precision_ones());
    out.variance_latent[j] = clamped_variance(kss[j] - w + u * u / model.gls_denominator());
  }

  if (observation_variance) {
    Eigen::VectorXd vo(m);
    for (Eigen::Index j = 0; j < m; ++j) vo[j] = out.variance_latent[j] + model.noise().variance(ts[j]);
    out.variance_observation = std::move(vo);
  }
  return out;
}

LooResult loo_residuals(const FittedModel& model) {
  const Dataset& ds = model.dataset();
  const Eigen::Index n = ds.n();
  if (n < 3) throw std::invalid_argument("loo_residuals: needs at least 3 observations");

  // P = K^-1 - (K^-1 1)(K^-1 1)'/(1'K^-1 1) is the integrated-mean precision
  // projection; P z equals the stored weight vector.
  const Eigen::MatrixXd Kinv = model.gram().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd& beta = model.precision_ones();
  const Eigen::VectorXd& alpha = model.weights();
  const double denom = model.gls_denominator();

  LooResult out;
  out.mean.resize(n);
  out.variance_latent.resize(n);
  out.normalized_residual.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p_ii = Kinv(i, i) - beta[i] * beta[i] / denom;
    if (!(p_ii > 0.0))
      throw ModelError("leave-one-out projection has a non-positive diagonal at row " +
                       std::to_string(i));
    const double var_obs = 1.0 / p_ii;
    const double lambda_i = model.noise().variance(ds.fidelities()[i]);
    out.mean[i] = ds.outputs()[i] - alpha[i] / p_ii;
    out.variance_latent[i] = clamped_variance(var_obs - lambda_i);
    out.normalized_residual[i] = alpha[i] / std::sqrt(p_ii);
  }
  return out;
}

Eigen::MatrixXd posterior_covariance(const FittedModel& model, const Eigen::MatrixXd& Xs,
                                     const Eigen::VectorXd& ts) {
  check_prediction_points(model, Xs, ts);
  const Dataset& ds = model.dataset();

  const Eigen::MatrixXd Kss = kernel_matrix_sym(Xs, ts, model.kernel());
  const Eigen::MatrixXd Kc =
      kernel_matrix(ds.inputs(), ds.fidelities(), Xs, ts, model.kernel());  // n x m
  const Eigen::MatrixXd V = model.gram().solve(Kc);
  const Eigen::VectorXd u =
      Eigen::VectorXd::Ones(Xs.rows()) - Kc.transpose() * model.precision_ones();

  Eigen::MatrixXd S = Kss - Kc.transpose() * V;
  S.noalias() += (u * u.transpose()) / model.gls_denominator();
  // kill the asymmetry left by rounding
  S = 0.5 * (S + S.transpose()).eval();
  return S;
}

PosteriorSampler::PosteriorSampler(const FittedModel& model, const Eigen::MatrixXd& Xs,
                                   const Eigen::VectorXd& ts) {
  mean_ = predict(model, Xs, ts).mean;
  Eigen::MatrixXd S = posterior_covariance(model, Xs, ts);

  detail::PsdFactor f = detail::cholesky_with_jitter(S);
  if (f.ok) {
    transform_ = std::move(f.L);
    return;
  }

  // Near-degenerate posterior (e.g. targets on noiseless training points):
  // fall back to a pivoted LDL' and clamp the tiny negative pivots.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success)
    throw ModelError("posterior covariance factorization failed after jitter");
  Eigen::VectorXd D = ldlt.vectorD();
  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  if ((D.array() < -1e-8 * scale).any())
    throw ModelError("posterior covariance has a significantly negative eigenvalue; "
                     "factorization failed after jitter");
  D = D.cwiseMax(0.0);
  Eigen::MatrixXd T = ldlt.matrixL();
  T = T * D.cwiseSqrt().asDiagonal();
  transform_ = ldlt.transpositionsP().transpose() * T;
  if (!transform_.allFinite())
    throw ModelError("posterior covariance factorization produced non-finite values");
}

Eigen::VectorXd PosteriorSampler::draw(std::uint64_t seed) const {
  Rng rng(seed);
  Eigen::VectorXd eta(n_points());
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = rng.normal();
  return mean_ + transform_ * eta;
}

Eigen::MatrixXd PosteriorSampler::draw_rows(std::span<const std::uint64_t> seeds) const {
  const Eigen::Index m = n_points();
  Eigen::MatrixXd eta(m, static_cast<Eigen::Index>(seeds.size()));
  for (Eigen::Index s = 0; s < eta.cols(); ++s) {
    Rng rng(seeds[static_cast<std::size_t>(s)]);
    for (Eigen::Index i = 0; i < m; ++i) eta(i, s) = rng.normal();
  }
  Eigen::MatrixXd draws = transform_ * eta;  // m x n_sim
  draws.colwise() += mean_;
  return draws.transpose();
}

Eigen::MatrixXd conditional_simulate(const FittedModel& model, const Eigen::MatrixXd& Xs,
                                     const Eigen::VectorXd& ts, int n_sim, std::uint64_t seed) {
  if (n_sim < 1) throw std::invalid_argument("conditional_simulate: n_sim must be >= 1");
  if (Xs.rows() < 1) throw std::invalid_argument("conditional_simulate: needs >= 1 point");
  PosteriorSampler sampler(model, Xs, ts);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_sim));
  for (int s = 0; s < n_sim; ++s) seeds[static_cast<std::size_t>(s)] = derive_seed(seed, s);
  return sampler.draw_rows(seeds);
}

namespace detail {

GramCache::GramCache(const Eigen::MatrixXd& X, const Eigen::VectorXd& t) : n_(X.rows()) {
  coord_sqdiff_.reserve(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    Eigen::MatrixXd M(n_, n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i) {
        const double diff = X(i, k) - X(j, k);
        M(i, j) = diff * diff;
      }
    coord_sqdiff_.push_back(std::move(M));
  }
  log_tmin_.resize(n_, n_);
  t_sqdiff_.resize(n_, n_);
  for (Eigen::Index j = 0; j < n_; ++j)
    for (Eigen::Index i = 0; i < n_; ++i) {
      log_tmin_(i, j) = std::log(std::min(t[i], t[j]));
      const double dt = t[i] - t[j];
      t_sqdiff_(i, j) = dt * dt;
    }
}

Eigen::MatrixXd GramCache::gram(const KernelSpec& spec) const {
  const auto accumulate = [&](const Eigen::VectorXd& rho, bool with_t,
                              double rho_t) -> Eigen::MatrixXd {
    Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t k = 0; k < coord_sqdiff_.size(); ++k) {
      const double inv2 = 1.0 / (rho[static_cast<Eigen::Index>(k)] * rho[static_cast<Eigen::Index>(k)]);
      D2.noalias() += inv2 * coord_sqdiff_[k];
    }
    if (with_t) D2.noalias() += (1.0 / (rho_t * rho_t)) * t_sqdiff_;
    return D2;
  };

  switch (spec.variant()) {
    case Variant::TwoScale: {
      const auto& ts = spec.two_scale();
      Eigen::MatrixXd K = accumulate(ts.ideal.lengthscales, false, 0.0);
      matern_correlation_from_sq(K, ts.ideal.nu);
      K *= ts.ideal.variance;

      Eigen::MatrixXd E = accumulate(ts.discrepancy.lengthscales, false, 0.0);
      matern_correlation_from_sq(E, ts.discrepancy.nu);
      E *= ts.discrepancy.variance;

      const double L = ts.temporal.exponent;
      const double log_scale = std::log(ts.temporal.t_scale);
      K.array() += (L * (log_tmin_.array() - log_scale)).exp() * E.array();
      return K;
    }
    case Variant::StationaryJoint: {
      const auto& p = spec.stationary_joint().joint;
      const Eigen::Index d = p.dim() - 1;
      Eigen::MatrixXd K = accumulate(p.lengthscales.head(d), true, p.lengthscales[d]);
      matern_correlation_from_sq(K, p.nu);
      K *= p.variance;
      return K;
    }
    case Variant::SingleLevel: {
      const auto& p = spec.single_level().spatial;
      Eigen::MatrixXd K = accumulate(p.lengthscales, false, 0.0);
      matern_correlation_from_sq(K, p.nu);
      K *= p.variance;
      return K;
    }
  }
  throw std::invalid_argument("GramCache::gram: invalid spec");
}

}  // namespace detail

}  // namespace mfgp
