#include "mfgp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace mfgp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

void check_dims(Eigen::Index have, Eigen::Index want, const char* what) {
  if (have != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(have) + " vs " + std::to_string(want) + ")");
}

// Accumulates sum_k inv_rho2[k] * (A_k - B_k)^2 into a fresh n x m matrix.
Eigen::MatrixXd scaled_sqdist(const Eigen::MatrixXd& Xa, const Eigen::MatrixXd& Xb,
                              const Eigen::VectorXd& rho) {
  const Eigen::Index n = Xa.rows(), m = Xb.rows(), d = rho.size();
  Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double inv2 = 1.0 / (rho[k] * rho[k]);
    const auto a = Xa.col(k);
    const auto b = Xb.col(k);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double bj = b[j];
      double* col = D2.col(j).data();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = a[i] - bj;
        col[i] += inv2 * (diff * diff);
      }
    }
  }
  return D2;
}

}  // namespace

double smoothness_value(Smoothness nu) {
  switch (nu) {
    case Smoothness::kHalf: return 0.5;
    case Smoothness::kThreeHalves: return 1.5;
    case Smoothness::kFiveHalves: return 2.5;
  }
  throw std::invalid_argument("smoothness_value: invalid enum");
}

Smoothness smoothness_from_string(const std::string& s) {
  if (s == "1/2" || s == "0.5") return Smoothness::kHalf;
  if (s == "3/2" || s == "1.5") return Smoothness::kThreeHalves;
  if (s == "5/2" || s == "2.5") return Smoothness::kFiveHalves;
  throw std::invalid_argument("unknown Matern smoothness '" + s + "' (use 1/2, 3/2 or 5/2)");
}

std::string to_string(Smoothness nu) {
  switch (nu) {
    case Smoothness::kHalf: return "1/2";
    case Smoothness::kThreeHalves: return "3/2";
    case Smoothness::kFiveHalves: return "5/2";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "two_scale") return Variant::TwoScale;
  if (s == "stationary_joint") return Variant::StationaryJoint;
  if (s == "single_level") return Variant::SingleLevel;
  throw std::invalid_argument("unknown model variant '" + s +
                              "' (use two_scale, stationary_joint or single_level)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::TwoScale: return "two_scale";
    case Variant::StationaryJoint: return "stationary_joint";
    case Variant::SingleLevel: return "single_level";
  }
  return "?";
}

void MaternParams::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("MaternParams: variance must be positive, got " +
                                std::to_string(variance));
  if (lengthscales.size() == 0)
    throw std::invalid_argument("MaternParams: empty lengthscale vector");
  for (Eigen::Index j = 0; j < lengthscales.size(); ++j)
    if (!(lengthscales[j] > 0.0) || !std::isfinite(lengthscales[j]))
      throw std::invalid_argument("MaternParams: lengthscale " + std::to_string(j) +
                                  " must be positive, got " + std::to_string(lengthscales[j]));
}

void TemporalCorrParams::validate() const {
  if (!(exponent > 0.0) || !std::isfinite(exponent))
    throw std::invalid_argument("TemporalCorrParams: exponent must be positive");
  if (!(t_scale > 0.0) || !std::isfinite(t_scale))
    throw std::invalid_argument("TemporalCorrParams: t_scale must be positive");
}

double matern_correlation(double r, Smoothness nu) {
  switch (nu) {
    case Smoothness::kHalf:
      return std::exp(-r);
    case Smoothness::kThreeHalves: {
      const double a = kSqrt3 * r;
      return (1.0 + a) * std::exp(-a);
    }
    case Smoothness::kFiveHalves: {
      const double a = kSqrt5 * r;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  throw std::invalid_argument("matern_correlation: invalid smoothness");
}

double matern(const Eigen::VectorXd& h, const MaternParams& p) {
  p.validate();
  check_dims(h.size(), p.dim(), "matern");
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    const double s = h[j] / p.lengthscales[j];
    r2 += s * s;
  }
  return p.variance * matern_correlation(std::sqrt(r2), p.nu);
}

double temporal_corr(double t, double t2, const TemporalCorrParams& p) {
  p.validate();
  if (!(t > 0.0) || !(t2 > 0.0))
    throw std::invalid_argument("temporal_corr: fidelities must be positive");
  return std::pow(std::min(t, t2) / p.t_scale, p.exponent);
}

Variant KernelSpec::variant() const {
  if (std::holds_alternative<TwoScaleKernel>(k)) return Variant::TwoScale;
  if (std::holds_alternative<StationaryJointKernel>(k)) return Variant::StationaryJoint;
  return Variant::SingleLevel;
}

Eigen::Index KernelSpec::input_dim() const {
  switch (variant()) {
    case Variant::TwoScale: return two_scale().ideal.dim();
    case Variant::StationaryJoint: return stationary_joint().joint.dim() - 1;
    case Variant::SingleLevel: return single_level().spatial.dim();
  }
  return 0;
}

void KernelSpec::validate() const {
  switch (variant()) {
    case Variant::TwoScale: {
      const auto& ts = two_scale();
      ts.ideal.validate();
      ts.discrepancy.validate();
      ts.temporal.validate();
      check_dims(ts.discrepancy.dim(), ts.ideal.dim(), "KernelSpec(two_scale)");
      break;
    }
    case Variant::StationaryJoint: {
      stationary_joint().joint.validate();
      if (stationary_joint().joint.dim() < 2)
        throw std::invalid_argument("KernelSpec(stationary_joint): needs at least 2 coordinates");
      break;
    }
    case Variant::SingleLevel:
      single_level().spatial.validate();
      break;
  }
}

double kernel_eval(const PointXT& a, const PointXT& b, const KernelSpec& spec) {
  check_dims(a.x.size(), spec.input_dim(), "kernel_eval");
  check_dims(b.x.size(), spec.input_dim(), "kernel_eval");
  switch (spec.variant()) {
    case Variant::TwoScale: {
      const auto& ts = spec.two_scale();
      const Eigen::VectorXd h = a.x - b.x;
      return matern(h, ts.ideal) + temporal_corr(a.t, b.t, ts.temporal) * matern(h, ts.discrepancy);
    }
    case Variant::StationaryJoint: {
      Eigen::VectorXd h(a.x.size() + 1);
      h.head(a.x.size()) = a.x - b.x;
      h[a.x.size()] = a.t - b.t;
      return matern(h, spec.stationary_joint().joint);
    }
    case Variant::SingleLevel:
      return matern(a.x - b.x, spec.single_level().spatial);
  }
  throw std::invalid_argument("kernel_eval: invalid spec");
}

namespace detail {

void matern_correlation_from_sq(Eigen::MatrixXd& D2, Smoothness nu) {
  switch (nu) {
    case Smoothness::kHalf:
      D2 = (-D2.array().sqrt()).exp();
      break;
    case Smoothness::kThreeHalves:
      D2 = D2.array().sqrt().unaryExpr([](double r) {
        const double a = kSqrt3 * r;
        return (1.0 + a) * std::exp(-a);
      });
      break;
    case Smoothness::kFiveHalves:
      D2 = D2.array().sqrt().unaryExpr([](double r) {
        const double a = kSqrt5 * r;
        return (1.0 + a + a * a / 3.0) * std::exp(-a);
      });
      break;
  }
}

}  // namespace detail

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& Xa, const Eigen::VectorXd& ta,
                              const Eigen::MatrixXd& Xb, const Eigen::VectorXd& tb,
                              const KernelSpec& spec) {
  spec.validate();
  check_dims(Xa.cols(), spec.input_dim(), "kernel_matrix");
  check_dims(Xb.cols(), spec.input_dim(), "kernel_matrix");
  check_dims(ta.size(), Xa.rows(), "kernel_matrix(t_a)");
  check_dims(tb.size(), Xb.rows(), "kernel_matrix(t_b)");
  const Eigen::Index n = Xa.rows(), m = Xb.rows();

  switch (spec.variant()) {
    case Variant::TwoScale: {
      const auto& ts = spec.two_scale();
      Eigen::MatrixXd K = scaled_sqdist(Xa, Xb, ts.ideal.lengthscales);
      detail::matern_correlation_from_sq(K, ts.ideal.nu);
      K *= ts.ideal.variance;

      Eigen::MatrixXd E = scaled_sqdist(Xa, Xb, ts.discrepancy.lengthscales);
      detail::matern_correlation_from_sq(E, ts.discrepancy.nu);
      E *= ts.discrepancy.variance;

      const double L = ts.temporal.exponent;
      const double log_scale = std::log(ts.temporal.t_scale);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (!(tb[j] > 0.0)) throw std::invalid_argument("kernel_matrix: fidelity must be positive");
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!(ta[i] > 0.0))
            throw std::invalid_argument("kernel_matrix: fidelity must be positive");
          const double r = std::exp(L * (std::log(std::min(ta[i], tb[j])) - log_scale));
          K(i, j) += r * E(i, j);
        }
      }
      return K;
    }
    case Variant::StationaryJoint: {
      const auto& p = spec.stationary_joint().joint;
      Eigen::MatrixXd Ja(n, Xa.cols() + 1), Jb(m, Xb.cols() + 1);
      Ja << Xa, ta;
      Jb << Xb, tb;
      Eigen::MatrixXd K = scaled_sqdist(Ja, Jb, p.lengthscales);
      detail::matern_correlation_from_sq(K, p.nu);
      K *= p.variance;
      return K;
    }
    case Variant::SingleLevel: {
      const auto& p = spec.single_level().spatial;
      Eigen::MatrixXd K = scaled_sqdist(Xa, Xb, p.lengthscales);
      detail::matern_correlation_from_sq(K, p.nu);
      K *= p.variance;
      return K;
    }
  }
  throw std::invalid_argument("kernel_matrix: invalid spec");
}

Eigen::MatrixXd kernel_matrix_sym(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                                  const KernelSpec& spec) {
  return kernel_matrix(X, t, X, t, spec);
}

Eigen::VectorXd kernel_diag(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                            const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = X.rows();
  Eigen::VectorXd out(n);
  switch (spec.variant()) {
    case Variant::TwoScale: {
      const auto& ts = spec.two_scale();
      for (Eigen::Index i = 0; i < n; ++i)
        out[i] = ts.ideal.variance +
                 temporal_corr(t[i], t[i], ts.temporal) * ts.discrepancy.variance;
      break;
    }
    case Variant::StationaryJoint:
      out.setConstant(spec.stationary_joint().joint.variance);
      break;
    case Variant::SingleLevel:
      out.setConstant(spec.single_level().spatial.variance);
      break;
  }
  return out;
}

}  // namespace mfgp
