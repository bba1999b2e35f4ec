#include "glfm/likelihoods.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace glfm {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log Q(x) for large positive x from the asymptotic Mills-ratio series.
double log_sf_asymptotic(double x) {
  const double x2 = x * x;
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) / x2;
    series += term;
  }
  return -0.5 * x2 - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double softplus(double t) { return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// log(e^x - 1) for x > 0.
double log_expm1(double x) { return x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x)); }

}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double normal_log_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * r * r / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double log_normal_sf(double x) {
  if (x > 35.0) return log_sf_asymptotic(x);
  if (x < -5.0) return std::log1p(-normal_cdf(x));
  return std::log(normal_sf(x));
}

double log_normal_cdf(double x) { return log_normal_sf(-x); }

double normal_interval_prob(double a, double b) {
  if (!(a < b)) return 0.0;
  if (a > 0.0) return std::max(0.0, normal_sf(a) - normal_sf(b));
  return std::max(0.0, normal_cdf(b) - normal_cdf(a));
}

double log_normal_interval_prob(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a > 0.0) {
    // Upper tail: Q(a) - Q(b) = Q(a) (1 - Q(b)/Q(a)).
    const double la = log_normal_sf(a);
    const double lb = log_normal_sf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b < 0.0) return log_normal_interval_prob(-b, -a);
  return std::log(normal_interval_prob(a, b));
}

GaussHermite::GaussHermite(int nodes) {
  if (nodes < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix of the
  // physicists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int i = 1; i < nodes; ++i) {
    J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
  nodes_ = kSqrt2 * solver.eigenvalues();
  weights_ = solver.eigenvectors().row(0).transpose().array().square();
  weights_ /= weights_.sum();
}

const GaussHermite& default_quadrature() {
  static const GaussHermite rule(32);
  return rule;
}

double map_forward(double y, const TransformParams& params, AttributeKind kind,
                   std::span<const double> thresholds) {
  switch (kind) {
    case AttributeKind::Real:
      return params.w * y + params.mu;
    case AttributeKind::PositiveReal:
      return softplus(params.w * y + params.mu);
    case AttributeKind::Count:
      return std::floor(softplus(params.w * y + params.mu));
    case AttributeKind::Ordinal: {
      const auto above = std::lower_bound(thresholds.begin(), thresholds.end(), y);
      return static_cast<double>(above - thresholds.begin()) + 1.0;
    }
    case AttributeKind::Categorical:
      break;
  }
  throw std::invalid_argument("map_forward does not handle categorical attributes");
}

double map_inverse(double x, const TransformParams& params, AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Real:
      return (x - params.mu) / params.w;
    case AttributeKind::PositiveReal:
      if (!(x > 0.0)) throw std::domain_error("positive-real inverse map needs x > 0");
      return (log_expm1(x) - params.mu) / params.w;
    case AttributeKind::Count:
      if (x < 0.0) throw std::domain_error("count inverse map needs x >= 0");
      if (x == 0.0) return -kInf;
      return (log_expm1(x) - params.mu) / params.w;
    default:
      break;
  }
  throw std::invalid_argument("map_inverse applies to real, positive-real and count attributes");
}

double map_inverse_jacobian(double x, const TransformParams& params, AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Real:
      return 1.0 / params.w;
    case AttributeKind::PositiveReal:
      if (!(x > 0.0)) throw std::domain_error("positive-real jacobian needs x > 0");
      // e^x / (e^x - 1) = 1 / (1 - e^-x)
      return 1.0 / (params.w * -std::expm1(-x));
    default:
      break;
  }
  throw std::invalid_argument("jacobian applies to continuous attributes");
}

double loglik_continuous(double x, double m, double total_var, const TransformParams& params,
                         AttributeKind kind) {
  if (!(total_var > 0.0)) throw std::invalid_argument("total variance must be positive");
  const double y = map_inverse(x, params, kind);
  return normal_log_pdf(y, m, total_var) + std::log(map_inverse_jacobian(x, params, kind));
}

double prob_categorical(int r, const Eigen::Ref<const Eigen::RowVectorXd>& predictors, double sigma_y,
                        const GaussHermite& quadrature) {
  const auto R = static_cast<int>(predictors.size());
  if (r < 1 || r > R) throw std::out_of_range("category index out of range");
  const double mr = predictors(r - 1);
  return quadrature.expect([&](double u) {
    double prod = 1.0;
    for (int j = 0; j < R; ++j) {
      if (j == r - 1) continue;
      prod *= normal_cdf(u + (mr - predictors(j)) / sigma_y);
    }
    return prod;
  });
}

double prob_categorical(int r, const Eigen::Ref<const Eigen::RowVectorXd>& z,
                        const Eigen::Ref<const Eigen::MatrixXd>& B, double sigma_y,
                        const GaussHermite& quadrature) {
  const Eigen::RowVectorXd predictors = z * B;
  return prob_categorical(r, predictors, sigma_y, quadrature);
}

double prob_ordinal(int r, double m, std::span<const double> thresholds, double sigma_y) {
  const int R = static_cast<int>(thresholds.size()) + 1;
  if (r < 1 || r > R) throw std::out_of_range("ordinal index out of range");
  const double upper = r == R ? kInf : thresholds[r - 1];
  const double lower = r == 1 ? -kInf : thresholds[r - 2];
  return normal_interval_prob((lower - m) / sigma_y, (upper - m) / sigma_y);
}

namespace {
std::pair<double, double> count_bounds(long long x, double m, const TransformParams& params, double sigma_y) {
  if (x < 0) throw std::out_of_range("count must be nonnegative");
  const double lo = map_inverse(static_cast<double>(x), params, AttributeKind::Count);
  const double hi = map_inverse(static_cast<double>(x + 1), params, AttributeKind::Count);
  return {(lo - m) / sigma_y, (hi - m) / sigma_y};
}
}  // namespace

double prob_count(long long x, double m, const TransformParams& params, double sigma_y) {
  const auto [a, b] = count_bounds(x, m, params, sigma_y);
  return normal_interval_prob(a, b);
}

double log_prob_count(long long x, double m, const TransformParams& params, double sigma_y) {
  const auto [a, b] = count_bounds(x, m, params, sigma_y);
  return log_normal_interval_prob(a, b);
}

}  // namespace glfm
