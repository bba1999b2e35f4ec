#pragma once

// Reference computations written without reusing library internals.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oracle {

inline double log_gauss(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
}

// log of the integral over b in R^K (K <= 2) of
//   prod_n N(y_n | z_n b, s2y) prod_k N(b_k | 0, s2b)
// by a trapezoid rule on [-half, half]^K.
inline double log_marginal_grid(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double s2b, double s2y,
                                double half = 12.0, int points = 2401) {
  const int K = static_cast<int>(Z.cols());
  const double h = 2.0 * half / (points - 1);
  auto logf = [&](const Eigen::VectorXd& b) {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) acc += log_gauss(b(k), 0.0, s2b);
    for (Eigen::Index n = 0; n < Z.rows(); ++n) acc += log_gauss(y(n), Z.row(n).dot(b), s2y);
    return acc;
  };
  Eigen::VectorXd b(K);
  std::vector<double> vals;
  if (K == 0) return logf(b);
  if (K == 1) {
    for (int i = 0; i < points; ++i) {
      b(0) = -half + i * h;
      vals.push_back(logf(b) + ((i == 0 || i == points - 1) ? std::log(0.5) : 0.0));
    }
  } else {
    for (int i = 0; i < points; ++i) {
      for (int j = 0; j < points; ++j) {
        b(0) = -half + i * h;
        b(1) = -half + j * h;
        double edge = 0.0;
        if (i == 0 || i == points - 1) edge += std::log(0.5);
        if (j == 0 || j == points - 1) edge += std::log(0.5);
        vals.push_back(logf(b) + edge);
      }
    }
  }
  const double top = *std::max_element(vals.begin(), vals.end());
  double acc = 0.0;
  for (double v : vals) acc += std::exp(v - top);
  return top + std::log(acc) + K * std::log(h);
}

// p(z_nk = 1 | y, rest of Z) with the IBP prior factor m_{-n,k}/N.
inline double flip_probability(Eigen::MatrixXd Z, const Eigen::VectorXd& y, int n, int k, double s2b, double s2y) {
  const double N = static_cast<double>(Z.rows());
  const double m = Z.col(k).sum() - Z(n, k);
  Z(n, k) = 1.0;
  const double l1 = std::log(m / N) + log_marginal_grid(Z, y, s2b, s2y);
  Z(n, k) = 0.0;
  const double l0 = std::log(1.0 - m / N) + log_marginal_grid(Z, y, s2b, s2y);
  return 1.0 / (1.0 + std::exp(l0 - l1));
}

// IBP log probability of the equivalence class of Z (all columns non-empty).
inline double ibp_log_prob(const Eigen::MatrixXd& Z, double alpha) {
  const int N = static_cast<int>(Z.rows());
  std::map<std::string, int> histories;
  double acc = 0.0;
  int kplus = 0;
  for (Eigen::Index k = 0; k < Z.cols(); ++k) {
    std::string key;
    int m = 0;
    for (int n = 0; n < N; ++n) {
      key += Z(n, k) > 0.5 ? '1' : '0';
      m += Z(n, k) > 0.5;
    }
    if (m == 0) continue;
    ++kplus;
    ++histories[key];
    acc += std::lgamma(N - m + 1.0) + std::lgamma(static_cast<double>(m)) - std::lgamma(N + 1.0);
  }
  double harmonic = 0.0;
  for (int i = 1; i <= N; ++i) harmonic += 1.0 / i;
  acc += kplus * std::log(alpha) - alpha * harmonic;
  for (const auto& [key, count] : histories) acc -= std::lgamma(count + 1.0);
  return acc;
}

// Log joint of the linear-Gaussian IBP with pseudo-observations Y and
// observations X = Y + N(0, s2u) noise on the observed cells.
inline double linear_gaussian_log_joint(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Y,
                                        const Eigen::MatrixXd& X,
                                        const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& missing,
                                        double alpha, double s2b, double s2y, double s2u) {
  double acc = ibp_log_prob(Z, alpha);
  for (Eigen::Index k = 0; k < B.rows(); ++k) {
    for (Eigen::Index d = 0; d < B.cols(); ++d) acc += log_gauss(B(k, d), 0.0, s2b);
  }
  const Eigen::MatrixXd mean = Z * B;
  for (Eigen::Index n = 0; n < Y.rows(); ++n) {
    for (Eigen::Index d = 0; d < Y.cols(); ++d) {
      acc += log_gauss(Y(n, d), mean(n, d), s2y);
      if (!missing(n, d)) acc += log_gauss(X(n, d), Y(n, d), s2u);
    }
  }
  return acc;
}

// Frequencies of argmax_r (m_r + sigma * e_r) over `samples` draws.
inline std::vector<double> categorical_monte_carlo(const std::vector<double>& m, double sigma, long samples,
                                                   unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<long> hits(m.size(), 0);
  for (long s = 0; s < samples; ++s) {
    std::size_t best = 0;
    double top = -INFINITY;
    for (std::size_t r = 0; r < m.size(); ++r) {
      const double y = m[r] + sigma * normal(gen);
      if (y > top) {
        top = y;
        best = r;
      }
    }
    ++hits[best];
  }
  std::vector<double> p(m.size());
  for (std::size_t r = 0; r < m.size(); ++r) p[r] = static_cast<double>(hits[r]) / samples;
  return p;
}

// Asymptotic Kolmogorov distribution survival function.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  double acc = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
    acc += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(acc, 0.0, 1.0);
}

// KS statistic of samples against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

inline double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// CDF of N(0,1) restricted to (a, b], using survival functions for the upper tail.
inline double trunc_cdf(double x, double a, double b) {
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  if (a >= 0.0) {
    const double sa = 0.5 * std::erfc(a / std::numbers::sqrt2);
    const double sb = std::isinf(b) ? 0.0 : 0.5 * std::erfc(b / std::numbers::sqrt2);
    const double sx = 0.5 * std::erfc(x / std::numbers::sqrt2);
    return (sa - sx) / (sa - sb);
  }
  const double fa = std::isinf(a) ? 0.0 : phi(a);
  const double fb = std::isinf(b) ? 1.0 : phi(b);
  return (phi(x) - fa) / (fb - fa);
}

}  // namespace oracle
