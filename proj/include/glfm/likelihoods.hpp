#pragma once

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "glfm/data.hpp"

namespace glfm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal helpers. The interval forms stay accurate when both ends
// sit deep in the same tail.
double normal_pdf(double x);
double normal_log_pdf(double x, double mean, double var);
double normal_cdf(double x);
double normal_sf(double x);
double log_normal_cdf(double x);
double log_normal_sf(double x);
// Phi(b) - Phi(a) for a <= b; either end may be infinite.
double normal_interval_prob(double a, double b);
double log_normal_interval_prob(double a, double b);

// Gauss-Hermite rule for expectations under a standard normal.
class GaussHermite {
 public:
  explicit GaussHermite(int nodes = 32);

  template <typename F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes_.size(); ++i) acc += weights_(i) * f(nodes_(i));
    return acc;
  }

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  // Nodes already scaled by sqrt(2) and weights by 1/sqrt(pi).
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

const GaussHermite& default_quadrature();

// Forward map y -> x. Categorical attributes are not handled here.
double map_forward(double y, const TransformParams& params, AttributeKind kind,
                   std::span<const double> thresholds = {});

// Inverse map x -> y for Real, PositiveReal and Count. Count 0 maps to -inf.
double map_inverse(double x, const TransformParams& params, AttributeKind kind);

// |d map_inverse / dx| for continuous kinds.
double map_inverse_jacobian(double x, const TransformParams& params, AttributeKind kind);

// Log density of a continuous observation given the linear predictor m.
double loglik_continuous(double x, double m, double total_var, const TransformParams& params,
                         AttributeKind kind);

// p(x = r) for a categorical attribute, given the R linear predictors
// z * b_r (1-based r). Uses E_u[prod_{j != r} Phi(u + (m_r - m_j) / sigma)]
// with u standard normal.
double prob_categorical(int r, const Eigen::Ref<const Eigen::RowVectorXd>& predictors, double sigma_y,
                        const GaussHermite& quadrature = default_quadrature());
double prob_categorical(int r, const Eigen::Ref<const Eigen::RowVectorXd>& z,
                        const Eigen::Ref<const Eigen::MatrixXd>& B, double sigma_y,
                        const GaussHermite& quadrature = default_quadrature());

// Ordered probit probability; thresholds hold theta_1..theta_{R-1}.
double prob_ordinal(int r, double m, std::span<const double> thresholds, double sigma_y);

double prob_count(long long x, double m, const TransformParams& params, double sigma_y);
double log_prob_count(long long x, double m, const TransformParams& params, double sigma_y);

}  // namespace glfm
