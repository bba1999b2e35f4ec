#pragma once

#include <string>
#include <vector>

#include "glfm/likelihoods.hpp"
#include "glfm/sampler.hpp"
#include "glfm/tasks.hpp"

namespace fixture {

inline glfm::AttributeSpec spec(const std::string& name, glfm::AttributeKind kind, int cardinality = 0) {
  glfm::AttributeSpec s;
  s.name = name;
  s.kind = kind;
  s.cardinality = cardinality;
  return s;
}

inline glfm::DataMatrix matrix(const Eigen::MatrixXd& cells, std::vector<glfm::AttributeSpec> specs) {
  glfm::DataMatrix m;
  m.cells = cells;
  m.missing = glfm::BoolMatrix::Constant(cells.rows(), cells.cols(), false);
  m.specs = std::move(specs);
  return m;
}

inline glfm::DataMatrix all_missing(Eigen::Index rows, std::vector<glfm::AttributeSpec> specs) {
  const auto cols = static_cast<Eigen::Index>(specs.size());
  glfm::DataMatrix m = matrix(Eigen::MatrixXd::Zero(rows, cols), std::move(specs));
  m.missing.setConstant(true);
  return m;
}

// State with given Z and Y, zero weights and natural parameters rebuilt.
inline glfm::LatentState state(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                               const std::vector<glfm::AttributeSpec>& specs, const glfm::Hyperparams& hp) {
  glfm::LatentState s;
  s.bias = hp.bias;
  glfm::layout_columns(s, specs);
  s.Z = Z;
  s.Y = Y;
  s.B = Eigen::MatrixXd::Zero(Z.cols(), Y.cols());
  s.sigma2 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(specs.size()), hp.sigma_y2);
  s.thresholds.assign(specs.size(), {});
  for (std::size_t d = 0; d < specs.size(); ++d) {
    if (specs[d].kind != glfm::AttributeKind::Ordinal) continue;
    for (int r = 1; r < specs[d].cardinality; ++r) s.thresholds[d].push_back(r - 1.0);
  }
  glfm::rebuild_natural_params(s, hp.sigma_b2);
  return s;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline double p_drift(const glfm::LatentState& s, double sigma_b2) {
  return max_abs(s.P - glfm::recompute_P(s, sigma_b2));
}

inline double lambda_drift(const glfm::LatentState& s) { return max_abs(s.lambda - glfm::recompute_lambda(s)); }

// Generates a heterogeneous table from the model: a bias feature plus
// `k_true` features, one attribute of each kind plus one extra real column.
struct Synthetic {
  glfm::DataMatrix data;
  Eigen::MatrixXd Z;
};

inline Synthetic synthetic_mixed(Eigen::Index N, int k_true, std::uint64_t seed) {
  using glfm::AttributeKind;
  glfm::Rng rng(seed);
  std::vector<glfm::AttributeSpec> specs{spec("real", AttributeKind::Real),
                                         spec("positive", AttributeKind::PositiveReal),
                                         spec("categorical", AttributeKind::Categorical, 4),
                                         spec("ordinal", AttributeKind::Ordinal, 4),
                                         spec("count", AttributeKind::Count),
                                         spec("real2", AttributeKind::Real)};
  const Eigen::Index K = k_true + 1;
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(N, K);
  for (Eigen::Index n = 0; n < N; ++n) {
    Z(n, 0) = 1.0;
    for (Eigen::Index k = 1; k < K; ++k) Z(n, k) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  }
  auto weights = [&](Eigen::Index width) {
    Eigen::MatrixXd B(K, width);
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index c = 0; c < width; ++c) B(k, c) = 2.0 * rng.normal();
    }
    return B;
  };
  Eigen::MatrixXd X(N, 6);
  const Eigen::MatrixXd b_real = weights(1), b_pos = weights(1), b_cat = weights(4), b_ord = weights(1),
                        b_cnt = weights(1), b_real2 = weights(1);
  const std::vector<double> theta{0.0, 1.5, 3.0};
  const glfm::TransformParams positive_map{1.0, 6.0}, count_map{0.5, 3.0};
  for (Eigen::Index n = 0; n < N; ++n) {
    const Eigen::RowVectorXd z = Z.row(n);
    X(n, 0) = z.dot(b_real.col(0)) + 0.3 * rng.normal();
    X(n, 1) = glfm::map_forward(z.dot(b_pos.col(0)) + 0.3 * rng.normal(), positive_map, AttributeKind::PositiveReal);
    Eigen::Index best = 0;
    double top = -glfm::kInf;
    for (Eigen::Index r = 0; r < 4; ++r) {
      const double y = z.dot(b_cat.col(r)) + 0.5 * rng.normal();
      if (y > top) {
        top = y;
        best = r;
      }
    }
    X(n, 2) = static_cast<double>(best + 1);
    const double yo = z.dot(b_ord.col(0)) + 0.5 * rng.normal();
    X(n, 3) = static_cast<double>(1 + std::count_if(theta.begin(), theta.end(), [&](double t) { return t < yo; }));
    X(n, 4) = glfm::map_forward(z.dot(b_cnt.col(0)) + 0.3 * rng.normal(), count_map, AttributeKind::Count);
    X(n, 5) = z.dot(b_real2.col(0)) + 0.3 * rng.normal();
  }
  Synthetic out{matrix(X, std::move(specs)), Z};
  glfm::fit_all_transforms(out.data);
  return out;
}

}  // namespace fixture
