#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "glfm/data.hpp"
#include "glfm/random.hpp"

namespace glfm {

enum class BirthMode {
  // k_new drawn from Poisson(alpha/N) x collapsed likelihood over {0..max_births}.
  TruncatedPosterior,
  // k_new drawn from Poisson(alpha/N) alone.
  PriorOnly,
};

struct Hyperparams {
  double alpha = 5.0;
  double sigma_b2 = 1.0;
  double sigma_y2 = 1.0;
  double sigma_u2 = 0.01;
  double sigma_theta2 = 1.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  int k_max = 50;
  int k_init = 2;
  bool bias = false;
  bool sample_variance = false;
  int iterations = 1000;
  int burn_in = 200;
  std::uint64_t seed = 0;
  BirthMode birth_mode = BirthMode::TruncatedPosterior;
  int max_births = 3;

  // Throws std::invalid_argument on any violated constraint.
  void validate() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One sample of every latent variable. Pseudo-observations, weights and
// natural means of all attributes are stored side by side; `offsets[d]` to
// `offsets[d + 1]` is the column range of attribute d.
struct LatentState {
  RowMatrix Z;             // N x K binary features
  Eigen::MatrixXd B;       // K x S weights
  RowMatrix Y;             // N x S pseudo-observations
  std::vector<std::vector<double>> thresholds;  // per attribute; ordinal only
  Eigen::VectorXd sigma2;  // per-attribute pseudo-observation variance
  Eigen::MatrixXd P;       // Z'Z + I / sigma_B^2
  Eigen::MatrixXd lambda;  // Z'Y
  Eigen::VectorXd counts;  // column sums of Z

  std::vector<Eigen::Index> offsets;
  std::vector<int> column_dim;         // attribute owning each pseudo column
  std::vector<bool> reference_column;  // categorical column pinned to zero weight
  bool bias = false;
  std::vector<bool> pinned;  // rows whose non-bias features stay off

  // P^-1 and P^-1 lambda, valid while !cache_stale.
  Eigen::MatrixXd P_inv;
  Eigen::MatrixXd post_mean;
  bool cache_stale = true;

  Eigen::Index rows() const { return Z.rows(); }
  Eigen::Index num_features() const { return Z.cols(); }
  Eigen::Index num_dims() const { return static_cast<Eigen::Index>(offsets.size()) - 1; }
  Eigen::Index first_free_feature() const { return bias ? 1 : 0; }
  Eigen::Index width(Eigen::Index d) const { return offsets[d + 1] - offsets[d]; }
  // Non-empty columns of Z, the bias column included.
  int active_features() const;

  auto B_block(Eigen::Index d) { return B.middleCols(offsets[d], width(d)); }
  auto B_block(Eigen::Index d) const { return B.middleCols(offsets[d], width(d)); }
  auto Y_block(Eigen::Index d) { return Y.middleCols(offsets[d], width(d)); }
  auto Y_block(Eigen::Index d) const { return Y.middleCols(offsets[d], width(d)); }
  auto lambda_block(Eigen::Index d) const { return lambda.middleCols(offsets[d], width(d)); }
};

// Column layout (offsets, owners, scoring mask) for a set of attributes.
void layout_columns(LatentState& state, const std::vector<AttributeSpec>& specs);

LatentState init_state(Rng& rng, const DataMatrix& data, const Hyperparams& hp,
                       const std::vector<bool>& pinned = {});

Eigen::MatrixXd recompute_P(const LatentState& state, double sigma_b2);
Eigen::MatrixXd recompute_lambda(const LatentState& state);
// Rebuilds P, lambda and counts from Z and Y.
void rebuild_natural_params(LatentState& state, double sigma_b2);
void refresh_cache(LatentState& state);

// p(z_nk = 1 | Y, Z without entry nk), the conditional that sample_z_row draws from.
double activation_probability(const LatentState& state, const Hyperparams& hp, Eigen::Index n,
                              Eigen::Index k);
// Same quantity with the collapsed predictive written as mean z P lambda and
// variance z P z' + sigma^2, i.e. without the inverse on P. Diagnostic only.
double printed_form_activation_probability(const LatentState& state, const Hyperparams& hp,
                                           Eigen::Index n, Eigen::Index k);

void sample_z_row(Rng& rng, LatentState& state, const Hyperparams& hp, Eigen::Index n);
// Returns the number of features created for row n.
int birth_features(Rng& rng, LatentState& state, const Hyperparams& hp, Eigen::Index n);
// Removes empty non-bias features; returns how many were removed.
int prune_features(LatentState& state);

void sample_weights(Rng& rng, LatentState& state, Eigen::Index d);
void sample_weights(Rng& rng, LatentState& state, Eigen::Index d, const Eigen::LLT<Eigen::MatrixXd>& factor);
void sample_pseudo_obs(Rng& rng, LatentState& state, const DataMatrix& data, const Hyperparams& hp,
                       Eigen::Index n, Eigen::Index d);
void sample_thresholds(Rng& rng, LatentState& state, const DataMatrix& data, const Hyperparams& hp,
                       Eigen::Index d);
void sample_noise_variance(Rng& rng, LatentState& state, const Hyperparams& hp, Eigen::Index d);

void run_iteration(Rng& rng, LatentState& state, const DataMatrix& data, const Hyperparams& hp);

// log p(Z) under the IBP, bias column excluded.
double ibp_log_prior(const RowMatrix& Z, double alpha, bool bias);
// Complete-data log joint of (Z, B, Y, thresholds, variances, X).
double log_joint(const LatentState& state, const DataMatrix& data, const Hyperparams& hp);

struct TraceRecord {
  int iteration = 0;
  int k_plus = 0;
  double log_joint = 0.0;
  Eigen::VectorXd sigma2;
};

struct ChainOptions {
  // Number of final states to keep (post burn-in), newest last.
  int keep_last = 1;
  std::vector<bool> pinned;
  std::function<void(const TraceRecord&)> on_sweep;
};

struct ChainResult {
  LatentState state;
  std::vector<TraceRecord> trace;
  std::vector<LatentState> tail;
};

ChainResult run_chain(const DataMatrix& data, const Hyperparams& hp, const ChainOptions& options = {});

}  // namespace glfm
