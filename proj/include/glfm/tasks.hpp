#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glfm/data.hpp"
#include "glfm/sampler.hpp"

namespace glfm {

// Everything needed to reuse a learned chain state: attribute metadata,
// hyperparameters and the latest sample of the latent variables.
struct FittedModel {
  std::vector<AttributeSpec> specs;
  Hyperparams hp;
  LatentState state;
};

// Runs `chains` independent chains (in parallel when > 1) and keeps the one
// with the highest final log joint. Chain c uses derive_seed(hp.seed, c)
// unless there is a single chain, which uses hp.seed directly.
ChainResult infer(const DataMatrix& data, const Hyperparams& hp, int chains = 1,
                  const ChainOptions& options = {});

// MAP estimate of attribute d for feature row z, in original units
// (category index for categorical and ordinal attributes).
double compute_map(const FittedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z, Eigen::Index d);

struct CompletionResult {
  Eigen::MatrixXd x_map;  // original units; category indices for discrete
  std::vector<std::vector<std::string>> text;
  FittedModel model;
  std::vector<TraceRecord> trace;
};

// Fills the missing cells of `data` with their MAP values under the final
// chain state. Observed cells keep their source text.
CompletionResult complete(const DataMatrix& data, const Hyperparams& hp, int chains = 1);
// Completion from an existing model; rows of `data` must match the model.
CompletionResult complete_with(const FittedModel& model, const DataMatrix& data);

// log p(x | z, B^d, auxiliaries) for one encoded observation.
double cell_loglik(const AttributeSpec& spec, const Hyperparams& hp, const LatentState& state,
                   const Eigen::Ref<const Eigen::RowVectorXd>& z, Eigen::Index d, double x);

struct HeldoutScore {
  double average = 0.0;
  int count = 0;
  std::vector<double> per_dim;  // NaN for attributes without held-out cells
  std::vector<int> per_dim_count;
};

struct ScoringOptions {
  // Attributes modeled as Real whose values are integer codes. Their
  // held-out cells are scored by the Gaussian mass of [x - 1/2, x + 1/2].
  std::vector<bool> integer_coded;
};

// Average predictive log-likelihood over held-out cells. With several states
// the per-cell likelihood is averaged over them before taking the log.
HeldoutScore predictive_loglik(std::span<const LatentState> states, const std::vector<AttributeSpec>& specs,
                               const Hyperparams& hp, const DataMatrix& truth, const BoolMatrix& heldout,
                               const ScoringOptions& options = {});
HeldoutScore predictive_loglik(const FittedModel& model, const DataMatrix& truth, const BoolMatrix& heldout,
                               const ScoringOptions& options = {});

// MCAR mask over observed cells: each observed cell is held out with
// probability `fraction`.
BoolMatrix mcar_mask(Rng& rng, const DataMatrix& data, double fraction);
// Copy of data with the masked cells marked missing.
DataMatrix hide_cells(const DataMatrix& data, const BoolMatrix& mask);

struct PdfPoint {
  double value;
  double density;
};

// Density (continuous kinds) or pmf (discrete kinds) of attribute d under
// feature vector z. Continuous values are in original units, discrete
// supports are enumerated and the grid is ignored; counts run 0..count_max.
std::vector<PdfPoint> compute_pdf(const FittedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z,
                                  Eigen::Index d, std::span<const double> grid, long long count_max = 100);

struct Pattern {
  Eigen::RowVectorXd bits;
  double empirical_prob = 0.0;
  int rows = 0;
  // "(0101)"; the always-on bias bit is left out.
  std::string label(bool bias) const;
};

struct PatternSummary {
  std::vector<Pattern> patterns;  // sorted by probability, then label
  Eigen::VectorXd feature_probs;  // column means of Z, bias excluded
};

PatternSummary extract_patterns(const LatentState& state, int top_k);

}  // namespace glfm
