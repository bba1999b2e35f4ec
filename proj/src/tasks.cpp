#include "glfm/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include "glfm/likelihoods.hpp"

namespace glfm {

using Eigen::Index;

ChainResult infer(const DataMatrix& data, const Hyperparams& hp, int chains, const ChainOptions& options) {
  if (chains < 1) throw std::invalid_argument("need at least one chain");
  if (chains == 1) return run_chain(data, hp, options);

  std::vector<ChainResult> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  {
    std::vector<std::jthread> workers;
    for (int c = 0; c < chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          Hyperparams local = hp;
          local.seed = derive_seed(hp.seed, static_cast<std::uint64_t>(c));
          ChainOptions opts = options;
          opts.on_sweep = nullptr;
          results[c] = run_chain(data, local, opts);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  auto final_lj = [&](std::size_t c) {
    return results[c].trace.empty() ? -std::numeric_limits<double>::infinity() : results[c].trace.back().log_joint;
  };
  for (std::size_t c = 1; c < results.size(); ++c) {
    if (final_lj(c) > final_lj(best)) best = c;
  }
  if (options.on_sweep) {
    for (const auto& rec : results[best].trace) options.on_sweep(rec);
  }
  return std::move(results[best]);
}

double compute_map(const FittedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z, Index d) {
  const LatentState& s = model.state;
  if (s.num_dims() == 0 || s.B.rows() != z.size()) {
    throw std::invalid_argument("feature row does not match the learned state");
  }
  const AttributeSpec& spec = model.specs[d];
  const Eigen::RowVectorXd m = z * s.B_block(d);
  const double sigma = std::sqrt(s.sigma2(d));

  switch (spec.kind) {
    case AttributeKind::Real:
    case AttributeKind::PositiveReal:
      return invert_preprocess(spec.preprocess, map_forward(m(0), spec.transform, spec.kind));
    case AttributeKind::Categorical: {
      int best = 1;
      double best_p = -1.0;
      for (int r = 1; r <= spec.cardinality; ++r) {
        const double p = prob_categorical(r, m, sigma);
        if (p > best_p) {
          best_p = p;
          best = r;
        }
      }
      return best;
    }
    case AttributeKind::Ordinal: {
      int best = 1;
      double best_p = -1.0;
      for (int r = 1; r <= spec.cardinality; ++r) {
        const double p = prob_ordinal(r, m(0), s.thresholds[d], sigma);
        if (p > best_p) {
          best_p = p;
          best = r;
        }
      }
      return best;
    }
    case AttributeKind::Count: {
      const double f = map_forward(m(0), spec.transform, AttributeKind::PositiveReal);
      const auto base = static_cast<long long>(std::floor(f));
      long long best = std::max(0LL, base - 1);
      double best_p = -1.0;
      for (long long x = std::max(0LL, base - 1); x <= base + 1; ++x) {
        const double p = prob_count(x, m(0), spec.transform, sigma);
        if (p > best_p) {
          best_p = p;
          best = x;
        }
      }
      return static_cast<double>(best);
    }
  }
  return 0.0;
}

CompletionResult complete_with(const FittedModel& model, const DataMatrix& data) {
  if (data.rows() != model.state.rows()) throw std::invalid_argument("data rows do not match the model");
  CompletionResult out;
  out.model = model;
  out.x_map.resize(data.rows(), data.cols());
  out.text.assign(static_cast<std::size_t>(data.rows()), std::vector<std::string>(data.cols()));
  for (Index n = 0; n < data.rows(); ++n) {
    const Eigen::RowVectorXd z = model.state.Z.row(n);
    for (Index d = 0; d < data.cols(); ++d) {
      const AttributeSpec& spec = model.specs[d];
      if (data.missing(n, d)) {
        const double v = compute_map(model, z, d);
        out.x_map(n, d) = v;
        out.text[n][d] = is_continuous(spec.kind) ? format_value(spec, v) : decode_cell(spec, v);
      } else {
        const double x = data.cells(n, d);
        out.x_map(n, d) = is_continuous(spec.kind) ? invert_preprocess(spec.preprocess, x) : x;
        out.text[n][d] = data.raw.empty() ? decode_cell(spec, x) : data.raw[n][d];
      }
    }
  }
  return out;
}

CompletionResult complete(const DataMatrix& data, const Hyperparams& hp, int chains) {
  ChainResult chain = infer(data, hp, chains);
  FittedModel model{data.specs, hp, std::move(chain.state)};
  CompletionResult out = complete_with(model, data);
  out.trace = std::move(chain.trace);
  return out;
}

double cell_loglik(const AttributeSpec& spec, const Hyperparams& hp, const LatentState& s,
                   const Eigen::Ref<const Eigen::RowVectorXd>& z, Index d, double x) {
  const Eigen::RowVectorXd m = z * s.B_block(d);
  const double var = s.sigma2(d);
  const double sigma = std::sqrt(var);
  constexpr double kFloor = std::numeric_limits<double>::min();
  switch (spec.kind) {
    case AttributeKind::Real:
    case AttributeKind::PositiveReal:
      return loglik_continuous(x, m(0), var + hp.sigma_u2, spec.transform, spec.kind);
    case AttributeKind::Categorical:
      return std::log(std::max(prob_categorical(static_cast<int>(x), m, sigma), kFloor));
    case AttributeKind::Ordinal: {
      const int r = static_cast<int>(x);
      const auto& th = s.thresholds[d];
      const double lo = r == 1 ? -kInf : th[r - 2];
      const double hi = r == spec.cardinality ? kInf : th[r - 1];
      return log_normal_interval_prob((lo - m(0)) / sigma, (hi - m(0)) / sigma);
    }
    case AttributeKind::Count:
      return log_prob_count(static_cast<long long>(x), m(0), spec.transform, sigma);
  }
  return 0.0;
}

namespace {

double log_mean_exp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc / static_cast<double>(v.size()));
}

}  // namespace

HeldoutScore predictive_loglik(std::span<const LatentState> states, const std::vector<AttributeSpec>& specs,
                               const Hyperparams& hp, const DataMatrix& truth, const BoolMatrix& heldout,
                               const ScoringOptions& options) {
  if (states.empty()) throw std::invalid_argument("no chain states to score");
  if (heldout.rows() != truth.rows() || heldout.cols() != truth.cols()) {
    throw std::invalid_argument("held-out mask shape does not match the data");
  }
  if (heldout.count() == 0) throw std::invalid_argument("held-out mask is empty");
  if ((heldout.array() && truth.missing.array()).any()) {
    throw std::invalid_argument("held-out cells must be observed in the reference data");
  }

  const Index D = truth.cols();
  HeldoutScore score;
  score.per_dim.assign(static_cast<std::size_t>(D), 0.0);
  score.per_dim_count.assign(static_cast<std::size_t>(D), 0);
  double total = 0.0;
  std::vector<double> per_state(states.size());

  for (Index n = 0; n < truth.rows(); ++n) {
    for (Index d = 0; d < D; ++d) {
      if (!heldout(n, d)) continue;
      const double x = truth.cells(n, d);
      const bool rounded = d < static_cast<Index>(options.integer_coded.size()) && options.integer_coded[d] &&
                           specs[d].kind == AttributeKind::Real;
      for (std::size_t i = 0; i < states.size(); ++i) {
        const LatentState& s = states[i];
        const Eigen::RowVectorXd z = s.Z.row(n);
        if (rounded) {
          const double m = z.dot(s.B.col(s.offsets[d]));
          const double sd = std::sqrt(s.sigma2(d) + hp.sigma_u2);
          const double lo = map_inverse(x - 0.5, specs[d].transform, AttributeKind::Real);
          const double hi = map_inverse(x + 0.5, specs[d].transform, AttributeKind::Real);
          per_state[i] = log_normal_interval_prob((lo - m) / sd, (hi - m) / sd);
        } else {
          per_state[i] = cell_loglik(specs[d], hp, s, z, d, x);
        }
      }
      const double ll = log_mean_exp(per_state);
      total += ll;
      score.per_dim[d] += ll;
      ++score.per_dim_count[d];
      ++score.count;
    }
  }
  score.average = total / score.count;
  for (Index d = 0; d < D; ++d) {
    score.per_dim[d] = score.per_dim_count[d] > 0 ? score.per_dim[d] / score.per_dim_count[d]
                                                  : std::numeric_limits<double>::quiet_NaN();
  }
  return score;
}

HeldoutScore predictive_loglik(const FittedModel& model, const DataMatrix& truth, const BoolMatrix& heldout,
                               const ScoringOptions& options) {
  return predictive_loglik(std::span<const LatentState>(&model.state, 1), model.specs, model.hp, truth, heldout,
                           options);
}

BoolMatrix mcar_mask(Rng& rng, const DataMatrix& data, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("held-out fraction must be in [0, 1)");
  BoolMatrix mask = BoolMatrix::Constant(data.rows(), data.cols(), false);
  for (Index n = 0; n < data.rows(); ++n) {
    for (Index d = 0; d < data.cols(); ++d) {
      const double u = rng.uniform();
      if (!data.missing(n, d) && u < fraction) mask(n, d) = true;
    }
  }
  return mask;
}

DataMatrix hide_cells(const DataMatrix& data, const BoolMatrix& mask) {
  DataMatrix out = data;
  out.missing = data.missing.array() || mask.array();
  for (Index n = 0; n < out.rows(); ++n) {
    for (Index d = 0; d < out.cols(); ++d) {
      if (!mask(n, d)) continue;
      out.cells(n, d) = 0.0;
      if (!out.raw.empty()) out.raw[n][d].clear();
    }
  }
  return out;
}

std::vector<PdfPoint> compute_pdf(const FittedModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z, Index d,
                                  std::span<const double> grid, long long count_max) {
  const LatentState& s = model.state;
  if (d < 0 || d >= s.num_dims()) throw std::out_of_range("attribute index out of range");
  if (z.size() != s.B.rows()) throw std::invalid_argument("feature row does not match the learned state");
  const AttributeSpec& spec = model.specs[d];
  const Eigen::RowVectorXd m = z * s.B_block(d);
  const double sigma = std::sqrt(s.sigma2(d));

  std::vector<PdfPoint> out;
  switch (spec.kind) {
    case AttributeKind::Real:
    case AttributeKind::PositiveReal: {
      if (grid.empty()) throw std::invalid_argument("continuous attributes need a value grid");
      for (double raw : grid) {
        double density = 0.0;
        try {
          const double x = apply_preprocess(spec.preprocess, raw);
          if (spec.kind == AttributeKind::Real || x > 0.0) {
            density = std::exp(loglik_continuous(x, m(0), s.sigma2(d) + model.hp.sigma_u2, spec.transform,
                                                 spec.kind)) *
                      preprocess_jacobian(spec.preprocess, raw);
          }
        } catch (const DataError&) {
          density = 0.0;
        }
        out.push_back({raw, density});
      }
      break;
    }
    case AttributeKind::Categorical:
      for (int r = 1; r <= spec.cardinality; ++r) out.push_back({double(r), prob_categorical(r, m, sigma)});
      break;
    case AttributeKind::Ordinal:
      for (int r = 1; r <= spec.cardinality; ++r) {
        out.push_back({double(r), prob_ordinal(r, m(0), s.thresholds[d], sigma)});
      }
      break;
    case AttributeKind::Count:
      for (long long x = 0; x <= count_max; ++x) {
        out.push_back({double(x), prob_count(x, m(0), spec.transform, sigma)});
      }
      break;
  }
  return out;
}

std::string Pattern::label(bool bias) const {
  std::string out = "(";
  for (Index k = bias ? 1 : 0; k < bits.size(); ++k) out.push_back(bits(k) > 0.5 ? '1' : '0');
  out.push_back(')');
  return out;
}

PatternSummary extract_patterns(const LatentState& state, int top_k) {
  const Index N = state.rows();
  const Index K = state.num_features();
  std::map<std::string, std::pair<int, Index>> groups;  // key -> (rows, first row)
  for (Index n = 0; n < N; ++n) {
    std::string key(static_cast<std::size_t>(K), '0');
    for (Index k = 0; k < K; ++k) {
      if (state.Z(n, k) > 0.5) key[static_cast<std::size_t>(k)] = '1';
    }
    auto [it, inserted] = groups.try_emplace(key, 0, n);
    ++it->second.first;
  }

  PatternSummary summary;
  for (const auto& [key, info] : groups) {
    Pattern p;
    p.bits = state.Z.row(info.second);
    p.rows = info.first;
    p.empirical_prob = static_cast<double>(info.first) / static_cast<double>(N);
    summary.patterns.push_back(std::move(p));
  }
  // std::map iteration already orders keys, so a stable sort on probability
  // breaks ties by bit string.
  std::stable_sort(summary.patterns.begin(), summary.patterns.end(),
                   [](const Pattern& a, const Pattern& b) { return a.rows > b.rows; });
  if (top_k >= 0 && static_cast<std::size_t>(top_k) < summary.patterns.size()) {
    summary.patterns.resize(static_cast<std::size_t>(top_k));
  }

  const Index first = state.first_free_feature();
  summary.feature_probs = Eigen::VectorXd::Zero(K - first);
  if (N > 0) {
    for (Index k = first; k < K; ++k) summary.feature_probs(k - first) = state.Z.col(k).sum() / double(N);
  }
  return summary;
}

}  // namespace glfm
