#include "glfm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "glfm/likelihoods.hpp"

namespace glfm {

using Eigen::Index;

void Hyperparams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(alpha > 0.0, "alpha must be > 0");
  require(sigma_b2 > 0.0, "sigma_B^2 must be > 0");
  require(sigma_y2 > 0.0, "sigma_y^2 must be > 0");
  require(sigma_u2 > 0.0, "sigma_u^2 must be > 0");
  require(sigma_theta2 > 0.0, "sigma_theta^2 must be > 0");
  require(beta1 > 0.0 && beta2 > 0.0, "inverse-gamma hyperparameters must be > 0");
  require(k_max >= 1, "K_max must be >= 1");
  require(k_init >= 0, "K_init must be >= 0");
  require(k_init + (bias ? 1 : 0) <= k_max, "K_init plus bias exceeds K_max");
  require(iterations >= 0, "iterations must be >= 0");
  require(burn_in >= 0, "burn-in must be >= 0");
  require(iterations == 0 || burn_in < iterations, "burn-in must be smaller than iterations");
  require(max_births >= 0, "max births must be >= 0");
}

int LatentState::active_features() const {
  return static_cast<int>((counts.array() > 0.0).count());
}

void layout_columns(LatentState& state, const std::vector<AttributeSpec>& specs) {
  state.offsets.assign(1, 0);
  state.column_dim.clear();
  state.reference_column.clear();
  for (std::size_t d = 0; d < specs.size(); ++d) {
    const int width = pseudo_columns(specs[d]);
    for (int r = 0; r < width; ++r) {
      state.column_dim.push_back(static_cast<int>(d));
      state.reference_column.push_back(specs[d].kind == AttributeKind::Categorical && r == width - 1);
    }
    state.offsets.push_back(state.offsets.back() + width);
  }
}

namespace {

// Sufficient statistics of a candidate row z against the collapsed posterior
// with row n removed.
struct RowView {
  Eigen::VectorXd Mz;        // P^-1 z'
  double zMz = 0.0;          // z P^-1 z'
  Eigen::RowVectorXd zmean;  // z P^-1 lambda
};

RowView make_view(const LatentState& s, Index n) {
  RowView v;
  const Eigen::RowVectorXd z = s.Z.row(n);
  v.Mz.noalias() = s.P_inv * z.transpose();
  v.zMz = z.dot(v.Mz);
  v.zmean.noalias() = z * s.post_mean;
  return v;
}

void ensure_cache(LatentState& s) {
  if (s.cache_stale) refresh_cache(s);
}

void remove_row(LatentState& s, Index n) {
  const Eigen::RowVectorXd z = s.Z.row(n);
  const Eigen::RowVectorXd y = s.Y.row(n);
  s.P.noalias() -= z.transpose() * z;
  s.lambda.noalias() -= z.transpose() * y;
  s.counts -= z.transpose();
  if (s.cache_stale) return;
  const Eigen::VectorXd u = s.P_inv * z.transpose();
  const double c = 1.0 - z.dot(u);
  const Eigen::RowVectorXd resid = (z * s.post_mean - y) / c;
  s.P_inv.noalias() += (u / c) * u.transpose();
  s.post_mean.noalias() += u * resid;
}

void add_row(LatentState& s, Index n) {
  const Eigen::RowVectorXd z = s.Z.row(n);
  const Eigen::RowVectorXd y = s.Y.row(n);
  s.P.noalias() += z.transpose() * z;
  s.lambda.noalias() += z.transpose() * y;
  s.counts += z.transpose();
  if (s.cache_stale) return;
  const Eigen::VectorXd u = s.P_inv * z.transpose();
  const double c = 1.0 + z.dot(u);
  const Eigen::RowVectorXd resid = (y - z * s.post_mean) / c;
  s.P_inv.noalias() -= (u / c) * u.transpose();
  s.post_mean.noalias() += u * resid;
}

// Collapsed log predictive of row n's pseudo-observations.
double row_loglik(const LatentState& s, Index n, const Eigen::RowVectorXd& zmean, double zMz, double extra_var) {
  double acc = 0.0;
  for (Index c = 0; c < s.Y.cols(); ++c) {
    if (s.reference_column[c]) continue;
    acc += normal_log_pdf(s.Y(n, c), zmean(c), zMz + extra_var + s.sigma2(s.column_dim[c]));
  }
  return acc;
}

// log p(z_nk = 1) - log p(z_nk = 0) given the row-removed posterior.
double activation_log_odds(const LatentState& s, const RowView& v, Index n, Index k) {
  const double N = static_cast<double>(s.rows());
  const double m = s.counts(k);
  const bool on = s.Z(n, k) > 0.5;
  const double delta = on ? -1.0 : 1.0;
  const Eigen::RowVectorXd zmean_alt = v.zmean + delta * s.post_mean.row(k);
  const double zMz_alt = v.zMz + 2.0 * delta * v.Mz(k) + s.P_inv(k, k);
  const double cur = row_loglik(s, n, v.zmean, v.zMz, 0.0);
  const double alt = row_loglik(s, n, zmean_alt, zMz_alt, 0.0);
  const double l1 = on ? cur : alt;
  const double l0 = on ? alt : cur;
  return std::log(m / N) - std::log1p(-m / N) + l1 - l0;
}

double logistic(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

void flip(LatentState& s, RowView& v, Index n, Index k) {
  const double delta = s.Z(n, k) > 0.5 ? -1.0 : 1.0;
  v.zMz += 2.0 * delta * v.Mz(k) + s.P_inv(k, k);
  v.Mz += delta * s.P_inv.col(k);
  v.zmean += delta * s.post_mean.row(k);
  s.Z(n, k) += delta;
}

void append_features(LatentState& s, int k, double sigma_b2) {
  const Index K0 = s.num_features();
  const Index K1 = K0 + k;
  s.Z.conservativeResize(Eigen::NoChange, K1);
  s.Z.rightCols(k).setZero();
  s.B.conservativeResize(K1, Eigen::NoChange);
  s.B.bottomRows(k).setZero();
  s.lambda.conservativeResize(K1, Eigen::NoChange);
  s.lambda.bottomRows(k).setZero();
  s.counts.conservativeResize(K1);
  s.counts.tail(k).setZero();
  s.P.conservativeResize(K1, K1);
  s.P.bottomRows(k).setZero();
  s.P.rightCols(k).setZero();
  s.P.bottomRightCorner(k, k).diagonal().setConstant(1.0 / sigma_b2);
  if (s.cache_stale) return;
  s.P_inv.conservativeResize(K1, K1);
  s.P_inv.bottomRows(k).setZero();
  s.P_inv.rightCols(k).setZero();
  s.P_inv.bottomRightCorner(k, k).diagonal().setConstant(sigma_b2);
  s.post_mean.conservativeResize(K1, Eigen::NoChange);
  s.post_mean.bottomRows(k).setZero();
}

template <typename M>
void drop_row(M& m, Index k) {
  const Index tail = m.rows() - k - 1;
  if (tail > 0) m.middleRows(k, tail) = m.bottomRows(tail).eval();
  m.conservativeResize(m.rows() - 1, Eigen::NoChange);
}

template <typename M>
void drop_col(M& m, Index k) {
  const Index tail = m.cols() - k - 1;
  if (tail > 0) m.middleCols(k, tail) = m.rightCols(tail).eval();
  m.conservativeResize(Eigen::NoChange, m.cols() - 1);
}

// Removes an empty feature. Its row and column of P are decoupled from the
// rest, so the cached inverse stays valid after dropping them.
void remove_feature(LatentState& s, Index k) {
  drop_col(s.Z, k);
  drop_row(s.B, k);
  drop_row(s.lambda, k);
  drop_row(s.P, k);
  drop_col(s.P, k);
  const Index tail = s.counts.size() - k - 1;
  if (tail > 0) s.counts.segment(k, tail) = s.counts.tail(tail).eval();
  s.counts.conservativeResize(s.counts.size() - 1);
  if (s.cache_stale) return;
  drop_row(s.P_inv, k);
  drop_col(s.P_inv, k);
  drop_row(s.post_mean, k);
}

double safe_trunc_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  if (!(lo < hi)) return std::isfinite(lo) ? lo : hi;
  return trunc_normal_sample(rng, mean, sd, lo, hi);
}

bool is_pinned(const LatentState& s, Index n) {
  return !s.pinned.empty() && s.pinned[static_cast<std::size_t>(n)];
}

}  // namespace

Eigen::MatrixXd recompute_P(const LatentState& state, double sigma_b2) {
  Eigen::MatrixXd P = state.Z.transpose() * state.Z;
  P.diagonal().array() += 1.0 / sigma_b2;
  return P;
}

Eigen::MatrixXd recompute_lambda(const LatentState& state) { return state.Z.transpose() * state.Y; }

void rebuild_natural_params(LatentState& state, double sigma_b2) {
  state.P = recompute_P(state, sigma_b2);
  state.lambda = recompute_lambda(state);
  state.counts = state.Z.colwise().sum().transpose();
  state.cache_stale = true;
}

void refresh_cache(LatentState& state) {
  Eigen::LLT<Eigen::MatrixXd> llt(state.P);
  if (llt.info() != Eigen::Success) throw std::runtime_error("natural precision P is not positive definite");
  state.P_inv = llt.solve(Eigen::MatrixXd::Identity(state.P.rows(), state.P.cols()));
  state.post_mean = llt.solve(state.lambda);
  state.cache_stale = false;
}

LatentState init_state(Rng& rng, const DataMatrix& data, const Hyperparams& hp, const std::vector<bool>& pinned) {
  if (hp.k_init + (hp.bias ? 1 : 0) > hp.k_max) throw std::invalid_argument("K_init plus bias exceeds K_max");
  const Index N = data.rows();
  const Index D = data.cols();
  if (static_cast<Index>(data.specs.size()) != D) throw std::invalid_argument("one attribute spec per column required");
  if (!pinned.empty() && static_cast<Index>(pinned.size()) != N) {
    throw std::invalid_argument("pinned-row mask must have one entry per row");
  }

  LatentState s;
  s.bias = hp.bias;
  s.pinned = pinned;
  layout_columns(s, data.specs);
  const Index S = s.offsets.back();
  const Index K = hp.k_init + (hp.bias ? 1 : 0);

  s.Z = RowMatrix::Zero(N, K);
  for (Index n = 0; n < N; ++n) {
    if (hp.bias) s.Z(n, 0) = 1.0;
    for (Index k = s.first_free_feature(); k < K; ++k) {
      const bool on = rng.uniform() < 0.5;
      if (!is_pinned(s, n)) s.Z(n, k) = on ? 1.0 : 0.0;
    }
  }

  const double sigma_theta = std::sqrt(hp.sigma_theta2);
  const double step = sigma_theta / 2.0;
  s.thresholds.assign(D, {});
  for (Index d = 0; d < D; ++d) {
    const auto& spec = data.specs[d];
    if (spec.kind != AttributeKind::Ordinal) continue;
    for (int r = 1; r < spec.cardinality; ++r) s.thresholds[d].push_back((r - 1) * step);
  }

  const double sigma_y = std::sqrt(hp.sigma_y2);
  s.Y = RowMatrix::Zero(N, S);
  for (Index d = 0; d < D; ++d) {
    const auto& spec = data.specs[d];
    const Index off = s.offsets[d];
    for (Index n = 0; n < N; ++n) {
      if (data.missing(n, d)) {
        for (Index c = off; c < s.offsets[d + 1]; ++c) s.Y(n, c) = sigma_y * rng.normal();
        continue;
      }
      const double x = data.cells(n, d);
      switch (spec.kind) {
        case AttributeKind::Real:
        case AttributeKind::PositiveReal:
          s.Y(n, off) = map_inverse(x, spec.transform, spec.kind);
          break;
        case AttributeKind::Categorical: {
          const auto label = static_cast<Index>(x) - 1;
          for (Index r = 0; r < spec.cardinality; ++r) s.Y(n, off + r) = r == label ? 0.5 : -0.5;
          break;
        }
        case AttributeKind::Ordinal: {
          const auto& th = s.thresholds[d];
          const int r = static_cast<int>(x);
          const double lo = r == 1 ? -kInf : th[r - 2];
          const double hi = r == spec.cardinality ? kInf : th[r - 1];
          s.Y(n, off) = std::isinf(lo) ? hi - step / 2.0 : std::isinf(hi) ? lo + step / 2.0 : 0.5 * (lo + hi);
          break;
        }
        case AttributeKind::Count: {
          const double lo = map_inverse(x, spec.transform, spec.kind);
          const double hi = map_inverse(x + 1.0, spec.transform, spec.kind);
          s.Y(n, off) = std::isinf(lo) ? hi - 0.5 : 0.5 * (lo + hi);
          break;
        }
      }
    }
  }

  s.B = Eigen::MatrixXd::Zero(K, S);
  s.sigma2 = Eigen::VectorXd::Constant(D, hp.sigma_y2);
  rebuild_natural_params(s, hp.sigma_b2);
  return s;
}

double activation_probability(const LatentState& state, const Hyperparams& /*hp*/, Index n, Index k) {
  if (k < state.first_free_feature()) return 1.0;
  if (is_pinned(state, n)) return 0.0;
  LatentState s = state;
  ensure_cache(s);
  remove_row(s, n);
  if (s.counts(k) <= 0.0) return 0.0;
  const RowView v = make_view(s, n);
  return logistic(activation_log_odds(s, v, n, k));
}

double printed_form_activation_probability(const LatentState& state, const Hyperparams& /*hp*/, Index n,
                                           Index k) {
  LatentState s = state;
  s.cache_stale = true;
  remove_row(s, n);
  const double N = static_cast<double>(s.rows());
  const double m = s.counts(k);
  if (m <= 0.0) return 0.0;
  auto loglik = [&](double value) {
    Eigen::RowVectorXd z = s.Z.row(n);
    z(k) = value;
    const Eigen::RowVectorXd mean = z * s.P * s.lambda;
    const double var = z * s.P * z.transpose();
    double acc = 0.0;
    for (Index c = 0; c < s.Y.cols(); ++c) {
      if (s.reference_column[c]) continue;
      acc += normal_log_pdf(s.Y(n, c), mean(c), var + s.sigma2(s.column_dim[c]));
    }
    return acc;
  };
  return logistic(std::log(m / N) - std::log1p(-m / N) + loglik(1.0) - loglik(0.0));
}

void sample_z_row(Rng& rng, LatentState& s, const Hyperparams& /*hp*/, Index n) {
  if (is_pinned(s, n)) return;
  ensure_cache(s);
  remove_row(s, n);
  RowView v = make_view(s, n);
  for (Index k = s.first_free_feature(); k < s.num_features(); ++k) {
    const bool on = s.Z(n, k) > 0.5;
    if (s.counts(k) <= 0.0) {
      // No other row owns this feature: the prior factor m/N vanishes.
      if (on) flip(s, v, n, k);
      continue;
    }
    const double p1 = logistic(activation_log_odds(s, v, n, k));
    const bool next = rng.uniform() < p1;
    if (next != on) flip(s, v, n, k);
  }
  add_row(s, n);
  prune_features(s);
}

int birth_features(Rng& rng, LatentState& s, const Hyperparams& hp, Index n) {
  if (is_pinned(s, n)) return 0;
  const int room = std::min<int>(hp.max_births, hp.k_max - static_cast<int>(s.num_features()));
  const double rate = hp.alpha / static_cast<double>(s.rows());
  if (room <= 0 || !(rate > 0.0)) return 0;

  int k_new = 0;
  if (hp.birth_mode == BirthMode::PriorOnly) {
    k_new = static_cast<int>(std::min<std::uint64_t>(poisson_sample(rng, rate), static_cast<std::uint64_t>(room)));
  } else {
    ensure_cache(s);
    remove_row(s, n);
    const RowView v = make_view(s, n);
    std::vector<double> logw(room + 1);
    for (int k = 0; k <= room; ++k) {
      logw[k] = k * std::log(rate) - rate - std::lgamma(k + 1.0) + row_loglik(s, n, v.zmean, v.zMz, k * hp.sigma_b2);
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double& w : logw) total += (w = std::exp(w - top));
    double u = rng.uniform() * total;
    for (k_new = 0; k_new < room; ++k_new) {
      u -= logw[k_new];
      if (u < 0.0) break;
    }
    add_row(s, n);
  }
  if (k_new == 0) return 0;

  ensure_cache(s);
  remove_row(s, n);
  const Index K0 = s.num_features();
  append_features(s, k_new, hp.sigma_b2);
  s.Z.row(n).segment(K0, k_new).setOnes();
  add_row(s, n);
  return k_new;
}

int prune_features(LatentState& s) {
  int removed = 0;
  for (Index k = s.num_features() - 1; k >= s.first_free_feature(); --k) {
    if (s.counts(k) <= 0.0) {
      remove_feature(s, k);
      ++removed;
    }
  }
  return removed;
}

void sample_weights(Rng& rng, LatentState& s, Index d) {
  Eigen::LLT<Eigen::MatrixXd> llt(s.P);
  if (llt.info() != Eigen::Success) throw std::runtime_error("natural precision P is not positive definite");
  sample_weights(rng, s, d, llt);
}

void sample_weights(Rng& rng, LatentState& s, Index d, const Eigen::LLT<Eigen::MatrixXd>& factor) {
  const Index K = s.num_features();
  Eigen::VectorXd eps(K);
  for (Index c = s.offsets[d]; c < s.offsets[d + 1]; ++c) {
    if (s.reference_column[c]) {
      s.B.col(c).setZero();
      continue;
    }
    for (Index k = 0; k < K; ++k) eps(k) = rng.normal();
    // P = L L', so L'^-1 eps has covariance P^-1.
    s.B.col(c) = factor.solve(s.lambda.col(c)) + factor.matrixU().solve(eps);
  }
}

void sample_pseudo_obs(Rng& rng, LatentState& s, const DataMatrix& data, const Hyperparams& hp, Index n, Index d) {
  const auto& spec = data.specs[d];
  const double var = s.sigma2(d);
  const double sd = std::sqrt(var);
  const Index off = s.offsets[d];
  const Index width = s.width(d);
  const Eigen::RowVectorXd z = s.Z.row(n);
  const Eigen::RowVectorXd m = z * s.B_block(d);
  const Eigen::RowVectorXd old = s.Y.row(n).segment(off, width);

  if (data.missing(n, d)) {
    for (Index r = 0; r < width; ++r) s.Y(n, off + r) = m(r) + sd * rng.normal();
  } else {
    const double x = data.cells(n, d);
    switch (spec.kind) {
      case AttributeKind::Real:
      case AttributeKind::PositiveReal: {
        const double target = map_inverse(x, spec.transform, spec.kind);
        const double precision = 1.0 / var + 1.0 / hp.sigma_u2;
        const double mean = (m(0) / var + target / hp.sigma_u2) / precision;
        s.Y(n, off) = mean + rng.normal() / std::sqrt(precision);
        break;
      }
      case AttributeKind::Categorical: {
        const auto label = static_cast<Index>(x) - 1;
        for (Index r = 0; r < width; ++r) {
          if (r == label) {
            double lo = -kInf;
            for (Index j = 0; j < width; ++j) {
              if (j != label) lo = std::max(lo, s.Y(n, off + j));
            }
            s.Y(n, off + r) = safe_trunc_normal(rng, m(r), sd, lo, kInf);
          } else {
            s.Y(n, off + r) = safe_trunc_normal(rng, m(r), sd, -kInf, s.Y(n, off + label));
          }
        }
        break;
      }
      case AttributeKind::Ordinal: {
        const auto& th = s.thresholds[d];
        const int r = static_cast<int>(x);
        const double lo = r == 1 ? -kInf : th[r - 2];
        const double hi = r == spec.cardinality ? kInf : th[r - 1];
        s.Y(n, off) = safe_trunc_normal(rng, m(0), sd, lo, hi);
        break;
      }
      case AttributeKind::Count: {
        const double lo = map_inverse(x, spec.transform, spec.kind);
        const double hi = map_inverse(x + 1.0, spec.transform, spec.kind);
        s.Y(n, off) = safe_trunc_normal(rng, m(0), sd, lo, hi);
        break;
      }
    }
  }

  for (Index r = 0; r < width; ++r) {
    const double delta = s.Y(n, off + r) - old(r);
    if (delta != 0.0) s.lambda.col(off + r).noalias() += delta * z.transpose();
  }
  s.cache_stale = true;
}

void sample_thresholds(Rng& rng, LatentState& s, const DataMatrix& data, const Hyperparams& hp, Index d) {
  const auto& spec = data.specs[d];
  if (spec.kind != AttributeKind::Ordinal) return;
  const int R = spec.cardinality;
  if (R <= 2) return;
  auto& th = s.thresholds[d];
  const Index off = s.offsets[d];

  // Extremes of the pseudo-observations in each observed class.
  std::vector<double> class_max(R + 1, -kInf);
  std::vector<double> class_min(R + 1, kInf);
  for (Index n = 0; n < s.rows(); ++n) {
    if (data.missing(n, d)) continue;
    const int r = static_cast<int>(data.cells(n, d));
    class_max[r] = std::max(class_max[r], s.Y(n, off));
    class_min[r] = std::min(class_min[r], s.Y(n, off));
  }

  const double sd = std::sqrt(hp.sigma_theta2);
  // th[i] separates class i + 1 from class i + 2; th[0] stays at zero.
  for (int i = 1; i < R - 1; ++i) {
    const double lo = std::max(th[i - 1], class_max[i + 1]);
    const double hi = std::min(i + 1 < R - 1 ? th[i + 1] : kInf, class_min[i + 2]);
    if (!(lo < hi)) throw std::logic_error("empty feasible interval for an ordinal threshold");
    double v = trunc_normal_sample(rng, 0.0, sd, lo, hi);
    if (v >= hi) v = std::nextafter(hi, lo);
    th[i] = v;
  }
}

void sample_noise_variance(Rng& rng, LatentState& s, const Hyperparams& hp, Index d) {
  const Eigen::MatrixXd resid = s.Y_block(d) - s.Z * s.B_block(d);
  const double shape = hp.beta1 + 0.5 * static_cast<double>(resid.size());
  const double rate = hp.beta2 + 0.5 * resid.squaredNorm();
  s.sigma2(d) = inverse_gamma_sample(rng, shape, rate);
}

void run_iteration(Rng& rng, LatentState& s, const DataMatrix& data, const Hyperparams& hp) {
  for (Index n = 0; n < s.rows(); ++n) {
    sample_z_row(rng, s, hp, n);
    birth_features(rng, s, hp, n);
  }
  prune_features(s);

  Eigen::LLT<Eigen::MatrixXd> factor(s.P);
  if (factor.info() != Eigen::Success) throw std::runtime_error("natural precision P is not positive definite");
  for (Index d = 0; d < s.num_dims(); ++d) {
    sample_weights(rng, s, d, factor);
    for (Index n = 0; n < s.rows(); ++n) sample_pseudo_obs(rng, s, data, hp, n, d);
    sample_thresholds(rng, s, data, hp, d);
    if (hp.sample_variance) sample_noise_variance(rng, s, hp, d);
  }
}

double ibp_log_prior(const RowMatrix& Z, double alpha, bool bias) {
  const Index N = Z.rows();
  double harmonic = 0.0;
  for (Index j = 1; j <= N; ++j) harmonic += 1.0 / static_cast<double>(j);

  std::map<std::string, int> histories;
  double lp = -alpha * harmonic;
  int k_plus = 0;
  for (Index k = bias ? 1 : 0; k < Z.cols(); ++k) {
    const double m = Z.col(k).sum();
    if (m <= 0.0) continue;
    ++k_plus;
    std::string key(static_cast<std::size_t>(N), '0');
    for (Index n = 0; n < N; ++n) {
      if (Z(n, k) > 0.5) key[static_cast<std::size_t>(n)] = '1';
    }
    ++histories[key];
    lp += std::lgamma(static_cast<double>(N) - m + 1.0) + std::lgamma(m) - std::lgamma(static_cast<double>(N) + 1.0);
  }
  if (k_plus > 0) lp += k_plus * std::log(alpha);
  for (const auto& [key, count] : histories) lp -= std::lgamma(count + 1.0);
  return lp;
}

double log_joint(const LatentState& s, const DataMatrix& data, const Hyperparams& hp) {
  double lp = ibp_log_prior(s.Z, hp.alpha, s.bias);

  for (Index c = 0; c < s.B.cols(); ++c) {
    if (s.reference_column[c]) continue;
    for (Index k = 0; k < s.B.rows(); ++k) lp += normal_log_pdf(s.B(k, c), 0.0, hp.sigma_b2);
  }

  const RowMatrix mean = s.Z * s.B;
  for (Index c = 0; c < s.Y.cols(); ++c) {
    const double var = s.sigma2(s.column_dim[c]);
    for (Index n = 0; n < s.rows(); ++n) lp += normal_log_pdf(s.Y(n, c), mean(n, c), var);
  }

  for (Index d = 0; d < s.num_dims(); ++d) {
    const auto& spec = data.specs[d];
    if (is_continuous(spec.kind)) {
      for (Index n = 0; n < s.rows(); ++n) {
        if (data.missing(n, d)) continue;
        const double x = data.cells(n, d);
        lp += normal_log_pdf(map_inverse(x, spec.transform, spec.kind), s.Y(n, s.offsets[d]), hp.sigma_u2) +
              std::log(map_inverse_jacobian(x, spec.transform, spec.kind));
      }
    }
    if (spec.kind == AttributeKind::Ordinal) {
      const auto& th = s.thresholds[d];
      for (std::size_t i = 1; i < th.size(); ++i) lp += normal_log_pdf(th[i], 0.0, hp.sigma_theta2);
    }
    if (hp.sample_variance) {
      const double v = s.sigma2(d);
      lp += hp.beta1 * std::log(hp.beta2) - std::lgamma(hp.beta1) - (hp.beta1 + 1.0) * std::log(v) - hp.beta2 / v;
    }
  }
  return lp;
}

ChainResult run_chain(const DataMatrix& data, const Hyperparams& hp, const ChainOptions& options) {
  hp.validate();
  Rng rng(hp.seed);
  ChainResult result;
  result.state = init_state(rng, data, hp, options.pinned);
  LatentState& s = result.state;

  const int keep = std::max(options.keep_last, 0);
  for (int it = 0; it < hp.iterations; ++it) {
    run_iteration(rng, s, data, hp);
    if ((it + 1) % 100 == 0) rebuild_natural_params(s, hp.sigma_b2);

    TraceRecord rec{it + 1, s.active_features(), log_joint(s, data, hp), s.sigma2};
    if (options.on_sweep) options.on_sweep(rec);
    result.trace.push_back(std::move(rec));

    if (it >= hp.burn_in && it >= hp.iterations - keep) result.tail.push_back(s);
  }
  if (result.tail.empty() && keep > 0) result.tail.push_back(s);
  return result;
}

}  // namespace glfm
