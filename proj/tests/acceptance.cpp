// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. argv[1] is the glfm executable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "glfm/io.hpp"
#include "oracles.hpp"

using namespace glfm;
using fixture::spec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// 1. Collapsed flip probabilities against grid marginalization over B.
Outcome collapsed_oracle() {
  Hyperparams hp;
  Rng gen(101);
  double worst = 0.0;
  int checked = 0;
  bool decisions_match = true;
  for (int trial = 0; trial < 12; ++trial) {
    const int N = 2 + trial % 3;
    const int K = 1 + (trial / 3) % 2;
    Eigen::MatrixXd Z(N, K);
    Eigen::VectorXd y(N);
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < K; ++k) Z(n, k) = gen.uniform() < 0.6 ? 1.0 : 0.0;
      y(n) = 1.5 * gen.normal();
    }
    for (int k = 0; k < K; ++k) Z(k % N, k) = 1.0;
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < K; ++k) {
        if (Z.col(k).sum() - Z(n, k) <= 0.0) continue;
        LatentState s = fixture::state(Z, y, {spec("x", AttributeKind::Real)}, hp);
        const double got = activation_probability(s, hp, n, k);
        const double want = oracle::flip_probability(Z, y, n, k, hp.sigma_b2, hp.sigma_y2);
        worst = std::max(worst, std::abs(got - want));
        ++checked;
        if (k == 0) {
          Rng rng(gen());
          Rng probe = rng;
          const bool expected = probe.uniform() < got;
          sample_z_row(rng, s, hp, n);
          decisions_match = decisions_match && ((s.Z(n, 0) > 0.5) == expected);
        }
      }
    }
  }
  return {worst < 1e-5 && decisions_match && checked > 0,
          "max |p - p_grid| = " + fmt(worst) + " over " + std::to_string(checked) +
              " flips (tol 1e-5); sampler decisions consistent: " + (decisions_match ? "yes" : "no")};
}

// 2. Natural parameters after random operations.
Outcome natural_parameters() {
  auto syn = fixture::synthetic_mixed(50, 3, 202);
  DataMatrix data = syn.data;
  for (Eigen::Index n = 0; n < 50; n += 7) data.missing(n, n % 6) = true;
  Hyperparams hp;
  hp.bias = true;
  hp.alpha = 5.0;
  Rng rng(203);
  LatentState s = init_state(rng, data, hp);
  int births = 0, prunes = 0, flips = 0, pseudo = 0;
  for (int op = 0; op < 1000; ++op) {
    const double u = rng.uniform();
    const Eigen::Index n = static_cast<Eigen::Index>(rng.uniform() * 50);
    if (u < 0.35) {
      sample_z_row(rng, s, hp, n);
      ++flips;
    } else if (u < 0.55) {
      births += birth_features(rng, s, hp, n);
    } else if (u < 0.65) {
      prunes += prune_features(s);
    } else {
      sample_weights(rng, s, static_cast<Eigen::Index>(rng.uniform() * 6));
      sample_pseudo_obs(rng, s, data, hp, n, static_cast<Eigen::Index>(rng.uniform() * 6));
      ++pseudo;
    }
  }
  const double dp = fixture::p_drift(s, hp.sigma_b2);
  const double dl = fixture::lambda_drift(s);
  return {dp < 1e-9 && dl < 1e-9, "max|dP| = " + fmt(dp) + ", max|dlambda| = " + fmt(dl) + " (tol 1e-9) after " +
                                      std::to_string(flips) + " row updates, " + std::to_string(births) +
                                      " births, " + std::to_string(prunes) + " prunes, " + std::to_string(pseudo) +
                                      " pseudo-observation updates; K = " + std::to_string(s.num_features())};
}

// 3. Likelihood normalization.
Outcome normalization() {
  double ord_err = 0.0;
  for (double m : {-4.0, -0.7, 0.0, 1.3, 6.0}) {
    for (const auto& th : {std::vector<double>{0.0}, std::vector<double>{0.0, 0.8, 2.4}, std::vector<double>{0.0, 5.0}}) {
      for (double sigma : {0.3, 1.0, 2.0}) {
        double total = 0.0;
        for (int r = 1; r <= static_cast<int>(th.size()) + 1; ++r) total += prob_ordinal(r, m, th, sigma);
        ord_err = std::max(ord_err, std::abs(total - 1.0));
      }
    }
  }

  double cat_sum_err = 0.0, cat_z = 0.0;
  const std::vector<std::vector<double>> cases{{0.8, 0.0}, {0.3, -0.5, 0.0}, {1.0, -0.4, 0.2, 0.6, 0.0}};
  unsigned seed = 1;
  for (const auto& m : cases) {
    Eigen::RowVectorXd mv = Eigen::Map<const Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    const auto freq = oracle::categorical_monte_carlo(m, 1.0, 10000000, seed++);
    double total = 0.0;
    for (int r = 1; r <= static_cast<int>(m.size()); ++r) {
      const double p = prob_categorical(r, mv, 1.0);
      total += p;
      const double se = std::sqrt(p * (1 - p) / 1e7);
      cat_z = std::max(cat_z, std::abs(p - freq[r - 1]) / se);
    }
    cat_sum_err = std::max(cat_sum_err, std::abs(total - 1.0));
  }

  double count_sum = 0.0;
  for (long long x = 0; x <= 200; ++x) count_sum += prob_count(x, 0.0, {}, 1.0);

  const bool pass = ord_err <= 1e-12 && cat_sum_err <= 1e-6 && cat_z < 5.0 && count_sum >= 1.0 - 1e-6;
  return {pass, "ordinal |sum-1| = " + fmt(ord_err) + " (tol 1e-12); categorical |sum-1| = " + fmt(cat_sum_err) +
                    " (tol 1e-6), max |p - MC|/se = " + fmt(cat_z) + " with 1e7 draws (tol 5); count sum to 200 = " +
                    fmt(count_sum) + " (>= 1 - 1e-6)"};
}

// 4. Truncated normal sampler.
Outcome truncated_normal() {
  Rng rng(404);
  const double inf = kInf;
  double acc = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) acc += trunc_normal_sample(rng, 0.0, 1.0, 0.0, inf);
  const double mean_err = std::abs(acc / n - std::sqrt(2.0 / std::numbers::pi));

  struct Regime {
    const char* name;
    double lo, hi;
  };
  const Regime regimes[] = {{"two-sided", -0.8, 1.7}, {"one-sided", 0.5, inf}, {"far-tail", 8.0, inf}};
  double min_p = 1.0;
  long outside = 0;
  std::string ps;
  for (const auto& r : regimes) {
    std::vector<double> xs(100000);
    for (auto& x : xs) x = trunc_normal_sample(rng, 0.0, 1.0, r.lo, r.hi);
    const double d = oracle::ks_statistic(xs, [&](double x) { return oracle::trunc_cdf(x, r.lo, r.hi); });
    const double p = oracle::ks_pvalue(d, xs.size());
    min_p = std::min(min_p, p);
    ps += std::string(r.name) + " p=" + fmt(p) + " ";
    for (int i = 0; i < 1000000; ++i) {
      const double s = trunc_normal_sample(rng, 0.0, 1.0, r.lo, r.hi);
      if (!(s > r.lo && s <= r.hi)) ++outside;
    }
  }
  return {mean_err < 3e-3 && min_p > 1e-3 && outside == 0,
          "|mean - sqrt(2/pi)| = " + fmt(mean_err) + " (tol 3e-3); KS " + ps + "(> 1e-3); out of bounds " +
              std::to_string(outside) + " of 3e6"};
}

// 5. IBP prior recovery with every cell missing.
Outcome prior_recovery() {
  Hyperparams hp;
  hp.alpha = 1.0;
  hp.k_max = 30;
  hp.bias = false;
  hp.burn_in = 1000;
  hp.iterations = 21000;
  hp.seed = 505;
  DataMatrix data = fixture::all_missing(5, {spec("x", AttributeKind::Real)});
  ChainResult r = run_chain(data, hp, {});
  double acc = 0.0;
  int kept = 0;
  for (std::size_t i = static_cast<std::size_t>(hp.burn_in); i < r.trace.size(); ++i) {
    acc += r.trace[i].k_plus;
    ++kept;
  }
  const double mean = acc / kept;
  const double target = 1.0 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5;
  return {std::abs(mean - target) <= 0.15, "mean K_plus over " + std::to_string(kept) + " sweeps = " + fmt(mean) +
                                               ", alpha*H_5 = " + fmt(target) + " (tol 0.15)"};
}

// 6. Recovery on data drawn from the model.
Outcome synthetic_recovery() {
  const auto start = Clock::now();
  auto syn = fixture::synthetic_mixed(1000, 3, 606);
  Hyperparams hp;
  hp.bias = true;
  hp.iterations = 500;
  hp.burn_in = 100;

  auto run_split = [&](double fraction, std::uint64_t seed, bool all_real, int& used_features) {
    Rng mask_rng(seed);
    const BoolMatrix mask = mcar_mask(mask_rng, syn.data, fraction);
    DataMatrix base = all_real ? as_all_real(syn.data) : syn.data;
    const DataMatrix train = hide_cells(base, mask);
    Hyperparams h = hp;
    h.seed = seed + 1;
    ChainResult r = run_chain(train, h);
    used_features = 0;
    for (Eigen::Index k = 1; k < r.state.num_features(); ++k) {
      if (r.state.Z.col(k).mean() > 0.01) ++used_features;
    }
    ScoringOptions opts;
    opts.integer_coded.assign(6, false);
    if (all_real) opts.integer_coded = {false, false, true, true, true, false};
    return predictive_loglik(std::span<const LatentState>(&r.state, 1), train.specs, h, base, mask, opts);
  };

  int used10 = 0, used50 = 0, used_real = 0;
  const HeldoutScore glfm10 = run_split(0.1, 6001, false, used10);
  const HeldoutScore sibp10 = run_split(0.1, 6001, true, used_real);
  const HeldoutScore glfm50 = run_split(0.5, 6003, false, used50);

  auto discrete_avg = [](const HeldoutScore& s) {
    double acc = 0.0;
    int cells = 0;
    for (int d : {2, 3, 4}) {
      acc += s.per_dim[d] * s.per_dim_count[d];
      cells += s.per_dim_count[d];
    }
    return acc / cells;
  };
  const double g = discrete_avg(glfm10), b = discrete_avg(sibp10);
  bool per_column = true;
  std::string cols;
  for (int d : {2, 3, 4}) {
    per_column = per_column && glfm10.per_dim[d] > sibp10.per_dim[d];
    cols += syn.data.specs[d].name + " " + fmt(glfm10.per_dim[d]) + " vs " + fmt(sibp10.per_dim[d]) + "; ";
  }
  const double minutes = std::chrono::duration<double>(Clock::now() - start).count() / 60.0;
  const bool pass = used10 >= 3 && used10 <= 6 && g > b && glfm50.average < glfm10.average && minutes <= 10.0;
  return {pass, "features with >1% usage = " + std::to_string(used10) + " (in [3, 6]); discrete held-out loglik GLFM " +
                    fmt(g) + " vs all-real " + fmt(b) + " (" + cols + "all columns better: " +
                    (per_column ? "yes" : "no") + "); overall 10% " + fmt(glfm10.average) + " > 50% " +
                    fmt(glfm50.average) + "; runtime " + fmt(minutes) + " min (<= 10)"};
}

// 7. Per-sweep cost when N doubles.
Outcome complexity_scaling() {
  Hyperparams hp;
  hp.bias = true;
  hp.k_max = 12;
  hp.k_init = 11;
  hp.alpha = 50.0;

  struct Run {
    fixture::Synthetic syn;
    Rng rng;
    LatentState state;
    std::vector<double> times;
    double k_sum = 0.0;
  };
  auto setup = [&](Eigen::Index N) {
    Run r{fixture::synthetic_mixed(N, 3, 707), Rng(708), {}, {}, 0.0};
    r.state = init_state(r.rng, r.syn.data, hp);
    for (int i = 0; i < 10; ++i) run_iteration(r.rng, r.state, r.syn.data, hp);
    return r;
  };
  auto timed_sweep = [&](Run& r) {
    const auto t0 = Clock::now();
    run_iteration(r.rng, r.state, r.syn.data, hp);
    r.times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    r.k_sum += static_cast<double>(r.state.num_features());
  };
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  // Alternate sizes sweep by sweep.
  Run small = setup(1000);
  Run large = setup(2000);
  for (int i = 0; i < 40; ++i) {
    timed_sweep(small);
    timed_sweep(large);
  }
  const int k1 = static_cast<int>(std::lround(small.k_sum / 40));
  const int k2 = static_cast<int>(std::lround(large.k_sum / 40));
  const double t1 = median(small.times);
  const double t2 = median(large.times);
  const double ratio = t2 / t1;
  return {ratio >= 1.5 && ratio <= 2.5, "median sweep " + fmt(t1 * 1e3) + " ms (N=1000, K~" + std::to_string(k1) +
                                            ") vs " + fmt(t2 * 1e3) + " ms (N=2000, K~" + std::to_string(k2) +
                                            "), ratio " + fmt(ratio) + " (in [1.5, 2.5])"};
}

// 8. Byte-identical CLI outputs across repeated runs.
Outcome cli_determinism(const std::string& exe) {
  const fs::path dir = fs::temp_directory_path() / "glfm_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto syn = fixture::synthetic_mixed(120, 3, 808);
  std::string csv = "real,positive,categorical,ordinal,count,real2\n";
  const char* cats[] = {"red", "green", "blue", "grey"};
  const char* ords[] = {"none", "low", "mid", "high"};
  Rng gaps(809);
  for (Eigen::Index n = 0; n < syn.data.rows(); ++n) {
    std::vector<std::string> row{fmt(syn.data.cells(n, 0)), fmt(syn.data.cells(n, 1)),
                                 cats[static_cast<int>(syn.data.cells(n, 2)) - 1],
                                 ords[static_cast<int>(syn.data.cells(n, 3)) - 1],
                                 std::to_string(static_cast<long long>(syn.data.cells(n, 4))), fmt(syn.data.cells(n, 5))};
    if (gaps.uniform() < 0.2) row[static_cast<std::size_t>(gaps.uniform() * 6)] = "NA";
    for (std::size_t d = 0; d < row.size(); ++d) csv += (d ? "," : "") + row[d];
    csv += '\n';
  }
  write_text_file(dir / "data.csv", csv);
  write_text_file(dir / "spec.txt",
                  "real,real\npositive,positivereal\ncategorical,categorical,4\nordinal,ordinal,4\ncount,count\n"
                  "real2,real\n");

  const std::string common = " \"" + (dir / "data.csv").string() + "\" --spec \"" + (dir / "spec.txt").string() +
                             "\" --missing NA --iters 60 --burn-in 10 --seed 17";
  const std::vector<std::pair<std::string, std::string>> commands{
      {"infer", "infer" + common + " --chains 2"},
      {"complete", "complete" + common},
      {"heldout", "complete" + common + " --heldout 0.1 --splits 2"},
      {"explore", "explore" + common + " --bias --top 5"},
  };
  std::string failures;
  int compared = 0;
  for (const auto& [name, args] : commands) {
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / (name + std::to_string(rep));
      const std::string cmd = "\"" + exe + "\" " + args + " -o \"" + out.string() + "\" > \"" +
                              (dir / (name + std::to_string(rep) + ".stdout")).string() + "\"";
      if (std::system(cmd.c_str()) != 0) failures += name + " exited non-zero; ";
    }
    for (const auto& entry : fs::directory_iterator(dir / (name + "0"))) {
      const fs::path other = dir / (name + "1") / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || read_text_file(entry.path()) != read_text_file(other)) {
        failures += name + "/" + entry.path().filename().string() + " differs; ";
      }
    }
    if (read_text_file(dir / (name + "0.stdout")) != read_text_file(dir / (name + "1.stdout"))) {
      failures += name + " stdout differs; ";
    }
  }
  return {failures.empty() && compared >= 10,
          std::to_string(compared) + " output files compared across 4 subcommand configurations" +
              (failures.empty() ? "; all byte-identical" : "; " + failures)};
}

// 9. Log joint of the all-real model against a linear-Gaussian IBP joint.
Outcome degenerate_equivalence() {
  auto syn = fixture::synthetic_mixed(60, 3, 909);
  DataMatrix data = as_all_real(syn.data);
  for (auto& s : data.specs) s.transform = {1.0, 0.0};
  for (Eigen::Index n = 0; n < 60; n += 5) data.missing(n, (n / 5) % 6) = true;

  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    Hyperparams hp;
    hp.alpha = 2.0 + seed;
    hp.sigma_b2 = 0.5 * seed;
    hp.sigma_y2 = 0.7;
    hp.iterations = 40;
    hp.burn_in = 5;
    hp.seed = seed;
    ChainResult r = run_chain(data, hp);
    const double got = log_joint(r.state, data, hp);
    const double want = oracle::linear_gaussian_log_joint(r.state.Z, r.state.B, r.state.Y, data.cells, data.missing,
                                                          hp.alpha, hp.sigma_b2, hp.sigma_y2, hp.sigma_u2);
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-9, "max |log joint - linear-Gaussian oracle| = " + fmt(worst) + " over 3 chains (tol 1e-9)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: glfm_acceptance <path-to-glfm> [criterion...]\n";
    return 2;
  }
  const std::string exe = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"collapsed-oracle equivalence", collapsed_oracle},
      {"natural-parameter integrity", natural_parameters},
      {"likelihood normalization", normalization},
      {"truncated-normal correctness", truncated_normal},
      {"prior recovery", prior_recovery},
      {"synthetic recovery", synthetic_recovery},
      {"complexity scaling", complexity_scaling},
      {"CLI determinism", [&] { return cli_determinism(exe); }},
      {"degenerate-model equivalence", degenerate_equivalence},
  };
  std::vector<bool> selected(criteria.size(), argc == 2);
  for (int a = 2; a < argc; ++a) {
    const int i = std::atoi(argv[a]);
    if (i >= 1 && i <= static_cast<int>(criteria.size())) selected[i - 1] = true;
  }
  int failed = 0;
  int run = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++run;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %d criteria passed\n", run - failed, run);
  return failed == 0 ? 0 : 1;
}
