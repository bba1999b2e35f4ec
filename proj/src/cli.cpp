#include "glfm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "glfm/io.hpp"
#include "glfm/likelihoods.hpp"

namespace glfm {
namespace fs = std::filesystem;
using Eigen::Index;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CommonArgs {
  std::string data_path;
  std::string spec_path;
  std::string out_dir = ".";
  std::string missing;
  std::string birth_mode = "posterior";
  std::string pin_columns;
  std::string pin_value;
  int chains = 1;
  Hyperparams hp;
};

struct CompleteArgs {
  double heldout = 0.0;
  int splits = 1;
  int avg_last = 1;
  bool all_real = false;
};

struct ExploreArgs {
  int top = 10;
  int grid_points = 200;
  std::string state_path;
};

void add_common(CLI::App& app, CommonArgs& a) {
  app.add_option("--alpha", a.hp.alpha, "IBP concentration")->capture_default_str();
  app.add_option("--sigma-b2", a.hp.sigma_b2, "weight prior variance")->capture_default_str();
  app.add_option("--sigma-y2", a.hp.sigma_y2, "pseudo-observation variance")->capture_default_str();
  app.add_option("--sigma-u2", a.hp.sigma_u2, "continuous observation noise")->capture_default_str();
  app.add_option("--sigma-theta2", a.hp.sigma_theta2, "ordinal threshold prior variance")->capture_default_str();
  app.add_option("--beta1", a.hp.beta1, "inverse-gamma shape")->capture_default_str();
  app.add_option("--beta2", a.hp.beta2, "inverse-gamma rate")->capture_default_str();
  app.add_option("--kmax", a.hp.k_max, "feature cap")->capture_default_str();
  app.add_option("--kinit", a.hp.k_init, "initial feature count")->capture_default_str();
  app.add_flag("--bias", a.hp.bias, "add an always-active feature");
  app.add_flag("--sample-variance", a.hp.sample_variance, "resample pseudo-observation variances");
  app.add_option("--iters", a.hp.iterations, "Gibbs sweeps")->capture_default_str();
  app.add_option("--burn-in", a.hp.burn_in, "sweeps discarded before averaging")->capture_default_str();
  app.add_option("--seed", a.hp.seed, "random seed")->capture_default_str();
  app.add_option("--birth-mode", a.birth_mode, "posterior or prior")
      ->check(CLI::IsMember({"posterior", "prior"}))
      ->capture_default_str();
  app.add_option("--max-births", a.hp.max_births, "largest number of features born per row")->capture_default_str();
  app.add_option("--missing", a.missing, "extra text that marks a missing cell");
  app.add_option("--chains", a.chains, "independent chains; the best final log joint wins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--pin-columns", a.pin_columns, "comma-separated columns used for pinning rows");
  app.add_option("--pin-value", a.pin_value, "rows where every pin column equals this text get no features");
}

void add_io(CLI::App& sub, CommonArgs& a, bool spec_required) {
  sub.add_option("data", a.data_path, "input CSV")->required();
  auto* spec = sub.add_option("--spec", a.spec_path, "attribute spec file");
  if (spec_required) spec->required();
  sub.add_option("-o,--out", a.out_dir, "output directory")->capture_default_str();
}

Hyperparams finalize_hp(CommonArgs& a) {
  a.hp.birth_mode = parse_birth_mode(a.birth_mode);
  try {
    a.hp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return a.hp;
}

DataMatrix load(const CommonArgs& a, std::vector<AttributeSpec> specs, bool fit) {
  LoadOptions opts;
  if (!a.missing.empty()) opts.missing_sentinel = a.missing;
  opts.fit_transforms = fit;
  return load_dataset(read_text_file(a.data_path), std::move(specs), opts);
}

DataMatrix load(const CommonArgs& a) {
  return load(a, parse_attribute_spec(read_text_file(a.spec_path)), true);
}

std::vector<bool> pinned_rows(const CommonArgs& a, const DataMatrix& data) {
  if (a.pin_columns.empty()) return {};
  std::vector<Index> cols;
  std::stringstream ss(a.pin_columns);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto it = std::find_if(data.specs.begin(), data.specs.end(), [&](const auto& s) { return s.name == name; });
    if (it == data.specs.end()) throw UsageError("unknown pin column '" + name + "'");
    cols.push_back(it - data.specs.begin());
  }
  std::vector<bool> pinned(static_cast<std::size_t>(data.rows()), false);
  for (Index n = 0; n < data.rows(); ++n) {
    pinned[n] = std::all_of(cols.begin(), cols.end(), [&](Index d) {
      return !data.missing(n, d) && !data.raw.empty() && data.raw[n][d] == a.pin_value;
    });
  }
  return pinned;
}

fs::path prepare_out(const CommonArgs& a) {
  fs::path out(a.out_dir);
  fs::create_directories(out);
  return out;
}

std::string trace_text(const std::vector<TraceRecord>& trace) {
  std::string text;
  for (const auto& rec : trace) text += trace_line(rec);
  return text;
}

double final_log_joint(const ChainResult& chain, const DataMatrix& data, const Hyperparams& hp) {
  return chain.trace.empty() ? log_joint(chain.state, data, hp) : chain.trace.back().log_joint;
}

void report(const LatentState& state, double lj) {
  std::ostringstream line;
  line.precision(10);
  line << "K_plus=" << state.active_features() << " log_joint=" << lj << '\n';
  std::cout << line.str();
}

int cmd_infer(CommonArgs& a) {
  const Hyperparams hp = finalize_hp(a);
  const DataMatrix data = load(a);
  ChainOptions opts;
  opts.pinned = pinned_rows(a, data);
  ChainResult chain = infer(data, hp, a.chains, opts);
  const double lj = final_log_joint(chain, data, hp);

  const fs::path out = prepare_out(a);
  FittedModel model{data.specs, hp, std::move(chain.state)};
  write_text_file(out / "state.json", state_to_json(model, lj));
  write_text_file(out / "trace.ndjson", trace_text(chain.trace));
  report(model.state, lj);
  return 0;
}

int cmd_complete(CommonArgs& a, const CompleteArgs& c) {
  const Hyperparams hp = finalize_hp(a);
  if (!(c.heldout >= 0.0 && c.heldout < 1.0)) throw UsageError("--heldout must be in [0, 1)");
  if (c.splits < 1) throw UsageError("--splits must be positive");
  if (c.avg_last < 1 || c.avg_last > std::max(1, hp.iterations - hp.burn_in)) {
    throw UsageError("--avg-last must be between 1 and the number of post-burn-in sweeps");
  }

  DataMatrix data = load(a);
  std::vector<bool> integer_coded(static_cast<std::size_t>(data.cols()), false);
  if (c.all_real) {
    for (Index d = 0; d < data.cols(); ++d) integer_coded[d] = !is_continuous(data.specs[d].kind);
    data = as_all_real(data);
  }
  const fs::path out = prepare_out(a);
  ChainOptions opts;
  opts.pinned = pinned_rows(a, data);

  if (c.heldout == 0.0) {
    if (data.missing_count() == 0) std::cerr << "warning: no missing cells to complete\n";
    ChainResult chain = infer(data, hp, a.chains, opts);
    const double lj = final_log_joint(chain, data, hp);
    FittedModel model{data.specs, hp, std::move(chain.state)};
    const CompletionResult result = complete_with(model, data);
    write_text_file(out / "completed.csv", completed_csv(data.specs, result));
    write_text_file(out / "state.json", state_to_json(model, lj));
    write_text_file(out / "trace.ndjson", trace_text(chain.trace));
    report(model.state, lj);
    return 0;
  }

  std::vector<HeldoutScore> scores;
  ScoringOptions scoring{integer_coded};
  for (int s = 0; s < c.splits; ++s) {
    Rng mask_rng(derive_seed(hp.seed, 2 * static_cast<std::uint64_t>(s)));
    const BoolMatrix mask = mcar_mask(mask_rng, data, c.heldout);
    if (mask.count() == 0) throw std::runtime_error("split " + std::to_string(s) + " held out no cells");
    const DataMatrix train = hide_cells(data, mask);

    Hyperparams split_hp = hp;
    split_hp.seed = derive_seed(hp.seed, 2 * static_cast<std::uint64_t>(s) + 1);
    ChainOptions split_opts = opts;
    split_opts.keep_last = c.avg_last;
    ChainResult chain = infer(train, split_hp, a.chains, split_opts);
    scores.push_back(predictive_loglik(chain.tail, data.specs, split_hp, data, mask, scoring));

    if (s == 0) {
      const double lj = final_log_joint(chain, train, split_hp);
      FittedModel model{train.specs, split_hp, std::move(chain.state)};
      const CompletionResult result = complete_with(model, train);
      write_text_file(out / "completed.csv", completed_csv(train.specs, result));
      write_text_file(out / "state.json", state_to_json(model, lj));
      write_text_file(out / "trace.ndjson", trace_text(chain.trace));
    }
    std::ostringstream line;
    line.precision(10);
    line << "split " << s << " heldout_loglik=" << scores.back().average << '\n';
    std::cout << line.str();
  }
  write_text_file(out / "scores.json", scores_json(c.heldout, scores, data.specs));
  return 0;
}

std::vector<double> value_grid(const DataMatrix& data, const AttributeSpec& spec, Index d, int points) {
  double lo = kInf, hi = -kInf;
  for (Index n = 0; n < data.rows(); ++n) {
    if (data.missing(n, d)) continue;
    const double v = invert_preprocess(spec.preprocess, data.cells(n, d));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo < hi)) {
    const double centre = std::isfinite(lo) ? lo : invert_preprocess(spec.preprocess, spec.transform.mu);
    const double half = std::max(3.0 * std::abs(spec.transform.w), 1.0);
    lo = centre - half;
    hi = centre + half;
  }
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  if (spec.kind == AttributeKind::PositiveReal && spec.preprocess == Preprocess::None) lo = std::max(lo, 1e-9);
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

long long count_limit(const DataMatrix& data, Index d) {
  double top = 0.0;
  for (Index n = 0; n < data.rows(); ++n) {
    if (!data.missing(n, d)) top = std::max(top, data.cells(n, d));
  }
  return 4 * static_cast<long long>(top) + 100;
}

int cmd_explore(CommonArgs& a, const ExploreArgs& e) {
  if (e.top < 1) throw UsageError("--top must be positive");
  if (e.grid_points < 2) throw UsageError("--grid-points must be at least 2");
  const fs::path out = prepare_out(a);

  FittedModel model;
  DataMatrix data;
  if (!e.state_path.empty()) {
    model = state_from_json(read_text_file(e.state_path));
    data = load(a, model.specs, false);
  } else {
    if (a.spec_path.empty()) throw UsageError("--spec is required unless --state is given");
    const Hyperparams hp = finalize_hp(a);
    data = load(a);
    ChainOptions opts;
    opts.pinned = pinned_rows(a, data);
    ChainResult chain = infer(data, hp, a.chains, opts);
    const double lj = final_log_joint(chain, data, hp);
    model = FittedModel{data.specs, hp, std::move(chain.state)};
    write_text_file(out / "state.json", state_to_json(model, lj));
    write_text_file(out / "trace.ndjson", trace_text(chain.trace));
  }

  const PatternSummary summary = extract_patterns(model.state, e.top);
  std::vector<PdfTable> tables;
  for (const auto& p : summary.patterns) {
    for (Index d = 0; d < model.state.num_dims(); ++d) {
      const AttributeSpec& spec = model.specs[d];
      std::vector<double> grid;
      if (is_continuous(spec.kind)) grid = value_grid(data, spec, d, e.grid_points);
      const long long cmax = spec.kind == AttributeKind::Count ? count_limit(data, d) : 0;
      tables.push_back({p.label(model.state.bias), spec.name, compute_pdf(model, p.bits, d, grid, cmax)});
    }
  }
  write_text_file(out / "patterns.csv", patterns_csv(summary, model.state.bias));
  write_text_file(out / "feature_probs.csv", feature_probs_csv(summary));
  write_text_file(out / "pdfs.csv", pdfs_csv(tables));
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Latent feature modelling of heterogeneous tables", "glfm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option defaults");

  CommonArgs common;
  CompleteArgs comp;
  ExploreArgs expl;
  add_common(app, common);

  auto* infer_cmd = app.add_subcommand("infer", "run the sampler and save the final state");
  add_io(*infer_cmd, common, true);

  auto* complete_cmd = app.add_subcommand("complete", "impute missing cells or score held-out cells");
  add_io(*complete_cmd, common, true);
  complete_cmd->add_option("--heldout", comp.heldout, "fraction of observed cells to hold out")
      ->capture_default_str();
  complete_cmd->add_option("--splits", comp.splits, "independent held-out splits")->capture_default_str();
  complete_cmd->add_option("--avg-last", comp.avg_last, "average the held-out likelihood over the last S states")
      ->capture_default_str();
  complete_cmd->add_flag("--all-real", comp.all_real, "model every attribute as real-valued");

  auto* explore_cmd = app.add_subcommand("explore", "write feature patterns and per-pattern distributions");
  add_io(*explore_cmd, common, false);
  explore_cmd->add_option("--top", expl.top, "number of patterns")->capture_default_str();
  explore_cmd->add_option("--grid-points", expl.grid_points, "grid size for continuous attributes")
      ->capture_default_str();
  explore_cmd->add_option("--state", expl.state_path, "reuse a saved state instead of sampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*infer_cmd) return cmd_infer(common);
    if (*complete_cmd) return cmd_complete(common, comp);
    return cmd_explore(common, expl);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace glfm
