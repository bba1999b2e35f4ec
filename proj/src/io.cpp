#include "glfm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace glfm {

using nlohmann::json;
using Eigen::Index;

namespace {

constexpr std::string_view kFormat = "glfm-state/1";

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

json hyperparams_json(const Hyperparams& hp) {
  return json{{"alpha", hp.alpha},
              {"sigma_b2", hp.sigma_b2},
              {"sigma_y2", hp.sigma_y2},
              {"sigma_u2", hp.sigma_u2},
              {"sigma_theta2", hp.sigma_theta2},
              {"beta1", hp.beta1},
              {"beta2", hp.beta2},
              {"k_max", hp.k_max},
              {"k_init", hp.k_init},
              {"bias", hp.bias},
              {"sample_variance", hp.sample_variance},
              {"iterations", hp.iterations},
              {"burn_in", hp.burn_in},
              {"seed", hp.seed},
              {"birth_mode", to_string(hp.birth_mode)},
              {"max_births", hp.max_births}};
}

Hyperparams hyperparams_from(const json& j) {
  Hyperparams hp;
  hp.alpha = j.at("alpha").get<double>();
  hp.sigma_b2 = j.at("sigma_b2").get<double>();
  hp.sigma_y2 = j.at("sigma_y2").get<double>();
  hp.sigma_u2 = j.at("sigma_u2").get<double>();
  hp.sigma_theta2 = j.at("sigma_theta2").get<double>();
  hp.beta1 = j.at("beta1").get<double>();
  hp.beta2 = j.at("beta2").get<double>();
  hp.k_max = j.at("k_max").get<int>();
  hp.k_init = j.at("k_init").get<int>();
  hp.bias = j.at("bias").get<bool>();
  hp.sample_variance = j.at("sample_variance").get<bool>();
  hp.iterations = j.at("iterations").get<int>();
  hp.burn_in = j.at("burn_in").get<int>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.birth_mode = parse_birth_mode(j.at("birth_mode").get<std::string>());
  hp.max_births = j.at("max_births").get<int>();
  return hp;
}

}  // namespace

std::string to_string(BirthMode mode) { return mode == BirthMode::PriorOnly ? "prior" : "posterior"; }

BirthMode parse_birth_mode(std::string_view tag) {
  if (tag == "posterior") return BirthMode::TruncatedPosterior;
  if (tag == "prior") return BirthMode::PriorOnly;
  throw std::invalid_argument("unknown birth mode '" + std::string(tag) + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string state_to_json(const FittedModel& model, double log_joint) {
  const LatentState& s = model.state;
  json j;
  j["format"] = kFormat;
  j["hyperparams"] = hyperparams_json(model.hp);

  json attrs = json::array();
  for (const auto& spec : model.specs) {
    attrs.push_back({{"name", spec.name},
                     {"kind", std::string(to_string(spec.kind))},
                     {"cardinality", spec.cardinality},
                     {"preprocess", std::string(to_string(spec.preprocess))},
                     {"w", spec.transform.w},
                     {"mu", spec.transform.mu},
                     {"labels", spec.labels}});
  }
  j["attributes"] = std::move(attrs);
  j["bias"] = s.bias;
  j["K_plus"] = s.active_features();
  j["log_joint"] = log_joint;

  json zrows = json::array();
  for (Index n = 0; n < s.rows(); ++n) {
    std::string bits(static_cast<std::size_t>(s.num_features()), '0');
    for (Index k = 0; k < s.num_features(); ++k) {
      if (s.Z(n, k) > 0.5) bits[static_cast<std::size_t>(k)] = '1';
    }
    zrows.push_back(std::move(bits));
  }
  j["Z"] = std::move(zrows);

  json weights = json::array();
  for (Index d = 0; d < s.num_dims(); ++d) {
    json block = json::array();
    const Eigen::MatrixXd b = s.B_block(d);
    for (Index k = 0; k < b.rows(); ++k) {
      block.push_back(std::vector<double>(b.row(k).begin(), b.row(k).end()));
    }
    weights.push_back(std::move(block));
  }
  j["B"] = std::move(weights);
  j["thresholds"] = s.thresholds;
  j["sigma2"] = std::vector<double>(s.sigma2.begin(), s.sigma2.end());
  return j.dump(1) + "\n";
}

FittedModel state_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed state file: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw DataError("unsupported state format");
    FittedModel model;
    model.hp = hyperparams_from(j.at("hyperparams"));

    for (const auto& a : j.at("attributes")) {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      spec.kind = parse_kind(a.at("kind").get<std::string>());
      spec.cardinality = a.at("cardinality").get<int>();
      spec.preprocess = parse_preprocess(a.at("preprocess").get<std::string>());
      spec.transform.w = a.at("w").get<double>();
      spec.transform.mu = a.at("mu").get<double>();
      spec.labels = a.at("labels").get<std::vector<std::string>>();
      model.specs.push_back(std::move(spec));
    }

    LatentState& s = model.state;
    s.bias = j.at("bias").get<bool>();
    layout_columns(s, model.specs);

    const auto zrows = j.at("Z").get<std::vector<std::string>>();
    const Index N = static_cast<Index>(zrows.size());
    const Index K = N > 0 ? static_cast<Index>(zrows.front().size()) : 0;
    s.Z = RowMatrix::Zero(N, K);
    for (Index n = 0; n < N; ++n) {
      if (static_cast<Index>(zrows[n].size()) != K) throw DataError("ragged Z in state file");
      for (Index k = 0; k < K; ++k) {
        const char c = zrows[n][static_cast<std::size_t>(k)];
        if (c != '0' && c != '1') throw DataError("Z entries must be 0 or 1");
        s.Z(n, k) = c == '1' ? 1.0 : 0.0;
      }
    }

    const Index S = s.offsets.back();
    s.B = Eigen::MatrixXd::Zero(K, S);
    const auto& weights = j.at("B");
    if (static_cast<Index>(weights.size()) != s.num_dims()) throw DataError("weight blocks do not match attributes");
    for (Index d = 0; d < s.num_dims(); ++d) {
      const auto rows = weights[d].get<std::vector<std::vector<double>>>();
      if (static_cast<Index>(rows.size()) != K) throw DataError("weight rows do not match Z");
      for (Index k = 0; k < K; ++k) {
        if (static_cast<Index>(rows[k].size()) != s.width(d)) throw DataError("weight width mismatch");
        for (Index c = 0; c < s.width(d); ++c) s.B(k, s.offsets[d] + c) = rows[k][c];
      }
    }

    s.thresholds = j.at("thresholds").get<std::vector<std::vector<double>>>();
    const auto sig = j.at("sigma2").get<std::vector<double>>();
    if (static_cast<Index>(s.thresholds.size()) != s.num_dims() || static_cast<Index>(sig.size()) != s.num_dims()) {
      throw DataError("auxiliary parameters do not match attributes");
    }
    s.sigma2 = Eigen::Map<const Eigen::VectorXd>(sig.data(), static_cast<Index>(sig.size()));
    s.Y = RowMatrix::Zero(N, S);
    s.pinned.assign(static_cast<std::size_t>(N), false);
    rebuild_natural_params(s, model.hp.sigma_b2);
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed state file: ") + e.what());
  }
}

std::string trace_line(const TraceRecord& record) {
  json j{{"iter", record.iteration},
         {"K_plus", record.k_plus},
         {"log_joint", record.log_joint},
         {"sigma2", std::vector<double>(record.sigma2.begin(), record.sigma2.end())}};
  return j.dump() + "\n";
}

std::string completed_csv(const std::vector<AttributeSpec>& specs, const CompletionResult& result) {
  std::string out;
  for (std::size_t d = 0; d < specs.size(); ++d) {
    if (d) out += ',';
    out += format_csv_field(specs[d].name);
  }
  out += '\n';
  for (const auto& row : result.text) {
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d) out += ',';
      out += format_csv_field(row[d]);
    }
    out += '\n';
  }
  return out;
}

std::string patterns_csv(const PatternSummary& summary, bool bias) {
  std::string out = "pattern,probability,rows\n";
  for (const auto& p : summary.patterns) {
    out += p.label(bias) + ',' + shortest(p.empirical_prob) + ',' + std::to_string(p.rows) + '\n';
  }
  return out;
}

std::string feature_probs_csv(const PatternSummary& summary) {
  std::string out = "feature,probability\n";
  for (Index k = 0; k < summary.feature_probs.size(); ++k) {
    out += std::to_string(k + 1) + ',' + shortest(summary.feature_probs(k)) + '\n';
  }
  return out;
}

std::string pdfs_csv(const std::vector<PdfTable>& tables) {
  std::string out = "pattern,attribute,value,density\n";
  for (const auto& t : tables) {
    const std::string prefix = t.pattern + ',' + format_csv_field(t.attribute) + ',';
    for (const auto& pt : t.points) out += prefix + shortest(pt.value) + ',' + shortest(pt.density) + '\n';
  }
  return out;
}

std::string scores_json(double heldout_fraction, const std::vector<HeldoutScore>& splits,
                        const std::vector<AttributeSpec>& specs) {
  json j;
  j["heldout_fraction"] = heldout_fraction;
  json entries = json::array();
  double mean = 0.0;
  std::vector<double> dim_sum(specs.size(), 0.0);
  std::vector<int> dim_n(specs.size(), 0);
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& sc = splits[i];
    json per = json::object();
    for (std::size_t d = 0; d < specs.size(); ++d) {
      if (sc.per_dim_count[d] == 0) continue;
      per[specs[d].name] = sc.per_dim[d];
      dim_sum[d] += sc.per_dim[d];
      ++dim_n[d];
    }
    entries.push_back({{"split", i}, {"average", sc.average}, {"cells", sc.count}, {"per_dimension", per}});
    mean += sc.average;
  }
  j["splits"] = std::move(entries);
  j["mean"] = splits.empty() ? 0.0 : mean / static_cast<double>(splits.size());
  json per = json::object();
  for (std::size_t d = 0; d < specs.size(); ++d) {
    if (dim_n[d] > 0) per[specs[d].name] = dim_sum[d] / dim_n[d];
  }
  j["per_dimension_mean"] = std::move(per);
  return j.dump(1) + "\n";
}

}  // namespace glfm
