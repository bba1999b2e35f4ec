#include "glfm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace glfm {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> parse_number(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<long long> parse_integer(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  long long value = 0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Assigns category indices for one discrete column. Integer codes already in
// 1..R_d are kept as-is; otherwise ordinal columns with numeric labels are
// sorted numerically and everything else uses first-appearance order.
std::map<std::string, int> encode_labels(const std::vector<std::string>& seen,
                                         AttributeSpec& spec) {
  const int R = spec.cardinality;
  std::map<std::string, int> index;

  const bool all_codes = std::all_of(seen.begin(), seen.end(), [&](const std::string& s) {
    const auto v = parse_integer(s);
    return v && *v >= 1 && *v <= R;
  });
  if (all_codes) {
    spec.labels.clear();
    for (int r = 1; r <= R; ++r) spec.labels.push_back(std::to_string(r));
    for (const auto& s : seen) index[s] = static_cast<int>(*parse_integer(s));
    return index;
  }

  if (static_cast<int>(seen.size()) > R) {
    throw DataError("attribute '" + spec.name + "' has " + std::to_string(seen.size()) +
                    " distinct labels but declares R_d = " + std::to_string(R));
  }

  std::vector<std::string> order = seen;
  const bool numeric = std::all_of(seen.begin(), seen.end(),
                                   [](const std::string& s) { return parse_number(s).has_value(); });
  if (spec.kind == AttributeKind::Ordinal && numeric) {
    std::stable_sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  spec.labels = order;
  for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = static_cast<int>(i) + 1;
  return index;
}

}  // namespace

bool is_finite_discrete(AttributeKind kind) {
  return kind == AttributeKind::Categorical || kind == AttributeKind::Ordinal;
}

bool is_continuous(AttributeKind kind) {
  return kind == AttributeKind::Real || kind == AttributeKind::PositiveReal;
}

int pseudo_columns(const AttributeSpec& spec) {
  return spec.kind == AttributeKind::Categorical ? spec.cardinality : 1;
}

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Real: return "real";
    case AttributeKind::PositiveReal: return "positivereal";
    case AttributeKind::Categorical: return "categorical";
    case AttributeKind::Ordinal: return "ordinal";
    case AttributeKind::Count: return "count";
  }
  return "real";
}

std::string_view to_string(Preprocess p) {
  switch (p) {
    case Preprocess::None: return "none";
    case Preprocess::Log1p: return "log1p";
    case Preprocess::ReflectedLog1p: return "reflected-log1p";
  }
  return "none";
}

AttributeKind parse_kind(std::string_view tag) {
  const std::string t = lower(trim(tag));
  if (t == "real" || t == "r" || t == "g") return AttributeKind::Real;
  if (t == "positivereal" || t == "positive-real" || t == "p") return AttributeKind::PositiveReal;
  if (t == "categorical" || t == "c") return AttributeKind::Categorical;
  if (t == "ordinal" || t == "o") return AttributeKind::Ordinal;
  if (t == "count" || t == "n") return AttributeKind::Count;
  throw DataError("unknown attribute kind '" + std::string(tag) + "'");
}

Preprocess parse_preprocess(std::string_view tag) {
  const std::string t = lower(trim(tag));
  if (t == "none" || t.empty()) return Preprocess::None;
  if (t == "log1p") return Preprocess::Log1p;
  if (t == "reflected-log1p") return Preprocess::ReflectedLog1p;
  throw DataError("unknown preprocess '" + std::string(tag) + "'");
}

double apply_preprocess(Preprocess p, double raw) {
  switch (p) {
    case Preprocess::None: return raw;
    case Preprocess::Log1p:
      if (raw <= -1.0) throw DataError("log1p preprocess needs values > -1");
      return std::log1p(raw);
    case Preprocess::ReflectedLog1p:
      if (raw >= 101.0) throw DataError("reflected-log1p preprocess needs values < 101");
      return std::log1p(100.0 - raw);
  }
  return raw;
}

double invert_preprocess(Preprocess p, double value) {
  switch (p) {
    case Preprocess::None: return value;
    case Preprocess::Log1p: return std::expm1(value);
    case Preprocess::ReflectedLog1p: return 100.0 - std::expm1(value);
  }
  return value;
}

double preprocess_jacobian(Preprocess p, double raw) {
  switch (p) {
    case Preprocess::None: return 1.0;
    case Preprocess::Log1p: return 1.0 / (raw + 1.0);
    case Preprocess::ReflectedLog1p: return 1.0 / (101.0 - raw);
  }
  return 1.0;
}

std::vector<AttributeSpec> parse_attribute_spec(std::string_view document) {
  std::vector<AttributeSpec> specs;
  std::istringstream in{std::string(document)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_commas(t);
    if (fields.size() < 2 || fields[0].empty()) {
      throw DataError("spec line " + std::to_string(line_no) + ": expected 'name,kind[,R_d][,preprocess]'");
    }
    AttributeSpec spec;
    spec.name = fields[0];
    spec.kind = parse_kind(fields[1]);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      if (fields[i].empty()) continue;
      if (const auto r = parse_integer(fields[i])) {
        if (!is_finite_discrete(spec.kind)) {
          throw DataError("spec line " + std::to_string(line_no) + ": R_d given for " +
                          std::string(to_string(spec.kind)) + " attribute '" + spec.name + "'");
        }
        if (*r < 2) {
          throw DataError("spec line " + std::to_string(line_no) + ": R_d must be >= 2");
        }
        spec.cardinality = static_cast<int>(*r);
      } else {
        spec.preprocess = parse_preprocess(fields[i]);
        if (!is_continuous(spec.kind) && spec.preprocess != Preprocess::None) {
          throw DataError("spec line " + std::to_string(line_no) +
                          ": preprocessing applies only to continuous attributes");
        }
      }
    }
    if (is_finite_discrete(spec.kind) && spec.cardinality == 0) {
      throw DataError("spec line " + std::to_string(line_no) + ": " +
                      std::string(to_string(spec.kind)) + " attribute '" + spec.name + "' needs R_d");
    }
    specs.push_back(std::move(spec));
  }
  if (specs.empty()) throw DataError("spec document declares no attributes");
  return specs;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.push_back(std::move(row));
    row.clear();
  };

  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;  // UTF-8 BOM
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field in CSV");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string format_csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

DataMatrix load_dataset(std::string_view csv, std::vector<AttributeSpec> specs,
                        const LoadOptions& options) {
  auto table = parse_csv(csv);
  if (table.size() < 2) throw DataError("CSV needs a header row and at least one data row");
  const auto D = static_cast<Eigen::Index>(specs.size());
  if (static_cast<Eigen::Index>(table[0].size()) != D) {
    throw DataError("CSV header has " + std::to_string(table[0].size()) + " columns but the spec declares " +
                    std::to_string(D));
  }
  const auto N = static_cast<Eigen::Index>(table.size() - 1);

  DataMatrix data;
  data.cells = Eigen::MatrixXd::Zero(N, D);
  data.missing = BoolMatrix::Constant(N, D, false);
  data.raw.assign(table.begin() + 1, table.end());

  auto is_missing = [&](const std::string& cell) {
    const std::string t = trim(cell);
    return t.empty() || (options.missing_sentinel && t == trim(*options.missing_sentinel));
  };

  for (Eigen::Index n = 0; n < N; ++n) {
    if (static_cast<Eigen::Index>(data.raw[n].size()) != D) {
      throw DataError("CSV row " + std::to_string(n + 2) + " has " + std::to_string(data.raw[n].size()) +
                      " fields, expected " + std::to_string(D));
    }
  }

  for (Eigen::Index d = 0; d < D; ++d) {
    AttributeSpec& spec = specs[d];
    const auto where = [&](Eigen::Index n) {
      return "row " + std::to_string(n + 2) + ", column '" + spec.name + "'";
    };

    if (is_finite_discrete(spec.kind)) {
      std::vector<std::string> seen;
      for (Eigen::Index n = 0; n < N; ++n) {
        const std::string& cell = data.raw[n][d];
        if (is_missing(cell)) continue;
        const std::string label = trim(cell);
        if (std::find(seen.begin(), seen.end(), label) == seen.end()) seen.push_back(label);
      }
      const auto index = encode_labels(seen, spec);
      for (Eigen::Index n = 0; n < N; ++n) {
        const std::string& cell = data.raw[n][d];
        if (is_missing(cell)) {
          data.missing(n, d) = true;
          continue;
        }
        data.cells(n, d) = index.at(trim(cell));
      }
      continue;
    }

    for (Eigen::Index n = 0; n < N; ++n) {
      const std::string& cell = data.raw[n][d];
      if (is_missing(cell)) {
        data.missing(n, d) = true;
        continue;
      }
      const auto value = parse_number(cell);
      if (!value) throw DataError("non-numeric value '" + cell + "' at " + where(n));
      double v = *value;
      if (spec.kind == AttributeKind::Count) {
        if (v != std::floor(v) || v < 0.0) {
          throw DataError("count value '" + cell + "' is not a nonnegative integer at " + where(n));
        }
      } else {
        v = apply_preprocess(spec.preprocess, v);
        if (spec.kind == AttributeKind::PositiveReal && !(v > 0.0)) {
          throw DataError("positive-real value '" + cell + "' is not > 0 after preprocessing at " + where(n));
        }
      }
      data.cells(n, d) = v;
    }
  }

  data.specs = std::move(specs);
  if (options.fit_transforms) fit_all_transforms(data);
  return data;
}

TransformParams fit_transform_params(
    const Eigen::Ref<const Eigen::VectorXd>& column,
    const Eigen::Ref<const Eigen::Matrix<bool, Eigen::Dynamic, 1>>& missing,
    AttributeKind kind) {
  if (is_finite_discrete(kind)) return {1.0, 0.0};

  std::vector<double> values;
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    if (!missing(i)) values.push_back(column(i));
  }
  if (values.size() < 2) throw DataError("need at least two observed values to fit transform parameters");

  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw DataError("degenerate column: zero standard deviation");

  // The forward map is x = f(w * y + mu), so w carries the data scale and
  // pseudo-observations come out roughly standardized.
  if (kind == AttributeKind::Real) return {sd, mean};
  const double min = *std::min_element(values.begin(), values.end());
  return {sd / 2.0, min};
}

void fit_all_transforms(DataMatrix& data) {
  for (Eigen::Index d = 0; d < data.cols(); ++d) {
    AttributeSpec& spec = data.specs[d];
    try {
      spec.transform = fit_transform_params(data.cells.col(d), data.missing.col(d), spec.kind);
    } catch (const DataError&) {
      // Constant or near-empty column: keep the scale, centre on the data.
      double anchor = 0.0;
      for (Eigen::Index n = 0; n < data.rows(); ++n) {
        if (!data.missing(n, d)) {
          anchor = data.cells(n, d);
          break;
        }
      }
      spec.transform = {1.0, spec.kind == AttributeKind::Real ? anchor : 0.0};
    }
  }
}

DataMatrix as_all_real(const DataMatrix& data) {
  DataMatrix out = data;
  for (auto& spec : out.specs) {
    spec.kind = AttributeKind::Real;
    spec.cardinality = 0;
    spec.labels.clear();
    spec.preprocess = Preprocess::None;
  }
  fit_all_transforms(out);
  return out;
}

std::string decode_cell(const AttributeSpec& spec, double encoded) {
  switch (spec.kind) {
    case AttributeKind::Categorical:
    case AttributeKind::Ordinal: {
      const auto r = static_cast<long long>(std::llround(encoded));
      if (r >= 1 && r <= static_cast<long long>(spec.labels.size())) return spec.labels[r - 1];
      return std::to_string(r);
    }
    case AttributeKind::Count:
      return std::to_string(static_cast<long long>(std::llround(encoded)));
    case AttributeKind::Real:
    case AttributeKind::PositiveReal:
      return format_double(invert_preprocess(spec.preprocess, encoded));
  }
  return format_double(encoded);
}

std::string format_value(const AttributeSpec& spec, double value) {
  if (is_continuous(spec.kind)) return format_double(value);
  return decode_cell(spec, value);
}

}  // namespace glfm
