#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace glfm {

// Raised for malformed input documents: spec files, CSV tables, labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AttributeKind { Real, PositiveReal, Categorical, Ordinal, Count };

// Optional transform applied to raw values before modeling.
//   Log1p:          g(x) = log(x + 1)
//   ReflectedLog1p: g(x) = log((100 - x) + 1)
enum class Preprocess { None, Log1p, ReflectedLog1p };

struct TransformParams {
  double w = 1.0;
  double mu = 0.0;
};

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::Real;
  int cardinality = 0;  // R_d, discrete-finite kinds only
  TransformParams transform;
  Preprocess preprocess = Preprocess::None;
  // labels[r - 1] is the raw text of category r. May be shorter than
  // cardinality when some categories never appear in the data.
  std::vector<std::string> labels;
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// N x D table of encoded observations. Categorical and ordinal cells hold
// 1-based category indices; continuous cells hold preprocessed values.
struct DataMatrix {
  Eigen::MatrixXd cells;
  BoolMatrix missing;
  std::vector<AttributeSpec> specs;
  // Source text of every cell, kept so that unchanged cells can be written
  // back byte for byte. Empty when the matrix was built in memory.
  std::vector<std::vector<std::string>> raw;

  Eigen::Index rows() const { return cells.rows(); }
  Eigen::Index cols() const { return cells.cols(); }
  Eigen::Index missing_count() const { return missing.count(); }
};

bool is_finite_discrete(AttributeKind kind);
bool is_continuous(AttributeKind kind);

// Number of pseudo-observation columns used by an attribute (R_d for
// categorical, 1 otherwise).
int pseudo_columns(const AttributeSpec& spec);

std::string_view to_string(AttributeKind kind);
std::string_view to_string(Preprocess p);
AttributeKind parse_kind(std::string_view tag);
Preprocess parse_preprocess(std::string_view tag);

double apply_preprocess(Preprocess p, double raw);
double invert_preprocess(Preprocess p, double value);
// |d g / d raw| evaluated at a raw value.
double preprocess_jacobian(Preprocess p, double raw);

// One line per attribute: `name,kind[,R_d][,preprocess]`. Blank lines and
// lines starting with '#' are skipped.
std::vector<AttributeSpec> parse_attribute_spec(std::string_view document);

struct LoadOptions {
  // Cells equal to this text are missing, in addition to empty cells.
  std::optional<std::string> missing_sentinel;
  // Fit (w, mu) per column after loading.
  bool fit_transforms = true;
};

// RFC-4180 style table with a header row. Returns rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string format_csv_field(std::string_view field);

DataMatrix load_dataset(std::string_view csv,
                        std::vector<AttributeSpec> specs,
                        const LoadOptions& options = {});

// Throws DataError for degenerate columns (fewer than two values or zero
// spread).
TransformParams fit_transform_params(
    const Eigen::Ref<const Eigen::VectorXd>& column,
    const Eigen::Ref<const Eigen::Matrix<bool, Eigen::Dynamic, 1>>& missing,
    AttributeKind kind);

// Fits every column, falling back to w = 1 and a centred mu when a column is
// constant.
void fit_all_transforms(DataMatrix& data);

// Same cells reinterpreted as real-valued attributes (category indices and
// counts become plain numbers). Used for the linear-Gaussian baseline.
DataMatrix as_all_real(const DataMatrix& data);

// Text of an encoded value in the attribute's original units.
std::string decode_cell(const AttributeSpec& spec, double encoded);
// Text of a value already in original units.
std::string format_value(const AttributeSpec& spec, double value);

}  // namespace glfm
