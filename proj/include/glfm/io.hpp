#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glfm/tasks.hpp"

namespace glfm {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// JSON document with hyperparameters, attribute metadata and the latent
// sample. Loading rebuilds P and lambda; pseudo-observations come back as
// zeros since only Z, B, thresholds and variances are stored.
std::string state_to_json(const FittedModel& model, double log_joint);
FittedModel state_from_json(std::string_view text);

// One NDJSON line, newline included.
std::string trace_line(const TraceRecord& record);

std::string completed_csv(const std::vector<AttributeSpec>& specs, const CompletionResult& result);
std::string patterns_csv(const PatternSummary& summary, bool bias);
std::string feature_probs_csv(const PatternSummary& summary);

struct PdfTable {
  std::string pattern;
  std::string attribute;
  std::vector<PdfPoint> points;
};
std::string pdfs_csv(const std::vector<PdfTable>& tables);

std::string scores_json(double heldout_fraction, const std::vector<HeldoutScore>& splits,
                        const std::vector<AttributeSpec>& specs);

std::string to_string(BirthMode mode);
BirthMode parse_birth_mode(std::string_view tag);

}  // namespace glfm
