#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stratus/pipeline.hpp"

namespace stratus::report {

struct BundleFile {
    std::string path;  // relative, '/' separated
    std::string content;
};

struct Bundle {
    std::vector<BundleFile> files;  // manifest order
    std::vector<std::string> notes;
};

std::string sha256_hex(std::string_view bytes);

// Quotes a field when it holds a comma, quote, newline or edge whitespace.
std::string csv_field(std::string_view text);

std::string comparisons_csv(const std::vector<inference::ComparisonSet>& sets);
std::string pairs_csv(const std::vector<inference::ComparisonSet>& sets);
std::string variance_components_csv(const mixed::VarianceComponents& vc);
std::string blup_csv(const mixed::BlupTable& table);
std::string ammi_csv(const stability::StabilityResult& s);
std::string fw_er_csv(const stability::StabilityResult& s);
std::string gge_csv(const stability::StabilityResult& s);

std::string anova_json(const engine::AnovaTable& table);
std::string diagnostics_json(const diagnostics::DiagnosticReport& report);
std::string recommendation_json(const decision::Recommendation& rec);
std::string analysis_json(const pipeline::AnalysisResult& result);
std::string error_json(ErrorCode code, std::string_view message);

std::string report_text(const pipeline::AnalysisResult& result);

// Files of one analysis under `prefix` ("" or "Year=2021/").
void add_analysis(Bundle& bundle, const pipeline::AnalysisResult& result, const std::string& prefix);

// Single analysis at the root, or one subdirectory per group.
Bundle build_bundle(const std::vector<pipeline::GroupOutcome>& outcomes, bool grouped);

// "sha256  bytes  path" per file, then "# note" lines.
std::string manifest_text(const Bundle& bundle);

// Writes every file and manifest.txt. A directory holding a previous bundle
// has the files listed in its manifest replaced; any other non-empty
// directory is refused with IoError.
void write_bundle(const Bundle& bundle, const std::filesystem::path& out_dir);

}  // namespace stratus::report
