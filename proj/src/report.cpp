#include "stratus/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "stratus/numfmt.hpp"
#include "stratus/plots.hpp"

namespace stratus::report {

using Json = nlohmann::ordered_json;

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json anova_value(const engine::AnovaTable& table) {
    Json rows = Json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"source", r.source},
                        {"df", r.df},
                        {"ss", r.ss},
                        {"ms", r.ms},
                        {"f", optional_number(r.f)},
                        {"p", optional_number(r.p)},
                        {"denominator", r.denominator ? Json(*r.denominator) : Json(nullptr)},
                        {"degenerate", r.degenerate}});
    }
    return rows;
}

Json diagnostics_value(const diagnostics::DiagnosticReport& report) {
    Json strata = Json::array();
    for (const auto& s : report.strata) {
        strata.push_back({{"stratum", s.stratum},
                          {"df", s.df},
                          {"n", s.n},
                          {"shapiro_w", optional_number(s.shapiro_w)},
                          {"shapiro_p", optional_number(s.shapiro_p)},
                          {"levene_f", optional_number(s.levene_f)},
                          {"levene_p", optional_number(s.levene_p)},
                          {"levene_groups", s.levene_factors},
                          {"normality_ok", s.normality_ok},
                          {"homogeneity_ok", s.homogeneity_ok},
                          {"notes", s.notes}});
    }
    return {{"alpha_v", report.alpha_v}, {"overall_valid", report.overall_valid}, {"strata", strata}};
}

Json recommendation_value(const decision::Recommendation& rec) {
    Json conditional = Json::array();
    for (const auto& c : rec.conditional) conditional.push_back({{"condition", c.condition}, {"top_group", c.top_group}});
    return {{"scope", std::string(decision::to_string(rec.scope))},
            {"ranking_basis", std::string(decision::to_string(rec.ranking_basis))},
            {"top_group", rec.top_group},
            {"conditional", conditional},
            {"validity_caveats", rec.validity_caveats},
            {"narrative", rec.narrative}};
}

Json matrix_rows(const linalg::Matrix& m, const std::vector<std::string>& labels) {
    Json out = Json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        std::vector<double> row(m.data.begin() + static_cast<std::ptrdiff_t>(i * m.cols),
                                m.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.cols));
        out.push_back({{"label", labels[i]}, {"scores", row}});
    }
    return out;
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    return out + "\n";
}

// Left-aligned first column, right-aligned numbers.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    auto line = [&](const std::vector<std::string>& r) {
        std::string out;
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string cell = c < r.size() ? r[c] : "";
            if (c) out += "  ";
            out += c == 0 ? fmt::format("{:<{}}", cell, width[c]) : fmt::format("{:>{}}", cell, width[c]);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (const auto& r : rows) out += line(r);
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
    std::string out;
    for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string csv_field(std::string_view text) {
    const bool quote = text.find_first_of(",\"\r\n") != std::string_view::npos ||
                       (!text.empty() && (text.front() == ' ' || text.back() == ' '));
    if (!quote) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string comparisons_csv(const std::vector<inference::ComparisonSet>& sets) {
    std::string out = "set,target,kind,condition,error_stratum,mse,df,hsd,conservative,level,mean,n,letters\n";
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& set = sets[s];
        for (const auto& m : set.means) {
            out += csv_line({std::to_string(s + 1), set.target, std::string(inference::to_string(set.kind)),
                             set.condition, set.error_stratum, fixed(set.mse), std::to_string(set.df_error),
                             fixed(set.hsd), set.conservative ? "true" : "false", m.label, fixed(m.mean),
                             std::to_string(m.n), m.letters});
        }
    }
    return out;
}

std::string pairs_csv(const std::vector<inference::ComparisonSet>& sets) {
    std::string out = "set,a,b,diff,hsd,significant\n";
    for (std::size_t s = 0; s < sets.size(); ++s) {
        for (const auto& p : sets[s].pairs) {
            out += csv_line({std::to_string(s + 1), p.a, p.b, fixed(p.difference), fixed(p.hsd),
                             p.significant ? "true" : "false"});
        }
    }
    return out;
}

std::string variance_components_csv(const mixed::VarianceComponents& vc) {
    std::string out = "term,variance,raw_estimate,clamped,proportion\n";
    const double total = vc.total();
    for (std::size_t i = 0; i < vc.components.size(); ++i) {
        const auto& [term, value] = vc.components[i];
        const bool clamped = std::find(vc.clamped.begin(), vc.clamped.end(), term) != vc.clamped.end();
        out += csv_line({term, fixed(value, 4), fixed(vc.raw[i], 4), clamped ? "true" : "false",
                         fixed(total > 0.0 ? value / total : 0.0, 4)});
    }
    return out;
}

std::string blup_csv(const mixed::BlupTable& table) {
    std::string out = "factor,level,raw_mean,raw_deviation,effect,predicted_mean,shrinkage\n";
    for (const auto& e : table.entries) {
        out += csv_line({table.factor, e.level, fixed(e.raw_mean), fixed(e.raw_deviation), fixed(e.effect),
                         fixed(e.predicted_mean), fixed(table.shrinkage, 5)});
    }
    return out;
}

std::string ammi_csv(const stability::StabilityResult& s) {
    const std::size_t k = s.ammi.singular_values.size();
    std::vector<std::string> header{"type", "label"};
    for (std::size_t c = 0; c < k; ++c) header.push_back(fmt::format("ipca{}", c + 1));
    std::string out = csv_line(header);
    std::vector<std::string> sv{"singular_value", ""};
    std::vector<std::string> ve{"variance_explained", ""};
    for (std::size_t c = 0; c < k; ++c) {
        sv.push_back(fixed(s.ammi.singular_values[c], 6));
        ve.push_back(fixed(s.ammi.variance_explained[c], 6));
    }
    out += csv_line(sv) + csv_line(ve);
    for (std::size_t i = 0; i < s.matrix.genotypes.size(); ++i) {
        std::vector<std::string> row{"genotype", s.matrix.genotypes[i]};
        for (std::size_t c = 0; c < k; ++c) row.push_back(fixed(s.ammi.genotype_scores(i, c), 6));
        out += csv_line(row);
    }
    for (std::size_t j = 0; j < s.matrix.environments.size(); ++j) {
        std::vector<std::string> row{"environment", s.matrix.environments[j]};
        for (std::size_t c = 0; c < k; ++c) row.push_back(fixed(s.ammi.environment_scores(j, c), 6));
        out += csv_line(row);
    }
    return out;
}

std::string fw_er_csv(const stability::StabilityResult& s) {
    std::string out = "genotype,mean,fw_slope,er_slope,er_rss,s2_di\n";
    for (std::size_t i = 0; i < s.fw.size(); ++i) {
        out += csv_line({s.fw[i].genotype, fixed(s.fw[i].intercept, 6), fixed(s.fw[i].slope, 6),
                         fixed(s.er[i].slope, 6), fixed(s.er[i].rss, 6), fixed_or_blank(s.er[i].s2_di, 6)});
    }
    return out;
}

std::string gge_csv(const stability::StabilityResult& s) {
    std::string out = "type,label,pc1,pc2\n";
    for (std::size_t i = 0; i < s.matrix.genotypes.size(); ++i) {
        out += csv_line({"genotype", s.matrix.genotypes[i], fixed(s.gge.genotype_coords(i, 0), 6),
                         fixed(s.gge.genotype_coords(i, 1), 6)});
    }
    for (std::size_t j = 0; j < s.matrix.environments.size(); ++j) {
        out += csv_line({"environment", s.matrix.environments[j], fixed(s.gge.environment_coords(j, 0), 6),
                         fixed(s.gge.environment_coords(j, 1), 6)});
    }
    return out;
}

std::string anova_json(const engine::AnovaTable& table) { return anova_value(table).dump(2) + "\n"; }

std::string diagnostics_json(const diagnostics::DiagnosticReport& report) {
    return diagnostics_value(report).dump(2) + "\n";
}

std::string recommendation_json(const decision::Recommendation& rec) {
    return recommendation_value(rec).dump(2) + "\n";
}

std::string error_json(ErrorCode code, std::string_view message) {
    Json j = {{"error", std::string(to_string(code))}, {"message", std::string(message)}};
    return j.dump() + "\n";
}

std::string analysis_json(const pipeline::AnalysisResult& r) {
    Json j;
    j["design"] = Json::parse(design::to_document(r.design.spec));
    j["observations"] = r.design.n_rows;
    j["replication"] = r.design.replication;
    Json factors = Json::array();
    for (const auto& f : r.design.factors) factors.push_back({{"name", f.factor}, {"levels", f.levels}});
    j["factors"] = factors;
    j["grand_mean"] = r.model.grand_mean;
    j["anova"] = anova_value(r.anova);

    Json tests = Json::array();
    for (const auto& t : r.tests) {
        tests.push_back({{"effect", t.effect.label()}, {"order", t.effect.order}, {"f", t.f}, {"p", t.p},
                         {"significant", t.significant}});
    }
    j["tests"] = tests;
    Json dominant = Json::array();
    for (const auto& d : r.domain.dominant) dominant.push_back(d.label());
    Json excluded = Json::array();
    for (const auto& e : r.domain.excluded) {
        excluded.push_back({{"effect", e.effect.label()}, {"reason", std::string(inference::to_string(e.reason))}});
    }
    j["domain"] = {{"mode", std::string(inference::to_string(r.domain.mode))}, {"dominant", dominant},
                   {"excluded", excluded}};

    Json sets = Json::array();
    for (const auto& s : r.comparisons) {
        Json means = Json::array();
        for (const auto& m : s.means) {
            means.push_back({{"level", m.label}, {"mean", m.mean}, {"n", m.n}, {"letters", m.letters}});
        }
        Json pairs = Json::array();
        for (const auto& p : s.pairs) {
            pairs.push_back({{"a", p.a}, {"b", p.b}, {"diff", p.difference}, {"hsd", p.hsd},
                             {"significant", p.significant}});
        }
        sets.push_back({{"target", s.target},
                        {"kind", std::string(inference::to_string(s.kind))},
                        {"condition", s.condition},
                        {"error_stratum", s.error_stratum},
                        {"mse", s.mse},
                        {"df", s.df_error},
                        {"q", s.q_critical},
                        {"hsd", s.hsd},
                        {"conservative", s.conservative},
                        {"degenerate_mse", s.degenerate_mse},
                        {"means", means},
                        {"pairs", pairs}});
    }
    j["comparisons"] = sets;

    if (r.components) {
        Json comps = Json::array();
        for (std::size_t i = 0; i < r.components->components.size(); ++i) {
            comps.push_back({{"term", r.components->components[i].first},
                             {"variance", r.components->components[i].second},
                             {"raw_estimate", r.components->raw[i]}});
        }
        j["variance_components"] = {{"components", comps}, {"clamped", r.components->clamped}};
    }
    if (r.blups) {
        Json entries = Json::array();
        for (const auto& e : r.blups->entries) {
            entries.push_back({{"level", e.level}, {"raw_mean", e.raw_mean}, {"effect", e.effect},
                               {"predicted_mean", e.predicted_mean}});
        }
        j["blups"] = {{"factor", r.blups->factor},
                      {"shrinkage", r.blups->shrinkage},
                      {"target_variance", r.blups->target_variance},
                      {"mean_error_variance", r.blups->mean_error_variance},
                      {"entries", entries}};
    }
    if (r.heritability) {
        j["heritability"] = {{"h2", r.heritability->h2},
                             {"genotypic_variance", r.heritability->genotypic_variance},
                             {"interaction_variance", r.heritability->interaction_variance},
                             {"residual_variance", r.heritability->residual_variance},
                             {"n_env", r.heritability->n_env},
                             {"n_rep", r.heritability->n_rep}};
    }
    if (r.gxe_significant) j["gxe_significant"] = *r.gxe_significant;
    if (r.stability) {
        const auto& s = *r.stability;
        Json fw = Json::array();
        for (std::size_t i = 0; i < s.fw.size(); ++i) {
            fw.push_back({{"genotype", s.fw[i].genotype},
                          {"slope", s.fw[i].slope},
                          {"intercept", s.fw[i].intercept},
                          {"s2_di", optional_number(s.er[i].s2_di)}});
        }
        j["stability"] = {
            {"environment_index", s.environment_index},
            {"ammi",
             {{"singular_values", s.ammi.singular_values},
              {"variance_explained", s.ammi.variance_explained},
              {"genotype_scores", matrix_rows(s.ammi.genotype_scores, s.matrix.genotypes)},
              {"environment_scores", matrix_rows(s.ammi.environment_scores, s.matrix.environments)}}},
            {"regression", fw},
            {"gge",
             {{"scaling", s.gge.scaling},
              {"singular_values", s.gge.singular_values},
              {"genotype_coords", matrix_rows(s.gge.genotype_coords, s.matrix.genotypes)},
              {"environment_coords", matrix_rows(s.gge.environment_coords, s.matrix.environments)}}}};
    }
    j["diagnostics"] = diagnostics_value(r.diagnostics);
    j["recommendation"] = recommendation_value(r.recommendation);
    j["notes"] = r.notes;
    return j.dump(2) + "\n";
}

std::string report_text(const pipeline::AnalysisResult& r) {
    const auto& spec = r.design.spec;
    std::string out;
    out += fmt::format("Design: {} (response {})\n", design::to_string(spec.kind), spec.response);
    for (const auto& f : r.design.factors) {
        const design::FactorSpec* fs = spec.factor(f.factor);
        std::string placement;
        if (fs && fs->stratum != design::Placement::unit) placement = fmt::format(", {}", design::to_string(fs->stratum));
        const bool is_block = spec.block && spec.block->name == f.factor;
        out += fmt::format("  {}{} ({}{}): {} levels\n", f.factor, is_block ? " [block]" : "",
                           fs ? design::to_string(fs->role) : "fixed", placement, f.levels.size());
    }
    out += fmt::format("Observations: {}, replication per cell: {}\n", r.design.n_rows, r.design.replication);
    out += fmt::format("alpha = {}, alpha_v = {}\n\n", fixed(spec.alpha, 3), fixed(spec.alpha_v, 3));

    out += "Analysis of variance\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : r.anova.rows) {
        rows.push_back({row.source, std::to_string(row.df), fixed(row.ss), fixed(row.ms), fixed_or_blank(row.f),
                        row.p ? p_value_text(*row.p) : "", row.denominator.value_or("")});
    }
    out += text_table({"Source", "DF", "SS", "MS", "F", "p", "Error term"}, rows);

    out += fmt::format("\nAdmissible domain: {}\n", inference::to_string(r.domain.mode));
    std::vector<std::string> dominant;
    for (const auto& d : r.domain.dominant) dominant.push_back(d.label());
    out += fmt::format("  dominant: {}\n", dominant.empty() ? "none" : join(dominant, ", "));
    for (const auto& e : r.domain.excluded) {
        out += fmt::format("  excluded: {} ({})\n", e.effect.label(), inference::to_string(e.reason));
    }

    if (!r.comparisons.empty()) {
        out += fmt::format("\nMean comparisons (Tukey HSD, alpha = {})\n", fixed(spec.alpha, 3));
        for (const auto& s : r.comparisons) {
            out += fmt::format("\n[{}] error {} (MS {}, df {}), HSD {}{}\n", s.title(), s.error_stratum, fixed(s.mse),
                               s.df_error, fixed(s.hsd), s.conservative ? ", conservative" : "");
            std::vector<std::vector<std::string>> mrows;
            for (const auto& m : s.means) mrows.push_back({m.label, fixed(m.mean), std::to_string(m.n), m.letters});
            out += text_table({"Level", "Mean", "n", "Group"}, mrows);
        }
    }

    if (r.components) {
        out += "\nVariance components (expected mean squares)\n";
        std::vector<std::vector<std::string>> vrows;
        for (std::size_t i = 0; i < r.components->components.size(); ++i) {
            const auto& [term, value] = r.components->components[i];
            const bool clamped =
                std::find(r.components->clamped.begin(), r.components->clamped.end(), term) != r.components->clamped.end();
            vrows.push_back({term, fixed(value, 4), clamped ? fmt::format("raw {}, clamped", fixed(r.components->raw[i], 4)) : ""});
        }
        out += text_table({"Term", "Variance", "Note"}, vrows);
    }
    if (r.blups) {
        out += fmt::format("\nBLUPs for {} (shrinkage {})\n", r.blups->factor, fixed(r.blups->shrinkage, 5));
        std::vector<std::vector<std::string>> brows;
        for (const auto& e : r.blups->entries) {
            brows.push_back({e.level, fixed(e.raw_mean), fixed(e.effect), fixed(e.predicted_mean)});
        }
        out += text_table({"Level", "Raw mean", "BLUP", "Predicted"}, brows);
    }
    if (r.heritability) {
        out += fmt::format("\nBroad-sense heritability (entry-mean basis): H2 = {}\n", fixed(r.heritability->h2, 4));
    }
    if (r.stability) {
        const auto& s = *r.stability;
        out += "\nStability\n";
        std::vector<std::string> sv;
        for (std::size_t c = 0; c < s.ammi.singular_values.size(); ++c) {
            sv.push_back(fmt::format("{} ({}%)", fixed(s.ammi.singular_values[c], 4),
                                     fixed(100.0 * s.ammi.variance_explained[c], 1)));
        }
        out += fmt::format("  AMMI singular values: {}\n", join(sv, ", "));
        std::vector<std::vector<std::string>> srows;
        for (std::size_t i = 0; i < s.fw.size(); ++i) {
            srows.push_back({s.fw[i].genotype, fixed(s.fw[i].intercept), fixed(s.fw[i].slope, 4),
                             s.er[i].s2_di ? fixed(*s.er[i].s2_di, 4) : "n/a"});
        }
        out += text_table({"Genotype", "Mean", "b_i", "S2_di"}, srows);
        out += fmt::format("  GGE PC1 {}%, PC2 {}%\n", fixed(100.0 * s.gge.variance_explained.at(0), 1),
                           fixed(100.0 * (s.gge.variance_explained.size() > 1 ? s.gge.variance_explained[1] : 0.0), 1));
        if (r.gxe_significant) {
            out += *r.gxe_significant
                       ? "  Interaction is significant: adaptation is environment-specific.\n"
                       : "  Interaction is not significant: rankings are consistent, indicating wide adaptation.\n";
        }
    }

    out += fmt::format("\nDiagnostics (alpha_v = {}): {}\n", fixed(r.diagnostics.alpha_v, 3),
                       r.diagnostics.overall_valid ? "assumptions not rejected" : "assumptions rejected");
    std::vector<std::vector<std::string>> drows;
    for (const auto& s : r.diagnostics.strata) {
        drows.push_back({s.stratum, std::to_string(s.n), fixed_or_blank(s.shapiro_w, 4),
                         s.shapiro_p ? p_value_text(*s.shapiro_p) : "", fixed_or_blank(s.levene_f, 3),
                         s.levene_p ? p_value_text(*s.levene_p) : "", s.normality_ok && s.homogeneity_ok ? "pass" : "fail"});
    }
    out += text_table({"Stratum", "n", "W", "p(SW)", "Levene F", "p(L)", "Status"}, drows);

    out += "\nRecommendation\n" + decision::to_text(r.recommendation);
    if (!r.notes.empty()) {
        out += "\nNotes\n";
        for (const auto& n : r.notes) out += "- " + n + "\n";
    }
    return out;
}

void add_analysis(Bundle& bundle, const pipeline::AnalysisResult& r, const std::string& prefix) {
    bundle.files.push_back({prefix + "anova.csv", engine::to_csv(r.anova)});
    bundle.files.push_back({prefix + "comparisons.csv", comparisons_csv(r.comparisons)});
    bundle.files.push_back({prefix + "comparisons_pairs.csv", pairs_csv(r.comparisons)});
    bundle.files.push_back({prefix + "diagnostics.json", diagnostics_json(r.diagnostics)});
    if (r.components) bundle.files.push_back({prefix + "variance_components.csv", variance_components_csv(*r.components)});
    if (r.blups) bundle.files.push_back({prefix + "blup.csv", blup_csv(*r.blups)});
    if (r.stability) {
        bundle.files.push_back({prefix + "stability/ammi.csv", ammi_csv(*r.stability)});
        bundle.files.push_back({prefix + "stability/fw_er.csv", fw_er_csv(*r.stability)});
        bundle.files.push_back({prefix + "stability/gge.csv", gge_csv(*r.stability)});
    }
    bundle.files.push_back({prefix + "recommendation.txt", decision::to_text(r.recommendation)});
    bundle.files.push_back({prefix + "report.txt", report_text(r)});
    bundle.files.push_back({prefix + "analysis.json", analysis_json(r)});
    const plots::PlotSet plots = plots::emit_plots(r);
    for (const auto& p : plots.files) bundle.files.push_back({prefix + "plots/" + p.name, p.svg});
    for (const auto& s : plots.skipped) bundle.notes.push_back(prefix.empty() ? s : prefix + ": " + s);
}

Bundle build_bundle(const std::vector<pipeline::GroupOutcome>& outcomes, bool grouped) {
    Bundle bundle;
    for (const auto& g : outcomes) {
        const std::string prefix = grouped ? g.key + "/" : "";
        if (g.ok()) {
            add_analysis(bundle, std::get<pipeline::AnalysisResult>(g.result), prefix);
        } else {
            const auto& f = std::get<pipeline::GroupFailure>(g.result);
            bundle.files.push_back({prefix + "error.json", error_json(f.code, f.message)});
            bundle.notes.push_back(fmt::format("{}: analysis failed ({})", g.key, to_string(f.code)));
        }
    }
    return bundle;
}

std::string manifest_text(const Bundle& bundle) {
    std::string out;
    for (const auto& f : bundle.files) out += fmt::format("{}  {}  {}\n", sha256_hex(f.content), f.content.size(), f.path);
    for (const auto& n : bundle.notes) out += "# " + n + "\n";
    return out;
}

void write_bundle(const Bundle& bundle, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(out_dir)) {
        if (!fs::is_directory(out_dir)) {
            throw Error(ErrorCode::IoError, fmt::format("output path '{}' is not a directory", out_dir.string()));
        }
        const fs::path manifest = out_dir / "manifest.txt";
        std::set<fs::path> previous;
        if (fs::exists(manifest)) {
            previous.insert(manifest);
            std::ifstream in(manifest);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                const auto pos = line.rfind("  ");
                if (pos != std::string::npos) previous.insert(out_dir / line.substr(pos + 2));
            }
        }
        for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
            if (entry.is_regular_file() && !previous.count(entry.path())) {
                throw Error(ErrorCode::IoError,
                            fmt::format("output directory '{}' holds files that are not part of a previous bundle ({})",
                                        out_dir.string(), fs::relative(entry.path(), out_dir).string()));
            }
        }
        for (const auto& p : previous) fs::remove(p, ec);
        // Remove directories left empty, deepest first.
        std::vector<fs::path> dirs;
        for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
            if (entry.is_directory()) dirs.push_back(entry.path());
        }
        std::sort(dirs.rbegin(), dirs.rend());
        for (const auto& d : dirs) {
            if (fs::is_empty(d, ec)) fs::remove(d, ec);
        }
    }
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
    auto write = [&](const fs::path& path, const std::string& content) {
        fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
    };
    for (const auto& file : bundle.files) write(out_dir / file.path, file.content);
    write(out_dir / "manifest.txt", manifest_text(bundle));
}

}  // namespace stratus::report
