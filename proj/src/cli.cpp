#include "stratus/cli.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "stratus/pipeline.hpp"
#include "stratus/report.hpp"

namespace stratus::cli {

namespace {

struct Inputs {
    std::string data_path;
    std::string design_path;
    std::string dataset;
    std::optional<double> alpha;
    std::optional<double> alpha_v;
    std::vector<std::string> groups;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read '{}'", path));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void add_input_options(CLI::App& cmd, Inputs& in) {
    cmd.add_option("--data", in.data_path, "CSV table with a header row");
    cmd.add_option("--design", in.design_path, "JSON design document");
    cmd.add_option("--dataset", in.dataset, "builtin dataset (its design is used unless --design is given)");
    cmd.add_option("--alpha", in.alpha, "significance level for effect tests and HSD")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--alpha-v", in.alpha_v, "significance level for assumption diagnostics")
        ->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--groups", in.groups, "columns partitioning the data into separate analyses")->delimiter(',');
}

struct Resolved {
    design::DesignSpec spec;
    data::Dataset data;
};

// Usage problems are reported as CLI::ValidationError (exit 1); everything
// else is an analysis error.
Resolved resolve(const Inputs& in) {
    if (!in.dataset.empty() && !in.data_path.empty()) {
        throw CLI::ValidationError("--data and --dataset are mutually exclusive");
    }
    if (in.dataset.empty() && in.data_path.empty()) throw CLI::ValidationError("one of --data or --dataset is required");
    if (!in.data_path.empty() && in.design_path.empty()) throw CLI::ValidationError("--data requires --design");

    Resolved r;
    if (!in.dataset.empty()) {
        r.data = data::builtin_dataset(in.dataset);
        r.spec = in.design_path.empty() ? design::builtin_design(in.dataset)
                                        : design::parse_design(read_file(in.design_path));
    } else {
        r.data = data::load_table(read_file(in.data_path));
        r.spec = design::parse_design(read_file(in.design_path));
    }
    if (in.alpha) r.spec.alpha = *in.alpha;
    if (in.alpha_v) r.spec.alpha_v = *in.alpha_v;
    if (!in.groups.empty()) r.spec.groups = in.groups;
    design::check_invariants(r.spec);
    return r;
}

void print_results(std::ostream& out, const std::vector<pipeline::GroupOutcome>& outcomes, bool grouped,
                   const std::string& format) {
    if (format == "structured") {
        if (!grouped) {
            out << report::analysis_json(std::get<pipeline::AnalysisResult>(outcomes.front().result));
            return;
        }
        nlohmann::ordered_json all = nlohmann::ordered_json::object();
        for (const auto& g : outcomes) {
            if (g.ok()) {
                all[g.key] = nlohmann::ordered_json::parse(
                    report::analysis_json(std::get<pipeline::AnalysisResult>(g.result)));
            } else {
                const auto& f = std::get<pipeline::GroupFailure>(g.result);
                all[g.key] = nlohmann::ordered_json::parse(report::error_json(f.code, f.message));
            }
        }
        out << all.dump(2) << "\n";
        return;
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& g = outcomes[i];
        if (grouped) out << (i ? "\n" : "") << "== " << g.key << " ==\n";
        if (!g.ok()) {
            const auto& f = std::get<pipeline::GroupFailure>(g.result);
            out << "analysis failed: " << to_string(f.code) << ": " << f.message << "\n";
            continue;
        }
        const auto& r = std::get<pipeline::AnalysisResult>(g.result);
        out << (format == "csv" ? engine::to_csv(r.anova) : report::report_text(r));
    }
}

int cmd_analyze(const Inputs& in, const std::string& out_dir, bool minimize, const std::string& format,
                std::ostream& out, std::ostream& err) {
    const Resolved r = resolve(in);
    const bool grouped = !r.spec.groups.empty();
    pipeline::AnalysisOptions options;
    options.minimize = minimize;

    std::vector<pipeline::GroupOutcome> outcomes;
    if (grouped) {
        outcomes = pipeline::grouped_analyze(r.spec, r.data, options);
    } else {
        outcomes.push_back({"all", pipeline::analyze(r.spec, r.data, options)});
    }
    if (!out_dir.empty()) report::write_bundle(report::build_bundle(outcomes, grouped), out_dir);
    print_results(out, outcomes, grouped, format);

    int status = kExitOk;
    for (const auto& g : outcomes) {
        if (g.ok()) continue;
        const auto& f = std::get<pipeline::GroupFailure>(g.result);
        nlohmann::ordered_json j = {
            {"error", std::string(to_string(f.code))}, {"message", f.message}, {"group", g.key}};
        err << j.dump() << "\n";
        status = kExitAnalysis;
    }
    return status;
}

int cmd_validate(const Inputs& in, std::ostream& out) {
    const Resolved r = resolve(in);
    std::vector<data::Dataset> subsets;
    std::vector<std::string> keys;
    if (r.spec.groups.empty()) {
        subsets.push_back(r.data);
        keys.emplace_back("all");
    } else {
        const data::GroupPartition parts = data::partition(r.data, r.spec.groups);
        subsets = parts.subsets;
        for (std::size_t i = 0; i < parts.size(); ++i) keys.push_back(parts.key_label(i));
    }
    int status = kExitOk;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        if (subsets.size() > 1 || !r.spec.groups.empty()) out << "== " << keys[i] << " ==\n";
        try {
            const auto v = design::validate_against_data(r.spec, subsets[i]);
            out << fmt::format("design {} valid: {} rows, replication {}\n", design::to_string(r.spec.kind),
                               v.n_rows, v.replication);
            for (const auto& f : v.factors) {
                out << fmt::format("  factor {}: {} levels\n", f.factor, f.levels.size());
            }
            for (const auto& e : v.effects.effects) {
                out << fmt::format("  effect {} (order {}, {}) tested against {}\n", e.label(), e.order,
                                   design::to_string(e.role), e.denominator);
            }
        } catch (const Error& e) {
            if (r.spec.groups.empty()) throw;
            out << fmt::format("  invalid: {}: {}\n", e.name(), e.what());
            status = kExitAnalysis;
        }
    }
    return status;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Design-driven analysis of designed experiments"};
    app.name("stratus");
    app.require_subcommand(1);

    Inputs analyze_in;
    std::string out_dir;
    bool minimize = false;
    std::string format = "text";
    auto* analyze = app.add_subcommand("analyze", "run the full analysis and optionally write a report bundle");
    add_input_options(*analyze, analyze_in);
    analyze->add_option("--out", out_dir, "directory for the report bundle");
    analyze->add_flag("--minimize", minimize, "smaller responses are better when ranking");
    analyze->add_option("--format", format, "standard output content")
        ->check(CLI::IsMember({"text", "csv", "structured"}));

    Inputs validate_in;
    auto* validate = app.add_subcommand("validate", "check a design against a dataset and show the compiled model");
    add_input_options(*validate, validate_in);

    auto* datasets = app.add_subcommand("datasets", "builtin tutorial datasets");
    datasets->require_subcommand(1);
    auto* list = datasets->add_subcommand("list", "print the dataset names");
    std::string show_name;
    auto* show = datasets->add_subcommand("show", "print one dataset as CSV");
    show->add_option("name", show_name, "dataset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*analyze) return cmd_analyze(analyze_in, out_dir, minimize, format, out, err);
        if (*validate) return cmd_validate(validate_in, out);
        if (*list) {
            for (const auto& name : data::builtin_names()) out << name << "\n";
            return kExitOk;
        }
        if (*show) {
            out << data::builtin_csv(show_name);
            return kExitOk;
        }
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << report::error_json(e.code(), e.what());
        return kExitAnalysis;
    } catch (const std::exception& e) {
        err << report::error_json(ErrorCode::DomainError, e.what());
        return kExitAnalysis;
    }
    return kExitUsage;
}

}  // namespace stratus::cli
