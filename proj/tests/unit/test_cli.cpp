#include <doctest.h>

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "stratus/data.hpp"
#include "stratus/design.hpp"
#include "stratus/report.hpp"
#include "support.hpp"

using namespace stratus;
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

pt::ptree parse_svg(const std::string& text) {
    std::istringstream in(text);
    pt::ptree tree;
    pt::read_xml(in, tree);
    return tree;
}

// Bold 13pt text nodes carry the letter displays.
std::vector<std::string> letter_labels(const pt::ptree& svg) {
    std::vector<std::string> out;
    for (const auto& [name, node] : svg.get_child("svg")) {
        if (name != "text") continue;
        if (node.get<std::string>("<xmlattr>.font-size", "") == "13" &&
            node.get<std::string>("<xmlattr>.font-weight", "") == "bold") {
            out.push_back(node.data());
        }
    }
    return out;
}

// Writes a fixture and its design to disk for --data/--design runs.
std::pair<fs::path, fs::path> fixture_files(const std::string& name, const fs::path& dir) {
    const auto data = dir / (name + ".csv");
    const auto design = dir / (name + ".json");
    support::write(data, std::string(data::builtin_csv(name)));
    support::write(design, design::to_document(design::builtin_design(name)));
    return {data, design};
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("exit codes") {
        CHECK(support::run({}).status == cli::kExitUsage);
        CHECK(support::run({"bogus"}).status == cli::kExitUsage);
        CHECK(support::run({"analyze"}).status == cli::kExitUsage);
        CHECK(support::run({"analyze", "--dataset", "crd", "--data", "x.csv"}).status == cli::kExitUsage);
        CHECK(support::run({"analyze", "--data", "x.csv"}).status == cli::kExitUsage);
        CHECK(support::run({"analyze", "--dataset", "crd", "--alpha", "2"}).status == cli::kExitUsage);
        CHECK(support::run({"analyze", "--dataset", "crd", "--format", "yaml"}).status == cli::kExitUsage);
        CHECK(support::run({"analyze", "--dataset", "crd"}).status == cli::kExitOk);
        CHECK(support::run({"--help"}).status == cli::kExitOk);

        const auto unknown = support::run({"analyze", "--dataset", "nope"});
        CHECK(unknown.status == cli::kExitAnalysis);
        CHECK(unknown.err.find("UnknownDataset") != std::string::npos);
        const auto missing = support::run({"analyze", "--data", "/nonexistent/x.csv", "--design", "/nonexistent/d.json"});
        CHECK(missing.status == cli::kExitAnalysis);
        CHECK(missing.err.find("IoError") != std::string::npos);
        CHECK(support::run({"analyze", "--dataset", "crd", "--alpha", "0"}).status == cli::kExitAnalysis);
    }

    TEST_CASE("datasets") {
        const auto list = support::run({"datasets", "list"});
        CHECK(list.status == 0);
        CHECK(list.out == "crd\nrcbd\nfactorial\nsplit_plot\nlmm\ngxe\n");
        const auto show = support::run({"datasets", "show", "crd"});
        CHECK(show.status == 0);
        CHECK(std::count(show.out.begin(), show.out.end(), '\n') == 21);
        CHECK(show.out == data::builtin_csv("crd"));
        CHECK(support::run({"datasets", "show", "nope"}).status == cli::kExitAnalysis);
    }

    TEST_CASE("analysis output formats") {
        const auto text = support::run({"analyze", "--dataset", "factorial"});
        CHECK(text.out.find("Nitrogen") != std::string::npos);
        const auto csv = support::run({"analyze", "--dataset", "crd", "--format", "csv"});
        CHECK(csv.out.rfind("source,df,ss,ms,f,p,denominator\n", 0) == 0);
        const auto structured = support::run({"analyze", "--dataset", "gxe", "--format", "structured"});
        const auto j = nlohmann::json::parse(structured.out);
        CHECK(j["heritability"]["h2"].get<double>() > 0.99);
        CHECK(j["recommendation"]["scope"] == "global");

        const auto validate = support::run({"validate", "--dataset", "split_plot"});
        CHECK(validate.status == 0);
        CHECK(validate.out.find("effect Irrigation (order 1, fixed) tested against Block:Irrigation") != std::string::npos);
        CHECK(validate.out.find("effect Variety (order 1, fixed) tested against Residual") != std::string::npos);
    }

    TEST_CASE("unbalanced data is rejected with the offending cell") {
        const auto dir = support::temp_dir("unbalanced");
        auto [data, design] = fixture_files("crd", dir);
        std::string csv(data::builtin_csv("crd"));
        const auto cut = csv.find("Control,R2");
        csv.erase(cut, csv.find('\n', cut) - cut + 1);
        support::write(data, csv);
        const auto r = support::run({"analyze", "--data", data.string(), "--design", design.string()});
        CHECK(r.status == cli::kExitAnalysis);
        CHECK(r.err.find("UnbalancedDesign") != std::string::npos);
        CHECK(r.err.find("Fertilizer=Control") != std::string::npos);
        fs::remove_all(dir);
    }

    TEST_CASE("bundles are deterministic and complete") {
        for (const auto& name : data::builtin_names()) {
            CAPTURE(name);
            const auto a = support::temp_dir("bundle_a");
            const auto b = support::temp_dir("bundle_b");
            REQUIRE(support::run({"analyze", "--dataset", name, "--out", a.string()}).status == 0);
            REQUIRE(support::run({"analyze", "--dataset", name, "--out", b.string()}).status == 0);
            const auto sa = support::snapshot(a);
            CHECK(sa == support::snapshot(b));

            // rerunning into the same directory replaces the bundle
            REQUIRE(support::run({"analyze", "--dataset", name, "--out", a.string()}).status == 0);
            CHECK(support::snapshot(a) == sa);

            // the manifest lists every other file with its digest and size
            std::istringstream manifest(sa.at("manifest.txt"));
            std::string line;
            std::size_t listed = 0;
            while (std::getline(manifest, line)) {
                if (line.empty() || line[0] == '#') continue;
                std::istringstream fields(line);
                std::string digest;
                std::size_t bytes = 0;
                std::string path;
                fields >> digest >> bytes >> path;
                REQUIRE(sa.count(path) == 1);
                CHECK(report::sha256_hex(sa.at(path)) == digest);
                CHECK(sa.at(path).size() == bytes);
                ++listed;
            }
            CHECK(listed == sa.size() - 1);

            for (const auto& [path, bytes] : sa) {
                if (path.size() > 4 && path.substr(path.size() - 4) == ".svg") {
                    CAPTURE(path);
                    CHECK_NOTHROW(parse_svg(bytes));
                }
                if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
                    CHECK(nlohmann::json::accept(bytes));
                }
            }
            fs::remove_all(a);
            fs::remove_all(b);
        }
    }

    TEST_CASE("foreign files block the output directory") {
        const auto dir = support::temp_dir("foreign");
        support::write(dir / "notes.txt", "keep me");
        const auto r = support::run({"analyze", "--dataset", "crd", "--out", dir.string()});
        CHECK(r.status == cli::kExitAnalysis);
        CHECK(r.err.find("IoError") != std::string::npos);
        CHECK(support::read(dir / "notes.txt") == "keep me");
        fs::remove_all(dir);
    }

    TEST_CASE("plots") {
        const auto crd = support::temp_dir("plots_crd");
        REQUIRE(support::run({"analyze", "--dataset", "crd", "--out", crd.string()}).status == 0);
        const auto files = support::snapshot(crd);
        std::vector<std::string> boxplots;
        for (const auto& [path, bytes] : files) {
            if (path.rfind("plots/boxplot_", 0) == 0) boxplots.push_back(path);
        }
        REQUIRE(boxplots.size() == 1);
        auto letters = letter_labels(parse_svg(files.at(boxplots[0])));
        std::sort(letters.begin(), letters.end());
        CHECK(letters == std::vector<std::string>{"a", "b", "c", "d"});
        CHECK(files.at(boxplots[0]).find("means sharing a letter do not differ") != std::string::npos);

        const auto fact = support::temp_dir("plots_factorial");
        REQUIRE(support::run({"analyze", "--dataset", "factorial", "--out", fact.string()}).status == 0);
        const auto ff = support::snapshot(fact);
        bool parallel = false;
        for (const auto& [path, bytes] : ff) {
            if (path.rfind("plots/interaction_", 0) == 0) {
                parallel = parallel || bytes.find("Nearly parallel response profiles") != std::string::npos;
            }
        }
        CHECK(parallel);

        const auto gxe = support::temp_dir("plots_gxe");
        REQUIRE(support::run({"analyze", "--dataset", "gxe", "--out", gxe.string()}).status == 0);
        const auto gf = support::snapshot(gxe);
        CHECK(gf.count("plots/gge_biplot.svg") == 1);
        CHECK(gf.count("plots/blup_ranking.svg") == 1);
        CHECK(gf.count("plots/variance_components.svg") == 1);
        CHECK(gf.count("stability/ammi.csv") == 1);

        // no dominant effect: no comparison plot, and the manifest says why
        const auto flat = support::temp_dir("plots_none");
        std::string csv = "T,Rep,Y\n";
        const double y[3][3] = {{5.0, 6.0, 7.0}, {6.5, 5.5, 6.0}, {7.0, 5.0, 6.0}};
        for (int t = 0; t < 3; ++t) {
            for (int r = 0; r < 3; ++r) csv += fmt::format("A{},R{},{}\n", t + 1, r + 1, y[t][r]);
        }
        support::write(flat / "d.csv", csv);
        support::write(flat / "d.json", R"({"kind": "crd", "response": "Y", "factors": ["T"]})");
        const auto out = flat / "out";
        REQUIRE(support::run({"analyze", "--data", (flat / "d.csv").string(), "--design", (flat / "d.json").string(),
                              "--out", out.string()})
                    .status == 0);
        const auto nf = support::snapshot(out);
        for (const auto& [path, bytes] : nf) CHECK(path.rfind("plots/boxplot_", 0) != 0);
        CHECK(nf.at("manifest.txt").find("\n# ") != std::string::npos);

        for (const auto& d : {crd, fact, gxe, flat}) fs::remove_all(d);
    }

    TEST_CASE("grouped runs write one subdirectory per group") {
        const auto dir = support::temp_dir("grouped");
        const auto d = data::builtin_dataset("crd");
        std::string csv = "Year,Fertilizer,Rep,Yield\n";
        for (const char* year : {"2021", "2022"}) {
            for (std::size_t i = 0; i < d.n_rows(); ++i) {
                csv += std::string(year) + "," + d.column("Fertilizer").cells[i] + "," + d.column("Rep").cells[i] +
                       "," + d.column("Yield").cells[i] + "\n";
            }
        }
        support::write(dir / "d.csv", csv);
        support::write(dir / "d.json", design::to_document(design::builtin_design("crd")));
        const auto out = dir / "out";
        const auto r = support::run({"analyze", "--data", (dir / "d.csv").string(), "--design",
                                     (dir / "d.json").string(), "--groups", "Year", "--out", out.string()});
        CHECK(r.status == 0);
        const auto files = support::snapshot(out);
        CHECK(files.count("Year=2021/anova.csv") == 1);
        CHECK(files.count("Year=2022/anova.csv") == 1);
        CHECK(files.at("Year=2021/anova.csv") == files.at("Year=2022/anova.csv"));
        CHECK(r.out.find("== Year=2021 ==") != std::string::npos);
        fs::remove_all(dir);
    }
}
