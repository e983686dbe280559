#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles/anova_oracle.hpp"
#include "stratus/data.hpp"
#include "stratus/design.hpp"
#include "stratus/error.hpp"

using namespace stratus;
using design::DesignKind;

namespace {

ErrorCode code_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::DomainError;
}

std::vector<std::string> names(const std::vector<std::string>& v) { return v; }

}  // namespace

TEST_SUITE("design") {
    TEST_CASE("minimal crd document") {
        const auto spec = design::parse_design(R"({"kind": "crd", "response": "Yield", "factors": ["Fertilizer"]})");
        CHECK(spec.kind == DesignKind::crd);
        CHECK(spec.response == "Yield");
        REQUIRE(spec.treatment_factors.size() == 1);
        CHECK(spec.treatment_factors[0].name == "Fertilizer");
        CHECK(spec.treatment_factors[0].role == design::Role::fixed);
        CHECK(spec.treatment_factors[0].stratum == design::Placement::unit);
        CHECK_FALSE(spec.block.has_value());
        CHECK(spec.alpha == 0.05);
        CHECK(spec.alpha_v == 0.05);
    }

    TEST_CASE("split-plot document has two strata factors") {
        const auto spec = design::parse_design(R"({"kind": "split_plot", "response": "Yield",
            "factors": [{"name": "Irrigation", "stratum": "whole_plot"}, {"name": "Variety", "stratum": "sub_plot"}],
            "block": "Block"})");
        CHECK(spec.kind == DesignKind::split_plot);
        CHECK(spec.factor("Irrigation")->stratum == design::Placement::whole_plot);
        CHECK(spec.factor("Variety")->stratum == design::Placement::sub_plot);
        CHECK(spec.block->name == "Block");
    }

    TEST_CASE("schema and constraint errors") {
        CHECK(code_of([] { design::parse_design(R"({"kind": "rcbd", "response": "Y", "factors": ["V"]})"); }) ==
              ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "crd", "response": "Y", "factors": ["T"], "colour": 1})");
              }) == ErrorCode::SchemaError);
        CHECK(code_of([] { design::parse_design(R"({"kind": "crd", "factors": ["T"]})"); }) == ErrorCode::SchemaError);
        CHECK(code_of([] { design::parse_design(R"({"kind": "latin", "response": "Y", "factors": ["T"]})"); }) ==
              ErrorCode::SchemaError);
        CHECK(code_of([] { design::parse_design("{not json"); }) == ErrorCode::SchemaError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "crd", "response": "Y", "factors": ["T"], "alpha": 1.0})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "crd", "response": "Y", "factors": ["T"], "alpha_v": 0})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(
                      R"({"kind": "factorial", "response": "Y", "factors": [{"name": "A", "stratum": "whole_plot"}, "B"]})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "factorial", "response": "Y", "factors": ["A", "A"]})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "crd", "response": "Y", "factors": [{"name": "T", "role": "random"}]})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "mixed", "response": "Y", "factors": ["T"]})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] { design::parse_design(R"({"kind": "met", "response": "Y", "factors": ["G", "E"]})"); }) ==
              ErrorCode::ConstraintError);
        CHECK(code_of([] {
                  design::parse_design(R"({"kind": "split_plot", "response": "Y", "factors": ["A", "B"], "block": "K"})");
              }) == ErrorCode::ConstraintError);
        CHECK(code_of([] { design::builtin_design("nonexistent"); }) == ErrorCode::UnknownDataset);
    }

    TEST_CASE("document round trip") {
        for (const auto& name : data::builtin_names()) {
            const auto spec = design::builtin_design(name);
            CHECK(design::parse_design(design::to_document(spec)) == spec);
        }
    }

    TEST_CASE("canonical term lists") {
        const auto crd = design::compile_effects(design::builtin_design("crd"));
        REQUIRE(crd.effects.size() == 1);
        CHECK(crd.effects[0].label() == "Fertilizer");
        CHECK(crd.effects[0].denominator == "Residual");

        const auto rcbd = design::compile_effects(design::builtin_design("rcbd"));
        REQUIRE(rcbd.effects.size() == 2);
        CHECK(rcbd.effects[0].label() == "Variety");
        CHECK(rcbd.effects[0].denominator == "Residual");
        CHECK(rcbd.effects[1].label() == "Block");
        CHECK(rcbd.effects[1].denominator == "Residual");

        const auto split = design::compile_effects(design::builtin_design("split_plot"));
        CHECK(split.find("Irrigation")->denominator == "Block:Irrigation");
        CHECK(split.find("Block")->denominator == "Block:Irrigation");
        CHECK(split.find("Variety")->denominator == "Residual");
        CHECK(split.find("Irrigation:Variety")->denominator == "Residual");
        CHECK(split.find("Block:Irrigation")->term == design::TermKind::error_stratum);
        CHECK(split.has_stratum("Block:Irrigation"));

        const auto fact = design::compile_effects(design::builtin_design("factorial"));
        std::vector<std::string> labels;
        for (const auto& e : fact.effects) labels.push_back(e.label());
        CHECK(labels == names({"Nitrogen", "Spacing", "Nitrogen:Spacing"}));
        CHECK(fact.find("Nitrogen:Spacing")->order == 2);

        const auto met = design::compile_effects(design::builtin_design("gxe"));
        labels.clear();
        for (const auto& e : met.effects) labels.push_back(e.label());
        CHECK(labels == names({"Genotype", "Environment", "Genotype:Environment"}));
        CHECK(met.find("Environment")->role == design::Role::random);
    }

    TEST_CASE("compiled effect sets satisfy their invariants") {
        std::mt19937_64 rng(17);
        std::vector<design::DesignSpec> specs;
        for (const auto& name : data::builtin_names()) specs.push_back(design::builtin_design(name));
        for (int i = 0; i < 60; ++i) {
            specs.push_back(oracle::random_case(static_cast<DesignKind>(i % 6), rng).spec);
        }
        for (const auto& spec : specs) {
            const auto set = design::compile_effects(spec);
            CHECK(design::compile_effects(spec).effects == set.effects);
            CHECK(std::count_if(set.strata.begin(), set.strata.end(),
                                [](const auto& s) { return s.label == "Residual"; }) == 1);
            for (const auto& e : set.effects) {
                CHECK(e.order == static_cast<int>(e.factors.size()));
                CHECK(set.has_stratum(e.denominator));
                // marginality closure
                for (const auto& f : e.factors) CHECK(set.find(f) != nullptr);
            }
            if (spec.kind == DesignKind::split_plot) {
                for (const auto& f : spec.treatment_factors) {
                    if (f.stratum == design::Placement::whole_plot) {
                        CHECK(set.find(f.name)->denominator != "Residual");
                    }
                }
                CHECK(set.find(spec.block->name)->denominator != "Residual");
            }
        }
    }

    TEST_CASE("validation against data") {
        const auto crd = design::validate_against_data(design::builtin_design("crd"), data::builtin_dataset("crd"));
        CHECK(crd.replication == 5);
        CHECK(crd.n_rows == 20);
        CHECK(crd.levels("Fertilizer").levels.size() == 4);

        const auto no_block = data::load_table(std::string_view("Variety,Yield\nV1,1\nV2,2\nV1,3\nV2,4\n"));
        CHECK(code_of([&] { design::validate_against_data(design::builtin_design("rcbd"), no_block); }) ==
              ErrorCode::MissingColumn);

        std::string text = "Fertilizer,Yield\n";
        for (int t = 0; t < 4; ++t) {
            for (int r = 0; r < (t == 3 ? 4 : 5); ++r) text += "F" + std::to_string(t) + "," + std::to_string(r + t) + "\n";
        }
        const auto unbalanced = data::load_table(std::string_view(text));
        try {
            design::validate_against_data(design::builtin_design("crd"), unbalanced);
            FAIL("expected UnbalancedDesign");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnbalancedDesign);
            CHECK(std::string(e.what()).find("Fertilizer=F3") != std::string::npos);
        }

        const auto words = data::load_table(std::string_view("Fertilizer,Yield\nA,x\nB,y\nA,z\nB,w\n"));
        CHECK(code_of([&] { design::validate_against_data(design::builtin_design("crd"), words); }) ==
              ErrorCode::NonNumericResponse);
        const auto one_level = data::load_table(std::string_view("Fertilizer,Yield\nA,1\nA,2\n"));
        CHECK(code_of([&] { design::validate_against_data(design::builtin_design("crd"), one_level); }) ==
              ErrorCode::InsufficientLevels);
        // a single observation per cell leaves no residual in a factorial
        const auto saturated = data::load_table(std::string_view("Nitrogen,Spacing,Yield\nL,N,1\nL,W,2\nH,N,3\nH,W,5\n"));
        CHECK(code_of([&] { design::validate_against_data(design::builtin_design("factorial"), saturated); }) ==
              ErrorCode::NoResidualDf);
    }
}
