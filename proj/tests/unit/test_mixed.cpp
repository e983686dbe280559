#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles/anova_oracle.hpp"
#include "stratus/data.hpp"
#include "stratus/error.hpp"
#include "stratus/mixed.hpp"

using namespace stratus;

namespace {

struct Fitted {
    design::ValidatedDesign design;
    engine::FittedModel model;
    engine::AnovaTable anova;
};

Fitted fit(const design::DesignSpec& spec, const data::Dataset& d) {
    Fitted f;
    f.design = design::validate_against_data(spec, d);
    f.model = engine::fit(f.design, d);
    f.anova = engine::anova(f.design, f.model);
    return f;
}

Fitted fixture(const std::string& name) { return fit(design::builtin_design(name), data::builtin_dataset(name)); }

void check_blup_properties(const mixed::BlupTable& t) {
    double sum = 0.0;
    for (const auto& e : t.entries) sum += e.effect;
    CHECK(std::abs(sum) < 1e-9);
    CHECK(t.shrinkage >= 0.0);
    CHECK(t.shrinkage <= 1.0);
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
        const auto& e = t.entries[i];
        CHECK(std::abs(e.effect) <= std::abs(e.raw_deviation) + 1e-12);
        CHECK(e.predicted_mean == doctest::Approx(t.grand_mean + e.effect));
        if (i > 0) {
            CHECK(t.entries[i - 1].predicted_mean >= e.predicted_mean);
            CHECK(t.entries[i - 1].raw_mean >= e.raw_mean);
        }
    }
}

}  // namespace

TEST_SUITE("mixed") {
    TEST_CASE("random block variance from expected mean squares") {
        const auto f = fixture("lmm");
        const auto vc = mixed::estimate_components(f.anova, f.design);
        const double ms_b = f.anova.row("Block").ms;
        const double ms_e = f.anova.row("Residual").ms;
        CHECK(vc.get("Block") == doctest::Approx((ms_b - ms_e) / 3.0).epsilon(1e-12));
        CHECK(vc.get("Residual") == doctest::Approx(ms_e).epsilon(1e-12));
        // the fixture mirrors reference components 1.22 and 0.44
        CHECK(std::abs(vc.get("Block") - 1.22) < 0.005);
        CHECK(std::abs(vc.get("Residual") - 0.44) < 0.005);
        CHECK(vc.clamped.empty());
    }

    TEST_CASE("met components and clamping") {
        const auto f = fixture("gxe");
        const auto vc = mixed::estimate_components(f.anova, f.design);
        const double g = f.anova.row("Genotype").ms;
        const double ge = f.anova.row("Genotype:Environment").ms;
        const double e = f.anova.row("Residual").ms;
        CHECK(vc.get("Genotype") == doctest::Approx((g - ge) / 8.0).epsilon(1e-12));
        CHECK(vc.get("Genotype:Environment") == 0.0);
        CHECK(vc.clamped == std::vector<std::string>{"Genotype:Environment"});
        for (const auto& [term, value] : vc.components) CHECK(value >= 0.0);
    }

    TEST_CASE("heritability") {
        const auto h = mixed::heritability(45.5, 0.0, 0.5, 4, 2);
        CHECK(h.h2 == doctest::Approx(45.5 / (45.5 + 0.5 / 8.0)).epsilon(1e-14));
        CHECK(h.h2 == doctest::Approx(0.9986).epsilon(1e-4));
        CHECK(mixed::heritability(0.0, 0.0, 0.0, 4, 2).h2 == 0.0);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 10.0);
        for (int i = 0; i < 200; ++i) {
            const double v = mixed::heritability(u(rng), u(rng), u(rng), 1 + static_cast<int>(rng() % 6),
                                                 1 + static_cast<int>(rng() % 4))
                                 .h2;
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        const auto f = fixture("gxe");
        const auto vc = mixed::estimate_components(f.anova, f.design);
        const auto fx = mixed::heritability(vc, f.design);
        CHECK(fx.n_env == 4);
        CHECK(fx.n_rep == 2);
        CHECK(fx.h2 > 0.99);
    }

    TEST_CASE("blup shrinkage") {
        const auto f = fixture("gxe");
        const auto vc = mixed::estimate_components(f.anova, f.design);
        const auto t = mixed::blups(vc, f.model, f.design);
        CHECK(t.factor == "Genotype");
        REQUIRE(t.entries.size() == 4);
        CHECK(t.entries.front().level == "G4");
        const double lambda = vc.get("Genotype") /
                              (vc.get("Genotype") + vc.get("Genotype:Environment") / 4.0 + vc.get("Residual") / 8.0);
        CHECK(t.shrinkage == doctest::Approx(lambda).epsilon(1e-12));
        check_blup_properties(t);

        const auto l = fixture("lmm");
        const auto lt = mixed::blups(mixed::estimate_components(l.anova, l.design), l.model, l.design);
        CHECK(lt.factor == "Treatment");
        CHECK(lt.entries.front().level == "T3");
        check_blup_properties(lt);
    }

    TEST_CASE("blup properties on random multi-environment trials") {
        std::mt19937_64 rng(2024);
        for (int i = 0; i < 50; ++i) {
            const auto c = oracle::random_case(design::DesignKind::met, rng);
            const auto f = fit(c.spec, data::load_table(oracle::to_csv(c.table)));
            const auto vc = mixed::estimate_components(f.anova, f.design);
            try {
                check_blup_properties(mixed::blups(vc, f.model, f.design));
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::DegenerateShrinkage);
            }
        }
    }

    TEST_CASE("errors") {
        const auto crd = fixture("crd");
        CHECK_THROWS_AS(mixed::estimate_components(crd.anova, crd.design), Error);
        // environment effects only: every component is zero
        const auto d = data::load_table(std::string_view(
            "G,E,R,Y\nA,X,1,5\nA,X,2,5\nA,Z,1,9\nA,Z,2,9\nB,X,1,5\nB,X,2,5\nB,Z,1,9\nB,Z,2,9\n"));
        const auto spec = design::parse_design(
            R"({"kind": "met", "response": "Y", "factors": ["G", {"name": "E", "role": "random"}]})");
        const auto f = fit(spec, d);
        const auto vc = mixed::estimate_components(f.anova, f.design);
        try {
            mixed::blups(vc, f.model, f.design);
            FAIL("expected DegenerateShrinkage");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateShrinkage);
        }
    }
}
