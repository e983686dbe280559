#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "stratus/data.hpp"
#include "stratus/error.hpp"
#include "stratus/pipeline.hpp"
#include "stratus/stability.hpp"

using namespace stratus;

namespace {

stability::GeMatrix random_matrix(std::size_t g, std::size_t e, std::mt19937_64& rng, bool additive = false) {
    std::normal_distribution<double> z;
    stability::GeMatrix m;
    for (std::size_t i = 0; i < g; ++i) m.genotypes.push_back("G" + std::to_string(i + 1));
    for (std::size_t j = 0; j < e; ++j) m.environments.push_back("E" + std::to_string(j + 1));
    m.values = linalg::Matrix(g, e);
    std::vector<double> row(g);
    std::vector<double> col(e);
    for (auto& v : row) v = 3.0 * z(rng);
    for (auto& v : col) v = 5.0 * z(rng);
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < e; ++j) m.values(i, j) = 50.0 + row[i] + col[j] + (additive ? 0.0 : z(rng));
    }
    return m;
}

linalg::Matrix double_centered(const linalg::Matrix& y) {
    const std::size_t g = y.rows;
    const std::size_t e = y.cols;
    std::vector<double> rm(g, 0.0);
    std::vector<double> cm(e, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < e; ++j) {
            rm[i] += y(i, j) / static_cast<double>(e);
            cm[j] += y(i, j) / static_cast<double>(g);
            grand += y(i, j) / static_cast<double>(g * e);
        }
    }
    linalg::Matrix out(g, e);
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < e; ++j) out(i, j) = y(i, j) - rm[i] - cm[j] + grand;
    }
    return out;
}

ErrorCode error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::DomainError;
}

}  // namespace

TEST_SUITE("stability") {
    TEST_CASE("jacobi svd against an independent decomposition") {
        std::mt19937_64 rng(12);
        std::normal_distribution<double> z;
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t r = 2 + rng() % 7;
            const std::size_t c = 2 + rng() % 7;
            linalg::Matrix a(r, c);
            Eigen::MatrixXd ea(r, c);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) ea(i, j) = a(i, j) = z(rng);
            }
            const auto svd = linalg::jacobi_svd(a);
            const Eigen::JacobiSVD<Eigen::MatrixXd> reference(ea);
            const std::size_t k = std::min(r, c);
            REQUIRE(svd.s.size() == k);
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(svd.s[i] == doctest::Approx(reference.singularValues()(i)).epsilon(1e-10));
                if (i > 0) CHECK(svd.s[i - 1] >= svd.s[i]);
            }
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    double v = 0.0;
                    for (std::size_t q = 0; q < k; ++q) v += svd.u(i, q) * svd.s[q] * svd.v(j, q);
                    CHECK(v == doctest::Approx(a(i, j)).epsilon(1e-10));
                }
            }
            for (std::size_t q = 0; q < k; ++q) {
                double norm = 0.0;
                for (std::size_t i = 0; i < r; ++i) norm += svd.u(i, q) * svd.u(i, q);
                CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
            }
        }
    }

    TEST_CASE("ammi decomposes the interaction") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 40; ++trial) {
            const auto m = random_matrix(2 + rng() % 6, 2 + rng() % 6, rng);
            const auto a = stability::ammi(m);
            const auto dc = double_centered(m.values);
            double ss = 0.0;
            for (double v : dc.data) ss += v * v;
            CHECK(a.interaction_ss == doctest::Approx(ss).epsilon(1e-10));
            CHECK(a.singular_values.size() == std::min(m.values.rows, m.values.cols) - 1);
            double share = 0.0;
            for (double v : a.variance_explained) share += v;
            CHECK(share == doctest::Approx(1.0).epsilon(1e-12));
            // scores multiply back to the interaction residuals
            for (std::size_t i = 0; i < dc.rows; ++i) {
                for (std::size_t j = 0; j < dc.cols; ++j) {
                    double v = 0.0;
                    for (std::size_t q = 0; q < a.singular_values.size(); ++q) {
                        v += a.genotype_scores(i, q) * a.environment_scores(j, q);
                    }
                    CHECK(std::abs(v - dc(i, j)) < 1e-9);
                }
            }
        }

        // fixture: the interaction sum of squares equals r times the cell-mean one
        const auto r = pipeline::analyze(design::builtin_design("gxe"), data::builtin_dataset("gxe"));
        REQUIRE(r.stability);
        CHECK(r.stability->ammi.interaction_ss * 2.0 ==
              doctest::Approx(r.anova.row("Genotype:Environment").ss).epsilon(1e-10));
    }

    TEST_CASE("regression stability") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 40; ++trial) {
            const auto m = random_matrix(2 + rng() % 6, 3 + rng() % 5, rng);
            const auto fw = stability::finlay_wilkinson(m);
            double mean = 0.0;
            for (const auto& f : fw) mean += f.slope / static_cast<double>(fw.size());
            CHECK(mean == doctest::Approx(1.0).epsilon(1e-10));
            const auto er = stability::eberhart_russell(m);
            REQUIRE(er.size() == fw.size());
            for (std::size_t i = 0; i < er.size(); ++i) {
                CHECK(er[i].slope == doctest::Approx(fw[i].slope).epsilon(1e-12));
                CHECK(er[i].rss >= 0.0);
                REQUIRE(er[i].s2_di.has_value());
                CHECK(*er[i].s2_di >= 0.0);
            }
        }
        const auto two = stability::eberhart_russell(random_matrix(3, 2, rng));
        for (const auto& e : two) CHECK_FALSE(e.s2_di.has_value());
    }

    TEST_CASE("additive tables have no interaction structure") {
        std::mt19937_64 rng(5);
        const auto m = random_matrix(5, 4, rng, true);
        const auto a = stability::ammi(m);
        for (double s : a.singular_values) CHECK(s < 1e-9);
        for (const auto& f : stability::finlay_wilkinson(m)) CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-10));
        for (const auto& e : stability::eberhart_russell(m)) {
            CHECK(e.rss < 1e-18);
            CHECK(*e.s2_di < 1e-18);
        }
    }

    TEST_CASE("gge coordinates") {
        std::mt19937_64 rng(9);
        const auto m = random_matrix(6, 4, rng);
        const auto g = stability::gge_coordinates(m);
        CHECK(g.genotype_coords.rows == 6);
        CHECK(g.genotype_coords.cols == 2);
        CHECK(g.environment_coords.rows == 4);
        double share = 0.0;
        for (double v : g.variance_explained) share += v;
        CHECK(share == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g.variance_explained[0] >= g.variance_explained[1]);
        // symmetric scaling: each axis has equal spread on both sides
        for (std::size_t q = 0; q < 2; ++q) {
            double gn = 0.0;
            double en = 0.0;
            for (std::size_t i = 0; i < 6; ++i) gn += g.genotype_coords(i, q) * g.genotype_coords(i, q);
            for (std::size_t j = 0; j < 4; ++j) en += g.environment_coords(j, q) * g.environment_coords(j, q);
            CHECK(gn == doctest::Approx(g.singular_values[q]).epsilon(1e-10));
            CHECK(en == doctest::Approx(g.singular_values[q]).epsilon(1e-10));
        }
    }

    TEST_CASE("errors") {
        std::mt19937_64 rng(1);
        CHECK(error_of([&] { stability::ammi(random_matrix(1, 4, rng)); }) == ErrorCode::DegenerateMatrix);
        CHECK(error_of([&] { stability::ammi(random_matrix(4, 1, rng)); }) == ErrorCode::DegenerateMatrix);
        auto flat = random_matrix(3, 3, rng);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) flat.values(i, j) = static_cast<double>(i * 3 + (i + j) % 3);
        }
        CHECK(error_of([&] { stability::finlay_wilkinson(flat); }) == ErrorCode::ConstantEnvironmentIndex);
    }
}
