#include <doctest.h>

#include <cmath>

#include "oracles/frozen_values.hpp"
#include "stratus/dist.hpp"
#include "stratus/error.hpp"

using namespace stratus;

TEST_SUITE("dist") {
    TEST_CASE("normal") {
        CHECK(dist::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
        CHECK(dist::normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-13));
        CHECK(dist::normal_cdf(-7.5) == doctest::Approx(3.1908916729108844e-14).epsilon(1e-10));
        for (double p = 0.001; p < 1.0; p += 0.0371) {
            CHECK(dist::normal_cdf(dist::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
        }
        CHECK(dist::normal_cdf(1.3) + dist::normal_sf(1.3) == doctest::Approx(1.0).epsilon(1e-15));
    }

    TEST_CASE("incomplete beta and F tail against reference values") {
        for (const auto& b : oracle::kIncompleteBeta) {
            CHECK(dist::incomplete_beta(b.a, b.b, b.x) == doctest::Approx(b.value).epsilon(1e-12));
        }
        for (const auto& f : oracle::kFTails) {
            CHECK(dist::f_sf(f.f, f.df1, f.df2) == doctest::Approx(f.sf).epsilon(1e-10));
        }
        for (const auto& t : oracle::kTTails) {
            CHECK(dist::t_sf(t.t, t.df) == doctest::Approx(t.sf).epsilon(1e-12));
        }
        CHECK(dist::f_sf(0.0, 3, 10) == 1.0);
        CHECK(dist::incomplete_beta(2, 3, 0.0) == 0.0);
        CHECK(dist::incomplete_beta(2, 3, 1.0) == 1.0);
    }

    TEST_CASE("beta symmetry and t/F identity") {
        for (double a : {0.3, 1.0, 2.5, 40.0}) {
            for (double b : {0.7, 3.0, 15.0}) {
                for (double x : {0.05, 0.4, 0.93}) {
                    CHECK(dist::incomplete_beta(a, b, x) + dist::incomplete_beta(b, a, 1.0 - x) ==
                          doctest::Approx(1.0).epsilon(1e-12));
                }
            }
        }
        for (double df : {1.0, 4.0, 17.0, 250.0}) {
            for (double t : {0.2, 1.5, 4.0}) {
                CHECK(2.0 * dist::t_sf(t, df) == doctest::Approx(dist::f_sf(t * t, 1.0, df)).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("studentized range") {
        for (const auto& r : oracle::kRangeCdfs) {
            CHECK(dist::studentized_range_cdf(r.q, r.k, r.df) == doctest::Approx(r.cdf).epsilon(1e-8));
        }
        for (const auto& r : oracle::kRangeQuantilesScipy) {
            CHECK(dist::studentized_range_quantile(0.05, r.k, r.df) == doctest::Approx(r.q95).epsilon(1e-7));
        }
        // k = 2 reduces to sqrt(2) |t|
        for (double df : {3.0, 12.0, 60.0}) {
            const double q = dist::studentized_range_quantile(0.05, 2, df);
            CHECK(2.0 * dist::t_sf(q / std::sqrt(2.0), df) == doctest::Approx(0.05).epsilon(1e-9));
        }
        // infinite df: range of normals
        const double q_inf = dist::studentized_range_quantile(0.05, 3, std::numeric_limits<double>::infinity());
        CHECK(q_inf == doctest::Approx(3.314).epsilon(1e-3));
        double last = 0.0;
        for (int k = 2; k <= 10; ++k) {
            const double q = dist::studentized_range_quantile(0.05, k, 12);
            CHECK(q > last);
            last = q;
        }
    }

    TEST_CASE("domain errors") {
        CHECK_THROWS_AS(dist::f_sf(1.0, 0.0, 5.0), Error);
        CHECK_THROWS_AS(dist::incomplete_beta(-1.0, 1.0, 0.5), Error);
        CHECK_THROWS_AS(dist::normal_quantile(1.5), Error);
        CHECK(std::isinf(dist::normal_quantile(1.0)));
        CHECK_THROWS_AS(dist::studentized_range_quantile(0.05, 1, 10), Error);
    }
}
