#include "stratus/dist.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "stratus/error.hpp"

namespace stratus::dist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void domain_error(const std::string& what) {
    throw Error(ErrorCode::DomainError, what);
}

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
GaussRule gauss_legendre(int n) {
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

const GaussRule& panel_rule() {
    static const GaussRule rule = gauss_legendre(16);
    return rule;
}

// Composite Gauss-Legendre over [lo, hi] with `panels` equal panels.
template <typename F>
double integrate(F&& f, double lo, double hi, int panels) {
    const GaussRule& rule = panel_rule();
    const double width = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        const double mid = a + 0.5 * width;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            acc += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
        }
        total += 0.5 * width * acc;
    }
    return total;
}

// Continued fraction for I_x(a,b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) {
            return h;
        }
    }
    throw Error(ErrorCode::ConvergenceError,
                fmt::format("incomplete beta continued fraction did not converge (a={}, b={}, x={})", a, b, x));
}

// P(range of k iid N(0,1) < w).
double range_cdf_normal(double w, int k) {
    if (w <= 0.0) {
        return 0.0;
    }
    const double km1 = k - 1.0;
    auto integrand = [&](double z) {
        const double spread = normal_cdf(z) - normal_cdf(z - w);
        if (spread <= 0.0) {
            return 0.0;
        }
        return std::exp(-0.5 * z * z) * std::pow(spread, km1);
    };
    // 8 panels x 16 nodes = 128 inner nodes.
    const double value = integrate(integrand, -8.5, 8.5, 8) * k / std::sqrt(2.0 * std::numbers::pi);
    return std::min(1.0, std::max(0.0, value));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -kInf;
        if (p == 1.0) return kInf;
        domain_error(fmt::format("normal_quantile: p={} outside [0,1]", p));
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value = 0.0;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || std::isnan(x) || x < 0.0 || x > 1.0) {
        domain_error(fmt::format("incomplete_beta: invalid arguments a={}, b={}, x={}", a, b, x));
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_sf(double f, double df1, double df2) {
    if (std::isnan(f) || f < 0.0 || !(df1 > 0.0) || !(df2 > 0.0)) {
        domain_error(fmt::format("f_sf: invalid arguments f={}, df1={}, df2={}", f, df1, df2));
    }
    if (f == 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

double t_sf(double t, double df) {
    if (std::isnan(t) || !(df > 0.0)) {
        domain_error(fmt::format("t_sf: invalid arguments t={}, df={}", t, df));
    }
    if (std::isinf(t)) return t > 0.0 ? 0.0 : 1.0;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t >= 0.0 ? tail : 1.0 - tail;
}

double studentized_range_cdf(double q, int k, double df) {
    if (std::isnan(q) || q < 0.0 || k < 2 || !(df > 0.0)) {
        domain_error(fmt::format("studentized range: invalid arguments q={}, k={}, df={}", q, k, df));
    }
    if (q == 0.0) return 0.0;
    if (std::isinf(q)) return 1.0;
    if (std::isinf(df) || df > 1e5) {
        return range_cdf_normal(q, k);
    }
    // Outer integral over s = sqrt(chi^2_df / df), density
    // df^(df/2) s^(df-1) exp(-df s^2 / 2) / (Gamma(df/2) 2^(df/2 - 1)).
    const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
    const double spread = 9.0 / std::sqrt(2.0 * df);
    const double lo = std::max(0.0, 1.0 - spread);
    const double hi = 1.0 + spread;
    auto outer = [&](double s) {
        if (s <= 0.0) {
            return 0.0;
        }
        const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
        return std::exp(log_density) * range_cdf_normal(q * s, k);
    };
    // 8 panels x 16 nodes = 128 outer nodes.
    const double value = integrate(outer, lo, hi, 8);
    return std::min(1.0, std::max(0.0, value));
}

double studentized_range_sf(double q, int k, double df) {
    return 1.0 - studentized_range_cdf(q, k, df);
}

namespace {

double range_quantile_uncached(double alpha, int k, double df) {
    double lo = 0.0;
    double hi = 1.0;
    int iterations = 0;
    while (studentized_range_sf(hi, k, df) > alpha) {
        lo = hi;
        hi *= 2.0;
        if (++iterations > 60) {
            throw Error(ErrorCode::ConvergenceError, "studentized_range_quantile: could not bracket the quantile");
        }
    }
    // Illinois false position on sf(q) - alpha, bracketed by [lo, hi].
    double f_lo = studentized_range_sf(lo, k, df) - alpha;
    double f_hi = studentized_range_sf(hi, k, df) - alpha;
    int side = 0;
    for (int i = 0; i < 200; ++i) {
        double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
        const double f_mid = studentized_range_sf(mid, k, df) - alpha;
        if (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = mid;
            f_hi = f_mid;
            if (side == 1) f_lo *= 0.5;
            side = 1;
        }
        if (hi - lo < 1e-10 * std::max(1.0, hi) || f_mid == 0.0) return mid;
    }
    throw Error(ErrorCode::ConvergenceError, "studentized_range_quantile: root search did not converge");
}

}  // namespace

double studentized_range_quantile(double alpha, int k, double df) {
    if (!(alpha > 0.0 && alpha < 1.0) || k < 2 || !(df > 0.0)) {
        domain_error(fmt::format("studentized_range_quantile: invalid arguments alpha={}, k={}, df={}", alpha, k, df));
    }
    // Comparison sets of one analysis share a few (alpha, k, df) triples.
    static std::mutex mutex;
    static std::map<std::tuple<double, int, double>, double> cache;
    const auto key = std::make_tuple(alpha, k, df);
    {
        const std::lock_guard<std::mutex> lock(mutex);
        if (const auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double q = range_quantile_uncached(alpha, k, df);
    const std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, q);
    return q;
}

}  // namespace stratus::dist
