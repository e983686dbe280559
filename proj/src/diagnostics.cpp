#include "stratus/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "stratus/dist.hpp"
#include "stratus/error.hpp"
#include "stratus/numfmt.hpp"

namespace stratus::diagnostics {

namespace {

// c[0] + c[1] x + ... + c[n-1] x^(n-1)
double poly(const double* c, int n, double x) {
    double result = c[0];
    if (n > 1) {
        double p = x * c[n - 1];
        for (int j = n - 2; j > 0; --j) p = (p + c[j]) * x;
        result += p;
    }
    return result;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ShapiroResult shapiro_wilk(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw Error(ErrorCode::SampleTooSmall, fmt::format("Shapiro-Wilk needs n >= 3, got {}", n));
    if (n > 5000) throw Error(ErrorCode::SampleTooLarge, fmt::format("Shapiro-Wilk supports n <= 5000, got {}", n));
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    double scale = std::max(std::abs(x.front()), std::abs(x.back()));
    if (!(range > 1e-12 * scale) || range == 0.0) {
        throw Error(ErrorCode::ZeroVariance, "Shapiro-Wilk: all values are equal");
    }

    static constexpr double g[2] = {-2.273, 0.459};
    static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);
    std::vector<double> a(half, 0.0);
    if (n == 3) {
        a[0] = std::numbers::sqrt2 / 2.0;
    } else {
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = dist::normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
        std::size_t first = 1;
        double fac = 0.0;
        if (n > 5) {
            first = 2;
            const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
    }

    // Work on range-scaled values for stability.
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= an;
    double ssq = 0.0;
    for (double v : x) ssq += ((v - mean) / range) * ((v - mean) / range);
    double numerator = 0.0;
    for (std::size_t i = 0; i < half; ++i) numerator += a[i] * (x[n - 1 - i] - x[i]) / range;
    ShapiroResult out;
    out.w = std::min(1.0, numerator * numerator / ssq);

    if (n == 3) {
        constexpr double pi6 = 6.0 / std::numbers::pi;
        constexpr double stqr = std::numbers::pi / 3.0;
        out.p = std::clamp(pi6 * (std::asin(std::sqrt(out.w)) - stqr), 0.0, 1.0);
        return out;
    }
    const double w1 = std::log(std::max(1.0 - out.w, std::numeric_limits<double>::min()));
    double y = w1;
    double mu = 0.0;
    double sigma = 1.0;
    if (n <= 11) {
        const double gamma = poly(g, 2, an);
        if (y >= gamma) {
            out.p = 1e-99;
            return out;
        }
        y = -std::log(gamma - y);
        mu = poly(c3, 4, an);
        sigma = std::exp(poly(c4, 4, an));
    } else {
        const double xx = std::log(an);
        mu = poly(c5, 4, xx);
        sigma = std::exp(poly(c6, 3, xx));
    }
    out.p = dist::normal_sf((y - mu) / sigma);
    return out;
}

LeveneResult levene(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) {
        throw Error(ErrorCode::InsufficientGroups, fmt::format("Levene needs >= 2 groups, got {}", groups.size()));
    }
    std::vector<std::vector<double>> z;
    std::size_t total = 0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw Error(ErrorCode::InsufficientGroups, "Levene needs >= 2 observations per group");
        const double med = median(g);
        std::vector<double> d;
        for (double v : g) d.push_back(std::abs(v - med));
        total += d.size();
        z.push_back(std::move(d));
    }
    double grand = 0.0;
    for (const auto& d : z) {
        for (double v : d) grand += v;
    }
    grand /= static_cast<double>(total);
    double between = 0.0;
    double within = 0.0;
    for (const auto& d : z) {
        double m = 0.0;
        for (double v : d) m += v;
        m /= static_cast<double>(d.size());
        between += static_cast<double>(d.size()) * (m - grand) * (m - grand);
        for (double v : d) within += (v - m) * (v - m);
    }
    const double k = static_cast<double>(z.size());
    const double df1 = k - 1.0;
    const double df2 = static_cast<double>(total) - k;
    LeveneResult out;
    const double scale = std::max(grand * grand * static_cast<double>(total), std::numeric_limits<double>::min());
    if (within <= 1e-24 * scale) {
        if (between <= 1e-24 * scale) return out;
        out.f = std::numeric_limits<double>::infinity();
        out.p = 0.0;
        return out;
    }
    out.f = (between / df1) / (within / df2);
    out.p = dist::f_sf(out.f, df1, df2);
    return out;
}

std::vector<StratumResiduals> residuals_by_stratum(const engine::FittedModel& model,
                                                   const design::ValidatedDesign& design,
                                                   const mixed::VarianceComponents* vc) {
    std::vector<StratumResiduals> out;
    int model_df = 0;
    for (const auto& t : model.terms) {
        int df = 1;
        for (std::size_t s : t.shape) df *= static_cast<int>(s) - 1;
        model_df += df;
    }

    for (const auto& stratum : design.effects.strata) {
        if (stratum.defining_factors.empty()) continue;
        const engine::EffectTerm& t = model.term(stratum.label);
        StratumResiduals s;
        s.stratum = stratum.label;
        s.df = 1;
        for (std::size_t n : t.shape) s.df *= static_cast<int>(n) - 1;
        std::vector<bool> seen(t.labels.size(), false);
        for (std::size_t r = 0; r < model.observed.size(); ++r) {
            const std::size_t idx = model.level_of(t, design, r);
            if (seen[idx]) continue;
            seen[idx] = true;
            s.residuals.push_back(t.deviations[idx]);
            s.rows.push_back(r);
        }
        out.push_back(std::move(s));
    }

    StratumResiduals residual;
    residual.stratum = std::string(design::kResidual);
    residual.df = static_cast<int>(model.observed.size()) - 1 - model_df;
    residual.residuals = model.residuals;
    for (std::size_t r = 0; r < model.observed.size(); ++r) residual.rows.push_back(r);

    if (vc && design.spec.kind == design::DesignKind::mixed) {
        const double sigma2_e = vc->get(design::kResidual);
        for (const auto& t : model.terms) {
            if (t.effect.role != design::Role::random || !vc->has(t.effect.label())) continue;
            const double sigma2_r = vc->get(t.effect.label());
            const double m = static_cast<double>(t.n_per_level);
            const double denom = sigma2_r + sigma2_e / m;
            const double lambda = denom > 0.0 ? sigma2_r / denom : 0.0;
            for (std::size_t r = 0; r < model.observed.size(); ++r) {
                residual.residuals[r] += (1.0 - lambda) * t.deviations[model.level_of(t, design, r)];
            }
        }
    }
    out.push_back(std::move(residual));
    return out;
}

DiagnosticReport validity(std::vector<StratumDiagnostic> entries, double alpha_v) {
    DiagnosticReport report;
    report.alpha_v = alpha_v;
    report.overall_valid = true;
    auto passes = [&](const std::optional<double>& p) { return !p || alpha_v <= 0.0 || *p > alpha_v; };
    for (auto& e : entries) {
        e.normality_ok = passes(e.shapiro_p);
        e.homogeneity_ok = passes(e.levene_p);
        report.overall_valid = report.overall_valid && e.normality_ok && e.homogeneity_ok;
    }
    report.strata = std::move(entries);
    return report;
}

DiagnosticReport diagnose(const engine::FittedModel& model, const design::ValidatedDesign& design,
                          const inference::AdmissibleDomain& domain, const mixed::VarianceComponents* vc,
                          double alpha_v) {
    std::vector<StratumDiagnostic> entries;
    for (auto& s : residuals_by_stratum(model, design, vc)) {
        StratumDiagnostic d;
        d.stratum = s.stratum;
        d.df = s.df;
        d.n = s.residuals.size();
        try {
            const ShapiroResult sw = shapiro_wilk(s.residuals);
            d.shapiro_w = sw.w;
            d.shapiro_p = sw.p;
        } catch (const Error& e) {
            d.notes.push_back(fmt::format("normality not testable ({}): {}", e.name(), e.what()));
        }

        // Candidate groupings, first usable wins: levels of the dominant
        // effects tested in this stratum jointly, then each alone, then the
        // same for every treatment effect tested here.
        std::vector<const design::Effect*> tested;
        for (const auto& e : design.effects.effects) {
            if (e.term == design::TermKind::treatment && e.denominator == s.stratum) tested.push_back(&e);
        }
        std::vector<std::vector<std::string>> candidates;
        auto add_candidates = [&](const std::vector<const design::Effect*>& effects) {
            if (effects.empty()) return;
            std::vector<std::string> joint;
            for (const design::Effect* e : effects) {
                for (const auto& f : e->factors) {
                    if (std::find(joint.begin(), joint.end(), f) == joint.end()) joint.push_back(f);
                }
            }
            std::sort(joint.begin(), joint.end(), [&](const std::string& a, const std::string& b) {
                return design.factor_index(a) < design.factor_index(b);
            });
            candidates.push_back(joint);
            if (effects.size() > 1) {
                for (const design::Effect* e : effects) candidates.push_back(e->factors);
            }
        };
        std::vector<const design::Effect*> dominant;
        for (const design::Effect* e : tested) {
            if (domain.is_dominant(e->label())) dominant.push_back(e);
        }
        add_candidates(dominant);
        add_candidates(tested);

        auto group_residuals = [&](const std::vector<std::string>& factors) {
            std::vector<std::size_t> positions;
            for (const auto& f : factors) positions.push_back(design.factor_index(f));
            std::map<std::vector<std::size_t>, std::vector<double>> grouped;
            for (std::size_t i = 0; i < s.residuals.size(); ++i) {
                std::vector<std::size_t> key;
                for (std::size_t p : positions) key.push_back(model.row_levels[s.rows[i]][p]);
                grouped[key].push_back(s.residuals[i]);
            }
            std::vector<std::vector<double>> groups;
            for (auto& [key, values] : grouped) groups.push_back(std::move(values));
            return groups;
        };

        if (candidates.empty()) {
            d.notes.push_back("homogeneity not testable: no treatment effect is tested in this stratum");
        } else {
            std::vector<std::vector<double>> groups;
            for (const auto& factors : candidates) {
                auto g = group_residuals(factors);
                std::size_t largest = 0;
                for (const auto& v : g) largest = std::max(largest, v.size());
                if (largest > 2) {
                    d.levene_factors = factors;
                    groups = std::move(g);
                    break;
                }
            }
            if (groups.empty()) {
                d.levene_factors = candidates.front();
                d.notes.push_back("homogeneity not testable: groups hold at most two residuals");
            } else {
                try {
                    const LeveneResult lv = levene(groups);
                    d.levene_f = lv.f;
                    d.levene_p = lv.p;
                } catch (const Error& e) {
                    d.notes.push_back(fmt::format("homogeneity not testable ({}): {}", e.name(), e.what()));
                }
            }
        }
        entries.push_back(std::move(d));
    }
    return validity(std::move(entries), alpha_v);
}

}  // namespace stratus::diagnostics
