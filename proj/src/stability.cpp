#include "stratus/stability.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "stratus/error.hpp"
#include "stratus/mixed.hpp"

namespace stratus::stability {

namespace {

void require_2x2(const GeMatrix& m) {
    if (m.values.rows < 2 || m.values.cols < 2) {
        throw Error(ErrorCode::DegenerateMatrix,
                    fmt::format("need at least 2 genotypes and 2 environments, got {}x{}", m.values.rows, m.values.cols));
    }
}

std::vector<double> row_means(const linalg::Matrix& x) {
    std::vector<double> out(x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) out[i] += x(i, j);
        out[i] /= static_cast<double>(x.cols);
    }
    return out;
}

std::vector<double> col_means(const linalg::Matrix& x) {
    std::vector<double> out(x.cols, 0.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < x.rows; ++i) out[j] += x(i, j);
        out[j] /= static_cast<double>(x.rows);
    }
    return out;
}

std::vector<double> proportions(const std::vector<double>& s) {
    double total = 0.0;
    for (double v : s) total += v * v;
    std::vector<double> out(s.size(), 0.0);
    if (total > 0.0) {
        for (std::size_t k = 0; k < s.size(); ++k) out[k] = s[k] * s[k] / total;
    }
    return out;
}

struct Regression {
    std::vector<double> index;
    std::vector<double> slope;
    std::vector<double> intercept;
    std::vector<double> rss;
};

Regression regress(const GeMatrix& m) {
    require_2x2(m);
    const auto env = col_means(m.values);
    double grand = 0.0;
    for (double v : env) grand += v;
    grand /= static_cast<double>(env.size());
    Regression r;
    double sxx = 0.0;
    double scale = 0.0;
    for (double e : env) {
        r.index.push_back(e - grand);
        sxx += (e - grand) * (e - grand);
        scale += e * e;
    }
    if (!(sxx > 1e-24 * scale) || sxx == 0.0) {
        throw Error(ErrorCode::ConstantEnvironmentIndex, "all environment means are equal; slopes are undefined");
    }
    const auto gm = row_means(m.values);
    for (std::size_t i = 0; i < m.values.rows; ++i) {
        double sxy = 0.0;
        for (std::size_t j = 0; j < m.values.cols; ++j) sxy += (m.values(i, j) - gm[i]) * r.index[j];
        const double b = sxy / sxx;
        double rss = 0.0;
        for (std::size_t j = 0; j < m.values.cols; ++j) {
            const double e = m.values(i, j) - gm[i] - b * r.index[j];
            rss += e * e;
        }
        r.slope.push_back(b);
        r.intercept.push_back(gm[i]);
        r.rss.push_back(rss);
    }
    return r;
}

}  // namespace

GeMatrix ge_matrix(const engine::FittedModel& model, const design::ValidatedDesign& design) {
    if (design.spec.kind != design::DesignKind::met) {
        throw Error(ErrorCode::NotApplicable, "stability analysis needs a multi-environment design");
    }
    const auto [g, e] = mixed::met_factors(design.spec);
    const engine::EffectTerm t = engine::decompose(design, model, {g, e});
    GeMatrix m;
    m.genotypes = design.levels(g).levels;
    m.environments = design.levels(e).levels;
    m.values = linalg::Matrix(m.genotypes.size(), m.environments.size());
    for (std::size_t i = 0; i < m.genotypes.size(); ++i) {
        for (std::size_t j = 0; j < m.environments.size(); ++j) m.values(i, j) = t.means[i * m.environments.size() + j];
    }
    return m;
}

AmmiResult ammi(const GeMatrix& m) {
    require_2x2(m);
    const auto gm = row_means(m.values);
    const auto em = col_means(m.values);
    double grand = 0.0;
    for (double v : gm) grand += v;
    grand /= static_cast<double>(gm.size());
    linalg::Matrix z(m.values.rows, m.values.cols);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) z(i, j) = m.values(i, j) - gm[i] - em[j] + grand;
    }
    const linalg::Svd svd = linalg::jacobi_svd(z);
    const std::size_t k = std::min(z.rows, z.cols) - 1;
    AmmiResult out;
    out.singular_values.assign(svd.s.begin(), svd.s.begin() + static_cast<std::ptrdiff_t>(k));
    out.genotype_scores = linalg::Matrix(z.rows, k);
    out.environment_scores = linalg::Matrix(z.cols, k);
    for (std::size_t c = 0; c < k; ++c) {
        const double root = std::sqrt(svd.s[c]);
        for (std::size_t i = 0; i < z.rows; ++i) out.genotype_scores(i, c) = svd.u(i, c) * root;
        for (std::size_t j = 0; j < z.cols; ++j) out.environment_scores(j, c) = svd.v(j, c) * root;
    }
    for (double s : out.singular_values) out.interaction_ss += s * s;
    out.variance_explained = proportions(out.singular_values);
    return out;
}

std::vector<FwEntry> finlay_wilkinson(const GeMatrix& m) {
    const Regression r = regress(m);
    std::vector<FwEntry> out;
    for (std::size_t i = 0; i < m.genotypes.size(); ++i) out.push_back({m.genotypes[i], r.slope[i], r.intercept[i]});
    return out;
}

std::vector<ErEntry> eberhart_russell(const GeMatrix& m) {
    const Regression r = regress(m);
    const std::size_t e = m.environments.size();
    std::vector<ErEntry> out;
    for (std::size_t i = 0; i < m.genotypes.size(); ++i) {
        ErEntry entry;
        entry.genotype = m.genotypes[i];
        entry.slope = r.slope[i];
        entry.rss = r.rss[i];
        if (e > 2) entry.s2_di = std::max(0.0, r.rss[i] / static_cast<double>(e - 2));
        out.push_back(std::move(entry));
    }
    return out;
}

GgeResult gge_coordinates(const GeMatrix& m) {
    require_2x2(m);
    const auto em = col_means(m.values);
    linalg::Matrix z(m.values.rows, m.values.cols);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) z(i, j) = m.values(i, j) - em[j];
    }
    const linalg::Svd svd = linalg::jacobi_svd(z);
    GgeResult out;
    out.singular_values = svd.s;
    out.variance_explained = proportions(svd.s);
    out.genotype_coords = linalg::Matrix(z.rows, 2);
    out.environment_coords = linalg::Matrix(z.cols, 2);
    for (std::size_t c = 0; c < 2 && c < svd.s.size(); ++c) {
        const double root = std::sqrt(svd.s[c]);
        for (std::size_t i = 0; i < z.rows; ++i) out.genotype_coords(i, c) = svd.u(i, c) * root;
        for (std::size_t j = 0; j < z.cols; ++j) out.environment_coords(j, c) = svd.v(j, c) * root;
    }
    return out;
}

StabilityResult analyze(const GeMatrix& m) {
    StabilityResult out;
    out.matrix = m;
    out.ammi = ammi(m);
    out.gge = gge_coordinates(m);
    const Regression r = regress(m);
    out.environment_index = r.index;
    out.fw = finlay_wilkinson(m);
    out.er = eberhart_russell(m);
    return out;
}

}  // namespace stratus::stability
