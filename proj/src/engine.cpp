#include "stratus/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "stratus/dist.hpp"
#include "stratus/error.hpp"
#include "stratus/numfmt.hpp"

namespace stratus::engine {

namespace {

std::vector<std::size_t> factor_positions(const design::ValidatedDesign& design,
                                          const std::vector<std::string>& factors) {
    std::vector<std::size_t> pos;
    pos.reserve(factors.size());
    for (const auto& f : factors) pos.push_back(design.factor_index(f));
    return pos;
}

std::size_t flat_index(const std::vector<std::size_t>& shape, const std::vector<std::size_t>& positions,
                       const std::vector<std::size_t>& row_levels) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < positions.size(); ++k) idx = idx * shape[k] + row_levels[positions[k]];
    return idx;
}

EffectTerm make_shell(const design::ValidatedDesign& design, const std::vector<std::string>& factors) {
    EffectTerm t;
    t.effect.factors = factors;
    t.effect.order = static_cast<int>(factors.size());
    std::size_t n_levels = 1;
    for (const auto& f : factors) {
        t.shape.push_back(design.levels(f).levels.size());
        n_levels *= t.shape.back();
    }
    t.labels.assign(n_levels, std::string());
    for (std::size_t idx = 0; idx < n_levels; ++idx) {
        std::size_t rem = idx;
        std::vector<std::string> parts(factors.size());
        for (std::size_t k = factors.size(); k-- > 0;) {
            parts[k] = design.levels(factors[k]).levels[rem % t.shape[k]];
            rem /= t.shape[k];
        }
        t.labels[idx] = design::effect_label(parts);
    }
    t.means.assign(n_levels, 0.0);
    t.deviations.assign(n_levels, 0.0);
    return t;
}

// Recursive subtraction: deviation(S) = M(S) - mu - sum of deviations of
// proper non-empty subsets of S, each broadcast onto the levels of S.
class Decomposer {
public:
    Decomposer(const design::ValidatedDesign& design, const std::vector<double>& y,
               const std::vector<std::vector<std::size_t>>& row_levels, double mu)
        : design_(design), y_(y), row_levels_(row_levels), mu_(mu) {}

    const EffectTerm& get(const std::vector<std::string>& factors) {
        const std::vector<std::size_t> key = canonical(factors);
        if (const auto it = memo_.find(key); it != memo_.end()) return it->second;

        std::vector<std::string> ordered;
        for (std::size_t p : key) ordered.push_back(design_.factors[p].factor);
        EffectTerm t = make_shell(design_, ordered);
        const std::vector<std::size_t> positions = key;
        std::vector<double> counts(t.means.size(), 0.0);
        for (std::size_t r = 0; r < y_.size(); ++r) {
            const std::size_t idx = flat_index(t.shape, positions, row_levels_[r]);
            t.means[idx] += y_[r];
            counts[idx] += 1.0;
        }
        for (std::size_t i = 0; i < t.means.size(); ++i) {
            if (counts[i] == 0.0) {
                throw Error(ErrorCode::UnbalancedDesign, fmt::format("level {} has no observations", t.labels[i]));
            }
            t.means[i] /= counts[i];
        }
        t.n_per_level = static_cast<std::size_t>(counts.front());
        if (std::any_of(counts.begin(), counts.end(), [&](double c) { return c != counts.front(); })) {
            throw Error(ErrorCode::UnbalancedDesign,
                        fmt::format("term {} has unequal replication", design::effect_label(ordered)));
        }

        for (std::size_t i = 0; i < t.means.size(); ++i) t.deviations[i] = t.means[i] - mu_;
        // Proper non-empty subsets, by bitmask over `key`.
        const std::size_t k = key.size();
        for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << k); ++mask) {
            std::vector<std::string> sub;
            std::vector<std::size_t> sub_pos_in_t;
            for (std::size_t b = 0; b < k; ++b) {
                if (mask & (std::size_t{1} << b)) {
                    sub.push_back(ordered[b]);
                    sub_pos_in_t.push_back(b);
                }
            }
            const EffectTerm& s = get(sub);
            std::vector<std::size_t> digits(k);
            for (std::size_t i = 0; i < t.deviations.size(); ++i) {
                std::size_t rem = i;
                for (std::size_t d = k; d-- > 0;) {
                    digits[d] = rem % t.shape[d];
                    rem /= t.shape[d];
                }
                std::size_t j = 0;
                for (std::size_t q = 0; q < sub_pos_in_t.size(); ++q) j = j * s.shape[q] + digits[sub_pos_in_t[q]];
                t.deviations[i] -= s.deviations[j];
            }
        }
        return memo_.emplace(key, std::move(t)).first->second;
    }

private:
    std::vector<std::size_t> canonical(const std::vector<std::string>& factors) const {
        std::vector<std::size_t> key;
        for (const auto& f : factors) key.push_back(design_.factor_index(f));
        std::sort(key.begin(), key.end());
        return key;
    }

    const design::ValidatedDesign& design_;
    const std::vector<double>& y_;
    const std::vector<std::vector<std::size_t>>& row_levels_;
    double mu_;
    std::map<std::vector<std::size_t>, EffectTerm> memo_;
};

// Re-express a memoized term in the requested factor order.
EffectTerm reorder(const design::ValidatedDesign& design, const EffectTerm& source,
                   const std::vector<std::string>& factors) {
    if (source.effect.factors == factors) return source;
    EffectTerm t = make_shell(design, factors);
    t.n_per_level = source.n_per_level;
    const std::size_t k = factors.size();
    std::vector<std::size_t> where(k);
    for (std::size_t d = 0; d < k; ++d) {
        where[d] = static_cast<std::size_t>(
            std::find(source.effect.factors.begin(), source.effect.factors.end(), factors[d]) -
            source.effect.factors.begin());
    }
    std::vector<std::size_t> digits(k);
    std::vector<std::size_t> src_digits(k);
    for (std::size_t i = 0; i < t.means.size(); ++i) {
        std::size_t rem = i;
        for (std::size_t d = k; d-- > 0;) {
            digits[d] = rem % t.shape[d];
            rem /= t.shape[d];
        }
        for (std::size_t d = 0; d < k; ++d) src_digits[where[d]] = digits[d];
        std::size_t j = 0;
        for (std::size_t d = 0; d < k; ++d) j = j * source.shape[d] + src_digits[d];
        t.means[i] = source.means[j];
        t.deviations[i] = source.deviations[j];
    }
    return t;
}

}  // namespace

const EffectTerm* FittedModel::find(std::string_view label) const noexcept {
    for (const auto& t : terms) {
        if (t.effect.label() == label) return &t;
    }
    return nullptr;
}

const EffectTerm& FittedModel::term(std::string_view label) const {
    if (const EffectTerm* t = find(label)) return *t;
    throw Error(ErrorCode::DomainError, fmt::format("model has no term '{}'", label));
}

std::size_t FittedModel::level_of(const EffectTerm& t, const design::ValidatedDesign& design,
                                  std::size_t row) const {
    return flat_index(t.shape, factor_positions(design, t.effect.factors), row_levels.at(row));
}

EffectTerm decompose(const design::ValidatedDesign& design, const FittedModel& model,
                     const std::vector<std::string>& factors) {
    Decomposer d(design, model.observed, model.row_levels, model.grand_mean);
    return reorder(design, d.get(factors), factors);
}

FittedModel fit(const design::ValidatedDesign& design, const data::Dataset& data) {
    FittedModel m;
    const auto& response = data.column(design.spec.response);
    if (!response.numeric) {
        throw Error(ErrorCode::NonNumericResponse,
                    fmt::format("response column '{}' is not numeric", design.spec.response));
    }
    m.observed = *response.numeric;
    const std::size_t n = m.observed.size();
    if (n == 0) throw Error(ErrorCode::EmptyTable, "no observations to fit");

    std::vector<std::map<std::string_view, std::size_t>> index(design.factors.size());
    std::vector<const data::Column*> cols;
    for (std::size_t f = 0; f < design.factors.size(); ++f) {
        cols.push_back(&data.column(design.factors[f].factor));
        for (std::size_t l = 0; l < design.factors[f].levels.size(); ++l) {
            index[f][design.factors[f].levels[l]] = l;
        }
    }
    m.row_levels.assign(n, std::vector<std::size_t>(design.factors.size()));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t f = 0; f < design.factors.size(); ++f) {
            const auto it = index[f].find(cols[f]->cells[r]);
            if (it == index[f].end()) {
                throw Error(ErrorCode::UnbalancedDesign,
                            fmt::format("row {}: level '{}' of factor '{}' was not validated", r + 1, cols[f]->cells[r],
                                        design.factors[f].factor));
            }
            m.row_levels[r][f] = it->second;
        }
    }

    double sum = 0.0;
    for (double v : m.observed) sum += v;
    m.grand_mean = sum / static_cast<double>(n);

    Decomposer d(design, m.observed, m.row_levels, m.grand_mean);
    std::vector<std::string> all;
    for (const auto& f : design.factors) all.push_back(f.factor);
    m.cells = reorder(design, d.get(all), all);

    m.fitted.assign(n, m.grand_mean);
    for (const auto& e : design.effects.effects) {
        EffectTerm t = reorder(design, d.get(e.factors), e.factors);
        t.effect = e;
        const auto positions = factor_positions(design, e.factors);
        for (std::size_t r = 0; r < n; ++r) m.fitted[r] += t.deviations[flat_index(t.shape, positions, m.row_levels[r])];
        m.terms.push_back(std::move(t));
    }
    m.residuals.resize(n);
    for (std::size_t r = 0; r < n; ++r) m.residuals[r] = m.observed[r] - m.fitted[r];
    return m;
}

const AnovaRow* AnovaTable::find(std::string_view source) const noexcept {
    for (const auto& r : rows) {
        if (r.source == source) return &r;
    }
    return nullptr;
}

const AnovaRow& AnovaTable::row(std::string_view source) const {
    if (const AnovaRow* r = find(source)) return *r;
    throw Error(ErrorCode::DomainError, fmt::format("ANOVA table has no row '{}'", source));
}

int AnovaTable::total_df() const noexcept {
    int df = 0;
    for (const auto& r : rows) df += r.df;
    return df;
}

double AnovaTable::total_ss() const noexcept {
    double ss = 0.0;
    for (const auto& r : rows) ss += r.ss;
    return ss;
}

FTest f_test(double ms, int df, double ms_den, int df_den, double zero_tolerance) {
    FTest out;
    if (ms_den <= zero_tolerance) {
        out.degenerate = true;
        if (ms > zero_tolerance) {
            out.f = std::numeric_limits<double>::infinity();
            out.p = 0.0;
        }
        return out;
    }
    out.f = ms / ms_den;
    out.p = dist::f_sf(std::max(0.0, *out.f), df, df_den);
    return out;
}

AnovaTable anova(const design::ValidatedDesign& /*design*/, const FittedModel& model) {
    AnovaTable table;
    const double n = static_cast<double>(model.observed.size());
    int model_df = 0;
    double mean_square_y = 0.0;
    for (double v : model.observed) mean_square_y += v * v;
    mean_square_y /= n;

    for (const auto& t : model.terms) {
        AnovaRow row;
        row.source = t.effect.label();
        row.df = 1;
        for (std::size_t s : t.shape) row.df *= static_cast<int>(s) - 1;
        double ss = 0.0;
        for (double dev : t.deviations) ss += dev * dev;
        row.ss = ss * static_cast<double>(t.n_per_level);
        row.ms = row.ss / row.df;
        row.denominator = t.effect.denominator;
        model_df += row.df;
        table.rows.push_back(std::move(row));
    }
    AnovaRow residual;
    residual.source = std::string(design::kResidual);
    residual.df = static_cast<int>(model.observed.size()) - 1 - model_df;
    if (residual.df <= 0) {
        throw Error(ErrorCode::NoResidualDf, "the model leaves no residual degrees of freedom");
    }
    for (double e : model.residuals) residual.ss += e * e;
    residual.ms = residual.ss / residual.df;
    table.rows.push_back(residual);

    // Mean squares below this are rounding noise relative to the data scale.
    const double zero_tolerance = 1e-20 * mean_square_y;
    for (auto& row : table.rows) {
        if (!row.denominator) continue;
        const AnovaRow& den = table.row(*row.denominator);
        const FTest test = f_test(row.ms, row.df, den.ms, den.df, zero_tolerance);
        row.f = test.f;
        row.p = test.p;
        row.degenerate = test.degenerate;
    }
    return table;
}

std::string to_csv(const AnovaTable& table) {
    std::string out = "source,df,ss,ms,f,p,denominator\n";
    for (const auto& r : table.rows) {
        out += fmt::format("{},{},{},{},{},{},{}\n", r.source, r.df, fixed(r.ss), fixed(r.ms), fixed_or_blank(r.f),
                           r.p ? p_value_text(*r.p) : std::string(), r.denominator.value_or(""));
    }
    return out;
}

}  // namespace stratus::engine
