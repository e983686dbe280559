#include "stratus/design.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "stratus/error.hpp"

namespace stratus::design {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw Error(ErrorCode::SchemaError, what); }
[[noreturn]] void constraint_error(const std::string& what) { throw Error(ErrorCode::ConstraintError, what); }

DesignKind parse_kind(const std::string& s) {
    if (s == "crd") return DesignKind::crd;
    if (s == "rcbd") return DesignKind::rcbd;
    if (s == "factorial") return DesignKind::factorial;
    if (s == "split_plot") return DesignKind::split_plot;
    if (s == "mixed") return DesignKind::mixed;
    if (s == "met") return DesignKind::met;
    schema_error(fmt::format("unknown design kind '{}'", s));
}

Role parse_role(const std::string& s) {
    if (s == "fixed") return Role::fixed;
    if (s == "random") return Role::random;
    schema_error(fmt::format("unknown factor role '{}' (expected fixed or random)", s));
}

Placement parse_placement(const std::string& s) {
    if (s == "whole_plot") return Placement::whole_plot;
    if (s == "sub_plot") return Placement::sub_plot;
    if (s == "unit") return Placement::unit;
    schema_error(fmt::format("unknown stratum '{}' (expected whole_plot, sub_plot or unit)", s));
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            schema_error(fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

std::string require_string(const json& obj, const char* key, std::string_view where) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(fmt::format("missing key '{}' in {}", key, where));
    if (!it->is_string()) schema_error(fmt::format("key '{}' in {} must be a string", key, where));
    return it->get<std::string>();
}

FactorSpec parse_factor(const json& node, std::string_view where, bool allow_stratum, Role default_role) {
    FactorSpec f;
    f.role = default_role;
    if (node.is_string()) {
        f.name = node.get<std::string>();
        return f;
    }
    if (!node.is_object()) schema_error(fmt::format("{} must be an object or a string", where));
    if (allow_stratum) {
        reject_unknown_keys(node, {"name", "role", "stratum"}, where);
    } else {
        reject_unknown_keys(node, {"name", "role"}, where);
    }
    f.name = require_string(node, "name", where);
    if (node.contains("role")) f.role = parse_role(require_string(node, "role", where));
    if (allow_stratum && node.contains("stratum")) f.stratum = parse_placement(require_string(node, "stratum", where));
    return f;
}

double parse_probability(const json& node, const char* key) {
    if (!node.is_number()) schema_error(fmt::format("key '{}' must be a number", key));
    return node.get<double>();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

int effect_df(const Effect& e, const std::vector<FactorLevels>& factors) {
    int df = 1;
    for (const auto& name : e.factors) {
        const auto it = std::find_if(factors.begin(), factors.end(), [&](const FactorLevels& f) { return f.factor == name; });
        df *= static_cast<int>(it->levels.size()) - 1;
    }
    return df;
}

// Every non-empty subset of `names`, ordered by size then by declaration order.
std::vector<std::vector<std::string>> crossed_terms(const std::vector<std::string>& names) {
    std::vector<std::vector<std::string>> terms;
    const std::size_t n = names.size();
    for (std::size_t order = 1; order <= n; ++order) {
        std::vector<bool> pick(n, false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(order), true);
        do {
            std::vector<std::string> term;
            for (std::size_t i = 0; i < n; ++i) {
                if (pick[i]) term.push_back(names[i]);
            }
            terms.push_back(std::move(term));
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    return terms;
}

}  // namespace

std::string_view to_string(DesignKind kind) noexcept {
    switch (kind) {
        case DesignKind::crd: return "crd";
        case DesignKind::rcbd: return "rcbd";
        case DesignKind::factorial: return "factorial";
        case DesignKind::split_plot: return "split_plot";
        case DesignKind::mixed: return "mixed";
        case DesignKind::met: return "met";
    }
    return "crd";
}

std::string_view to_string(Role role) noexcept { return role == Role::fixed ? "fixed" : "random"; }

std::string_view to_string(Placement placement) noexcept {
    switch (placement) {
        case Placement::whole_plot: return "whole_plot";
        case Placement::sub_plot: return "sub_plot";
        case Placement::unit: return "unit";
    }
    return "unit";
}

std::vector<std::string> DesignSpec::model_factors() const {
    std::vector<std::string> names;
    for (const auto& f : treatment_factors) names.push_back(f.name);
    if (block) names.push_back(block->name);
    return names;
}

const FactorSpec* DesignSpec::factor(std::string_view name) const noexcept {
    for (const auto& f : treatment_factors) {
        if (f.name == name) return &f;
    }
    if (block && block->name == name) return &*block;
    return nullptr;
}

void check_invariants(const DesignSpec& spec) {
    if (spec.response.empty()) constraint_error("response name is empty");
    std::set<std::string> names;
    for (const auto& f : spec.treatment_factors) {
        if (f.name.empty()) constraint_error("factor name is empty");
        if (!names.insert(f.name).second) constraint_error(fmt::format("factor '{}' declared twice", f.name));
    }
    if (spec.block) {
        if (spec.block->name.empty()) constraint_error("block name is empty");
        if (!names.insert(spec.block->name).second) {
            constraint_error(fmt::format("block '{}' is also declared as a treatment factor", spec.block->name));
        }
        if (spec.block->stratum != Placement::unit) constraint_error("the block cannot carry a stratum placement");
    }
    if (names.count(spec.response)) constraint_error(fmt::format("response '{}' is also declared as a factor", spec.response));
    for (const auto& g : spec.groups) {
        if (names.count(g) || g == spec.response) {
            constraint_error(fmt::format("group column '{}' is also part of the model", g));
        }
    }
    if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) constraint_error(fmt::format("alpha={} is outside (0,1)", spec.alpha));
    if (!(spec.alpha_v > 0.0 && spec.alpha_v < 1.0)) {
        constraint_error(fmt::format("alpha_v={} is outside (0,1)", spec.alpha_v));
    }
    if (spec.kind != DesignKind::split_plot) {
        for (const auto& f : spec.treatment_factors) {
            if (f.stratum != Placement::unit) {
                constraint_error(fmt::format("factor '{}': stratum placement requires kind split_plot", f.name));
            }
        }
    }

    const auto count_random = [&] {
        std::size_t n = 0;
        for (const auto& f : spec.treatment_factors) n += f.role == Role::random;
        if (spec.block && spec.block->role == Role::random) ++n;
        return n;
    };
    const auto require_all_fixed = [&] {
        if (count_random() != 0) {
            constraint_error(fmt::format("kind {} has no random terms; declare kind mixed or met for random factors",
                                         to_string(spec.kind)));
        }
    };
    const std::size_t n_factors = spec.treatment_factors.size();

    switch (spec.kind) {
        case DesignKind::crd:
            if (n_factors != 1) constraint_error("crd requires exactly one treatment factor");
            if (spec.block) constraint_error("crd does not take a block factor");
            require_all_fixed();
            break;
        case DesignKind::rcbd:
            if (n_factors != 1) constraint_error("rcbd requires exactly one treatment factor");
            if (!spec.block) constraint_error("rcbd requires a block factor");
            require_all_fixed();
            break;
        case DesignKind::factorial:
            if (n_factors < 2) constraint_error("factorial requires at least two crossed treatment factors");
            require_all_fixed();
            break;
        case DesignKind::split_plot: {
            if (!spec.block) constraint_error("split_plot requires a block factor");
            if (n_factors != 2) constraint_error("split_plot requires exactly one whole_plot and one sub_plot factor");
            std::size_t whole = 0;
            std::size_t sub = 0;
            for (const auto& f : spec.treatment_factors) {
                whole += f.stratum == Placement::whole_plot;
                sub += f.stratum == Placement::sub_plot;
            }
            if (whole != 1 || sub != 1) {
                constraint_error("split_plot requires exactly one whole_plot and one sub_plot factor");
            }
            require_all_fixed();
            break;
        }
        case DesignKind::mixed: {
            std::size_t fixed = 0;
            for (const auto& f : spec.treatment_factors) fixed += f.role == Role::fixed;
            if (fixed == 0) constraint_error("mixed requires at least one fixed treatment factor");
            if (count_random() == 0) constraint_error("mixed requires at least one random factor");
            break;
        }
        case DesignKind::met: {
            if (n_factors != 2) constraint_error("met requires a genotype factor and an environment factor");
            if (spec.block) constraint_error("met does not take a block factor");
            if (count_random() == 0) constraint_error("met requires the environment factor to be declared random");
            break;
        }
    }
}

DesignSpec parse_design(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        schema_error(fmt::format("design document is not well-formed: {}", e.what()));
    }
    if (!doc.is_object()) schema_error("design document must be an object");
    reject_unknown_keys(doc, {"kind", "response", "factors", "block", "groups", "alpha", "alpha_v"}, "design");

    DesignSpec spec;
    spec.kind = parse_kind(require_string(doc, "kind", "design"));
    spec.response = require_string(doc, "response", "design");

    const auto factors = doc.find("factors");
    if (factors == doc.end()) schema_error("missing key 'factors' in design");
    if (!factors->is_array()) schema_error("key 'factors' must be a list");
    for (std::size_t i = 0; i < factors->size(); ++i) {
        spec.treatment_factors.push_back(
            parse_factor((*factors)[i], fmt::format("factors[{}]", i), true, Role::fixed));
    }
    if (const auto block = doc.find("block"); block != doc.end() && !block->is_null()) {
        const Role default_role = spec.kind == DesignKind::mixed ? Role::random : Role::fixed;
        spec.block = parse_factor(*block, "block", false, default_role);
    }
    if (const auto groups = doc.find("groups"); groups != doc.end()) {
        if (!groups->is_array()) schema_error("key 'groups' must be a list of column names");
        for (const auto& g : *groups) {
            if (!g.is_string()) schema_error("key 'groups' must be a list of column names");
            spec.groups.push_back(g.get<std::string>());
        }
    }
    if (const auto a = doc.find("alpha"); a != doc.end()) spec.alpha = parse_probability(*a, "alpha");
    if (const auto a = doc.find("alpha_v"); a != doc.end()) spec.alpha_v = parse_probability(*a, "alpha_v");

    check_invariants(spec);
    return spec;
}

std::string to_document(const DesignSpec& spec) {
    json doc;
    doc["kind"] = std::string(to_string(spec.kind));
    doc["response"] = spec.response;
    json factors = json::array();
    for (const auto& f : spec.treatment_factors) {
        json node = {{"name", f.name}, {"role", std::string(to_string(f.role))}};
        if (f.stratum != Placement::unit) node["stratum"] = std::string(to_string(f.stratum));
        factors.push_back(node);
    }
    doc["factors"] = factors;
    if (spec.block) doc["block"] = {{"name", spec.block->name}, {"role", std::string(to_string(spec.block->role))}};
    if (!spec.groups.empty()) doc["groups"] = spec.groups;
    doc["alpha"] = spec.alpha;
    doc["alpha_v"] = spec.alpha_v;
    return doc.dump(2) + "\n";
}

DesignSpec builtin_design(std::string_view name) {
    static const std::map<std::string, std::string, std::less<>> documents = {
        {"crd", R"({"kind": "crd", "response": "Yield", "factors": [{"name": "Fertilizer"}]})"},
        {"rcbd", R"({"kind": "rcbd", "response": "Yield", "factors": [{"name": "Variety"}], "block": "Block"})"},
        {"factorial",
         R"({"kind": "factorial", "response": "Yield", "factors": [{"name": "Nitrogen"}, {"name": "Spacing"}]})"},
        {"split_plot",
         R"({"kind": "split_plot", "response": "Yield",
             "factors": [{"name": "Irrigation", "stratum": "whole_plot"}, {"name": "Variety", "stratum": "sub_plot"}],
             "block": "Block"})"},
        {"lmm",
         R"({"kind": "mixed", "response": "Yield", "factors": [{"name": "Treatment"}],
             "block": {"name": "Block", "role": "random"}})"},
        {"gxe",
         R"({"kind": "met", "response": "Yield",
             "factors": [{"name": "Genotype"}, {"name": "Environment", "role": "random"}]})"},
    };
    const auto it = documents.find(name);
    if (it == documents.end()) throw Error(ErrorCode::UnknownDataset, fmt::format("no builtin dataset named '{}'", name));
    return parse_design(it->second);
}

std::string effect_label(const std::vector<std::string>& factors) { return join(factors, ":"); }

std::string Effect::label() const { return effect_label(factors); }

bool Effect::contains(std::string_view factor) const {
    return std::find(factors.begin(), factors.end(), factor) != factors.end();
}

bool Effect::shares_factor(const Effect& other) const {
    return std::any_of(factors.begin(), factors.end(), [&](const std::string& f) { return other.contains(f); });
}

bool Effect::marginal_to(const Effect& other) const {
    return std::all_of(factors.begin(), factors.end(), [&](const std::string& f) { return other.contains(f); });
}

const Effect* EffectSet::find(std::string_view label) const noexcept {
    for (const auto& e : effects) {
        if (e.label() == label) return &e;
    }
    return nullptr;
}

const Effect* EffectSet::find_factors(const std::vector<std::string>& factors) const noexcept {
    for (const auto& e : effects) {
        if (e.factors.size() == factors.size() &&
            std::all_of(factors.begin(), factors.end(), [&](const std::string& f) { return e.contains(f); })) {
            return &e;
        }
    }
    return nullptr;
}

bool EffectSet::has_stratum(std::string_view label) const noexcept {
    return std::any_of(strata.begin(), strata.end(), [&](const Stratum& s) { return s.label == label; });
}

EffectSet compile_effects(const DesignSpec& spec) {
    EffectSet set;
    const std::string residual(kResidual);
    auto add = [&](std::vector<std::string> factors, Role role, std::string denominator, TermKind term) {
        Effect e;
        e.order = static_cast<int>(factors.size());
        e.factors = std::move(factors);
        e.role = role;
        e.denominator = std::move(denominator);
        e.term = term;
        set.effects.push_back(std::move(e));
    };
    auto role_of = [&](const std::vector<std::string>& factors) {
        for (const auto& f : factors) {
            const FactorSpec* fs = spec.factor(f);
            if (fs && fs->role == Role::random) return Role::random;
        }
        return Role::fixed;
    };

    switch (spec.kind) {
        case DesignKind::crd:
        case DesignKind::rcbd:
        case DesignKind::factorial: {
            std::vector<std::string> names;
            for (const auto& f : spec.treatment_factors) names.push_back(f.name);
            for (auto& term : crossed_terms(names)) add(std::move(term), Role::fixed, residual, TermKind::treatment);
            if (spec.block) add({spec.block->name}, Role::fixed, residual, TermKind::block);
            break;
        }
        case DesignKind::split_plot: {
            const auto whole = std::find_if(spec.treatment_factors.begin(), spec.treatment_factors.end(),
                                            [](const FactorSpec& f) { return f.stratum == Placement::whole_plot; });
            const auto sub = std::find_if(spec.treatment_factors.begin(), spec.treatment_factors.end(),
                                          [](const FactorSpec& f) { return f.stratum == Placement::sub_plot; });
            const std::string& block = spec.block->name;
            const std::string whole_error = effect_label({block, whole->name});
            // Row order follows the conventional split-plot table layout.
            add({block}, Role::fixed, whole_error, TermKind::block);
            add({whole->name}, Role::fixed, whole_error, TermKind::treatment);
            add({sub->name}, Role::fixed, residual, TermKind::treatment);
            add({block, whole->name}, Role::fixed, residual, TermKind::error_stratum);
            add({whole->name, sub->name}, Role::fixed, residual, TermKind::treatment);
            set.strata.push_back({whole_error, {block, whole->name}});
            break;
        }
        case DesignKind::mixed: {
            std::vector<std::string> fixed;
            std::vector<std::string> random;
            for (const auto& f : spec.treatment_factors) {
                (f.role == Role::fixed ? fixed : random).push_back(f.name);
            }
            for (auto& term : crossed_terms(fixed)) add(std::move(term), Role::fixed, residual, TermKind::treatment);
            for (const auto& r : random) add({r}, Role::random, residual, TermKind::block);
            if (spec.block) add({spec.block->name}, spec.block->role, residual, TermKind::block);
            break;
        }
        case DesignKind::met: {
            const std::string& g = spec.treatment_factors[0].name;
            const std::string& e = spec.treatment_factors[1].name;
            // The environment is the random factor; when both are random the
            // declaration order decides.
            const bool swap = spec.treatment_factors[0].role == Role::random &&
                              spec.treatment_factors[1].role == Role::fixed;
            const std::string& genotype = swap ? e : g;
            const std::string& environment = swap ? g : e;
            add({genotype}, role_of({genotype}), residual, TermKind::treatment);
            add({environment}, role_of({environment}), residual, TermKind::treatment);
            add({genotype, environment}, role_of({genotype, environment}), residual, TermKind::treatment);
            break;
        }
    }
    set.strata.push_back({residual, {}});
    return set;
}

const FactorLevels& ValidatedDesign::levels(std::string_view factor) const { return factors.at(factor_index(factor)); }

std::size_t ValidatedDesign::factor_index(std::string_view factor) const {
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (factors[i].factor == factor) return i;
    }
    throw Error(ErrorCode::MissingColumn, fmt::format("factor '{}' is not part of the design", factor));
}

ValidatedDesign validate_against_data(const DesignSpec& spec, const data::Dataset& data) {
    check_invariants(spec);
    ValidatedDesign out;
    out.spec = spec;
    out.effects = compile_effects(spec);
    out.n_rows = data.n_rows();

    const auto& response = data.column(spec.response);
    if (!response.is_numeric()) {
        throw Error(ErrorCode::NonNumericResponse, fmt::format("response column '{}' is not numeric", spec.response));
    }

    const auto names = spec.model_factors();
    std::vector<const data::Column*> columns;
    std::vector<std::map<std::string, std::size_t, std::less<>>> index(names.size());
    for (std::size_t f = 0; f < names.size(); ++f) {
        const auto& col = data.column(names[f]);
        columns.push_back(&col);
        FactorLevels fl{names[f], data::levels_in_order(col)};
        if (fl.levels.size() < 2) {
            throw Error(ErrorCode::InsufficientLevels,
                        fmt::format("factor '{}' has {} level(s); at least 2 are required", names[f], fl.levels.size()));
        }
        for (std::size_t l = 0; l < fl.levels.size(); ++l) index[f][fl.levels[l]] = l;
        out.factors.push_back(std::move(fl));
    }

    // Count observations per full factor cell (row-major over declared order).
    std::vector<std::size_t> strides(names.size(), 1);
    std::size_t n_cells = 1;
    for (std::size_t f = names.size(); f-- > 0;) {
        strides[f] = n_cells;
        n_cells *= out.factors[f].levels.size();
    }
    std::vector<std::size_t> counts(n_cells, 0);
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        std::size_t cell = 0;
        for (std::size_t f = 0; f < names.size(); ++f) cell += strides[f] * index[f].find(columns[f]->cells[r])->second;
        ++counts[cell];
    }
    std::map<std::size_t, std::size_t> frequency;
    for (std::size_t c : counts) ++frequency[c];
    std::size_t expected = 0;
    std::size_t best = 0;
    for (const auto& [count, freq] : frequency) {
        if (freq > best || (freq == best && count > expected)) {
            best = freq;
            expected = count;
        }
    }
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        if (counts[cell] != expected || expected == 0) {
            std::vector<std::string> parts;
            std::size_t rem = cell;
            for (std::size_t f = 0; f < names.size(); ++f) {
                parts.push_back(names[f] + "=" + out.factors[f].levels[rem / strides[f]]);
                rem %= strides[f];
            }
            throw Error(ErrorCode::UnbalancedDesign,
                        fmt::format("cell ({}) has {} observation(s), expected {}; only balanced layouts are supported",
                                    join(parts, ", "), counts[cell], expected));
        }
    }
    out.replication = expected;

    int model_df = 0;
    for (const auto& e : out.effects.effects) model_df += effect_df(e, out.factors);
    const long residual_df = static_cast<long>(data.n_rows()) - 1 - model_df;
    if (residual_df <= 0) {
        throw Error(ErrorCode::NoResidualDf,
                    fmt::format("the {} model leaves no residual degrees of freedom ({} observations, {} model df)",
                                to_string(spec.kind), data.n_rows(), model_df));
    }
    return out;
}

}  // namespace stratus::design
