#include "stratus/plots.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>

#include <fmt/format.h>

#include "stratus/numfmt.hpp"

namespace stratus::plots {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 80.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    std::string s = fmt::format("{:.2f}", v);
    if (s == "-0.00") s = "0.00";
    return s;
}

class Svg {
public:
    Svg(const std::string& title) {
        body_ += fmt::format(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
            "font-family=\"sans-serif\">\n",
            static_cast<int>(kWidth), static_cast<int>(kHeight));
        body_ += fmt::format("<title>{}</title>\n", xml_escape(title));
        body_ += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(kWidth / 2, 28, title, 15, "middle", "bold");
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke = "black", double width = 1.0,
              const std::string& dash = "") {
        body_ += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"{}/>\n",
                             num(x1), num(y1), num(x2), num(y2), stroke, num(width),
                             dash.empty() ? "" : fmt::format(" stroke-dasharray=\"{}\"", dash));
    }

    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "black") {
        body_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n", num(x),
                             num(y), num(w), num(h), fill, stroke);
    }

    void circle(double x, double y, double r, const std::string& fill) {
        body_ += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n", num(x), num(y), num(r), fill);
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        std::string p;
        for (const auto& [x, y] : pts) p += fmt::format("{}{},{}", p.empty() ? "" : " ", num(x), num(y));
        body_ += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", p, stroke);
    }

    void text(double x, double y, const std::string& s, int size = 11, const std::string& anchor = "middle",
              const std::string& weight = "normal", const std::string& fill = "black") {
        body_ += fmt::format(
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{}\"{}{}>{}</text>\n", num(x), num(y), size,
            anchor, weight == "normal" ? "" : fmt::format(" font-weight=\"{}\"", weight),
            fill == "black" ? "" : fmt::format(" fill=\"{}\"", fill), xml_escape(s));
    }

    void vertical_text(double x, double y, const std::string& s) {
        body_ += fmt::format("<text x=\"{0}\" y=\"{1}\" font-size=\"12\" text-anchor=\"middle\" "
                             "transform=\"rotate(-90 {0} {1})\">{2}</text>\n",
                             num(x), num(y), xml_escape(s));
    }

    std::string finish() { return body_ + "</svg>\n"; }

private:
    std::string body_;
};

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> ticks;
};

// Round tick spacing of 1, 2 or 5 times a power of ten.
Axis nice_axis(double lo, double hi, int target = 6) {
    if (!(hi > lo)) {
        const double pad = std::max(1.0, std::abs(lo) * 0.1);
        lo -= pad;
        hi += pad;
    }
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    Axis a;
    a.lo = std::floor(lo / step) * step;
    a.hi = std::ceil(hi / step) * step;
    for (double t = a.lo; t <= a.hi + step * 1e-9; t += step) a.ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    return a;
}

std::string tick_label(double v, double step) {
    const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
    return fixed(v, decimals);
}

struct Frame {
    Axis y;
    double top = kTop;
    double bottom = kHeight - kBottom;
    double left = kLeft;
    double right = kWidth - kRight;

    [[nodiscard]] double py(double v) const { return bottom - (v - y.lo) / (y.hi - y.lo) * (bottom - top); }
};

void draw_y_axis(Svg& svg, const Frame& f, const std::string& label) {
    svg.line(f.left, f.top, f.left, f.bottom);
    svg.line(f.left, f.bottom, f.right, f.bottom);
    const double step = f.y.ticks.size() > 1 ? f.y.ticks[1] - f.y.ticks[0] : 1.0;
    for (double t : f.y.ticks) {
        const double y = f.py(t);
        svg.line(f.left - 4, y, f.left, y);
        svg.line(f.left, y, f.right, y, "#e0e0e0", 0.5);
        svg.text(f.left - 7, y + 4, tick_label(t, step), 10, "end");
    }
    svg.vertical_text(18, (f.top + f.bottom) / 2, label);
}

std::string slug(const std::string& s) {
    std::string out;
    for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::vector<std::string> split_label(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(':', start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double quantile(const std::vector<double>& sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PlotFile box_plot(const pipeline::AnalysisResult& r, const inference::ComparisonSet& set) {
    const auto factors = split_label(set.target);
    const engine::EffectTerm term = engine::decompose(r.design, r.model, factors);
    std::map<std::string, std::vector<double>> values;
    for (std::size_t row = 0; row < r.model.observed.size(); ++row) {
        values[term.labels[r.model.level_of(term, r.design, row)]].push_back(r.model.observed[row]);
    }

    double lo = r.model.observed.front();
    double hi = lo;
    for (double v : r.model.observed) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Frame f;
    f.y = nice_axis(lo, hi + 0.12 * (hi - lo));
    const std::string title = fmt::format("{} by {}", r.design.spec.response, set.title());
    Svg svg(title);
    draw_y_axis(svg, f, r.design.spec.response);

    // Levels in first-appearance order; letters and means printed on the plot.
    const std::size_t k = term.labels.size();
    const double slot = (f.right - f.left) / static_cast<double>(k);
    const double box_w = std::min(50.0, slot * 0.5);
    for (std::size_t i = 0; i < k; ++i) {
        const std::string& label = term.labels[i];
        std::vector<double> v = values[label];
        std::sort(v.begin(), v.end());
        const double cx = f.left + slot * (static_cast<double>(i) + 0.5);
        const double q1 = quantile(v, 0.25);
        const double q2 = quantile(v, 0.5);
        const double q3 = quantile(v, 0.75);
        svg.line(cx, f.py(v.front()), cx, f.py(q1));
        svg.line(cx, f.py(q3), cx, f.py(v.back()));
        svg.line(cx - box_w / 4, f.py(v.front()), cx + box_w / 4, f.py(v.front()));
        svg.line(cx - box_w / 4, f.py(v.back()), cx + box_w / 4, f.py(v.back()));
        svg.rect(cx - box_w / 2, f.py(q3), box_w, std::max(0.5, f.py(q1) - f.py(q3)), "#cfe2f3");
        svg.line(cx - box_w / 2, f.py(q2), cx + box_w / 2, f.py(q2), "black", 2.0);
        const inference::LevelMean* m = set.find(label);
        if (m) {
            svg.circle(cx, f.py(m->mean), 3, "#d62728");
            svg.text(cx, f.py(v.back()) - 8, m->letters, 13, "middle", "bold");
            svg.text(cx, f.bottom + 32, fixed(m->mean, 2), 10);
        }
        svg.text(cx, f.bottom + 17, label, 11);
    }
    svg.text(kWidth / 2, kHeight - 22,
             fmt::format("Tukey HSD = {} (alpha = {}); means sharing a letter do not differ", fixed(set.hsd, 3),
                         fixed(r.design.spec.alpha, 3)),
             11);
    const std::string name = fmt::format("boxplot_{}{}.svg", slug(set.target),
                                         set.kind == inference::SetKind::combinations ? "_combinations" : "");
    return {name, svg.finish()};
}

PlotFile interaction_plot(const pipeline::AnalysisResult& r, const inference::EffectTest& test) {
    const auto& factors = test.effect.factors;
    const engine::EffectTerm cells = engine::decompose(r.design, r.model, factors);
    const auto& x_levels = r.design.levels(factors[0]).levels;
    const auto& trace_levels = r.design.levels(factors[1]).levels;
    const std::size_t nx = x_levels.size();
    const std::size_t nt = trace_levels.size();

    double lo = cells.means.front();
    double hi = lo;
    for (double v : cells.means) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Frame f;
    f.right = kWidth - 150.0;
    f.y = nice_axis(lo, hi);
    Svg svg(fmt::format("Interaction profile: {}", test.effect.label()));
    draw_y_axis(svg, f, fmt::format("Mean {}", r.design.spec.response));

    const double slot = (f.right - f.left) / static_cast<double>(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        svg.text(f.left + slot * (static_cast<double>(i) + 0.5), f.bottom + 17, x_levels[i], 11);
    }
    svg.text((f.left + f.right) / 2, f.bottom + 36, factors[0], 12);
    for (std::size_t j = 0; j < nt; ++j) {
        const std::string colour = kPalette[j % std::size(kPalette)];
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < nx; ++i) {
            const double mean = cells.means[i * nt + j];
            const double x = f.left + slot * (static_cast<double>(i) + 0.5);
            pts.emplace_back(x, f.py(mean));
        }
        svg.polyline(pts, colour);
        for (std::size_t i = 0; i < nx; ++i) {
            svg.circle(pts[i].first, pts[i].second, 3.5, colour);
            svg.text(pts[i].first + 6, pts[i].second - 6, fixed(cells.means[i * nt + j], 2), 9, "start");
        }
        const double ly = f.top + 20.0 * static_cast<double>(j) + 10;
        svg.line(f.right + 15, ly, f.right + 35, ly, colour, 2.0);
        svg.text(f.right + 40, ly + 4, fmt::format("{}={}", factors[1], trace_levels[j]), 11, "start");
    }
    const std::string caption =
        test.significant
            ? fmt::format("Response profiles diverge (interaction p = {})", p_value_text(test.p))
            : fmt::format("Nearly parallel response profiles (interaction p = {})", p_value_text(test.p));
    svg.text(kWidth / 2, kHeight - 16, caption, 12, "middle", "bold");
    return {fmt::format("interaction_{}.svg", slug(test.effect.label())), svg.finish()};
}

std::optional<PlotFile> variance_plot(const mixed::VarianceComponents& vc) {
    const double total = vc.total();
    if (!(total > 0.0)) return std::nullopt;
    Frame f;
    f.y = nice_axis(0.0, 1.0, 5);
    f.y.lo = 0.0;
    f.y.hi = 1.0;
    Svg svg("Proportion of total variance attributable to each component");
    draw_y_axis(svg, f, "Proportion of variance");
    const std::size_t k = vc.components.size();
    const double slot = (f.right - f.left) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& [term, value] = vc.components[i];
        const double p = value / total;
        const double cx = f.left + slot * (static_cast<double>(i) + 0.5);
        const double w = std::min(70.0, slot * 0.6);
        svg.rect(cx - w / 2, f.py(p), w, f.bottom - f.py(p), kPalette[i % std::size(kPalette)]);
        svg.text(cx, f.py(p) - 6, fmt::format("{}%", fixed(100.0 * p, 1)), 11);
        svg.text(cx, f.bottom + 17, term, 11);
        svg.text(cx, f.bottom + 32, fmt::format("var {}", fixed(value, 3)), 10);
    }
    return PlotFile{"variance_components.svg", svg.finish()};
}

PlotFile blup_plot(const mixed::BlupTable& t) {
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& e : t.entries) {
        lo = std::min({lo, e.effect, e.raw_deviation});
        hi = std::max({hi, e.effect, e.raw_deviation});
    }
    Frame f;
    f.y = nice_axis(lo, hi);
    Svg svg(fmt::format("BLUP ranking of {} (shrinkage {})", t.factor, fixed(t.shrinkage, 3)));
    draw_y_axis(svg, f, "Predicted effect");
    svg.line(f.left, f.py(0.0), f.right, f.py(0.0), "black", 1.0, "4 3");
    const std::size_t k = t.entries.size();
    const double slot = (f.right - f.left) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& e = t.entries[i];
        const double cx = f.left + slot * (static_cast<double>(i) + 0.5);
        const double w = std::min(50.0, slot * 0.5);
        const double y0 = f.py(0.0);
        const double y1 = f.py(e.effect);
        svg.rect(cx - w / 2, std::min(y0, y1), w, std::abs(y1 - y0), e.effect >= 0.0 ? "#2ca02c" : "#d62728");
        svg.circle(cx, f.py(e.raw_deviation), 3, "black");
        svg.text(cx, f.bottom + 17, e.level, 11);
        svg.text(cx, f.bottom + 32, fixed(e.predicted_mean, 2), 10);
    }
    svg.text(kWidth / 2, kHeight - 16, "Bars: shrunken effects; dots: raw deviations; labels: predicted means", 11);
    return {"blup_ranking.svg", svg.finish()};
}

PlotFile gge_plot(const stability::StabilityResult& s) {
    const auto& g = s.gge.genotype_coords;
    const auto& e = s.gge.environment_coords;
    double extent = 0.0;
    for (double v : g.data) extent = std::max(extent, std::abs(v));
    for (double v : e.data) extent = std::max(extent, std::abs(v));
    if (!(extent > 0.0)) extent = 1.0;
    const Axis axis = nice_axis(-extent * 1.1, extent * 1.1);
    const double size = kHeight - kTop - kBottom;
    const double x0 = (kWidth - size) / 2;
    const double y0 = kTop;
    auto px = [&](double v) { return x0 + (v - axis.lo) / (axis.hi - axis.lo) * size; };
    auto py = [&](double v) { return y0 + size - (v - axis.lo) / (axis.hi - axis.lo) * size; };

    Svg svg("GGE biplot (environment-centred, symmetric scaling)");
    svg.rect(x0, y0, size, size, "none");
    svg.line(px(0.0), y0, px(0.0), y0 + size, "#999999", 1.0, "4 3");
    svg.line(x0, py(0.0), x0 + size, py(0.0), "#999999", 1.0, "4 3");
    const double step = axis.ticks.size() > 1 ? axis.ticks[1] - axis.ticks[0] : 1.0;
    for (double t : axis.ticks) {
        svg.text(px(t), y0 + size + 14, tick_label(t, step), 9);
        svg.text(x0 - 5, py(t) + 3, tick_label(t, step), 9, "end");
    }
    const double pc2 = s.gge.variance_explained.size() > 1 ? s.gge.variance_explained[1] : 0.0;
    svg.text(kWidth / 2, y0 + size + 32, fmt::format("PC1 ({}%)", fixed(100.0 * s.gge.variance_explained.at(0), 1)), 12);
    svg.vertical_text(x0 - 40, y0 + size / 2, fmt::format("PC2 ({}%)", fixed(100.0 * pc2, 1)));
    for (std::size_t j = 0; j < s.matrix.environments.size(); ++j) {
        svg.line(px(0.0), py(0.0), px(e(j, 0)), py(e(j, 1)), "#d62728", 1.2);
        svg.text(px(e(j, 0)), py(e(j, 1)) - 5, s.matrix.environments[j], 11, "middle", "bold", "#d62728");
    }
    for (std::size_t i = 0; i < s.matrix.genotypes.size(); ++i) {
        svg.circle(px(g(i, 0)), py(g(i, 1)), 3.5, "#1f77b4");
        svg.text(px(g(i, 0)) + 6, py(g(i, 1)) + 4, s.matrix.genotypes[i], 11, "start", "normal", "#1f77b4");
    }
    return {"gge_biplot.svg", svg.finish()};
}

}  // namespace

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

PlotSet emit_plots(const pipeline::AnalysisResult& r) {
    PlotSet out;
    if (r.domain.mode == inference::Mode::none) {
        out.skipped.push_back("comparison plots skipped: no significant treatment effects");
    }
    for (const auto& set : r.comparisons) {
        if (set.kind == inference::SetKind::simple) continue;
        out.files.push_back(box_plot(r, set));
    }
    for (const auto& t : r.tests) {
        if (t.effect.order == 2) out.files.push_back(interaction_plot(r, t));
    }
    if (r.components) {
        if (auto p = variance_plot(*r.components)) {
            out.files.push_back(std::move(*p));
        } else {
            out.skipped.push_back("variance proportion plot skipped: all variance components are zero");
        }
        if (r.blups) {
            out.files.push_back(blup_plot(*r.blups));
        } else {
            out.skipped.push_back("BLUP ranking plot skipped: BLUPs not available");
        }
    }
    if (r.design.spec.kind == design::DesignKind::met) {
        if (r.stability) {
            out.files.push_back(gge_plot(*r.stability));
        } else {
            out.skipped.push_back("GGE biplot skipped: stability analysis not available");
        }
    }
    return out;
}

}  // namespace stratus::plots
