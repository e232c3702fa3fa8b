#include "hierref/figures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace hierref {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* palette(std::size_t i) {
    static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                   "#59a14f", "#edc948", "#b07aa1", "#9c755f"};
    return colors[i % 8];
}

class Svg {
public:
    Svg(double width, double height, const std::string& title) : width_(width), height_(height) {
        os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\""
            << px(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(width / 2, 18, title, "middle", 14);
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& extra = "") {
        os_ << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(w)
            << "\" height=\"" << px(h) << "\" fill=\"" << fill << "\"" << extra << "/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke = "black",
              double width = 1.0) {
        os_ << "<line x1=\"" << px(x1) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x2)
            << "\" y2=\"" << px(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
            << px(width) << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) os_ << px(x) << ',' << px(y) << ' ';
        os_ << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        os_ << "<circle cx=\"" << px(x) << "\" cy=\"" << px(y) << "\" r=\"" << px(r)
            << "\" fill=\"" << fill << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, const std::string& anchor = "start",
              int size = 11) {
        os_ << "<text x=\"" << px(x) << "\" y=\"" << px(y) << "\" text-anchor=\"" << anchor
            << "\" font-size=\"" << size << "\">" << escape(s) << "</text>\n";
    }
    void legend(const std::vector<std::string>& names, double x, double y) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            rect(x, y + 16.0 * static_cast<double>(i) - 9, 10, 10, palette(i));
            text(x + 14, y + 16.0 * static_cast<double>(i), names[i]);
        }
    }
    std::string str() const { return os_.str() + "</svg>\n"; }

    double width() const { return width_; }
    double height() const { return height_; }

private:
    std::ostringstream os_;
    double width_;
    double height_;
};

struct Plot {
    double left = 60, right = 160, top = 40, bottom = 50;
    double ymin = 0, ymax = 1;
    double width = 0, height = 0;

    double x0() const { return left; }
    double x1() const { return width - right; }
    double y(double v) const {
        const double t = (v - ymin) / (ymax - ymin);
        return height - bottom - t * (height - top - bottom);
    }
    void axes(Svg& svg, const std::string& ylabel) const {
        svg.line(x0(), y(ymin), x1(), y(ymin));
        svg.line(x0(), y(ymin), x0(), y(ymax));
        for (int i = 0; i <= 4; ++i) {
            const double v = ymin + (ymax - ymin) * i / 4.0;
            svg.line(x0() - 4, y(v), x0(), y(v));
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", v);
            svg.text(x0() - 6, y(v) + 4, buf, "end");
        }
        svg.text(14, (top + height - bottom) / 2, ylabel, "start");
    }
};

double nice_max(double v) {
    if (v <= 1.0) return 1.0;
    return std::ceil(v);
}

struct Cell {
    Estimate est;
    bool present = false;
};

// Grouped bars: groups on the x axis, one bar per series.
std::string bar_chart(const std::string& title, const std::string& ylabel,
                      const std::vector<std::string>& groups, const std::vector<std::string>& series,
                      const std::vector<std::vector<Cell>>& cells) {
    double top_value = 0.0;
    for (const auto& row : cells) {
        for (const auto& c : row) {
            if (c.present) top_value = std::max(top_value, c.est.ci_high);
        }
    }
    Plot p;
    p.width = std::max(480.0, 120.0 * static_cast<double>(groups.size()) + 220);
    p.height = 360;
    p.ymax = nice_max(top_value);
    Svg svg(p.width, p.height, title);
    p.axes(svg, ylabel);
    const double group_w = (p.x1() - p.x0()) / static_cast<double>(groups.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double gx = p.x0() + group_w * static_cast<double>(g) + group_w * 0.1;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const auto& c = cells[g][s];
            if (!c.present) continue;
            const double x = gx + bar_w * static_cast<double>(s);
            svg.rect(x, p.y(c.est.mean), bar_w * 0.9, p.y(0) - p.y(c.est.mean), palette(s));
            const double cx = x + bar_w * 0.45;
            svg.line(cx, p.y(c.est.ci_low), cx, p.y(c.est.ci_high));
            svg.line(cx - 3, p.y(c.est.ci_low), cx + 3, p.y(c.est.ci_low));
            svg.line(cx - 3, p.y(c.est.ci_high), cx + 3, p.y(c.est.ci_high));
        }
        svg.text(p.x0() + group_w * (static_cast<double>(g) + 0.5), p.y(0) + 16, groups[g],
                 "middle");
    }
    svg.legend(series, p.x1() + 12, p.top + 10);
    return svg.str();
}

struct LineSeries {
    std::string name;
    std::vector<std::pair<int, Estimate>> points;
};

std::string line_chart(const std::string& title, const std::string& ylabel,
                       const std::vector<LineSeries>& series) {
    int min_x = 1 << 30, max_x = -(1 << 30);
    double top_value = 0.0;
    for (const auto& s : series) {
        for (const auto& [x, e] : s.points) {
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            top_value = std::max(top_value, e.ci_high);
        }
    }
    Plot p;
    p.width = 520;
    p.height = 360;
    p.ymax = nice_max(top_value);
    Svg svg(p.width, p.height, title);
    p.axes(svg, ylabel);
    const double span = std::max(1, max_x - min_x);
    auto xpos = [&](int x) {
        return p.x0() + 20 + (p.x1() - p.x0() - 40) * static_cast<double>(x - min_x) / span;
    };
    for (int x = min_x; x <= max_x; ++x) svg.text(xpos(x), p.y(p.ymin) + 16, std::to_string(x), "middle");
    svg.text((p.x0() + p.x1()) / 2, p.height - 12, "relevant attributes", "middle");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < series.size(); ++i) {
        names.push_back(series[i].name);
        std::vector<std::pair<double, double>> pts;
        for (const auto& [x, e] : series[i].points) {
            pts.emplace_back(xpos(x), p.y(e.mean));
            svg.line(xpos(x), p.y(e.ci_low), xpos(x), p.y(e.ci_high), palette(i));
            svg.circle(xpos(x), p.y(e.mean), 3, palette(i));
        }
        svg.polyline(pts, palette(i));
    }
    svg.legend(names, p.x1() + 12, p.top + 10);
    return svg.str();
}

std::string box_chart(const std::string& title, const std::vector<std::string>& groups,
                      const std::vector<std::string>& series,
                      const std::vector<std::vector<std::vector<double>>>& values) {
    Plot p;
    p.width = std::max(480.0, 140.0 * static_cast<double>(groups.size()) + 220);
    p.height = 360;
    p.ymin = 0.0;
    p.ymax = 1.0;
    for (const auto& g : values) {
        for (const auto& s : g) {
            for (double v : s) {
                p.ymin = std::min(p.ymin, std::floor(v * 4) / 4);
                p.ymax = std::max(p.ymax, std::ceil(v * 4) / 4);
            }
        }
    }
    Svg svg(p.width, p.height, title);
    p.axes(svg, "score");
    const double group_w = (p.x1() - p.x0()) / static_cast<double>(groups.size());
    const double box_w = group_w * 0.8 / static_cast<double>(series.size());
    auto quantile = [](const std::vector<double>& v, double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double gx = p.x0() + group_w * static_cast<double>(g) + group_w * 0.1;
        for (std::size_t s = 0; s < series.size(); ++s) {
            auto v = values[g][s];
            if (v.empty()) continue;
            std::sort(v.begin(), v.end());
            const double x = gx + box_w * static_cast<double>(s);
            const double cx = x + box_w * 0.45;
            const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
            svg.line(cx, p.y(v.front()), cx, p.y(v.back()));
            svg.rect(x, p.y(q3), box_w * 0.9, std::max(1.0, p.y(q1) - p.y(q3)), palette(s),
                     " stroke=\"black\"");
            svg.line(x, p.y(q2), x + box_w * 0.9, p.y(q2), "black", 2);
        }
        svg.text(p.x0() + group_w * (static_cast<double>(g) + 0.5), p.y(p.ymin) + 16, groups[g],
                 "middle");
    }
    svg.legend(series, p.x1() + 12, p.top + 10);
    return svg.str();
}

std::string heatmap(const std::string& title, const std::vector<int>& levels,
                    const std::vector<std::vector<double>>& grid) {
    const double cell = 36;
    const double left = 70, top = 50;
    const double width = left + cell * static_cast<double>(levels.size()) + 40;
    const double height = top + cell * static_cast<double>(grid.size()) + 50;
    Svg svg(width, height, title);
    double hi = 0.0;
    for (const auto& row : grid) {
        for (double v : row) hi = std::max(hi, v);
    }
    for (std::size_t r = 0; r < grid.size(); ++r) {
        svg.text(left - 8, top + cell * (static_cast<double>(r) + 0.6), "rank " + std::to_string(r + 1),
                 "end");
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const double t = hi > 0 ? grid[r][l] / hi : 0.0;
            const int shade = static_cast<int>(std::lround(255 * (1.0 - t)));
            char fill[16];
            std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
            svg.rect(left + cell * static_cast<double>(l), top + cell * static_cast<double>(r), cell,
                     cell, fill, " stroke=\"white\"");
            char label[16];
            std::snprintf(label, sizeof label, "%.2f", grid[r][l]);
            svg.text(left + cell * (static_cast<double>(l) + 0.5),
                     top + cell * (static_cast<double>(r) + 0.6), label, "middle", 9);
        }
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
        svg.text(left + cell * (static_cast<double>(l) + 0.5),
                 top + cell * static_cast<double>(grid.size()) + 16, std::to_string(levels[l]),
                 "middle");
    }
    svg.text(left + cell * static_cast<double>(levels.size()) / 2,
             top + cell * static_cast<double>(grid.size()) + 34, "relevant attributes", "middle");
    return svg.str();
}

std::vector<const RunArtifacts*> runs_with(const Condition& c, ZeroShotMode mode) {
    std::vector<const RunArtifacts*> out;
    for (const auto& r : c.runs) {
        if (r.zero_shot_mode == mode) out.push_back(&r);
    }
    return out;
}

// Runs feeding the language analyses: object-split runs, falling back to
// abstraction-split runs when a condition has none.
std::vector<const RunArtifacts*> analysis_runs(const Condition& c) {
    std::vector<const RunArtifacts*> out;
    for (auto mode : {ZeroShotMode::Objects, ZeroShotMode::Abstractions}) {
        for (const auto* r : runs_with(c, mode)) {
            if (r->metrics) out.push_back(r);
        }
        if (!out.empty()) break;
    }
    return out;
}

const std::vector<std::pair<Split, ZeroShotMode>> kAccuracyColumns{
    {Split::Train, ZeroShotMode::Objects},
    {Split::Validation, ZeroShotMode::Objects},
    {Split::ZeroShotObjects, ZeroShotMode::Objects},
    {Split::ZeroShotAbstractions, ZeroShotMode::Abstractions},
};

std::vector<std::vector<Cell>> accuracy_cells(const std::vector<Condition>& conditions,
                                              const FigureOptions& o) {
    std::vector<std::vector<Cell>> cells;
    for (const auto& c : conditions) {
        std::vector<Cell> row;
        for (const auto& [split, mode] : kAccuracyColumns) {
            std::vector<double> v;
            for (const auto* r : runs_with(c, mode)) {
                const auto it = r->accuracy.find(split);
                if (it != r->accuracy.end()) v.push_back(it->second.accuracy);
            }
            Cell cell;
            if (any_finite(v)) {
                cell.est = bootstrap_ci(v, o.bootstrap_seed, o.bootstrap_resamples);
                cell.present = true;
            }
            row.push_back(cell);
        }
        cells.push_back(std::move(row));
    }
    return cells;
}

const std::vector<std::string> kEntropyMetrics{"effectiveness", "consistency", "nmi"};

double scalar_metric(const MetricsReport& m, const std::string& name) {
    if (name == "effectiveness") return m.entropy.effectiveness;
    if (name == "consistency") return m.entropy.consistency;
    if (name == "nmi") return m.entropy.nmi;
    if (name == "topsim") return m.topsim;
    if (name == "posdis") return m.posdis;
    if (name == "bosdis") return m.bosdis;
    throw std::invalid_argument("unknown metric " + name);
}

double level_metric(const LevelMetrics& m, const std::string& name) {
    if (name == "effectiveness") return m.effectiveness;
    if (name == "consistency") return m.consistency;
    if (name == "nmi") return m.nmi;
    if (name == "mean_message_length") return m.mean_message_length;
    if (name == "symbol_redundancy") return m.symbol_redundancy;
    throw std::invalid_argument("unknown per-level metric " + name);
}

std::vector<std::vector<Cell>> entropy_cells(const std::vector<Condition>& conditions,
                                             const FigureOptions& o) {
    std::vector<std::vector<Cell>> cells;
    for (const auto& c : conditions) {
        const auto runs = analysis_runs(c);
        std::vector<Cell> row;
        for (const auto& metric : kEntropyMetrics) {
            Cell cell;
            std::vector<double> v;
            for (const auto* r : runs) v.push_back(scalar_metric(*r->metrics, metric));
            if (any_finite(v)) {
                cell.est = bootstrap_ci(v, o.bootstrap_seed, o.bootstrap_resamples);
                cell.present = true;
            }
            row.push_back(cell);
        }
        cells.push_back(std::move(row));
    }
    return cells;
}

std::map<int, Estimate> level_estimates(const Condition& c, const std::string& metric,
                                        const FigureOptions& o) {
    std::map<int, std::vector<double>> by_level;
    for (const auto* r : analysis_runs(c)) {
        for (const auto& [level, lm] : r->metrics->per_level) {
            by_level[level].push_back(level_metric(lm, metric));
        }
    }
    std::map<int, Estimate> out;
    for (const auto& [level, v] : by_level) {
        if (!any_finite(v)) continue;
        out[level] = bootstrap_ci(v, o.bootstrap_seed, o.bootstrap_resamples);
    }
    return out;
}

struct HeatmapData {
    std::vector<int> levels;
    std::vector<std::vector<double>> grid;  // [rank][level]
};

// Occurrences averaged over runs rank by rank.
std::optional<HeatmapData> heatmap_data(const Condition& c, std::size_t ranks) {
    const auto runs = analysis_runs(c);
    if (runs.empty()) return std::nullopt;
    std::map<int, std::size_t> level_index;
    for (const auto* r : runs) {
        for (int l : r->metrics->symbol_occurrence.levels) level_index.emplace(l, 0);
    }
    HeatmapData d;
    for (auto& [l, idx] : level_index) {
        idx = d.levels.size();
        d.levels.push_back(l);
    }
    std::size_t depth = ranks;
    for (const auto* r : runs) depth = std::min(depth, r->metrics->symbol_occurrence.ranked_symbols.size());
    d.grid.assign(depth, std::vector<double>(d.levels.size(), 0.0));
    std::vector<std::vector<int>> counts(depth, std::vector<int>(d.levels.size(), 0));
    for (const auto* r : runs) {
        const auto& t = r->metrics->symbol_occurrence;
        for (std::size_t rank = 0; rank < depth; ++rank) {
            for (std::size_t l = 0; l < t.levels.size(); ++l) {
                const auto col = level_index.at(t.levels[l]);
                d.grid[rank][col] += t.mean[rank][l];
                ++counts[rank][col];
            }
        }
    }
    for (std::size_t rank = 0; rank < depth; ++rank) {
        for (std::size_t l = 0; l < d.levels.size(); ++l) {
            if (counts[rank][l] > 0) d.grid[rank][l] /= counts[rank][l];
        }
    }
    return d;
}

const std::vector<std::string> kCompositionality{"topsim", "posdis", "bosdis"};

std::string estimate_cols(const Estimate& e) {
    return fmt(e.mean) + ',' + fmt(e.ci_low) + ',' + fmt(e.ci_high) + ',' + std::to_string(e.count);
}

std::string file_slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) out += c;
        else if (!out.empty() && out.back() != '_') out += '_';
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

}  // namespace

std::vector<Condition> load_conditions(const std::vector<fs::path>& dirs) {
    std::vector<Condition> out;
    for (const auto& dir : dirs) {
        Condition c;
        c.runs = load_runs(dir);
        if (c.runs.empty()) {
            std::cerr << "warning: no completed runs below " << dir.string() << '\n';
            continue;
        }
        const auto& r = c.runs.front();
        c.label = "D(" + std::to_string(r.n) + "," + std::to_string(r.k) + ")";
        if (r.vocab_factor != 3) c.label += " f=" + std::to_string(r.vocab_factor);
        if (r.distractor_mode != DistractorMode::Unbalanced) c.label += " " + to_string(r.distractor_mode);
        out.push_back(std::move(c));
    }
    return out;
}

std::string accuracy_table(const std::vector<Condition>& conditions, const FigureOptions& o) {
    const auto cells = accuracy_cells(conditions, o);
    std::ostringstream os;
    os << "dataset,split,mean,ci_low,ci_high,runs\n";
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        for (std::size_t s = 0; s < kAccuracyColumns.size(); ++s) {
            if (!cells[c][s].present) continue;
            os << conditions[c].label << ',' << to_string(kAccuracyColumns[s].first) << ','
               << estimate_cols(cells[c][s].est) << '\n';
        }
    }
    return os.str();
}

std::string entropy_table(const std::vector<Condition>& conditions, const FigureOptions& o) {
    const auto cells = entropy_cells(conditions, o);
    std::ostringstream os;
    os << "dataset,metric,mean,ci_low,ci_high,runs\n";
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        for (std::size_t m = 0; m < kEntropyMetrics.size(); ++m) {
            if (!cells[c][m].present) continue;
            os << conditions[c].label << ',' << kEntropyMetrics[m] << ','
               << estimate_cols(cells[c][m].est) << '\n';
        }
    }
    return os.str();
}

std::string per_level_table(const std::vector<Condition>& conditions,
                            const std::vector<std::string>& metrics, const FigureOptions& o) {
    std::ostringstream os;
    os << "dataset,level,metric,mean,ci_low,ci_high,runs\n";
    for (const auto& c : conditions) {
        for (const auto& metric : metrics) {
            for (const auto& [level, e] : level_estimates(c, metric, o)) {
                os << c.label << ',' << level << ',' << metric << ',' << estimate_cols(e) << '\n';
            }
        }
    }
    return os.str();
}

std::string heatmap_table(const std::vector<Condition>& conditions, const FigureOptions& o) {
    std::ostringstream os;
    os << "dataset,rank,level,mean_occurrence\n";
    for (const auto& c : conditions) {
        const auto d = heatmap_data(c, o.heatmap_ranks);
        if (!d) continue;
        for (std::size_t r = 0; r < d->grid.size(); ++r) {
            for (std::size_t l = 0; l < d->levels.size(); ++l) {
                os << c.label << ',' << r + 1 << ',' << d->levels[l] << ',' << fmt(d->grid[r][l])
                   << '\n';
            }
        }
    }
    return os.str();
}

std::string compositionality_table(const std::vector<Condition>& conditions) {
    std::ostringstream os;
    os << "dataset,seed,metric,value\n";
    for (const auto& c : conditions) {
        for (const auto* r : analysis_runs(c)) {
            for (const auto& m : kCompositionality) {
                os << c.label << ',' << r->seed << ',' << m << ',' << fmt(scalar_metric(*r->metrics, m))
                   << '\n';
            }
        }
    }
    return os.str();
}

std::vector<std::string> emit_figures(const std::vector<Condition>& conditions, const fs::path& out,
                                      const FigureOptions& o) {
    fs::create_directories(out);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& contents) {
        write_file(out / name, contents);
        written.push_back(name);
    };
    std::vector<std::string> labels;
    for (const auto& c : conditions) labels.push_back(c.label);
    if (conditions.empty()) {
        std::cerr << "warning: no completed runs; no figures written\n";
        return written;
    }

    emit("accuracy.csv", accuracy_table(conditions, o));
    std::vector<std::string> split_names;
    for (const auto& [split, _] : kAccuracyColumns) split_names.push_back(to_string(split));
    emit("accuracy.svg", bar_chart("Accuracy by split", "accuracy", labels, split_names,
                                   accuracy_cells(conditions, o)));

    bool any_metrics = false;
    for (const auto& c : conditions) any_metrics = any_metrics || !analysis_runs(c).empty();
    if (!any_metrics) {
        std::cerr << "warning: no metrics in any run; language figures skipped\n";
        return written;
    }

    emit("entropy_scores.csv", entropy_table(conditions, o));
    emit("entropy_scores.svg", bar_chart("Entropy scores", "score", labels, kEntropyMetrics,
                                         entropy_cells(conditions, o)));

    emit("per_level_entropy.csv", per_level_table(conditions, kEntropyMetrics, o));
    for (const auto& metric : kEntropyMetrics) {
        std::vector<LineSeries> series;
        for (const auto& c : conditions) {
            LineSeries s{c.label, {}};
            for (const auto& [level, e] : level_estimates(c, metric, o)) s.points.emplace_back(level, e);
            series.push_back(std::move(s));
        }
        emit("per_level_" + metric + ".svg", line_chart(metric + " by level", metric, series));
    }

    const std::vector<std::string> length_metrics{"mean_message_length", "symbol_redundancy"};
    emit("length_redundancy.csv", per_level_table(conditions, length_metrics, o));
    for (const auto& metric : length_metrics) {
        std::vector<LineSeries> series;
        for (const auto& c : conditions) {
            LineSeries s{c.label, {}};
            for (const auto& [level, e] : level_estimates(c, metric, o)) s.points.emplace_back(level, e);
            series.push_back(std::move(s));
        }
        emit("per_level_" + metric + ".svg", line_chart(metric + " by level", metric, series));
    }

    emit("symbol_heatmap.csv", heatmap_table(conditions, o));
    for (const auto& c : conditions) {
        const auto d = heatmap_data(c, o.heatmap_ranks);
        if (!d) continue;
        emit("symbol_heatmap_" + file_slug(c.label) + ".svg",
             heatmap(c.label + ": symbol occurrences per message", d->levels, d->grid));
    }

    emit("compositionality.csv", compositionality_table(conditions));
    std::vector<std::vector<std::vector<double>>> values;
    for (const auto& c : conditions) {
        std::vector<std::vector<double>> row(kCompositionality.size());
        for (const auto* r : analysis_runs(c)) {
            for (std::size_t m = 0; m < kCompositionality.size(); ++m) {
                const double v = scalar_metric(*r->metrics, kCompositionality[m]);
                if (std::isfinite(v)) row[m].push_back(v);
            }
        }
        values.push_back(std::move(row));
    }
    emit("compositionality.svg", box_chart("Compositionality", labels, kCompositionality, values));
    return written;
}

}  // namespace hierref
