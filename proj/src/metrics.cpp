#include "hierref/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hierref/random.hpp"

namespace hierref {
namespace {

void require_nonempty(std::span<const CorpusRecord> records) {
    if (records.empty()) throw std::invalid_argument("metrics need a nonempty corpus");
}

template <typename Key>
std::vector<int> label(std::span<const CorpusRecord> records, Key key_of) {
    std::map<decltype(key_of(records.front())), int> ids;
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto [it, _] = ids.emplace(key_of(r), static_cast<int>(ids.size()));
        out.push_back(it->second);
    }
    return out;
}

std::vector<int> concept_labels(std::span<const CorpusRecord> records) {
    return label(records, [](const CorpusRecord& r) { return r.key.masked; });
}

std::vector<int> message_labels(std::span<const CorpusRecord> records) {
    return label(records, [](const CorpusRecord& r) { return r.message; });
}

std::vector<std::uint64_t> histogram(std::span<const int> x) {
    std::map<int, std::uint64_t> counts;
    for (int v : x) ++counts[v];
    std::vector<std::uint64_t> out;
    out.reserve(counts.size());
    for (const auto& [_, c] : counts) out.push_back(c);
    return out;
}

// 1 - H(X|Y)/H(X), with the zero-marginal case resolved by the conditional.
double normalized_complement(double conditional, double marginal, const char* what) {
    if (marginal > 0.0) return 1.0 - conditional / marginal;
    if (conditional <= 0.0) return 1.0;
    throw DegenerateCorpusError(std::string(what) + ": zero marginal entropy with nonzero conditional");
}

// Per-attribute encoded values in [0, k], indexed [attribute][record].
std::vector<std::vector<int>> encoded_columns(const Corpus& corpus) {
    std::vector<std::vector<int>> cols(static_cast<std::size_t>(corpus.n));
    for (auto& c : cols) c.reserve(corpus.records.size());
    for (const auto& r : corpus.records) {
        const auto enc = encoded_attributes(r.key, corpus.k);
        for (int a = 0; a < corpus.n; ++a) cols[a].push_back(enc[a]);
    }
    return cols;
}

// (I(x; a1) - I(x; a2)) / H(x) where a1, a2 are the two most informative
// attributes; 0 when x is constant.
double disentanglement_gap(std::span<const int> x,
                           const std::vector<std::vector<int>>& attributes) {
    const double h = entropy_from_counts(histogram(x));
    if (h <= 0.0) return 0.0;
    std::vector<double> mi;
    mi.reserve(attributes.size());
    for (const auto& a : attributes) mi.push_back(mutual_information(x, a));
    std::sort(mi.begin(), mi.end(), std::greater<>());
    const double second = mi.size() > 1 ? mi[1] : 0.0;
    return (mi[0] - second) / h;
}

// Positions past the end of a message hold EOS.
constexpr int kPadding = 0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double entropy(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("entropy of an empty distribution");
    double total = 0.0;
    double h = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::invalid_argument("negative probability");
        total += p;
        if (p > 0.0) h -= p * std::log2(p);
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("probabilities do not sum to 1");
    return h;
}

double entropy_from_counts(std::span<const std::uint64_t> counts) {
    const auto total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    if (total == 0) throw std::invalid_argument("entropy of empty counts");
    const double n = static_cast<double>(total);
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

JointEntropies joint_entropies(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size()) throw std::invalid_argument("label sequences differ in length");
    if (x.empty()) throw std::invalid_argument("joint entropy of empty sequences");
    std::map<std::pair<int, int>, std::uint64_t> joint;
    std::map<int, std::uint64_t> cx;
    std::map<int, std::uint64_t> cy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++joint[{x[i], y[i]}];
        ++cx[x[i]];
        ++cy[y[i]];
    }
    const double n = static_cast<double>(x.size());
    JointEntropies out;
    for (const auto& [_, c] : cx) {
        const double p = static_cast<double>(c) / n;
        out.h_x -= p * std::log2(p);
    }
    for (const auto& [_, c] : cy) {
        const double p = static_cast<double>(c) / n;
        out.h_y -= p * std::log2(p);
    }
    // H(X|Y) = sum p(x,y) log p(y)/p(x,y); exactly 0 for a function of Y.
    for (const auto& [xy, c] : joint) {
        const double p = static_cast<double>(c) / n;
        out.h_x_given_y += p * std::log2(static_cast<double>(cy[xy.second]) / static_cast<double>(c));
        out.h_y_given_x += p * std::log2(static_cast<double>(cx[xy.first]) / static_cast<double>(c));
    }
    return out;
}

double conditional_entropy(std::span<const int> x, std::span<const int> given) {
    return joint_entropies(x, given).h_x_given_y;
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
    return joint_entropies(x, y).mutual_information();
}

namespace {

// With `undefined` set, a degenerate NMI becomes NaN instead of an error.
EntropyScores score_entropies(std::span<const CorpusRecord> records, bool* nmi_undefined) {
    require_nonempty(records);
    const auto c = concept_labels(records);
    const auto m = message_labels(records);
    const auto j = joint_entropies(c, m);
    EntropyScores s;
    s.h_concepts = j.h_x;
    s.h_messages = j.h_y;
    s.h_concepts_given_messages = j.h_x_given_y;
    s.h_messages_given_concepts = j.h_y_given_x;
    s.mutual_information = j.mutual_information();
    s.consistency = normalized_complement(s.h_messages_given_concepts, s.h_messages, "consistency");
    s.effectiveness =
        normalized_complement(s.h_concepts_given_messages, s.h_concepts, "effectiveness");
    const double mean_h = 0.5 * (s.h_concepts + s.h_messages);
    if (mean_h > 0.0) {
        s.nmi = s.mutual_information / mean_h;
    } else if (nmi_undefined) {
        s.nmi = std::numeric_limits<double>::quiet_NaN();
        *nmi_undefined = true;
    } else {
        throw DegenerateCorpusError("nmi: both marginal entropies are zero");
    }
    return s;
}

}  // namespace

EntropyScores entropy_scores(std::span<const CorpusRecord> records) {
    return score_entropies(records, nullptr);
}

double effectiveness(const Corpus& corpus) { return entropy_scores(corpus.records).effectiveness; }
double consistency(const Corpus& corpus) { return entropy_scores(corpus.records).consistency; }
double nmi(const Corpus& corpus) { return entropy_scores(corpus.records).nmi; }

RedundancyResult symbol_redundancy(const Corpus& corpus) {
    require_nonempty(corpus.records);
    const auto& recs = corpus.records;
    const std::size_t count = recs.size();

    // present[s][i]: symbol s occurs at least once in message i.
    std::vector<std::vector<int>> present(static_cast<std::size_t>(corpus.vocab_size),
                                          std::vector<int>(count, 0));
    for (std::size_t i = 0; i < count; ++i) {
        for (int s : recs[i].message) present[s][i] = 1;
    }

    RedundancyResult out;
    out.preferred_symbol.assign(static_cast<std::size_t>(corpus.n),
                                std::vector<int>(static_cast<std::size_t>(corpus.k), 0));
    double total = 0.0;
    int pairs = 0;
    std::map<int, std::pair<double, int>> level_sums;
    std::vector<int> indicator(count);
    for (int a = 0; a < corpus.n; ++a) {
        for (int v = 1; v <= corpus.k; ++v) {
            bool any = false;
            for (std::size_t i = 0; i < count; ++i) {
                indicator[i] = recs[i].key[a] == v ? 1 : 0;
                any = any || indicator[i];
            }
            if (!any) {
                out.skipped.emplace_back(a, v);
                continue;
            }
            int best = 1;
            double best_mi = -1.0;
            for (int s = 1; s < corpus.vocab_size; ++s) {
                const double mi = mutual_information(indicator, present[s]);
                // Equal up to rounding counts as a tie; the lower symbol wins.
                if (mi > best_mi + 1e-12) {
                    best_mi = mi;
                    best = s;
                }
            }
            out.preferred_symbol[a][v - 1] = best;

            double sum = 0.0;
            int with_pair = 0;
            std::map<int, std::pair<double, int>> by_level;
            for (std::size_t i = 0; i < count; ++i) {
                if (!indicator[i]) continue;
                const auto occ = std::count(recs[i].message.begin(), recs[i].message.end(), best);
                sum += static_cast<double>(occ);
                ++with_pair;
                auto& slot = by_level[recs[i].level()];
                slot.first += static_cast<double>(occ);
                ++slot.second;
            }
            total += sum / with_pair;
            ++pairs;
            for (const auto& [level, slot] : by_level) {
                auto& acc = level_sums[level];
                acc.first += slot.first / slot.second;
                ++acc.second;
            }
        }
    }
    for (const auto& [a, v] : out.skipped) {
        std::cerr << "warning: attribute " << a << " value " << v
                  << " is never relevant in the corpus; skipped for symbol redundancy\n";
    }
    out.overall = total / pairs;
    for (const auto& [level, acc] : level_sums) out.per_level[level] = acc.first / acc.second;
    return out;
}

int edit_distance(std::span<const int> a, std::span<const int> b) {
    std::vector<int> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        int diag = row[0];
        row[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman inputs differ in length");
    if (x.size() < 2) throw DegenerateCorpusError("spearman needs at least two observations");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw DegenerateCorpusError("rank correlation undefined: constant distances");
    }
    return sxy / std::sqrt(sxx * syy);
}

double topographic_similarity(const Corpus& corpus, const TopsimOptions& options) {
    require_nonempty(corpus.records);
    const auto& recs = corpus.records;
    const std::size_t count = recs.size();
    if (count < 2) throw DegenerateCorpusError("topsim needs at least two records");

    std::vector<std::vector<double>> enc;
    enc.reserve(count);
    for (const auto& r : recs) {
        const auto bits = encode_for_metrics(r.key, corpus.k);
        enc.emplace_back(bits.begin(), bits.end());
    }
    auto cosine_distance = [&](std::size_t i, std::size_t j) {
        double dot = 0.0, ni = 0.0, nj = 0.0;
        for (std::size_t t = 0; t < enc[i].size(); ++t) {
            dot += enc[i][t] * enc[j][t];
            ni += enc[i][t] * enc[i][t];
            nj += enc[j][t] * enc[j][t];
        }
        return 1.0 - dot / std::sqrt(ni * nj);
    };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const std::uint64_t total_pairs = static_cast<std::uint64_t>(count) * (count - 1) / 2;
    if (total_pairs <= options.max_pairs) {
        pairs.reserve(total_pairs);
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = i + 1; j < count; ++j) pairs.emplace_back(i, j);
        }
    } else {
        Rng rng(options.seed);
        std::uniform_int_distribution<std::size_t> first(0, count - 1);
        std::uniform_int_distribution<std::size_t> second(0, count - 2);
        pairs.reserve(options.max_pairs);
        for (std::size_t p = 0; p < options.max_pairs; ++p) {
            const auto i = first(rng);
            auto j = second(rng);
            if (j >= i) ++j;
            pairs.emplace_back(i, j);
        }
    }
    if (pairs.size() == 1) {
        const auto [i, j] = pairs.front();
        if (recs[i].key == recs[j].key && recs[i].message == recs[j].message) {
            throw DegenerateCorpusError("topsim needs at least two distinct records");
        }
        return 1.0;
    }

    std::vector<double> input_dist;
    std::vector<double> message_dist;
    input_dist.reserve(pairs.size());
    message_dist.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        input_dist.push_back(cosine_distance(i, j));
        message_dist.push_back(edit_distance(recs[i].message, recs[j].message));
    }
    return spearman(input_dist, message_dist);
}

double posdis(const Corpus& corpus) {
    require_nonempty(corpus.records);
    const auto attributes = encoded_columns(corpus);
    double total = 0.0;
    std::vector<int> column(corpus.records.size());
    for (int j = 0; j < corpus.max_len; ++j) {
        for (std::size_t i = 0; i < corpus.records.size(); ++i) {
            const auto& msg = corpus.records[i].message;
            column[i] = j < static_cast<int>(msg.size()) ? msg[j] : kPadding;
        }
        total += disentanglement_gap(column, attributes);
    }
    return total / corpus.max_len;
}

double bosdis(const Corpus& corpus) {
    require_nonempty(corpus.records);
    const auto attributes = encoded_columns(corpus);
    double total = 0.0;
    std::vector<int> column(corpus.records.size());
    for (int s = 1; s < corpus.vocab_size; ++s) {
        for (std::size_t i = 0; i < corpus.records.size(); ++i) {
            const auto& msg = corpus.records[i].message;
            column[i] = static_cast<int>(std::count(msg.begin(), msg.end(), s));
        }
        total += disentanglement_gap(column, attributes);
    }
    return total / (corpus.vocab_size - 1);
}

LengthStats message_length_stats(const Corpus& corpus) {
    require_nonempty(corpus.records);
    LengthStats out;
    std::map<int, std::pair<double, int>> sums;
    double total = 0.0;
    for (const auto& r : corpus.records) {
        const auto len = static_cast<double>(r.message.size());
        total += len;
        auto& slot = sums[r.level()];
        slot.first += len;
        ++slot.second;
    }
    out.overall = total / static_cast<double>(corpus.records.size());
    for (const auto& [level, slot] : sums) out.per_level[level] = slot.first / slot.second;
    return out;
}

SymbolOccurrenceTable symbol_occurrence_by_level(const Corpus& corpus) {
    require_nonempty(corpus.records);
    std::map<int, std::vector<double>> sums;
    std::map<int, int> counts;
    for (const auto& r : corpus.records) {
        auto& row = sums[r.level()];
        row.resize(static_cast<std::size_t>(corpus.vocab_size), 0.0);
        for (int s : r.message) row[s] += 1.0;
        ++counts[r.level()];
    }
    SymbolOccurrenceTable table;
    for (const auto& [level, _] : sums) table.levels.push_back(level);
    const auto& first = sums.at(table.levels.front());
    const double first_count = counts.at(table.levels.front());

    table.ranked_symbols.resize(static_cast<std::size_t>(corpus.vocab_size - 1));
    std::iota(table.ranked_symbols.begin(), table.ranked_symbols.end(), 1);
    std::stable_sort(table.ranked_symbols.begin(), table.ranked_symbols.end(),
                     [&](int a, int b) { return first[a] / first_count > first[b] / first_count; });
    for (int s : table.ranked_symbols) {
        std::vector<double> row;
        for (int level : table.levels) row.push_back(sums.at(level)[s] / counts.at(level));
        table.mean.push_back(std::move(row));
    }
    return table;
}

MetricsReport compute_metrics(const Corpus& corpus, const TopsimOptions& topsim) {
    corpus.validate();
    MetricsReport report;
    report.records = corpus.size();
    bool undefined = false;
    report.entropy = score_entropies(corpus.records, &undefined);
    if (undefined) report.undefined.push_back("nmi");
    try {
        report.topsim = topographic_similarity(corpus, topsim);
    } catch (const DegenerateCorpusError&) {
        report.topsim = std::numeric_limits<double>::quiet_NaN();
        report.undefined.push_back("topsim");
    }
    report.posdis = posdis(corpus);
    report.bosdis = bosdis(corpus);
    const auto redundancy = symbol_redundancy(corpus);
    report.symbol_redundancy = redundancy.overall;
    report.skipped_redundancy_pairs = redundancy.skipped;
    const auto lengths = message_length_stats(corpus);
    report.mean_message_length = lengths.overall;
    report.symbol_occurrence = symbol_occurrence_by_level(corpus);

    std::map<int, std::vector<CorpusRecord>> by_level;
    for (const auto& r : corpus.records) by_level[r.level()].push_back(r);
    for (const auto& [level, recs] : by_level) {
        bool level_undefined = false;
        const auto scores = score_entropies(recs, &level_undefined);
        if (level_undefined) report.undefined.push_back("level." + std::to_string(level) + ".nmi");
        LevelMetrics lm;
        lm.records = recs.size();
        lm.effectiveness = scores.effectiveness;
        lm.consistency = scores.consistency;
        lm.nmi = scores.nmi;
        lm.mean_message_length = lengths.per_level.at(level);
        lm.symbol_redundancy = redundancy.per_level.at(level);
        report.per_level[level] = lm;
    }
    for (const auto& name : report.undefined) {
        std::cerr << "warning: " << name << " is undefined for this corpus (degenerate language)\n";
    }
    return report;
}

namespace {

std::vector<std::pair<std::string, double>> scalar_fields(const MetricsReport& r) {
    return {
        {"records", static_cast<double>(r.records)},
        {"effectiveness", r.entropy.effectiveness},
        {"consistency", r.entropy.consistency},
        {"nmi", r.entropy.nmi},
        {"h_concepts", r.entropy.h_concepts},
        {"h_messages", r.entropy.h_messages},
        {"h_concepts_given_messages", r.entropy.h_concepts_given_messages},
        {"h_messages_given_concepts", r.entropy.h_messages_given_concepts},
        {"mutual_information", r.entropy.mutual_information},
        {"topsim", r.topsim},
        {"posdis", r.posdis},
        {"bosdis", r.bosdis},
        {"symbol_redundancy", r.symbol_redundancy},
        {"mean_message_length", r.mean_message_length},
    };
}

std::vector<std::pair<std::string, double>> level_fields(const LevelMetrics& m) {
    return {
        {"records", static_cast<double>(m.records)},
        {"effectiveness", m.effectiveness},
        {"consistency", m.consistency},
        {"nmi", m.nmi},
        {"mean_message_length", m.mean_message_length},
        {"symbol_redundancy", m.symbol_redundancy},
    };
}

}  // namespace

std::string metrics_to_text(const MetricsReport& report) {
    std::ostringstream os;
    for (const auto& [key, value] : scalar_fields(report)) os << key << '=' << fmt(value) << '\n';
    for (const auto& [level, m] : report.per_level) {
        for (const auto& [key, value] : level_fields(m)) {
            os << "level." << level << '.' << key << '=' << fmt(value) << '\n';
        }
    }
    return os.str();
}

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    for (const auto& [key, value] : scalar_fields(report)) j[key] = value;
    j["records"] = report.records;
    auto& levels = j["per_level"];
    levels = nlohmann::ordered_json::object();
    for (const auto& [level, m] : report.per_level) {
        auto& entry = levels[std::to_string(level)];
        for (const auto& [key, value] : level_fields(m)) entry[key] = value;
        entry["records"] = m.records;
    }
    j["symbol_occurrence"] = {
        {"levels", report.symbol_occurrence.levels},
        {"ranked_symbols", report.symbol_occurrence.ranked_symbols},
        {"mean", report.symbol_occurrence.mean},
    };
    auto skipped = nlohmann::ordered_json::array();
    for (const auto& [a, v] : report.skipped_redundancy_pairs) skipped.push_back({a, v});
    j["skipped_redundancy_pairs"] = skipped;
    j["undefined"] = report.undefined;
    return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    // Undefined scores are written as null.
    auto num = [](const nlohmann::json& v) {
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    MetricsReport r;
    r.records = j.at("records").get<std::size_t>();
    r.entropy.effectiveness = num(j.at("effectiveness"));
    r.entropy.consistency = num(j.at("consistency"));
    r.entropy.nmi = num(j.at("nmi"));
    r.entropy.h_concepts = num(j.at("h_concepts"));
    r.entropy.h_messages = num(j.at("h_messages"));
    r.entropy.h_concepts_given_messages = num(j.at("h_concepts_given_messages"));
    r.entropy.h_messages_given_concepts = num(j.at("h_messages_given_concepts"));
    r.entropy.mutual_information = num(j.at("mutual_information"));
    r.topsim = num(j.at("topsim"));
    r.posdis = num(j.at("posdis"));
    r.bosdis = num(j.at("bosdis"));
    r.symbol_redundancy = num(j.at("symbol_redundancy"));
    r.mean_message_length = num(j.at("mean_message_length"));
    for (const auto& [key, entry] : j.at("per_level").items()) {
        LevelMetrics m;
        m.records = entry.at("records").get<std::size_t>();
        m.effectiveness = num(entry.at("effectiveness"));
        m.consistency = num(entry.at("consistency"));
        m.nmi = num(entry.at("nmi"));
        m.mean_message_length = num(entry.at("mean_message_length"));
        m.symbol_redundancy = num(entry.at("symbol_redundancy"));
        r.per_level[std::stoi(key)] = m;
    }
    const auto& occ = j.at("symbol_occurrence");
    r.symbol_occurrence.levels = occ.at("levels").get<std::vector<int>>();
    r.symbol_occurrence.ranked_symbols = occ.at("ranked_symbols").get<std::vector<int>>();
    r.symbol_occurrence.mean = occ.at("mean").get<std::vector<std::vector<double>>>();
    for (const auto& p : j.at("skipped_redundancy_pairs")) {
        r.skipped_redundancy_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }
    if (j.contains("undefined")) r.undefined = j.at("undefined").get<std::vector<std::string>>();
    return r;
}

std::string per_level_csv(const MetricsReport& report) {
    std::ostringstream os;
    os << "level,metric,value\n";
    for (const auto& [level, m] : report.per_level) {
        for (const auto& [key, value] : level_fields(m)) {
            os << level << ',' << key << ',' << fmt(value) << '\n';
        }
    }
    return os.str();
}

std::string symbol_occurrence_csv(const SymbolOccurrenceTable& table, std::size_t top) {
    std::ostringstream os;
    os << "rank,symbol,level,mean_occurrence\n";
    const std::size_t rows =
        top == 0 ? table.ranked_symbols.size() : std::min(top, table.ranked_symbols.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t l = 0; l < table.levels.size(); ++l) {
            os << r + 1 << ',' << table.ranked_symbols[r] << ',' << table.levels[l] << ','
               << fmt(table.mean[r][l]) << '\n';
        }
    }
    return os.str();
}

}  // namespace hierref
