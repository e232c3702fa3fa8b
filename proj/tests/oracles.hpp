#pragma once

// Brute-force reference implementations and corpus fixtures for tests.
//
// The oracles build full joint count tables and derive every quantity from
// H(X) + H(Y) - H(X,Y), which is a different route from the library's direct
// conditional sums.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "hierref/concept.hpp"
#include "hierref/corpus.hpp"
#include "hierref/random.hpp"

namespace oracle {

using hierref::Corpus;
using hierref::CorpusRecord;

// Dense relabelling of arbitrary comparable values.
template <typename T>
std::vector<int> relabel(const std::vector<T>& values, int* cardinality = nullptr) {
    std::map<T, int> ids;
    for (const auto& v : values) ids.emplace(v, 0);
    int next = 0;
    for (auto& [_, id] : ids) id = next++;
    if (cardinality) *cardinality = next;
    std::vector<int> out;
    for (const auto& v : values) out.push_back(ids.at(v));
    return out;
}

inline double h_of_table(const std::vector<double>& counts, double total) {
    double h = 0.0;
    for (double c : counts) {
        if (c > 0) h += -(c / total) * std::log2(c / total);
    }
    return h;
}

struct Table {
    double hx = 0, hy = 0, hxy = 0;
    double mi() const { return hx + hy - hxy; }
};

template <typename A, typename B>
Table table(const std::vector<A>& xs, const std::vector<B>& ys) {
    int nx = 0, ny = 0;
    const auto x = relabel(xs, &nx);
    const auto y = relabel(ys, &ny);
    std::vector<std::vector<double>> joint(nx, std::vector<double>(ny, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) joint[x[i]][y[i]] += 1.0;
    std::vector<double> px(nx, 0.0), py(ny, 0.0), pxy;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            px[i] += joint[i][j];
            py[j] += joint[i][j];
            pxy.push_back(joint[i][j]);
        }
    }
    const double total = static_cast<double>(x.size());
    return {h_of_table(px, total), h_of_table(py, total), h_of_table(pxy, total)};
}

struct Scores {
    double effectiveness, consistency, nmi;
};

inline Scores entropy_scores(const Corpus& c) {
    std::vector<std::vector<int>> keys, msgs;
    for (const auto& r : c.records) {
        keys.push_back(r.key.masked);
        msgs.push_back(r.message);
    }
    const auto t = table(keys, msgs);
    const double h_m_given_c = t.hxy - t.hx;
    const double h_c_given_m = t.hxy - t.hy;
    Scores s;
    s.consistency = t.hy > 0 ? 1.0 - h_m_given_c / t.hy : 1.0;
    s.effectiveness = t.hx > 0 ? 1.0 - h_c_given_m / t.hx : 1.0;
    s.nmi = t.mi() / (0.5 * (t.hx + t.hy));
    return s;
}

inline std::vector<int> encoded_attribute(const Corpus& c, int a) {
    std::vector<int> out;
    for (const auto& r : c.records) out.push_back(r.key[a] == 0 ? c.k : r.key[a] - 1);
    return out;
}

inline double gap(const std::vector<int>& x, const Corpus& c) {
    const auto hx = table(x, x).hx;
    if (hx == 0) return 0.0;
    std::vector<double> mis;
    for (int a = 0; a < c.n; ++a) mis.push_back(table(x, encoded_attribute(c, a)).mi());
    std::sort(mis.rbegin(), mis.rend());
    return (mis[0] - (mis.size() > 1 ? mis[1] : 0.0)) / hx;
}

inline double posdis(const Corpus& c) {
    double sum = 0.0;
    for (int j = 0; j < c.max_len; ++j) {
        std::vector<int> x;
        for (const auto& r : c.records) x.push_back(j < static_cast<int>(r.message.size()) ? r.message[j] : 0);
        sum += gap(x, c);
    }
    return sum / c.max_len;
}

inline double bosdis(const Corpus& c) {
    double sum = 0.0;
    for (int s = 1; s < c.vocab_size; ++s) {
        std::vector<int> x;
        for (const auto& r : c.records) x.push_back(static_cast<int>(std::count(r.message.begin(), r.message.end(), s)));
        sum += gap(x, c);
    }
    return sum / (c.vocab_size - 1);
}

inline double symbol_redundancy(const Corpus& c) {
    double total = 0.0;
    int pairs = 0;
    for (int a = 0; a < c.n; ++a) {
        for (int v = 1; v <= c.k; ++v) {
            std::vector<int> has;
            for (const auto& r : c.records) has.push_back(r.key[a] == v);
            if (std::find(has.begin(), has.end(), 1) == has.end()) continue;
            int best = -1;
            double best_mi = -1;
            for (int s = 1; s < c.vocab_size; ++s) {
                std::vector<int> occurs;
                for (const auto& r : c.records) {
                    occurs.push_back(std::find(r.message.begin(), r.message.end(), s) != r.message.end());
                }
                const double mi = table(has, occurs).mi();
                // Ties within rounding resolve to the lower symbol.
                if (mi > best_mi + 1e-12) {
                    best_mi = mi;
                    best = s;
                }
            }
            double sum = 0.0;
            int cnt = 0;
            for (const auto& r : c.records) {
                if (r.key[a] != v) continue;
                sum += static_cast<double>(std::count(r.message.begin(), r.message.end(), best));
                ++cnt;
            }
            total += sum / cnt;
            ++pairs;
        }
    }
    return total / pairs;
}

// ---------------------------------------------------------------------------
// Fixtures

inline std::vector<hierref::ConceptKey> all_keys(int n, int k) {
    std::vector<hierref::ConceptKey> out;
    std::vector<int> cur(n, 0);
    while (true) {
        hierref::ConceptKey key{cur};
        if (key.level() > 0) out.push_back(key);
        int i = n - 1;
        while (i >= 0 && cur[i] == k) cur[i--] = 0;
        if (i < 0) break;
        ++cur[i];
    }
    return out;
}

inline CorpusRecord record(const hierref::ConceptKey& key, std::vector<int> message) {
    return hierref::make_record(hierref::concept_from_key(key), std::move(message));
}

/// Position j names attribute j's encoded value with a symbol of its own.
inline Corpus positional(int n, int k) {
    Corpus c{n, k, n * (k + 1) + 1, n, {}};
    for (const auto& key : all_keys(n, k)) {
        std::vector<int> msg;
        for (int a = 0; a < n; ++a) msg.push_back(a * (k + 1) + (key[a] == 0 ? k : key[a] - 1) + 1);
        c.records.push_back(record(key, msg));
    }
    return c;
}

inline Corpus permuted(Corpus c, std::uint64_t seed) {
    hierref::Rng rng(seed);
    for (auto& r : c.records) std::shuffle(r.message.begin(), r.message.end(), rng);
    return c;
}

/// Uniformly random keys and messages of length 1..max_len.
inline Corpus random_corpus(hierref::Rng& rng, int n, int k, int vocab, int max_len,
                            std::size_t records, bool allow_empty = false) {
    Corpus c{n, k, vocab, max_len, {}};
    while (c.records.size() < records) {
        std::vector<int> key(n);
        for (auto& v : key) v = hierref::uniform_int(rng, 0, k);
        if (std::all_of(key.begin(), key.end(), [](int v) { return v == 0; })) continue;
        const int len = hierref::uniform_int(rng, allow_empty ? 0 : 1, max_len);
        std::vector<int> msg(len);
        for (auto& s : msg) s = hierref::uniform_int(rng, 1, vocab - 1);
        c.records.push_back(record(hierref::ConceptKey{key}, msg));
    }
    return c;
}

}  // namespace oracle
