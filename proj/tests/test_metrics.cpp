#include <doctest.h>

#include <cmath>

#include "hierref/metrics.hpp"
#include "oracles.hpp"

using namespace hierref;
using oracle::record;

namespace {

ConceptKey key(std::vector<int> v) { return ConceptKey{std::move(v)}; }

Corpus make_corpus(int n, int k, int vocab, int max_len, std::vector<CorpusRecord> records) {
    return Corpus{n, k, vocab, max_len, std::move(records)};
}

Corpus relabelled(Corpus c, const std::vector<int>& mapping) {
    for (auto& r : c.records) {
        for (auto& s : r.message) s = mapping[static_cast<std::size_t>(s)];
    }
    return c;
}

}  // namespace

TEST_CASE("entropy basics") {
    const std::vector<double> fair{0.5, 0.5};
    const std::vector<double> sure{1.0, 0.0};
    CHECK(entropy(fair) == doctest::Approx(1.0));
    CHECK(entropy(sure) == 0.0);
    const std::vector<std::uint64_t> counts{1, 1, 2};
    CHECK(entropy_from_counts(counts) == doctest::Approx(1.5));
    const std::vector<int> x{0, 0, 1, 1}, y{0, 1, 0, 1};
    const auto j = joint_entropies(x, y);
    CHECK(j.h_x == doctest::Approx(1.0));
    CHECK(j.h_x_given_y == doctest::Approx(1.0));
    CHECK(j.mutual_information() == doctest::Approx(0.0));
    CHECK(mutual_information(x, x) == doctest::Approx(1.0));
    CHECK(conditional_entropy(x, x) == 0.0);
}

TEST_CASE("entropy scores of a four-record corpus with one synonym") {
    const auto c = make_corpus(2, 2, 4, 2, {
        record(key({1, 0}), {1}),
        record(key({1, 0}), {2}),
        record(key({2, 0}), {3}),
        record(key({2, 0}), {3}),
    });
    CHECK(consistency(c) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(effectiveness(c) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nmi(c) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("entropy scores of one-to-one, polysemous and independent languages") {
    const auto keys = oracle::all_keys(2, 3);
    Corpus one_to_one{2, 3, 20, 1, {}};
    Corpus polysemous{2, 3, 20, 1, {}};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        one_to_one.records.push_back(record(keys[i], {static_cast<int>(i) + 1}));
        polysemous.records.push_back(record(keys[i], {static_cast<int>(i % 3) + 1}));
    }
    CHECK(effectiveness(one_to_one) == doctest::Approx(1.0));
    CHECK(consistency(one_to_one) == doctest::Approx(1.0));
    CHECK(nmi(one_to_one) == doctest::Approx(1.0));
    // Each message is a function of the concept but names several of them.
    CHECK(consistency(polysemous) == doctest::Approx(1.0));
    CHECK(effectiveness(polysemous) < 0.6);

    // Every concept paired with every message: no information.
    Corpus independent{1, 2, 3, 1, {}};
    for (int v = 1; v <= 2; ++v) {
        for (int s = 1; s <= 2; ++s) independent.records.push_back(record(key({v}), {s}));
    }
    CHECK(nmi(independent) == doctest::Approx(0.0));
    CHECK(effectiveness(independent) == doctest::Approx(0.0));
    CHECK(consistency(independent) == doctest::Approx(0.0));
}

TEST_CASE("degenerate marginals") {
    // One concept, one message: both marginals vanish.
    const auto single = make_corpus(1, 2, 3, 1, {record(key({1}), {1}), record(key({1}), {1})});
    CHECK_THROWS_AS(nmi(single), DegenerateCorpusError);
    // One message for several concepts: consistency is trivially perfect.
    const auto constant = make_corpus(1, 2, 3, 1, {record(key({1}), {1}), record(key({2}), {1})});
    CHECK(consistency(constant) == 1.0);
    CHECK(effectiveness(constant) == doctest::Approx(0.0));
    CHECK(nmi(constant) == doctest::Approx(0.0));
    CHECK_THROWS_AS(nmi(Corpus{1, 2, 3, 1, {}}), std::invalid_argument);
}

TEST_CASE("a positional language repeats each preferred symbol once") {
    const auto c = oracle::positional(3, 4);
    const auto r = symbol_redundancy(c);
    CHECK(r.overall == doctest::Approx(1.0));
    for (const auto& [level, value] : r.per_level) CHECK(value == doctest::Approx(1.0));
    for (int a = 0; a < 3; ++a) {
        for (int v = 1; v <= 4; ++v) CHECK(r.preferred_symbol[a][v - 1] == a * 5 + v);
    }
    CHECK(r.skipped.empty());
}

TEST_CASE("level-1 messages padded with their value symbol have redundancy L") {
    const int n = 3, k = 4, L = 3;
    Corpus c{n, k, n * k + 1, L, {}};
    for (const auto& kk : oracle::all_keys(n, k)) {
        if (kk.level() != 1) continue;
        int sym = 0;
        for (int a = 0; a < n; ++a) {
            if (kk[a] != 0) sym = a * k + kk[a];
        }
        c.records.push_back(record(kk, std::vector<int>(L, sym)));
    }
    const auto r = symbol_redundancy(c);
    CHECK(r.overall == doctest::Approx(static_cast<double>(L)));
    CHECK(r.per_level.at(1) == doctest::Approx(static_cast<double>(L)));
}

TEST_CASE("redundancy ties go to the lower symbol and count its occurrences") {
    // Symbols 3 and 5 both occur exactly when value 1 is present.
    const auto c = make_corpus(1, 3, 6, 3, {
        record(key({1}), {5, 3, 5}),
        record(key({1}), {3, 5}),
        record(key({2}), {4}),
        record(key({3}), {2}),
    });
    const auto r = symbol_redundancy(c);
    CHECK(r.preferred_symbol[0][0] == 3);
    CHECK(r.preferred_symbol[0][1] == 4);
    CHECK(r.preferred_symbol[0][2] == 2);
    CHECK(r.overall == doctest::Approx(1.0));
    CHECK(r.overall == doctest::Approx(oracle::symbol_redundancy(c)).epsilon(1e-12));
}

TEST_CASE("values that never occur are skipped for redundancy") {
    const auto c = make_corpus(2, 3, 8, 2, {
        record(key({1, 0}), {1}),
        record(key({2, 1}), {2, 3}),
        record(key({0, 2}), {4}),
    });
    const auto r = symbol_redundancy(c);
    const std::vector<std::pair<int, int>> expected{{0, 3}, {1, 3}};
    CHECK(r.skipped == expected);
    CHECK(r.preferred_symbol[0][2] == 0);
    CHECK(r.overall == doctest::Approx(oracle::symbol_redundancy(c)).epsilon(1e-12));
}

TEST_CASE("edit distance and Spearman") {
    const std::vector<int> a{1, 2, 3}, b{1, 3}, e{};
    CHECK(edit_distance(a, b) == 1);
    CHECK(edit_distance(a, e) == 3);
    CHECK(edit_distance(e, e) == 0);
    CHECK(edit_distance(std::vector<int>{1, 2}, std::vector<int>{2, 1}) == 2);
    const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 30, 40}, z{4, 3, 2, 1};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    CHECK(spearman(x, z) == doctest::Approx(-1.0));
    const std::vector<double> tied{1, 1, 2, 2};
    CHECK(spearman(x, tied) == doctest::Approx(2.0 / std::sqrt(5.0)));
    const std::vector<double> flat{3, 3, 3, 3};
    CHECK_THROWS_AS(spearman(x, flat), DegenerateCorpusError);
}

TEST_CASE("topographic similarity of positional and random languages") {
    CHECK(topographic_similarity(oracle::positional(3, 4)) > 0.99);

    Rng rng(17);
    const auto random = oracle::random_corpus(rng, 3, 4, 16, 3, 200);
    // 200 records give 19,900 pairs.
    CHECK(std::abs(topographic_similarity(random)) < 0.05);
}

TEST_CASE("topographic similarity edge cases") {
    const auto two = make_corpus(2, 2, 4, 2, {record(key({1, 0}), {1}), record(key({2, 1}), {2, 3})});
    CHECK(topographic_similarity(two) == 1.0);
    CHECK_THROWS_AS(topographic_similarity(make_corpus(2, 2, 4, 2, {record(key({1, 0}), {1})})),
                    DegenerateCorpusError);
    const auto same_messages = make_corpus(2, 2, 4, 2, {
        record(key({1, 0}), {1}),
        record(key({2, 1}), {1}),
        record(key({2, 2}), {1}),
    });
    CHECK_THROWS_AS(topographic_similarity(same_messages), DegenerateCorpusError);
}

TEST_CASE("topographic similarity is invariant to symbol relabelling") {
    Rng rng(2);
    const auto c = oracle::random_corpus(rng, 3, 4, 16, 3, 80);
    std::vector<int> mapping(16);
    std::iota(mapping.begin(), mapping.end(), 0);
    std::shuffle(mapping.begin() + 1, mapping.end(), rng);
    CHECK(topographic_similarity(relabelled(c, mapping)) == doctest::Approx(topographic_similarity(c)).epsilon(1e-12));
}

TEST_CASE("subsampled topographic similarity is reproducible") {
    Rng rng(3);
    const auto c = oracle::random_corpus(rng, 3, 4, 16, 3, 120);
    TopsimOptions opt;
    opt.max_pairs = 1000;
    opt.seed = 5;
    const double a = topographic_similarity(c, opt);
    CHECK(a == topographic_similarity(c, opt));
    opt.seed = 6;
    CHECK(a != topographic_similarity(c, opt));
    opt.max_pairs = 100'000;
    CHECK(topographic_similarity(c, opt) == topographic_similarity(c));
    opt.max_pairs = 1000;
    CHECK(topographic_similarity(oracle::positional(3, 4), opt) > 0.99);
}

TEST_CASE("positional language is disentangled by position and by symbol") {
    const auto c = oracle::positional(3, 4);
    CHECK(posdis(c) >= 0.99);
    CHECK(bosdis(c) > 0.5);
    const auto shuffled = oracle::permuted(c, 1);
    CHECK(posdis(shuffled) < 0.3);
    CHECK(std::abs(bosdis(shuffled) - bosdis(c)) <= 1e-12);
}

TEST_CASE("posdis and bosdis of uninformative languages are zero") {
    Corpus c{2, 2, 4, 2, {}};
    for (const auto& kk : oracle::all_keys(2, 2)) c.records.push_back(record(kk, {1, 1}));
    CHECK(posdis(c) == 0.0);
    CHECK(bosdis(c) == 0.0);
}

TEST_CASE("message length statistics per level") {
    const auto c = make_corpus(2, 2, 4, 3, {
        record(key({1, 0}), {1, 2, 3}),
        record(key({0, 2}), {1}),
        record(key({1, 2}), {}),
        record(key({2, 2}), {2, 2}),
    });
    const auto s = message_length_stats(c);
    CHECK(s.overall == doctest::Approx(1.5));
    CHECK(s.per_level.at(1) == doctest::Approx(2.0));
    CHECK(s.per_level.at(2) == doctest::Approx(1.0));
}

TEST_CASE("symbol occurrence table ranks by the lowest level") {
    // Symbol j appears (n - j) times at level 1 and j times at level 2.
    const int n = 3;
    Corpus c{2, 2, n + 1, 2 * n, {}};
    for (const auto& kk : oracle::all_keys(2, 2)) {
        std::vector<int> msg;
        for (int j = 1; j <= n; ++j) {
            const int times = kk.level() == 1 ? n - j : j;
            msg.insert(msg.end(), static_cast<std::size_t>(times), j);
        }
        c.records.push_back(record(kk, msg));
    }
    const auto t = symbol_occurrence_by_level(c);
    CHECK(t.levels == std::vector<int>{1, 2});
    CHECK(t.ranked_symbols == std::vector<int>{1, 2, 3});
    CHECK(t.mean[0][0] == doctest::Approx(2.0));
    CHECK(t.mean[1][0] == doctest::Approx(1.0));
    CHECK(t.mean[2][0] == doctest::Approx(0.0));
    CHECK(t.mean[2][1] == doctest::Approx(3.0));
    const auto csv = symbol_occurrence_csv(t, 1);
    CHECK(csv.find("rank,symbol,level,mean_occurrence") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("library metrics agree with brute-force joint tables on random corpora") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        CAPTURE(trial);
        const int n = 2 + trial % 3;
        const int k = 2 + trial % 4;
        const int vocab = 3 + trial % 6;
        const int max_len = 1 + trial % 4;
        const auto records = static_cast<std::size_t>(uniform_int(rng, 5, 100));
        const auto c = oracle::random_corpus(rng, n, k, vocab, max_len, records, trial % 2 == 0);
        const auto lib = entropy_scores(c.records);
        const auto ref = oracle::entropy_scores(c);
        CHECK(std::abs(lib.effectiveness - ref.effectiveness) <= 1e-12);
        CHECK(std::abs(lib.consistency - ref.consistency) <= 1e-12);
        CHECK(std::abs(lib.nmi - ref.nmi) <= 1e-12);
        for (double score : {lib.effectiveness, lib.consistency, lib.nmi}) CHECK((score >= 0.0 && score <= 1.0));
        CHECK(lib.mutual_information <= std::min(lib.h_concepts, lib.h_messages) + 1e-12);
        CHECK(std::abs(posdis(c) - oracle::posdis(c)) <= 1e-12);
        CHECK(std::abs(bosdis(c) - oracle::bosdis(c)) <= 1e-12);
        CHECK(std::abs(symbol_redundancy(c).overall - oracle::symbol_redundancy(c)) <= 1e-12);
    }
}

TEST_CASE("metrics reports round trip through JSON and render per level") {
    Rng rng(8);
    const auto c = oracle::random_corpus(rng, 3, 4, 16, 3, 120);
    const auto report = compute_metrics(c);
    const auto json = metrics_to_json(report);
    const auto back = metrics_from_json(json);
    CHECK(metrics_to_json(back) == json);
    CHECK(back.topsim == report.topsim);
    CHECK(back.per_level.size() == 3);
    const auto text = metrics_to_text(report);
    CHECK(text.find("nmi=") != std::string::npos);
    CHECK(text.find("level.2.symbol_redundancy=") != std::string::npos);
    const auto csv = per_level_csv(report);
    CHECK(csv.find("level,metric,value") == 0);
}

TEST_CASE("reports mark scores that a collapsed language leaves undefined") {
    Corpus c{2, 2, 4, 2, {}};
    for (const auto& kk : oracle::all_keys(2, 2)) c.records.push_back(record(kk, {1, 1}));
    const auto report = compute_metrics(c);
    CHECK(std::isnan(report.topsim));
    CHECK(report.entropy.consistency == 1.0);
    CHECK(report.entropy.nmi == doctest::Approx(0.0));
    CHECK(std::find(report.undefined.begin(), report.undefined.end(), "topsim") != report.undefined.end());
    const auto back = metrics_from_json(metrics_to_json(report));
    CHECK(std::isnan(back.topsim));
    CHECK(back.undefined == report.undefined);
    CHECK_THROWS_AS(topographic_similarity(c), DegenerateCorpusError);
}
