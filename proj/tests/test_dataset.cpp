#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "hierref/dataset.hpp"

using namespace hierref;

namespace {

bool one_level_up_instance(const GameSample& s) {
    // Differs from the sender object on exactly one relevant attribute.
    int diffs = 0;
    for (int a = 0; a < s.sender_object.size(); ++a) {
        if (s.relevance.relevant(a) && s.sender_object[a] != s.distractors.front()[a]) ++diffs;
    }
    return diffs == 1;
}

// Upper 0.999 quantiles of the chi-square distribution by degrees of freedom.
double chi2_crit(int dof) {
    static const std::map<int, double> table{{1, 10.83}, {2, 13.82}, {3, 16.27}, {4, 18.47},
                                             {5, 20.52}, {6, 22.46}, {7, 24.32}};
    return table.at(dof);
}

}  // namespace

TEST_CASE("object enumeration is complete and lexicographic") {
    const auto objs = enumerate_objects(3, 4);
    CHECK(objs.size() == 64);
    CHECK(objs.front().values == std::vector<int>{1, 1, 1});
    CHECK(objs[1].values == std::vector<int>{1, 1, 2});
    CHECK(objs.back().values == std::vector<int>{4, 4, 4});
    CHECK(relevance_vectors_at_level(4, 2).size() == 6);
    CHECK(relevance_vectors_at_level(3, 3).size() == 1);
}

TEST_CASE("relevance sampling is uniform over levels") {
    Rng rng(7);
    const int n = 4;
    const int draws = 20000;
    std::map<int, int> counts;
    for (int i = 0; i < draws; ++i) ++counts[abstraction_level(sample_relevance_uniform_by_level(n, rng))];
    double chi2 = 0.0;
    for (int l = 1; l <= n; ++l) {
        const double expected = static_cast<double>(draws) / n;
        chi2 += std::pow(counts[l] - expected, 2) / expected;
    }
    CHECK(chi2 < chi2_crit(n - 1));
}

TEST_CASE("patterns within a level are uniform") {
    Rng rng(3);
    std::map<std::vector<std::uint8_t>, int> counts;
    const int draws = 12000;
    for (int i = 0; i < draws; ++i) ++counts[sample_relevance_at_level(4, 2, rng).flags];
    REQUIRE(counts.size() == 6);
    double chi2 = 0.0;
    for (const auto& [_, c] : counts) chi2 += std::pow(c - draws / 6.0, 2) / (draws / 6.0);
    CHECK(chi2 < chi2_crit(5));
}

TEST_CASE("targets instantiate the concept") {
    Rng rng(1);
    const ObjectVector o{{2, 3, 1}};
    const RelevanceVector r{{1, 0, 1}};
    for (int i = 0; i < 200; ++i) {
        const auto t = sample_target(o, r, 4, rng);
        CHECK(instantiates(t, Concept{o, r}));
    }
}

TEST_CASE("unbalanced distractors come from one level up and miss the target concept") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const ObjectVector o{{uniform_int(rng, 1, 4), uniform_int(rng, 1, 4), uniform_int(rng, 1, 4)}};
        const auto r = sample_relevance_uniform_by_level(3, rng);
        const auto ds = sample_distractors_unbalanced(o, r, 4, 10, rng);
        REQUIRE(ds.size() == 10);
        for (const auto& d : ds) {
            CHECK_FALSE(instantiates(d, Concept{o, r}));
            GameSample s{o, r, o, {d}};
            CHECK(one_level_up_instance(s));
        }
    }
}

TEST_CASE("balanced distractors miss the target concept") {
    Rng rng(9);
    for (int trial = 0; trial < 300; ++trial) {
        const ObjectVector o{{uniform_int(rng, 1, 4), uniform_int(rng, 1, 4), uniform_int(rng, 1, 4)}};
        const auto r = sample_relevance_uniform_by_level(3, rng);
        for (const auto& d : sample_distractors_balanced(o, r, 4, 10, rng)) {
            CHECK_FALSE(instantiates(d, Concept{o, r}));
        }
    }
}

TEST_CASE("D(3,4) object split sizes and level balance") {
    GenConfig cfg;
    cfg.seed = 11;
    const auto ds = generate_dataset(cfg);
    CHECK(ds.total_samples() == 64 * 3 * 10);
    CHECK(ds.zeroshot_objects.size() == 13 * 30);  // round(0.2 * 64) objects
    const auto rest = ds.train.size() + ds.validation.size();
    CHECK(rest == 51 * 30);
    CHECK(ds.train.size() == static_cast<std::size_t>(std::llround(0.75 * rest)));
    CHECK(ds.zeroshot_abstractions.empty());

    std::map<std::pair<ObjectVector, int>, int> per_level;
    std::set<ObjectVector> zs_objects, seen_objects;
    for (auto split : {Split::Train, Split::Validation, Split::ZeroShotObjects}) {
        for (const auto& s : ds.split(split)) {
            ++per_level[{s.sender_object, abstraction_level(s.relevance)}];
            if (split == Split::ZeroShotObjects) zs_objects.insert(s.sender_object);
            else seen_objects.insert(s.sender_object);
            CHECK(s.distractors.size() == 10);
            CHECK(instantiates(s.target, s.to_concept()));
        }
    }
    for (const auto& [_, count] : per_level) CHECK(count == 10);
    CHECK(per_level.size() == 64 * 3);
    for (const auto& o : zs_objects) CHECK(seen_objects.count(o) == 0);
}

TEST_CASE("abstraction split holds out one value per attribute") {
    GenConfig cfg;
    cfg.seed = 4;
    cfg.heldout_values = {2, 1, 3};
    const auto ds = build_zeroshot_abstraction_split(cfg);
    CHECK_FALSE(ds.zeroshot_abstractions.empty());
    for (const auto& s : ds.zeroshot_abstractions) {
        CHECK(is_heldout_abstraction(s.sender_object, s.relevance, cfg.heldout_values));
    }
    for (const auto* split : {&ds.train, &ds.validation}) {
        for (const auto& s : *split) {
            CHECK_FALSE(is_heldout_abstraction(s.sender_object, s.relevance, cfg.heldout_values));
        }
    }
    CHECK(ds.zeroshot_objects.empty());
    CHECK(ds.total_samples() == 64 * 3 * 10);
}

TEST_CASE("held-out abstraction rule") {
    // Attribute 1 is irrelevant and carries its held-out value 1.
    CHECK(is_heldout_abstraction(ObjectVector{{3, 1, 2}}, RelevanceVector{{1, 0, 1}}, {2, 1, 3}));
    // Same value but relevant: not an abstraction over it.
    CHECK_FALSE(is_heldout_abstraction(ObjectVector{{3, 1, 2}}, RelevanceVector{{1, 1, 1}}, {2, 1, 3}));
    CHECK_FALSE(is_heldout_abstraction(ObjectVector{{3, 2, 2}}, RelevanceVector{{1, 0, 1}}, {2, 1, 3}));
}

TEST_CASE("regeneration under a fixed seed is byte-identical") {
    GenConfig cfg;
    cfg.seed = 123;
    cfg.distractor_mode = DistractorMode::Balanced;
    CHECK(serialize_dataset(generate_dataset(cfg)) == serialize_dataset(generate_dataset(cfg)));
    cfg.seed = 124;
    GenConfig other = cfg;
    other.seed = 123;
    CHECK(serialize_dataset(generate_dataset(cfg)) != serialize_dataset(generate_dataset(other)));
}

TEST_CASE("dataset file round trip and parse errors") {
    GenConfig cfg;
    cfg.n = 2;
    cfg.k = 3;
    cfg.seed = 2;
    const auto ds = build_zeroshot_abstraction_split(cfg);
    const auto text = serialize_dataset(ds);
    CHECK(parse_dataset(text) == ds);

    CHECK_THROWS_AS(parse_dataset(""), DatasetParseError);
    std::string bad_version = text;
    bad_version.replace(bad_version.find("v1"), 2, "v9");
    CHECK_THROWS_WITH_AS(parse_dataset(bad_version), doctest::Contains("version"), DatasetParseError);

    const auto cut = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    CHECK_THROWS_AS(parse_dataset(cut), DatasetParseError);

    std::string bad_row = text;
    const auto second_line = bad_row.find('\n') + 1;
    bad_row.insert(second_line, "train\t1,9\t1,1\t1,1\t2,2\n");
    try {
        parse_dataset(bad_row);
        FAIL("expected a parse error");
    } catch (const DatasetParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("generator config validation") {
    GenConfig cfg;
    cfg.k = 1;
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
    cfg = {};
    cfg.zero_shot_object_fraction = 1.5;
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
    CHECK_THROWS_AS(parse_distractor_mode("sideways"), std::invalid_argument);
    CHECK(parse_split("zeroshot_objects") == Split::ZeroShotObjects);
}
