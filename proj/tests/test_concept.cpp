#include <doctest.h>

#include <numeric>

#include "hierref/concept.hpp"
#include "oracles.hpp"

using namespace hierref;

TEST_CASE("concept key renders irrelevant attributes as underscores") {
    const Concept c{ObjectVector{{4, 2, 3}}, RelevanceVector{{1, 0, 0}}};
    const auto key = concept_key(c);
    CHECK(key.to_string() == "4,_,_");
    CHECK(key.level() == 1);
    CHECK(ConceptKey::parse("4,_,_") == key);
    CHECK(ConceptKey::parse(" 4 , _ ,_ ") == key);
    CHECK_THROWS_AS(ConceptKey::parse("4,x,_"), std::invalid_argument);
    CHECK_THROWS_AS(ConceptKey::parse("0,1,_"), std::invalid_argument);
}

TEST_CASE("concepts that differ only on irrelevant values share a key") {
    const Concept a{ObjectVector{{1, 2, 3}}, RelevanceVector{{1, 1, 0}}};
    const Concept b{ObjectVector{{1, 2, 4}}, RelevanceVector{{1, 1, 0}}};
    CHECK(concept_key(a) == concept_key(b));
    CHECK(concept_key(concept_from_key(concept_key(a))) == concept_key(a));
}

TEST_CASE("instantiation checks only relevant attributes") {
    const Concept c{ObjectVector{{1, 2, 3}}, RelevanceVector{{1, 0, 1}}};
    CHECK(instantiates(ObjectVector{{1, 4, 3}}, c));
    CHECK_FALSE(instantiates(ObjectVector{{2, 2, 3}}, c));
    CHECK_THROWS_AS(instantiates(ObjectVector{{1, 2}}, c), std::invalid_argument);
}

TEST_CASE("abstraction level counts relevant attributes") {
    CHECK(abstraction_level(RelevanceVector{{1, 0, 1, 1}}) == 3);
    CHECK(abstraction_level(RelevanceVector{{0, 1, 0}}) == 1);
}

TEST_CASE("validation rejects out-of-range values and level 0") {
    CHECK_NOTHROW((ObjectVector{{1, 4}}.validate(2, 4)));
    CHECK_THROWS_AS((ObjectVector{{0, 1}}.validate(2, 4)), std::invalid_argument);
    CHECK_THROWS_AS((ObjectVector{{5, 1}}.validate(2, 4)), std::invalid_argument);
    CHECK_THROWS_AS((ObjectVector{{1, 1, 1}}.validate(2, 4)), std::invalid_argument);
    CHECK_THROWS_AS((RelevanceVector{{0, 0}}.validate(2)), std::invalid_argument);
    CHECK_THROWS_AS((encode_for_metrics(ConceptKey{{0, 0, 0}}, 4)), std::invalid_argument);
}

TEST_CASE("metric encoding has n ones and round-trips for every key of D(3,4)") {
    const auto keys = oracle::all_keys(3, 4);
    CHECK(keys.size() == 124);  // 5^3 - 1
    for (const auto& key : keys) {
        const auto bits = encode_for_metrics(key, 4);
        REQUIRE(bits.size() == 15);
        CHECK(std::accumulate(bits.begin(), bits.end(), 0) == 3);
        CHECK(decode_metric_encoding(bits, 3, 4) == key);
    }
}

TEST_CASE("metric encoding layout") {
    // Blocks of k+1 bits; the last bit of a block marks irrelevance.
    const auto bits = encode_for_metrics(ConceptKey{{2, 0}}, 3);
    const std::vector<std::uint8_t> expected{0, 1, 0, 0, 0, 0, 0, 1};
    CHECK(bits == expected);
    CHECK(encoded_attributes(ConceptKey{{2, 0}}, 3) == std::vector<int>{1, 3});
}

TEST_CASE("n-hot object encoding") {
    const auto v = object_to_nhot(ObjectVector{{1, 3}}, 3);
    CHECK(v == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 1});
}

TEST_CASE("object and relevance text parsing") {
    CHECK(parse_object("1,2,3").values == std::vector<int>{1, 2, 3});
    CHECK(parse_relevance("1,0,1").flags == std::vector<std::uint8_t>{1, 0, 1});
    CHECK_THROWS(parse_relevance("1,2"));
    CHECK(format_values(std::vector<int>{3, 1}) == "3,1");
}
