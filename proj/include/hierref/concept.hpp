#pragma once

// Objects, relevance vectors and concepts of the hierarchical reference game.
//
// An object assigns each of n attributes a value in [1, k]. A relevance
// vector flags which attributes matter in the current context. Together they
// form a concept whose extension is every object that agrees with the object
// on the relevant attributes.

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hierref {

struct ObjectVector {
    std::vector<int> values;

    int size() const { return static_cast<int>(values.size()); }
    int operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    int& operator[](int i) { return values[static_cast<std::size_t>(i)]; }

    /// Throws std::invalid_argument unless every value lies in [1, k].
    void validate(int n, int k) const;

    auto operator<=>(const ObjectVector&) const = default;
};

struct RelevanceVector {
    std::vector<std::uint8_t> flags;

    int size() const { return static_cast<int>(flags.size()); }
    bool relevant(int i) const { return flags[static_cast<std::size_t>(i)] != 0; }

    /// Level 0 (no relevant attribute) is rejected.
    void validate(int n) const;

    auto operator<=>(const RelevanceVector&) const = default;
};

struct Concept {
    ObjectVector object;
    RelevanceVector relevance;

    auto operator<=>(const Concept&) const = default;
};

/// Canonical identity of a concept: irrelevant positions are masked.
struct ConceptKey {
    static constexpr int kIrrelevant = 0;

    std::vector<int> masked;

    int size() const { return static_cast<int>(masked.size()); }
    int operator[](int i) const { return masked[static_cast<std::size_t>(i)]; }
    bool relevant(int i) const { return (*this)[i] != kIrrelevant; }
    int level() const;

    /// "4,_,_" style rendering used in corpus files.
    std::string to_string() const;
    static ConceptKey parse(std::string_view text);

    auto operator<=>(const ConceptKey&) const = default;
};

/// Number of relevant attributes. Larger means more concrete.
int abstraction_level(const RelevanceVector& r);

/// True iff o matches c.object at every relevant position.
bool instantiates(const ObjectVector& o, const Concept& c);

ConceptKey concept_key(const Concept& c);

/// Concept whose irrelevant positions are filled with value 1.
Concept concept_from_key(const ConceptKey& key);

/// One block of k+1 bits per attribute; the last bit of a block marks an
/// irrelevant attribute and replaces the value bit.
std::vector<std::uint8_t> encode_for_metrics(const Concept& c, int k);
std::vector<std::uint8_t> encode_for_metrics(const ConceptKey& key, int k);
ConceptKey decode_metric_encoding(std::span<const std::uint8_t> bits, int n, int k);

/// Per-attribute encoded value in [0, k]: value-1 when relevant, k otherwise.
std::vector<int> encoded_attributes(const ConceptKey& key, int k);

/// n-hot object encoding of length n*k, 0-based blocks.
std::vector<std::uint8_t> object_to_nhot(const ObjectVector& o, int k);

std::string format_values(std::span<const int> values);
std::string format_flags(std::span<const std::uint8_t> flags);
ObjectVector parse_object(std::string_view text);
RelevanceVector parse_relevance(std::string_view text);

}  // namespace hierref
