#include "hierref/concept.hpp"

#include <algorithm>
#include <stdexcept>

#include "hierref/text.hpp"

namespace hierref {

void ObjectVector::validate(int n, int k) const {
    if (size() != n) {
        throw std::invalid_argument("object has " + std::to_string(size()) +
                                    " attributes, expected " + std::to_string(n));
    }
    for (int v : values) {
        if (v < 1 || v > k) {
            throw std::invalid_argument("attribute value " + std::to_string(v) +
                                        " outside [1, " + std::to_string(k) + "]");
        }
    }
}

void RelevanceVector::validate(int n) const {
    if (size() != n) {
        throw std::invalid_argument("relevance vector has " + std::to_string(size()) +
                                    " flags, expected " + std::to_string(n));
    }
    for (auto f : flags) {
        if (f > 1) throw std::invalid_argument("relevance flags must be 0 or 1");
    }
    if (abstraction_level(*this) == 0) {
        throw std::invalid_argument("relevance vector without any relevant attribute");
    }
}

int ConceptKey::level() const {
    return static_cast<int>(std::count_if(masked.begin(), masked.end(),
                                          [](int v) { return v != kIrrelevant; }));
}

std::string ConceptKey::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < masked.size(); ++i) {
        if (i) out += ',';
        out += masked[i] == kIrrelevant ? std::string("_") : std::to_string(masked[i]);
    }
    return out;
}

ConceptKey ConceptKey::parse(std::string_view text_in) {
    ConceptKey key;
    for (auto part : text::split(text::trim(text_in), ',')) {
        part = text::trim(part);
        if (part == "_") {
            key.masked.push_back(kIrrelevant);
        } else {
            const int v = text::parse_int<int>(part);
            if (v < 1) throw std::invalid_argument("concept key value must be >= 1");
            key.masked.push_back(v);
        }
    }
    return key;
}

int abstraction_level(const RelevanceVector& r) {
    return static_cast<int>(std::count_if(r.flags.begin(), r.flags.end(),
                                          [](std::uint8_t f) { return f != 0; }));
}

bool instantiates(const ObjectVector& o, const Concept& c) {
    if (o.size() != c.object.size() || o.size() != c.relevance.size()) {
        throw std::invalid_argument("instantiates: dimension mismatch");
    }
    for (int i = 0; i < o.size(); ++i) {
        if (c.relevance.relevant(i) && o[i] != c.object[i]) return false;
    }
    return true;
}

ConceptKey concept_key(const Concept& c) {
    ConceptKey key;
    key.masked.resize(c.object.values.size());
    for (int i = 0; i < c.object.size(); ++i) {
        key.masked[static_cast<std::size_t>(i)] =
            c.relevance.relevant(i) ? c.object[i] : ConceptKey::kIrrelevant;
    }
    return key;
}

Concept concept_from_key(const ConceptKey& key) {
    Concept c;
    for (int v : key.masked) {
        c.object.values.push_back(v == ConceptKey::kIrrelevant ? 1 : v);
        c.relevance.flags.push_back(v == ConceptKey::kIrrelevant ? 0 : 1);
    }
    return c;
}

std::vector<std::uint8_t> encode_for_metrics(const ConceptKey& key, int k) {
    if (key.level() == 0) {
        throw std::invalid_argument("encode_for_metrics: concept has no relevant attribute");
    }
    const auto block = static_cast<std::size_t>(k + 1);
    std::vector<std::uint8_t> bits(key.masked.size() * block, 0);
    for (std::size_t a = 0; a < key.masked.size(); ++a) {
        const int v = key.masked[a];
        if (v != ConceptKey::kIrrelevant && v > k) {
            throw std::invalid_argument("encode_for_metrics: value exceeds k");
        }
        const auto offset = v == ConceptKey::kIrrelevant ? static_cast<std::size_t>(k)
                                                         : static_cast<std::size_t>(v - 1);
        bits[a * block + offset] = 1;
    }
    return bits;
}

std::vector<std::uint8_t> encode_for_metrics(const Concept& c, int k) {
    return encode_for_metrics(concept_key(c), k);
}

ConceptKey decode_metric_encoding(std::span<const std::uint8_t> bits, int n, int k) {
    const auto block = static_cast<std::size_t>(k + 1);
    if (bits.size() != static_cast<std::size_t>(n) * block) {
        throw std::invalid_argument("metric encoding has wrong length");
    }
    ConceptKey key;
    for (int a = 0; a < n; ++a) {
        const auto first = bits.begin() + static_cast<std::ptrdiff_t>(a * block);
        const auto hot = std::find(first, first + static_cast<std::ptrdiff_t>(block), 1);
        if (std::count(first, first + static_cast<std::ptrdiff_t>(block), 1) != 1) {
            throw std::invalid_argument("metric encoding block is not one-hot");
        }
        const int offset = static_cast<int>(hot - first);
        key.masked.push_back(offset == k ? ConceptKey::kIrrelevant : offset + 1);
    }
    return key;
}

std::vector<int> encoded_attributes(const ConceptKey& key, int k) {
    std::vector<int> out;
    out.reserve(key.masked.size());
    for (int v : key.masked) out.push_back(v == ConceptKey::kIrrelevant ? k : v - 1);
    return out;
}

std::vector<std::uint8_t> object_to_nhot(const ObjectVector& o, int k) {
    std::vector<std::uint8_t> bits(o.values.size() * static_cast<std::size_t>(k), 0);
    for (std::size_t a = 0; a < o.values.size(); ++a) {
        const int v = o.values[a];
        if (v < 1 || v > k) throw std::invalid_argument("object_to_nhot: value outside [1, k]");
        bits[a * static_cast<std::size_t>(k) + static_cast<std::size_t>(v - 1)] = 1;
    }
    return bits;
}

std::string format_values(std::span<const int> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

std::string format_flags(std::span<const std::uint8_t> flags) {
    std::string out;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (i) out += ',';
        out += flags[i] ? '1' : '0';
    }
    return out;
}

ObjectVector parse_object(std::string_view s) {
    return ObjectVector{text::parse_int_list(s)};
}

RelevanceVector parse_relevance(std::string_view s) {
    RelevanceVector r;
    for (int v : text::parse_int_list(s)) {
        if (v != 0 && v != 1) throw std::invalid_argument("relevance flag must be 0 or 1");
        r.flags.push_back(static_cast<std::uint8_t>(v));
    }
    return r;
}

}  // namespace hierref
