#pragma once

// A corpus pairs each communicated concept with the hard message the sender
// produced for it. All language analyses run over a corpus.
//
// File format:
//   hierref-corpus v1 n=<n> k=<k> vocab=<V> max_len=<L>
//   <concept_key>\t<symbols comma-separated>[\t<sender object>]
// Messages are stored without the terminating EOS symbol.

#include <filesystem>
#include <string>
#include <vector>

#include "hierref/concept.hpp"

namespace hierref {

struct CorpusRecord {
    Concept input;
    ConceptKey key;
    std::vector<int> message;

    int level() const { return key.level(); }

    bool operator==(const CorpusRecord&) const = default;
};

struct Corpus {
    int n = 0;
    int k = 0;
    int vocab_size = 0;
    int max_len = 0;
    std::vector<CorpusRecord> records;

    /// Throws std::invalid_argument on an empty corpus or inconsistent records.
    void validate() const;
    std::size_t size() const { return records.size(); }

    bool operator==(const Corpus&) const = default;
};

CorpusRecord make_record(const Concept& c, std::vector<int> message);

std::string serialize_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& contents);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace hierref
