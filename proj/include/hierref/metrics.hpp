#pragma once

// Language analyses over a corpus of (concept, message) records.
//
// Entropies are in bits. Messages are taken as stored in the corpus, i.e.
// truncated before the first EOS; positional analyses pad them with EOS up to
// the corpus max_len.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierref/corpus.hpp"

namespace hierref {

class DegenerateCorpusError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Shannon entropy of a probability vector, 0 log 0 = 0.
double entropy(std::span<const double> probs);
/// Entropy of the empirical distribution given by non-negative counts.
double entropy_from_counts(std::span<const std::uint64_t> counts);

/// Empirical information quantities of two paired label sequences.
struct JointEntropies {
    double h_x = 0.0;
    double h_y = 0.0;
    double h_x_given_y = 0.0;
    double h_y_given_x = 0.0;
    double mutual_information() const { return std::max(0.0, h_x - h_x_given_y); }
};

JointEntropies joint_entropies(std::span<const int> x, std::span<const int> y);
double conditional_entropy(std::span<const int> x, std::span<const int> given);
double mutual_information(std::span<const int> x, std::span<const int> y);

struct EntropyScores {
    double h_concepts = 0.0;
    double h_messages = 0.0;
    double h_messages_given_concepts = 0.0;
    double h_concepts_given_messages = 0.0;
    double mutual_information = 0.0;
    double effectiveness = 0.0;
    double consistency = 0.0;
    double nmi = 0.0;
};

/// Scores over the empirical joint of concept keys and full messages.
EntropyScores entropy_scores(std::span<const CorpusRecord> records);
double effectiveness(const Corpus& corpus);
double consistency(const Corpus& corpus);
double nmi(const Corpus& corpus);

struct RedundancyResult {
    double overall = 0.0;
    std::map<int, double> per_level;
    /// Preferred symbol per (attribute, value), indexed [a][v-1]; 0 when the
    /// pair never occurs as a relevant value.
    std::vector<std::vector<int>> preferred_symbol;
    /// (attribute, value) pairs that never occur as relevant values.
    std::vector<std::pair<int, int>> skipped;
};

RedundancyResult symbol_redundancy(const Corpus& corpus);

struct TopsimOptions {
    std::size_t max_pairs = 500'000;
    std::uint64_t seed = 0;
};

int edit_distance(std::span<const int> a, std::span<const int> b);
/// Spearman correlation with average ranks for ties. Throws
/// DegenerateCorpusError when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);
double topographic_similarity(const Corpus& corpus, const TopsimOptions& options = {});

double posdis(const Corpus& corpus);
double bosdis(const Corpus& corpus);

struct LengthStats {
    double overall = 0.0;
    std::map<int, double> per_level;
};

LengthStats message_length_stats(const Corpus& corpus);

struct SymbolOccurrenceTable {
    std::vector<int> levels;
    /// Content symbols ranked by mean occurrence at the lowest level present.
    std::vector<int> ranked_symbols;
    /// mean[rank][level index]: occurrences per message.
    std::vector<std::vector<double>> mean;
};

SymbolOccurrenceTable symbol_occurrence_by_level(const Corpus& corpus);

struct LevelMetrics {
    std::size_t records = 0;
    double effectiveness = 0.0;
    double consistency = 0.0;
    double nmi = 0.0;
    double mean_message_length = 0.0;
    double symbol_redundancy = 0.0;
};

struct MetricsReport {
    std::size_t records = 0;
    EntropyScores entropy;
    double topsim = 0.0;
    double posdis = 0.0;
    double bosdis = 0.0;
    double symbol_redundancy = 0.0;
    double mean_message_length = 0.0;
    std::map<int, LevelMetrics> per_level;
    SymbolOccurrenceTable symbol_occurrence;
    std::vector<std::pair<int, int>> skipped_redundancy_pairs;
    /// Scores that are undefined for this corpus and stored as NaN, e.g.
    /// "topsim" or "level.3.nmi".
    std::vector<std::string> undefined;
};

/// Scores that are undefined on a degenerate language (a single message or
/// concept) are recorded as NaN and listed in `undefined` rather than thrown.
MetricsReport compute_metrics(const Corpus& corpus, const TopsimOptions& topsim = {});

/// Flat "key=value" lines, per-level entries as level.<l>.<metric>.
std::string metrics_to_text(const MetricsReport& report);
std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& json);
/// Columns level,metric,value.
std::string per_level_csv(const MetricsReport& report);
/// Columns rank,symbol,level,mean_occurrence.
std::string symbol_occurrence_csv(const SymbolOccurrenceTable& table, std::size_t top = 0);

}  // namespace hierref
