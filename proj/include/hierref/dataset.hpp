#pragma once

// Game dataset generation for D(n, k).
//
// Every object of D(n, k) receives `samples_per_object_per_level` samples for
// each abstraction level 1..n. A sample pins the sender input, the target the
// receiver must find and the distractors shown next to it, so a dataset file
// fully determines what the agents see.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierref/concept.hpp"
#include "hierref/random.hpp"

namespace hierref {

enum class DistractorMode { Unbalanced, Balanced };
enum class ZeroShotMode { Objects, Abstractions };
enum class Split { Train, Validation, ZeroShotObjects, ZeroShotAbstractions };

std::string to_string(DistractorMode mode);
std::string to_string(ZeroShotMode mode);
std::string to_string(Split split);
DistractorMode parse_distractor_mode(std::string_view s);
ZeroShotMode parse_zero_shot_mode(std::string_view s);
Split parse_split(std::string_view s);

struct GenConfig {
    int n = 3;
    int k = 4;
    int samples_per_object_per_level = 10;
    int distractors_per_sample = 10;
    DistractorMode distractor_mode = DistractorMode::Unbalanced;
    double zero_shot_object_fraction = 0.20;
    double train_fraction_of_rest = 0.75;
    std::uint64_t seed = 0;
    /// Redraw cap per distractor for balanced sampling.
    int balanced_retry_cap = 100;
    /// Held-out value per attribute for the abstraction split; drawn from the
    /// seed when empty.
    std::vector<int> heldout_values;

    void validate() const;
};

struct GameSample {
    ObjectVector sender_object;
    RelevanceVector relevance;
    ObjectVector target;
    std::vector<ObjectVector> distractors;

    Concept to_concept() const { return {sender_object, relevance}; }

    bool operator==(const GameSample&) const = default;
};

struct DatasetSplits {
    int n = 0;
    int k = 0;
    std::uint64_t seed = 0;
    DistractorMode distractor_mode = DistractorMode::Unbalanced;
    std::vector<GameSample> train;
    std::vector<GameSample> validation;
    std::vector<GameSample> zeroshot_objects;
    std::vector<GameSample> zeroshot_abstractions;
    std::vector<int> heldout_values;

    const std::vector<GameSample>& split(Split s) const;
    std::vector<GameSample>& split(Split s);
    std::size_t total_samples() const;

    bool operator==(const DatasetSplits&) const = default;
};

class DatasetParseError : public std::runtime_error {
public:
    DatasetParseError(std::size_t line, const std::string& what)
        : std::runtime_error("dataset line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// All k^n objects in lexicographic order.
std::vector<ObjectVector> enumerate_objects(int n, int k);

/// All relevance vectors with exactly `level` relevant flags, lexicographic.
std::vector<RelevanceVector> relevance_vectors_at_level(int n, int level);

/// Uniform pattern among those with exactly `level` relevant attributes.
RelevanceVector sample_relevance_at_level(int n, int level, Rng& rng);

/// Level uniform in 1..n, then a uniform pattern at that level.
RelevanceVector sample_relevance_uniform_by_level(int n, Rng& rng);

ObjectVector sample_target(const ObjectVector& o, const RelevanceVector& r, int k, Rng& rng);

/// Instances of concepts one level more abstract than (o, r) that fall
/// outside (o, r).
std::vector<ObjectVector> sample_distractors_unbalanced(const ObjectVector& o,
                                                        const RelevanceVector& r, int k,
                                                        int count, Rng& rng);

/// Instances of concepts (o, r') with r' drawn uniformly by level, rejecting
/// r' == r and instances of (o, r). Throws std::runtime_error when the redraw
/// cap is exhausted.
std::vector<ObjectVector> sample_distractors_balanced(const ObjectVector& o,
                                                      const RelevanceVector& r, int k,
                                                      int count, Rng& rng, int retry_cap = 100);

/// Object-level zero-shot split: train, validation and zeroshot_objects.
DatasetSplits generate_dataset(const GenConfig& cfg);

/// Abstraction zero-shot split: train, validation and zeroshot_abstractions.
DatasetSplits build_zeroshot_abstraction_split(const GenConfig& cfg);

DatasetSplits generate(const GenConfig& cfg, ZeroShotMode mode);

/// True iff the abstraction hold-out rule sends (o, r) to the zero-shot split.
bool is_heldout_abstraction(const ObjectVector& o, const RelevanceVector& r,
                            const std::vector<int>& heldout_values);

void save_dataset(const DatasetSplits& splits, const std::filesystem::path& path);
std::string serialize_dataset(const DatasetSplits& splits);
DatasetSplits load_dataset(const std::filesystem::path& path);
DatasetSplits parse_dataset(const std::string& contents);

}  // namespace hierref
