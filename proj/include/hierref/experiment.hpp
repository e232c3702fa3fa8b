#pragma once

// Experiment orchestration: configuration, per-seed runs and their artifacts,
// aggregation across seeds, the cross-sampling ablation and qualitative
// corpus inspection.
//
// A run directory <out>/<zero-shot-mode>/seed-<s>/ holds:
//   config.txt, dataset.txt, history.csv, model.ckpt(.manifest),
//   corpus-<split>.txt, accuracy.csv, metrics.{txt,json},
//   metrics_per_level.csv, symbol_occurrence.csv, manifest.txt
// A run that fails leaves a FAILED file naming the stage.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierref/agents.hpp"
#include "hierref/dataset.hpp"
#include "hierref/game.hpp"
#include "hierref/metrics.hpp"

namespace hierref {

struct ExperimentConfig {
    int n = 3;
    int k = 4;
    int vocab_factor = 3;
    DistractorMode distractor_mode = DistractorMode::Unbalanced;
    std::vector<ZeroShotMode> zero_shot_modes{ZeroShotMode::Objects, ZeroShotMode::Abstractions};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    int epochs = 300;
    int batch_size = 32;
    double learning_rate = 5e-4;
    int embed_dim = 128;
    int hidden_dim = 256;
    int max_len = 0;
    double temperature_initial = 1.5;
    double temperature_decay = 0.99;

    int samples_per_level = 10;
    int distractors = 10;
    double zero_shot_fraction = 0.20;
    double train_fraction = 0.75;

    Split metrics_split = Split::Validation;
    std::size_t topsim_max_pairs = 500'000;
    std::uint64_t bootstrap_seed = 0;
    std::filesystem::path out = "runs";

    /// Sets one field from its config-file key; throws std::invalid_argument
    /// for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);
    void validate() const;
    /// Canonical key=value rendering; parse_config(to_text()) round-trips.
    std::string to_text() const;

    GenConfig gen_config(std::uint64_t seed) const;
    GameConfig game_config(std::uint64_t seed) const;
};

/// key=value lines; '#' starts a comment.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Named condition grids: "desk", "table1", "vocab-factors".
/// Each condition writes below base.out/<condition_name>.
std::vector<ExperimentConfig> preset(const std::string& name, const ExperimentConfig& base);
std::string condition_name(const ExperimentConfig& cfg);

class ExperimentError : public std::runtime_error {
public:
    ExperimentError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

class OutputExistsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunArtifacts {
    std::filesystem::path dir;
    ZeroShotMode zero_shot_mode = ZeroShotMode::Objects;
    std::uint64_t seed = 0;
    int n = 0;
    int k = 0;
    int vocab_factor = 0;
    DistractorMode distractor_mode = DistractorMode::Unbalanced;
    std::map<Split, EvalResult> accuracy;
    std::vector<EpochStats> history;
    /// Empty when the metrics split had no samples in this run.
    std::optional<MetricsReport> metrics;
};

std::filesystem::path run_directory(const ExperimentConfig& cfg, ZeroShotMode mode,
                                    std::uint64_t seed);

/// Generate, train, evaluate every non-empty split, dump corpora, compute
/// metrics on cfg.metrics_split and persist. Throws ExperimentError tagged
/// with the failing stage.
RunArtifacts run_experiment(const ExperimentConfig& cfg, ZeroShotMode mode, std::uint64_t seed,
                            bool force = false, const EpochCallback& on_epoch = {});

/// Reads a completed run directory back.
RunArtifacts load_run(const std::filesystem::path& dir);
/// Every completed run below an experiment output directory, sorted by
/// (zero-shot mode, seed).
std::vector<RunArtifacts> load_runs(const std::filesystem::path& out);

struct Estimate {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t count = 0;
};

/// Mean with a seeded percentile bootstrap interval. Non-finite values
/// (undefined scores) are dropped; `count` reports the values kept.
Estimate bootstrap_ci(std::vector<double> values, std::uint64_t seed, int resamples = 1000,
                      double level = 0.95);

bool any_finite(const std::vector<double>& values);

struct AggregateRow {
    std::string zero_shot_mode;
    std::string scope;  // "accuracy", "metric" or "level"
    int level = 0;
    std::string metric;
    Estimate estimate;

    bool operator<(const AggregateRow& o) const;
};

/// Independent of the order of `runs`.
std::vector<AggregateRow> aggregate(const std::vector<RunArtifacts>& runs, std::uint64_t seed);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

struct SweepOptions {
    bool force = false;
    /// 0 means HIERREF_THREADS or the hardware concurrency.
    unsigned threads = 0;
    bool verbose = false;
};

unsigned job_threads(unsigned requested);

/// All (zero-shot mode, seed) jobs of one condition in parallel, then
/// <out>/aggregate.csv.
std::vector<RunArtifacts> run_sweep(const ExperimentConfig& cfg, const SweepOptions& options = {});

struct AblationCell {
    std::uint64_t seed = 0;
    DistractorMode trained_on = DistractorMode::Unbalanced;
    DistractorMode evaluated_on = DistractorMode::Unbalanced;
    double accuracy = 0.0;
};

/// Each trained pair scored on both validation sets. Throws
/// std::invalid_argument when the runs differ in n, k or vocab factor.
std::vector<AblationCell> cross_sampling_ablation(const std::filesystem::path& unbalanced_run,
                                                  const std::filesystem::path& balanced_run);
std::string ablation_csv(const std::vector<AblationCell>& cells);

/// Instances of one concept grouped by identical message; `count` records
/// drawn without replacement under `seed`. Throws std::invalid_argument
/// listing the available keys when the concept is absent.
std::string qualitative_by_concept(const Corpus& corpus, const ConceptKey& key, std::size_t count,
                                   std::uint64_t seed);
/// One row per distinct relevance vector used with `object`.
std::string qualitative_by_object(const Corpus& corpus, const ObjectVector& object);

std::string history_csv(const std::vector<EpochStats>& history);
std::vector<EpochStats> parse_history_csv(const std::string& text);

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace hierref
