#pragma once

// Training, evaluation and corpus extraction for sender/receiver pairs.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hierref/checkpoint.hpp"
#include "hierref/corpus.hpp"
#include "hierref/dataset.hpp"
#include "hierref/game.hpp"

namespace hierref {

using Model = Agents<float>;

struct Message {
    Mode mode = Mode::Eval;
    /// One column per step (vocab x L): Gumbel-softmax samples in TRAIN,
    /// one-hot argmax symbols in EVAL.
    nn::Matrix<float> distributions;
    /// EVAL only: symbols before the first EOS.
    std::vector<int> symbols;
};

Message sender_forward(Model& model, const ObjectVector& object, const RelevanceVector& relevance,
                       double tau, Rng& rng, Mode mode);

/// Receiver selection probabilities over `candidates`.
nn::Vector<float> receiver_forward(Model& model, const Message& message,
                                   std::span<const ObjectVector> candidates);
nn::Vector<float> receiver_forward(Model& model, const std::vector<int>& symbols,
                                   std::span<const ObjectVector> candidates);

struct RoundResult {
    double loss = 0.0;
    int selected_index = 0;
    int target_index = 0;
    bool correct() const { return selected_index == target_index; }
};

/// One round with the target placed uniformly among the distractors.
RoundResult play_round(Model& model, const GameSample& sample, double tau, Rng& rng, Mode mode);

struct EpochStats {
    int epoch = 0;
    double temperature = 0.0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> history;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Joint sender/receiver training on dataset.train; validation is scored in
/// EVAL mode after every epoch. Deterministic given cfg.seed.
TrainResult train(const DatasetSplits& dataset, const GameConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

/// EVAL-mode accuracy with uniform tie-breaking credit; throws on an empty split.
EvalResult evaluate_split(Model& model, std::span<const GameSample> samples);
double evaluate(Model& model, std::span<const GameSample> samples);

Corpus dump_corpus(Model& model, std::span<const GameSample> samples);

std::vector<NamedTensor> export_parameters(Model& model);
void import_parameters(Model& model, const std::vector<NamedTensor>& tensors);

Manifest model_manifest(const Model& model, int epoch);
GameConfig config_from_manifest(const Manifest& manifest);

void save_model(Model& model, const std::filesystem::path& path, int epoch);
Model load_model(const std::filesystem::path& path);

}  // namespace hierref
