#include "hierref/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hierref/text.hpp"

namespace hierref {

namespace {

constexpr std::size_t kEvalBatch = 256;
// Sub-stream ids for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

std::vector<const GameSample*> pointers(std::span<const GameSample> samples) {
    std::vector<const GameSample*> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(&s);
    return out;
}

template <typename Fn>
void for_each_batch(std::span<const GameSample* const> items, std::size_t batch_size, Fn&& fn) {
    for (std::size_t start = 0; start < items.size(); start += batch_size) {
        const auto len = std::min(batch_size, items.size() - start);
        fn(items.subspan(start, len));
    }
}

nn::Matrix<float> one_hot_column(int vocab, int symbol) {
    nn::Matrix<float> m = nn::Matrix<float>::Zero(vocab, 1);
    m(symbol, 0) = 1.0f;
    return m;
}

GameBatch<float> candidate_batch(const Model& model, std::span<const ObjectVector> candidates) {
    if (candidates.empty()) throw std::invalid_argument("receiver_forward: no candidates");
    const auto& cfg = model.config;
    GameBatch<float> batch;
    batch.num_candidates = static_cast<int>(candidates.size());
    batch.objects = nn::Matrix<float>::Zero(cfg.n * cfg.k, 1);
    batch.relevance = nn::Matrix<float>::Zero(cfg.n, 1);
    batch.candidates.resize(cfg.n * cfg.k, static_cast<nn::Index>(candidates.size()));
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        candidates[c].validate(cfg.n, cfg.k);
        write_nhot(batch.candidates, static_cast<nn::Index>(c), candidates[c], cfg.k);
    }
    batch.targets = {0};
    return batch;
}

}  // namespace

Message sender_forward(Model& model, const ObjectVector& object, const RelevanceVector& relevance,
                       double tau, Rng& rng, Mode mode) {
    const auto& cfg = model.config;
    object.validate(cfg.n, cfg.k);
    relevance.validate(cfg.n);
    nn::Matrix<float> objects(cfg.n * cfg.k, 1);
    write_nhot(objects, 0, object, cfg.k);
    nn::Matrix<float> rel(cfg.n, 1);
    for (int a = 0; a < cfg.n; ++a) rel(a, 0) = relevance.relevant(a) ? 1.0f : 0.0f;

    Game<float> game(model);
    std::vector<nn::Matrix<float>> noise;
    if (mode == Mode::Train) noise = game.sample_noise(1, rng);
    game.run_sender(objects, rel, mode, static_cast<float>(tau), mode == Mode::Train ? &noise : nullptr);

    Message msg;
    msg.mode = mode;
    const auto& steps = game.symbols();
    msg.distributions.resize(cfg.vocab_size(), static_cast<nn::Index>(steps.size()));
    for (std::size_t t = 0; t < steps.size(); ++t) {
        msg.distributions.col(static_cast<nn::Index>(t)) = steps[t].col(0);
    }
    if (mode == Mode::Eval) msg.symbols = game.hard_messages().front();
    return msg;
}

nn::Vector<float> receiver_forward(Model& model, const Message& message,
                                   std::span<const ObjectVector> candidates) {
    auto batch = candidate_batch(model, candidates);
    std::vector<nn::Matrix<float>> steps;
    for (nn::Index t = 0; t < message.distributions.cols(); ++t) {
        steps.emplace_back(message.distributions.col(t));
    }
    Game<float> game(model);
    game.run_receiver(steps, batch);
    return game.probabilities(0);
}

nn::Vector<float> receiver_forward(Model& model, const std::vector<int>& symbols,
                                   std::span<const ObjectVector> candidates) {
    const int V = model.config.vocab_size();
    const int L = model.config.message_length();
    if (static_cast<int>(symbols.size()) > L) throw std::invalid_argument("message longer than max_len");
    Message msg;
    msg.distributions = nn::Matrix<float>::Zero(V, L);
    for (int t = 0; t < L; ++t) {
        const int s = t < static_cast<int>(symbols.size()) ? symbols[static_cast<std::size_t>(t)] : kEos;
        if (s < 0 || s >= V) throw std::invalid_argument("symbol outside vocabulary");
        msg.distributions.col(t) = one_hot_column(V, s);
    }
    return receiver_forward(model, msg, candidates);
}

RoundResult play_round(Model& model, const GameSample& sample, double tau, Rng& rng, Mode mode) {
    const GameSample* ptr = &sample;
    auto batch = make_batch<float>(std::span<const GameSample* const>(&ptr, 1), model.config.n,
                                   model.config.k, &rng);
    Game<float> game(model);
    std::vector<nn::Matrix<float>> noise;
    if (mode == Mode::Train) noise = game.sample_noise(1, rng);
    RoundResult out;
    out.loss = game.forward(batch, mode, static_cast<float>(tau), mode == Mode::Train ? &noise : nullptr);
    out.selected_index = game.selected(0);
    out.target_index = batch.targets[0];
    return out;
}

EvalResult evaluate_split(Model& model, std::span<const GameSample> samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty split");
    const auto items = pointers(samples);
    Game<float> game(model);
    double correct = 0.0;
    double loss = 0.0;
    for_each_batch(items, kEvalBatch, [&](std::span<const GameSample* const> chunk) {
        const auto batch = make_batch<float>(chunk, model.config.n, model.config.k, nullptr);
        loss += game.forward(batch, Mode::Eval, 1.0f, nullptr) * static_cast<double>(chunk.size());
        for (nn::Index b = 0; b < batch.size(); ++b) correct += game.expected_correct(b);
    });
    const auto n = static_cast<double>(samples.size());
    return {correct / n, loss / n};
}

double evaluate(Model& model, std::span<const GameSample> samples) {
    return evaluate_split(model, samples).accuracy;
}

Corpus dump_corpus(Model& model, std::span<const GameSample> samples) {
    const auto& cfg = model.config;
    Corpus corpus;
    corpus.n = cfg.n;
    corpus.k = cfg.k;
    corpus.vocab_size = cfg.vocab_size();
    corpus.max_len = cfg.message_length();
    const auto items = pointers(samples);
    Game<float> game(model);
    for_each_batch(items, kEvalBatch, [&](std::span<const GameSample* const> chunk) {
        const auto batch = make_batch<float>(chunk, cfg.n, cfg.k, nullptr);
        game.run_sender(batch.objects, batch.relevance, Mode::Eval, 1.0f, nullptr);
        auto messages = game.hard_messages();
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            corpus.records.push_back(make_record(chunk[i]->to_concept(), std::move(messages[i])));
        }
    });
    return corpus;
}

TrainResult train(const DatasetSplits& dataset, const GameConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (dataset.n != cfg.n || dataset.k != cfg.k) {
        throw std::invalid_argument("train: dataset is D(" + std::to_string(dataset.n) + "," +
                                    std::to_string(dataset.k) + ") but config expects D(" +
                                    std::to_string(cfg.n) + "," + std::to_string(cfg.k) + ")");
    }
    if (dataset.train.empty()) throw std::invalid_argument("train: empty training split");

    TrainResult result{Model(cfg, derive_seed(cfg.seed, kInitStream)), {}};
    Model& model = result.model;
    Rng rng(derive_seed(cfg.seed, kTrainStream));
    nn::AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    auto params = model.parameters();
    auto order = pointers(dataset.train);
    Game<float> game(model);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double tau = cfg.temperature.at(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        double correct = 0.0;
        std::size_t batch_index = 0;
        for_each_batch(order, static_cast<std::size_t>(cfg.batch_size),
                       [&](std::span<const GameSample* const> chunk) {
            const auto batch = make_batch<float>(chunk, cfg.n, cfg.k, &rng);
            const auto noise = game.sample_noise(batch.size(), rng);
            model.zero_grad();
            const double loss = game.forward(batch, Mode::Train, static_cast<float>(tau), &noise);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite loss " << loss << " at epoch " << epoch << ", batch " << batch_index
                    << " (temperature " << tau << ")";
                throw TrainingError(msg.str());
            }
            game.backward();
            for (auto* p : params) nn::adam_step(*p, adam);
            loss_sum += loss * static_cast<double>(chunk.size());
            for (nn::Index b = 0; b < batch.size(); ++b) correct += game.selected(b) == batch.targets[static_cast<std::size_t>(b)] ? 1.0 : 0.0;
            ++batch_index;
        });

        EpochStats stats;
        stats.epoch = epoch;
        stats.temperature = tau;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_accuracy = correct / static_cast<double>(order.size());
        if (!dataset.validation.empty()) {
            const auto val = evaluate_split(model, dataset.validation);
            stats.validation_loss = val.loss;
            stats.validation_accuracy = val.accuracy;
        }
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

std::vector<NamedTensor> export_parameters(Model& model) {
    std::vector<NamedTensor> out;
    for (auto* p : model.parameters()) {
        NamedTensor t;
        t.name = p->name;
        t.rows = static_cast<std::uint32_t>(p->value.rows());
        t.cols = static_cast<std::uint32_t>(p->value.cols());
        t.values.assign(p->value.data(), p->value.data() + p->value.size());
        out.push_back(std::move(t));
    }
    return out;
}

void import_parameters(Model& model, const std::vector<NamedTensor>& tensors) {
    auto params = model.parameters();
    if (params.size() != tensors.size()) {
        throw std::runtime_error("checkpoint has " + std::to_string(tensors.size()) +
                                 " tensors, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        const auto& t = tensors[i];
        if (t.name != p.name || t.rows != p.value.rows() || t.cols != p.value.cols()) {
            throw std::runtime_error("checkpoint tensor '" + t.name + "' does not match model tensor '" +
                                     p.name + "'");
        }
        std::copy(t.values.begin(), t.values.end(), p.value.data());
    }
}

Manifest model_manifest(const Model& model, int epoch) {
    const auto& c = model.config;
    return {
        {"format", "hierref-checkpoint v1"},
        {"n", std::to_string(c.n)},
        {"k", std::to_string(c.k)},
        {"max_len", std::to_string(c.message_length())},
        {"vocab_factor", std::to_string(c.vocab_factor)},
        {"vocab_size", std::to_string(c.vocab_size())},
        {"embed_dim", std::to_string(c.embed_dim)},
        {"hidden_dim", std::to_string(c.hidden_dim)},
        {"seed", std::to_string(c.seed)},
        {"epoch", std::to_string(epoch)},
    };
}

GameConfig config_from_manifest(const Manifest& m) {
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = m.find(key);
        if (it == m.end()) throw std::runtime_error("checkpoint manifest lacks '" + key + "'");
        return it->second;
    };
    GameConfig c;
    c.n = text::parse_int<int>(get("n"));
    c.k = text::parse_int<int>(get("k"));
    c.max_len = text::parse_int<int>(get("max_len"));
    c.vocab_factor = text::parse_int<int>(get("vocab_factor"));
    c.embed_dim = text::parse_int<int>(get("embed_dim"));
    c.hidden_dim = text::parse_int<int>(get("hidden_dim"));
    c.seed = text::parse_int<std::uint64_t>(get("seed"));
    if (text::parse_int<int>(get("vocab_size")) != c.vocab_size()) {
        throw std::runtime_error("checkpoint manifest vocab_size is inconsistent with vocab_factor");
    }
    return c;
}

void save_model(Model& model, const std::filesystem::path& path, int epoch) {
    write_checkpoint(path, export_parameters(model));
    write_manifest(manifest_path_for(path), model_manifest(model, epoch));
}

Model load_model(const std::filesystem::path& path) {
    const auto cfg = config_from_manifest(read_manifest(manifest_path_for(path)));
    Model model(cfg, 0);
    import_parameters(model, read_checkpoint(path));
    return model;
}

}  // namespace hierref
