#pragma once

// Sender and receiver networks and the batched forward/backward pass of one
// round of the hierarchical reference game.
//
// Sender: the n-hot object and the relevance vector pass through their own
// dense layer (ReLU); a third dense layer (tanh) maps the concatenation to the
// initial GRU state. Starting from a learned start embedding, each step emits
// vocabulary logits. TRAIN samples a Gumbel-softmax vector and feeds back its
// expected embedding; EVAL takes the argmax symbol.
//
// Receiver: a GRU over the embedded symbols, starting from zeros. A symbol is
// only read while no EOS has been sent: the update at step t is scaled by
// alive_t = prod_{s<=t} (1 - p_s(EOS)), which is exactly truncation at the
// first EOS for one-hot messages. Candidates are embedded by a dense layer
// into the hidden space and scored by dot product with the final state.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hierref/concept.hpp"
#include "hierref/dataset.hpp"
#include "hierref/nn.hpp"

namespace hierref {

enum class Mode { Train, Eval };

/// Vocabulary index reserved for end-of-sequence.
inline constexpr int kEos = 0;

struct GameConfig {
    int n = 3;
    int k = 4;
    /// 0 means "use n".
    int max_len = 0;
    int vocab_factor = 3;
    int embed_dim = 128;
    int hidden_dim = 256;
    int epochs = 300;
    int batch_size = 32;
    double learning_rate = 5e-4;
    nn::TemperatureSchedule temperature;
    std::uint64_t seed = 0;

    int message_length() const { return max_len > 0 ? max_len : n; }
    /// f*(k+1) content symbols plus EOS at index 0.
    int vocab_size() const { return vocab_factor * (k + 1) + 1; }

    void validate() const {
        if (n < 1 || k < 2) throw std::invalid_argument("game config: need n >= 1, k >= 2");
        if (message_length() < 1) throw std::invalid_argument("game config: max_len must be >= 1");
        if (vocab_factor < 1) throw std::invalid_argument("game config: vocab_factor must be >= 1");
        if (embed_dim < 1 || hidden_dim < 1) throw std::invalid_argument("game config: bad dims");
        if (epochs < 0 || batch_size < 1) throw std::invalid_argument("game config: bad schedule");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("game config: learning rate must be > 0");
        temperature.validate();
    }
};

template <typename T>
struct Sender {
    nn::Dense<T> object_encoder;
    nn::Dense<T> relevance_encoder;
    nn::Dense<T> merge;
    nn::GruCell<T> cell;
    nn::Parameter<T> start;
    nn::Parameter<T> symbol_embedding;  // embed x vocab
    nn::Dense<T> output;

    explicit Sender(const GameConfig& cfg)
        : object_encoder("sender.object_encoder", cfg.n * cfg.k, cfg.embed_dim),
          relevance_encoder("sender.relevance_encoder", cfg.n, cfg.embed_dim),
          merge("sender.merge", 2 * cfg.embed_dim, cfg.hidden_dim),
          cell("sender.gru", cfg.embed_dim, cfg.hidden_dim),
          start("sender.start", cfg.embed_dim, 1),
          symbol_embedding("sender.symbol_embedding", cfg.embed_dim, cfg.vocab_size()),
          output("sender.output", cfg.hidden_dim, cfg.vocab_size()) {}

    void init(Rng& rng) {
        object_encoder.init(rng);
        relevance_encoder.init(rng);
        merge.init(rng);
        cell.init(rng);
        start.init_uniform(1.0, rng);
        symbol_embedding.init_uniform(1.0 / std::sqrt(static_cast<double>(symbol_embedding.value.cols())), rng);
        output.init(rng);
    }

    nn::ParameterList<T> parameters() {
        nn::ParameterList<T> out;
        for (auto* layer : {&object_encoder, &relevance_encoder, &merge}) {
            for (auto* p : layer->parameters()) out.push_back(p);
        }
        for (auto* p : cell.parameters()) out.push_back(p);
        out.push_back(&start);
        out.push_back(&symbol_embedding);
        for (auto* p : output.parameters()) out.push_back(p);
        return out;
    }
};

template <typename T>
struct Receiver {
    nn::Parameter<T> symbol_embedding;  // embed x vocab
    nn::GruCell<T> cell;
    nn::Dense<T> object_embedding;  // n*k -> hidden

    explicit Receiver(const GameConfig& cfg)
        : symbol_embedding("receiver.symbol_embedding", cfg.embed_dim, cfg.vocab_size()),
          cell("receiver.gru", cfg.embed_dim, cfg.hidden_dim),
          object_embedding("receiver.object_embedding", cfg.n * cfg.k, cfg.hidden_dim) {}

    void init(Rng& rng) {
        symbol_embedding.init_uniform(1.0 / std::sqrt(static_cast<double>(symbol_embedding.value.cols())), rng);
        cell.init(rng);
        object_embedding.init(rng);
    }

    nn::ParameterList<T> parameters() {
        nn::ParameterList<T> out{&symbol_embedding};
        for (auto* p : cell.parameters()) out.push_back(p);
        for (auto* p : object_embedding.parameters()) out.push_back(p);
        return out;
    }
};

template <typename T>
struct Agents {
    GameConfig config;
    Sender<T> sender;
    Receiver<T> receiver;

    Agents(const GameConfig& cfg, std::uint64_t init_seed)
        : config(cfg), sender(cfg), receiver(cfg) {
        cfg.validate();
        Rng rng(init_seed);
        sender.init(rng);
        receiver.init(rng);
    }

    nn::ParameterList<T> parameters() {
        auto out = sender.parameters();
        for (auto* p : receiver.parameters()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto* p : parameters()) p->zero_grad();
    }
};

/// One column per round; candidate c of round b sits in column b*C + c.
template <typename T>
struct GameBatch {
    nn::Matrix<T> objects;     // n*k x B
    nn::Matrix<T> relevance;   // n x B
    nn::Matrix<T> candidates;  // n*k x B*C
    int num_candidates = 0;
    std::vector<int> targets;

    nn::Index size() const { return objects.cols(); }
};

template <typename T>
void write_nhot(nn::Matrix<T>& m, nn::Index col, const ObjectVector& o, int k) {
    m.col(col).setZero();
    for (int a = 0; a < o.size(); ++a) m(a * k + o[a] - 1, col) = T(1);
}

/// Builds a batch from game samples. The target's candidate position is drawn
/// from `placement` when given, otherwise the target comes first.
template <typename T>
GameBatch<T> make_batch(std::span<const GameSample* const> samples, int n, int k, Rng* placement) {
    if (samples.empty()) throw std::invalid_argument("make_batch: empty batch");
    const auto B = static_cast<nn::Index>(samples.size());
    const int C = static_cast<int>(samples.front()->distractors.size()) + 1;
    GameBatch<T> batch;
    batch.num_candidates = C;
    batch.objects.resize(n * k, B);
    batch.relevance.resize(n, B);
    batch.candidates.resize(n * k, B * C);
    batch.targets.resize(samples.size());
    for (nn::Index b = 0; b < B; ++b) {
        const auto& s = *samples[static_cast<std::size_t>(b)];
        if (static_cast<int>(s.distractors.size()) + 1 != C) {
            throw std::invalid_argument("make_batch: samples differ in distractor count");
        }
        write_nhot(batch.objects, b, s.sender_object, k);
        for (int a = 0; a < n; ++a) batch.relevance(a, b) = s.relevance.relevant(a) ? T(1) : T(0);
        const int target = placement ? uniform_int(*placement, 0, C - 1) : 0;
        batch.targets[static_cast<std::size_t>(b)] = target;
        int d = 0;
        for (int c = 0; c < C; ++c) {
            const auto& obj = c == target ? s.target : s.distractors[static_cast<std::size_t>(d++)];
            write_nhot(batch.candidates, b * C + c, obj, k);
        }
    }
    return batch;
}

/// Forward and backward pass of a batch of rounds.
template <typename T>
class Game {
public:
    using Matrix = nn::Matrix<T>;
    using Vector = nn::Vector<T>;

    explicit Game(Agents<T>& agents) : agents_(agents) {}

    /// Gumbel noise for every sender step of a batch in TRAIN mode.
    std::vector<Matrix> sample_noise(nn::Index batch_size, Rng& rng) const {
        std::vector<Matrix> noise;
        for (int t = 0; t < agents_.config.message_length(); ++t) {
            noise.push_back(nn::gumbel_noise<T>(agents_.config.vocab_size(), batch_size, rng));
        }
        return noise;
    }

    /// Sender unroll only. `noise` is required in TRAIN mode.
    void run_sender(const Matrix& objects, const Matrix& relevance, Mode mode, T tau,
                    const std::vector<Matrix>* noise) {
        auto& s = agents_.sender;
        const int L = agents_.config.message_length();
        const nn::Index B = objects.cols();
        mode_ = mode;
        tau_ = tau;
        if (mode == Mode::Train && (!noise || static_cast<int>(noise->size()) != L)) {
            throw std::invalid_argument("run_sender: TRAIN mode needs noise for every step");
        }
        objects_ = objects;
        relevance_ = relevance;
        obj_pre_ = s.object_encoder.forward(objects);
        rel_pre_ = s.relevance_encoder.forward(relevance);
        merged_.resize(obj_pre_.rows() + rel_pre_.rows(), B);
        merged_.topRows(obj_pre_.rows()) = obj_pre_.cwiseMax(T(0));
        merged_.bottomRows(rel_pre_.rows()) = rel_pre_.cwiseMax(T(0));
        h0_ = s.merge.forward(merged_).array().tanh().matrix();

        sender_inputs_.assign(static_cast<std::size_t>(L), Matrix());
        sender_cache_.assign(static_cast<std::size_t>(L), {});
        sender_hidden_.assign(static_cast<std::size_t>(L), Matrix());
        symbols_.assign(static_cast<std::size_t>(L), Matrix());
        sender_inputs_[0] = s.start.value.col(0).replicate(1, B);
        Matrix h = h0_;
        for (int t = 0; t < L; ++t) {
            const auto ut = static_cast<std::size_t>(t);
            h = s.cell.forward(sender_inputs_[ut], h, &sender_cache_[ut]);
            sender_hidden_[ut] = h;
            const Matrix logits = s.output.forward(h);
            if (mode == Mode::Train) {
                symbols_[ut] = nn::gumbel_softmax<T>(logits, (*noise)[ut], tau);
            } else {
                symbols_[ut] = Matrix::Zero(logits.rows(), B);
                for (nn::Index b = 0; b < B; ++b) {
                    nn::Index best = 0;
                    logits.col(b).maxCoeff(&best);
                    symbols_[ut](best, b) = T(1);
                }
            }
            if (t + 1 < L) sender_inputs_[ut + 1] = s.symbol_embedding.value * symbols_[ut];
        }
    }

    /// Receiver over explicit symbol distributions (one V x B matrix per step)
    /// scoring the given candidates.
    double run_receiver(const std::vector<Matrix>& symbols, const GameBatch<T>& batch) {
        symbols_ = symbols;
        return receive(batch);
    }

    /// Full round: sender then receiver. Returns the mean cross-entropy.
    double forward(const GameBatch<T>& batch, Mode mode, T tau, const std::vector<Matrix>* noise) {
        run_sender(batch.objects, batch.relevance, mode, tau, noise);
        return receive(batch);
    }

    /// Accumulates gradients of the mean loss into the agents' parameters.
    void backward() {
        if (mode_ != Mode::Train) throw std::logic_error("backward requires a TRAIN forward pass");
        auto& s = agents_.sender;
        auto& r = agents_.receiver;
        const int L = agents_.config.message_length();
        const nn::Index B = batch_size_;
        const nn::Index H = agents_.config.hidden_dim;
        const int C = num_candidates_;

        // Scores -> candidate embeddings and final receiver state.
        Matrix d_emb(H, B * C);
        Matrix dg(H, B);
        for (nn::Index b = 0; b < B; ++b) {
            const auto& dscore = dscores_[static_cast<std::size_t>(b)];
            d_emb.middleCols(b * C, C).noalias() = receiver_hidden_.back().col(b) * dscore.transpose();
            dg.col(b).noalias() = candidate_emb_.middleCols(b * C, C) * dscore;
        }
        r.object_embedding.accumulate(candidates_, d_emb);

        std::vector<Matrix> dsym(static_cast<std::size_t>(L), Matrix::Zero(agents_.config.vocab_size(), B));
        std::vector<Vector> d_alive(static_cast<std::size_t>(L));
        for (int t = L - 1; t >= 0; --t) {
            const auto ut = static_cast<std::size_t>(t);
            const auto& a = alive_[ut];
            const Matrix diff = receiver_candidate_[ut] - receiver_hidden_[ut];
            d_alive[ut] = dg.cwiseProduct(diff).colwise().sum().transpose();
            Matrix dcand = dg;
            Matrix dg_prev = dg;
            for (nn::Index b = 0; b < B; ++b) {
                dcand.col(b) *= a[b];
                dg_prev.col(b) *= T(1) - a[b];
            }
            Matrix dx;
            r.cell.backward(receiver_cache_[ut], dcand, &dx, dg_prev);
            r.symbol_embedding.grad.noalias() += dx * symbols_[ut].transpose();
            dsym[ut].noalias() += r.symbol_embedding.value.transpose() * dx;
            dg = std::move(dg_prev);
        }
        // alive_t = prod_{s<=t} q_s with q_s = 1 - p_s(EOS).
        for (nn::Index b = 0; b < B; ++b) {
            for (int t = 0; t < L; ++t) {
                for (int u = 0; u <= t; ++u) {
                    T others = T(1);
                    for (int v = 0; v <= t; ++v) {
                        if (v != u) others *= T(1) - symbols_[static_cast<std::size_t>(v)](kEos, b);
                    }
                    dsym[static_cast<std::size_t>(u)](kEos, b) -= d_alive[static_cast<std::size_t>(t)][b] * others;
                }
            }
        }

        // Sender, reverse time.
        Matrix dh = Matrix::Zero(H, B);
        Matrix d_next_input;
        for (int t = L - 1; t >= 0; --t) {
            const auto ut = static_cast<std::size_t>(t);
            if (t + 1 < L) {
                s.symbol_embedding.grad.noalias() += d_next_input * symbols_[ut].transpose();
                dsym[ut].noalias() += s.symbol_embedding.value.transpose() * d_next_input;
            }
            const Matrix dlogits = nn::gumbel_softmax_backward<T>(symbols_[ut], dsym[ut], tau_);
            dh += s.output.backward(sender_hidden_[ut], dlogits);
            Matrix dh_prev = Matrix::Zero(H, B);
            Matrix d_input;
            s.cell.backward(sender_cache_[ut], dh, &d_input, dh_prev);
            dh = std::move(dh_prev);
            d_next_input = std::move(d_input);
        }
        s.start.grad.col(0) += d_next_input.rowwise().sum();

        const Matrix d_pre = dh.cwiseProduct((Matrix::Ones(H, B) - h0_.cwiseProduct(h0_)));
        const Matrix d_merged = s.merge.backward(merged_, d_pre);
        const auto E = obj_pre_.rows();
        const Matrix d_obj = d_merged.topRows(E).cwiseProduct(
            (obj_pre_.array() > T(0)).template cast<T>().matrix());
        const Matrix d_rel = d_merged.bottomRows(E).cwiseProduct(
            (rel_pre_.array() > T(0)).template cast<T>().matrix());
        s.object_encoder.accumulate(objects_, d_obj);
        s.relevance_encoder.accumulate(relevance_, d_rel);
    }

    /// Selection probabilities of round b over its candidates.
    const Vector& probabilities(nn::Index b) const { return probs_[static_cast<std::size_t>(b)]; }
    const std::vector<double>& losses() const { return losses_; }
    const std::vector<Matrix>& symbols() const { return symbols_; }

    /// Expected accuracy under uniform tie-breaking among maximal scores.
    double expected_correct(nn::Index b) const {
        const auto& sc = scores_[static_cast<std::size_t>(b)];
        const T best = sc.maxCoeff();
        int ties = 0;
        for (nn::Index c = 0; c < sc.size(); ++c) ties += sc[c] == best ? 1 : 0;
        return sc[targets_[static_cast<std::size_t>(b)]] == best ? 1.0 / ties : 0.0;
    }

    /// Lowest-index argmax of the receiver's scores.
    int selected(nn::Index b) const {
        nn::Index best = 0;
        scores_[static_cast<std::size_t>(b)].maxCoeff(&best);
        return static_cast<int>(best);
    }

    /// Hard messages of the last EVAL sender pass, truncated before the first EOS.
    std::vector<std::vector<int>> hard_messages() const {
        const nn::Index B = symbols_.empty() ? 0 : symbols_.front().cols();
        std::vector<std::vector<int>> out(static_cast<std::size_t>(B));
        for (nn::Index b = 0; b < B; ++b) {
            for (const auto& step : symbols_) {
                nn::Index best = 0;
                step.col(b).maxCoeff(&best);
                if (best == kEos) break;
                out[static_cast<std::size_t>(b)].push_back(static_cast<int>(best));
            }
        }
        return out;
    }

private:
    double receive(const GameBatch<T>& batch) {
        auto& r = agents_.receiver;
        const int L = static_cast<int>(symbols_.size());
        const nn::Index B = batch.size();
        const nn::Index H = agents_.config.hidden_dim;
        const int C = batch.num_candidates;
        if (L < 1 || symbols_.front().cols() != B) throw std::invalid_argument("receiver: bad message");
        batch_size_ = B;
        num_candidates_ = C;
        targets_ = batch.targets;
        candidates_ = batch.candidates;

        receiver_hidden_.assign(1, Matrix::Zero(H, B));
        receiver_candidate_.assign(static_cast<std::size_t>(L), Matrix());
        receiver_cache_.assign(static_cast<std::size_t>(L), {});
        alive_.assign(static_cast<std::size_t>(L), Vector());
        Vector alive = Vector::Ones(B);
        for (int t = 0; t < L; ++t) {
            const auto ut = static_cast<std::size_t>(t);
            alive = alive.cwiseProduct((Vector::Ones(B) - symbols_[ut].row(kEos).transpose()));
            alive_[ut] = alive;
            const Matrix x = r.symbol_embedding.value * symbols_[ut];
            const Matrix& g = receiver_hidden_.back();
            receiver_candidate_[ut] = r.cell.forward(x, g, &receiver_cache_[ut]);
            Matrix next = g;
            for (nn::Index b = 0; b < B; ++b) {
                next.col(b) += alive[b] * (receiver_candidate_[ut].col(b) - g.col(b));
            }
            receiver_hidden_.push_back(std::move(next));
        }

        candidate_emb_ = r.object_embedding.forward(batch.candidates);
        scores_.assign(static_cast<std::size_t>(B), Vector());
        probs_.assign(static_cast<std::size_t>(B), Vector());
        dscores_.assign(static_cast<std::size_t>(B), Vector());
        losses_.assign(static_cast<std::size_t>(B), 0.0);
        double total = 0.0;
        for (nn::Index b = 0; b < B; ++b) {
            const auto ub = static_cast<std::size_t>(b);
            scores_[ub] = candidate_emb_.middleCols(b * C, C).transpose() * receiver_hidden_.back().col(b);
            const auto ce = nn::softmax_cross_entropy<T>(scores_[ub], batch.targets[ub]);
            losses_[ub] = ce.loss;
            total += ce.loss;
            probs_[ub] = ce.grad;
            probs_[ub][batch.targets[ub]] += T(1);
            dscores_[ub] = ce.grad / static_cast<T>(B);
        }
        return total / static_cast<double>(B);
    }

    Agents<T>& agents_;
    Mode mode_ = Mode::Eval;
    T tau_ = T(1);
    nn::Index batch_size_ = 0;
    int num_candidates_ = 0;
    std::vector<int> targets_;

    Matrix objects_, relevance_, candidates_;
    Matrix obj_pre_, rel_pre_, merged_, h0_;
    std::vector<Matrix> sender_inputs_;
    std::vector<typename nn::GruCell<T>::Cache> sender_cache_;
    std::vector<Matrix> sender_hidden_;
    std::vector<Matrix> symbols_;

    std::vector<Matrix> receiver_hidden_;  // L + 1 states
    std::vector<Matrix> receiver_candidate_;
    std::vector<typename nn::GruCell<T>::Cache> receiver_cache_;
    std::vector<Vector> alive_;
    Matrix candidate_emb_;
    std::vector<Vector> scores_;
    std::vector<Vector> probs_;
    std::vector<Vector> dscores_;
    std::vector<double> losses_;
};

}  // namespace hierref
