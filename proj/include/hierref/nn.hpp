#pragma once

// Differentiable building blocks with explicit forward and backward passes.
//
// Activations are column-major batches: one column per example. Every layer
// is templated on the scalar so training can run in float while gradient
// checks run in double. Backward passes accumulate into Parameter::grad.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierref/random.hpp"

namespace hierref::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

/// A trainable tensor with its gradient and Adam state. Moments are kept in
/// double regardless of the parameter scalar.
template <typename T>
struct Parameter {
    std::string name;
    Matrix<T> value;
    Matrix<T> grad;
    Eigen::MatrixXd adam_m;
    Eigen::MatrixXd adam_v;
    std::int64_t step_count = 0;

    Parameter() = default;
    Parameter(std::string name_, Index rows, Index cols)
        : name(std::move(name_)),
          value(Matrix<T>::Zero(rows, cols)),
          grad(Matrix<T>::Zero(rows, cols)),
          adam_m(Eigen::MatrixXd::Zero(rows, cols)),
          adam_v(Eigen::MatrixXd::Zero(rows, cols)) {}

    Index size() const { return value.size(); }
    void zero_grad() { grad.setZero(); }

    /// Uniform in [-bound, bound].
    void init_uniform(double bound, Rng& rng) {
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Index i = 0; i < value.size(); ++i) value.data()[i] = static_cast<T>(dist(rng));
    }
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

inline void check_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

// ---------------------------------------------------------------------------
// Dense layer: y = W x + b

template <typename T>
class Dense {
public:
    Parameter<T> weight;
    Parameter<T> bias;

    Dense() = default;
    Dense(const std::string& name, int in, int out)
        : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

    int in_dim() const { return static_cast<int>(weight.value.cols()); }
    int out_dim() const { return static_cast<int>(weight.value.rows()); }

    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
        weight.init_uniform(bound, rng);
        bias.init_uniform(bound, rng);
    }

    Matrix<T> forward(const Matrix<T>& x) const {
        check_shape(x.rows() == weight.value.cols(), "dense input");
        Matrix<T> y = weight.value * x;
        y.colwise() += bias.value.col(0);
        return y;
    }

    /// Accumulates dW = dy x^T and db = sum(dy); returns dx = W^T dy.
    Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy) {
        accumulate(x, dy);
        return weight.value.transpose() * dy;
    }

    /// Parameter gradients only, for layers fed directly by data.
    void accumulate(const Matrix<T>& x, const Matrix<T>& dy) {
        check_shape(dy.rows() == weight.value.rows() && dy.cols() == x.cols(), "dense grad");
        weight.grad.noalias() += dy * x.transpose();
        bias.grad.col(0) += dy.rowwise().sum();
    }

    ParameterList<T> parameters() { return {&weight, &bias}; }
};

// ---------------------------------------------------------------------------
// Gated recurrent cell.
//
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   c  = tanh(Wc x + Uc (r * h) + bc)
//   h' = (1 - z) * h + z * c
//
// Input weights are stacked as [z; r; c], recurrent gate weights as [z; r].

template <typename T>
class GruCell {
public:
    Parameter<T> input_weight;      // 3H x in
    Parameter<T> gate_weight;       // 2H x H
    Parameter<T> candidate_weight;  // H x H
    Parameter<T> bias;              // 3H x 1

    struct Cache {
        Matrix<T> x;
        Matrix<T> h_prev;
        Matrix<T> z;
        Matrix<T> r;
        Matrix<T> candidate;
        Matrix<T> reset_hidden;
    };

    GruCell() = default;
    GruCell(const std::string& name, int input_dim, int hidden_dim)
        : input_weight(name + ".input_weight", 3 * hidden_dim, input_dim),
          gate_weight(name + ".gate_weight", 2 * hidden_dim, hidden_dim),
          candidate_weight(name + ".candidate_weight", hidden_dim, hidden_dim),
          bias(name + ".bias", 3 * hidden_dim, 1) {}

    int hidden_dim() const { return static_cast<int>(candidate_weight.value.rows()); }
    int input_dim() const { return static_cast<int>(input_weight.value.cols()); }

    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim()));
        for (auto* p : parameters()) p->init_uniform(bound, rng);
    }

    Matrix<T> forward(const Matrix<T>& x, const Matrix<T>& h_prev, Cache* cache = nullptr) const {
        const Index H = hidden_dim();
        check_shape(x.rows() == input_dim() && h_prev.rows() == H && x.cols() == h_prev.cols(),
                    "gru input");
        Matrix<T> gx = input_weight.value * x;
        gx.colwise() += bias.value.col(0);
        const Matrix<T> gh = gate_weight.value * h_prev;

        Matrix<T> z = sigmoid(gx.topRows(H) + gh.topRows(H));
        Matrix<T> r = sigmoid(gx.middleRows(H, H) + gh.bottomRows(H));
        Matrix<T> reset_hidden = r.cwiseProduct(h_prev);
        Matrix<T> candidate =
            (gx.bottomRows(H) + candidate_weight.value * reset_hidden).array().tanh().matrix();
        Matrix<T> h = h_prev + z.cwiseProduct(candidate - h_prev);
        if (cache) {
            cache->x = x;
            cache->h_prev = h_prev;
            cache->z = std::move(z);
            cache->r = std::move(r);
            cache->candidate = std::move(candidate);
            cache->reset_hidden = std::move(reset_hidden);
        }
        return h;
    }

    /// Accumulates parameter gradients. Writes dx when requested and adds the
    /// gradient w.r.t. h_prev into dh_prev (which must be sized H x B).
    void backward(const Cache& c, const Matrix<T>& dh, Matrix<T>* dx, Matrix<T>& dh_prev) {
        const Index H = hidden_dim();
        const Index B = dh.cols();
        const auto one = Matrix<T>::Ones(H, B);

        const Matrix<T> dz = dh.cwiseProduct(c.candidate - c.h_prev);
        const Matrix<T> dcand = dh.cwiseProduct(c.z);
        dh_prev += dh.cwiseProduct(one - c.z);

        Matrix<T> da(3 * H, B);
        da.bottomRows(H) = dcand.cwiseProduct(one - c.candidate.cwiseProduct(c.candidate));
        const Matrix<T> d_reset_hidden = candidate_weight.value.transpose() * da.bottomRows(H);
        candidate_weight.grad.noalias() += da.bottomRows(H) * c.reset_hidden.transpose();
        dh_prev += d_reset_hidden.cwiseProduct(c.r);

        const Matrix<T> dr = d_reset_hidden.cwiseProduct(c.h_prev);
        da.topRows(H) = dz.cwiseProduct(c.z).cwiseProduct(one - c.z);
        da.middleRows(H, H) = dr.cwiseProduct(c.r).cwiseProduct(one - c.r);

        input_weight.grad.noalias() += da * c.x.transpose();
        bias.grad.col(0) += da.rowwise().sum();
        gate_weight.grad.noalias() += da.topRows(2 * H) * c.h_prev.transpose();
        dh_prev.noalias() += gate_weight.value.transpose() * da.topRows(2 * H);
        if (dx) *dx = input_weight.value.transpose() * da;
    }

    ParameterList<T> parameters() {
        return {&input_weight, &gate_weight, &candidate_weight, &bias};
    }

private:
    template <typename Expr>
    static Matrix<T> sigmoid(const Expr& a) {
        return (T(1) + (-a.array()).exp()).inverse().matrix();
    }
};

// ---------------------------------------------------------------------------
// Softmax, Gumbel-softmax, cross-entropy

/// Column-wise numerically stable softmax.
template <typename T>
Matrix<T> softmax_columns(const Matrix<T>& logits) {
    Matrix<T> out(logits.rows(), logits.cols());
    for (Index j = 0; j < logits.cols(); ++j) {
        const T m = logits.col(j).maxCoeff();
        out.col(j) = (logits.col(j).array() - m).exp().matrix();
        out.col(j) /= out.col(j).sum();
    }
    return out;
}

/// i.i.d. standard Gumbel noise -log(-log(u)), u uniform on (0, 1).
template <typename T>
Matrix<T> gumbel_noise(Index rows, Index cols, Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Matrix<T> g(rows, cols);
    for (Index i = 0; i < g.size(); ++i) {
        double u = uniform(rng);
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        g.data()[i] = static_cast<T>(-std::log(-std::log(u)));
    }
    return g;
}

/// softmax((logits + noise) / tau), column-wise.
template <typename T>
Matrix<T> gumbel_softmax(const Matrix<T>& logits, const Matrix<T>& noise, T tau) {
    if (!(tau > T(0))) throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
    check_shape(logits.rows() == noise.rows() && logits.cols() == noise.cols(), "gumbel noise");
    return softmax_columns<T>((logits + noise) / tau);
}

/// Gradient w.r.t. logits given y = gumbel_softmax(...) and dL/dy.
template <typename T>
Matrix<T> gumbel_softmax_backward(const Matrix<T>& y, const Matrix<T>& dy, T tau) {
    Matrix<T> out(y.rows(), y.cols());
    for (Index j = 0; j < y.cols(); ++j) {
        const T inner = y.col(j).dot(dy.col(j));
        out.col(j) = (y.col(j).array() * (dy.col(j).array() - inner) / tau).matrix();
    }
    return out;
}

template <typename T>
Vector<T> gumbel_softmax_sample(const Vector<T>& logits, double tau, Rng& rng) {
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
    const Matrix<T> noise = gumbel_noise<T>(logits.size(), 1, rng);
    return gumbel_softmax<T>(Matrix<T>(logits), noise, static_cast<T>(tau)).col(0);
}

template <typename T>
struct CrossEntropy {
    double loss = 0.0;
    Vector<T> grad;
};

/// loss = -log softmax(logits)[target]; grad = softmax(logits) - onehot(target).
template <typename T>
CrossEntropy<T> softmax_cross_entropy(const Vector<T>& logits, int target) {
    if (target < 0 || target >= logits.size()) {
        throw std::out_of_range("softmax_cross_entropy: target index out of range");
    }
    const double m = static_cast<double>(logits.maxCoeff());
    double sum = 0.0;
    for (Index i = 0; i < logits.size(); ++i) sum += std::exp(static_cast<double>(logits[i]) - m);
    const double log_z = m + std::log(sum);
    CrossEntropy<T> out;
    out.loss = log_z - static_cast<double>(logits[target]);
    out.grad.resize(logits.size());
    for (Index i = 0; i < logits.size(); ++i) {
        out.grad[i] = static_cast<T>(std::exp(static_cast<double>(logits[i]) - log_z));
    }
    out.grad[target] -= T(1);
    return out;
}

// ---------------------------------------------------------------------------
// Optimisation

struct AdamConfig {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam update of `param` with gradient `grad`.
template <typename T>
void adam_step(Parameter<T>& param, const Matrix<T>& grad, const AdamConfig& cfg) {
    check_shape(grad.rows() == param.value.rows() && grad.cols() == param.value.cols(), "adam grad");
    ++param.step_count;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(param.step_count));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(param.step_count));
    for (Index i = 0; i < param.value.size(); ++i) {
        const double g = static_cast<double>(grad.data()[i]);
        double& m = param.adam_m.data()[i];
        double& v = param.adam_v.data()[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double update = cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
        param.value.data()[i] = static_cast<T>(static_cast<double>(param.value.data()[i]) - update);
    }
}

template <typename T>
void adam_step(Parameter<T>& param, const AdamConfig& cfg) {
    adam_step(param, param.grad, cfg);
}

struct TemperatureSchedule {
    double initial = 1.5;
    double decay = 0.99;

    void validate() const {
        if (!(initial > 0.0)) throw std::invalid_argument("initial temperature must be > 0");
        if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must lie in (0, 1]");
    }
    /// Per-epoch exponential decay: initial * decay^epoch.
    double at(int epoch) const {
        if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
        return initial * std::pow(decay, epoch);
    }
};

inline double temperature_at(const TemperatureSchedule& s, int epoch) { return s.at(epoch); }

// ---------------------------------------------------------------------------
// Finite-difference verification

struct GradCheckResult {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
};

/// Relative error |a - n| / max(|a|, |n|, floor); the floor keeps entries
/// whose true gradient is ~0 from dominating.
inline double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

/// Compares `analytic` with central differences of `loss` obtained by
/// perturbing each entry of `inputs` in place by +-epsilon.
template <typename T>
GradCheckResult grad_check(const std::function<double()>& loss, std::span<T> inputs,
                           std::span<const T> analytic, double epsilon = 1e-6,
                           double floor = 1e-6) {
    if (inputs.size() != analytic.size()) throw std::invalid_argument("grad_check: size mismatch");
    GradCheckResult result;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const T saved = inputs[i];
        inputs[i] = static_cast<T>(static_cast<double>(saved) + epsilon);
        const double up = loss();
        inputs[i] = static_cast<T>(static_cast<double>(saved) - epsilon);
        const double down = loss();
        inputs[i] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = static_cast<double>(analytic[i]);
        const double rel = relative_error(a, numeric, floor);
        result.max_abs_error = std::max(result.max_abs_error, std::abs(a - numeric));
        if (rel > result.max_relative_error) {
            result.max_relative_error = rel;
            result.worst_index = i;
        }
    }
    return result;
}

template <typename T>
std::span<T> as_span(Matrix<T>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename T>
std::span<const T> as_span(const Matrix<T>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace hierref::nn
