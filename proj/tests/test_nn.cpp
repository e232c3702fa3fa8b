#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hierref/nn.hpp"

using namespace hierref;
using M = nn::Matrix<double>;

TEST_CASE("dense layer gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        CHECK(gradcheck::dense(seed) < 1e-4);
    }
}

TEST_CASE("GRU cell gradients match finite differences for inputs, state and weights") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        CHECK(gradcheck::gru(seed) < 1e-3);
    }
}

TEST_CASE("Gumbel-softmax gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        CHECK(gradcheck::gumbel_softmax(seed) < 1e-4);
    }
}

TEST_CASE("cross-entropy gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        CHECK(gradcheck::cross_entropy(seed) < 1e-5);
    }
}

TEST_CASE("cross-entropy of uniform logits") {
    const nn::Vector<double> logits = nn::Vector<double>::Zero(2);
    const auto ce = nn::softmax_cross_entropy<double>(logits, 0);
    CHECK(ce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(ce.grad[0] == doctest::Approx(-0.5));
    CHECK(ce.grad[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(nn::softmax_cross_entropy<double>(logits, 2), std::out_of_range);
    CHECK_THROWS_AS(nn::softmax_cross_entropy<double>(logits, -1), std::out_of_range);
}

TEST_CASE("cross-entropy is stable for large logits") {
    nn::Vector<double> logits(3);
    logits << 1000.0, 0.0, -1000.0;
    const auto ce = nn::softmax_cross_entropy<double>(logits, 0);
    CHECK(std::isfinite(ce.loss));
    CHECK(ce.loss == doctest::Approx(0.0));
}

TEST_CASE("Gumbel-softmax outputs are distributions and reject non-positive temperatures") {
    Rng rng(3);
    const M logits = gradcheck::uniform(6, 4, rng, -3, 3);
    const M noise = nn::gumbel_noise<double>(6, 4, rng);
    for (double tau : {0.1, 1.0, 5.0}) {
        const M y = nn::gumbel_softmax<double>(logits, noise, tau);
        for (nn::Index j = 0; j < y.cols(); ++j) {
            CHECK(y.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(y.col(j).minCoeff() >= 0.0);
        }
    }
    CHECK_THROWS_AS(nn::gumbel_softmax<double>(logits, noise, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(nn::gumbel_softmax<double>(logits, noise, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(nn::gumbel_softmax<double>(logits, M::Zero(5, 4), 1.0), std::invalid_argument);
}

TEST_CASE("low temperature Gumbel-softmax approaches the argmax of logits plus noise") {
    Rng rng(9);
    const M logits = gradcheck::uniform(5, 8, rng, -2, 2);
    const M noise = nn::gumbel_noise<double>(5, 8, rng);
    const M y = nn::gumbel_softmax<double>(logits, noise, 1e-3);
    const M perturbed = logits + noise;
    for (nn::Index j = 0; j < y.cols(); ++j) {
        nn::Index best_y = 0, best_p = 0;
        y.col(j).maxCoeff(&best_y);
        perturbed.col(j).maxCoeff(&best_p);
        CHECK(best_y == best_p);
        CHECK(y(best_y, j) > 0.99);
    }
}

TEST_CASE("Gumbel noise has the standard Gumbel mean") {
    Rng rng(11);
    const M g = nn::gumbel_noise<double>(100, 1000, rng);
    CHECK(g.mean() == doctest::Approx(0.5772156649).epsilon(0.01));
}

TEST_CASE("first Adam step moves each entry by the learning rate against its gradient") {
    nn::Parameter<double> p("p", 2, 2);
    p.value << 1.0, -2.0, 0.5, 3.0;
    const M start = p.value;
    M grad(2, 2);
    grad << 0.3, -4.0, 1e-2, -7e-3;
    nn::AdamConfig cfg;
    nn::adam_step(p, grad, cfg);
    for (nn::Index i = 0; i < 4; ++i) {
        const double g = grad.data()[i];
        const double moved = start.data()[i] - p.value.data()[i];
        CHECK(moved == doctest::Approx(cfg.learning_rate * (g > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
    CHECK(p.step_count == 1);
    CHECK_THROWS_AS(nn::adam_step(p, M(M::Zero(3, 2)), cfg), std::invalid_argument);
}

TEST_CASE("Adam minimises a quadratic") {
    nn::Parameter<double> p("p", 3, 1);
    p.value << 2.0, -1.0, 0.5;
    nn::AdamConfig cfg;
    cfg.learning_rate = 0.05;
    for (int step = 0; step < 2000; ++step) nn::adam_step(p, M(2.0 * p.value), cfg);
    CHECK(p.value.norm() < 1e-2);
}

TEST_CASE("temperature schedule decays exponentially per epoch") {
    nn::TemperatureSchedule s;
    CHECK(s.at(0) == doctest::Approx(1.5));
    CHECK(s.at(1) == doctest::Approx(1.485));
    CHECK(s.at(100) == doctest::Approx(1.5 * std::pow(0.99, 100)));
    CHECK(s.at(299) == doctest::Approx(0.07420).epsilon(1e-3));
    CHECK_THROWS(s.at(-1));
    s.decay = 1.5;
    CHECK_THROWS(s.validate());
    s.decay = 0.99;
    s.initial = 0.0;
    CHECK_THROWS(s.validate());
}

TEST_CASE("grad_check reports the worst entry") {
    M x(3, 1);
    x << 1.0, 2.0, 3.0;
    const M good = 2.0 * x;
    auto loss = [&] { return x.squaredNorm(); };
    CHECK(nn::grad_check<double>(loss, nn::as_span(x), nn::as_span(good)).max_relative_error < 1e-8);
    M bad = good;
    bad(1) = 0.0;
    const auto r = nn::grad_check<double>(loss, nn::as_span(x), nn::as_span(bad));
    CHECK(r.worst_index == 1);
    CHECK(r.max_relative_error == doctest::Approx(1.0));
}

TEST_CASE("single-precision forward passes agree with double precision") {
    Rng rng_f(5), rng_d(5);
    nn::GruCell<float> cf("g", 4, 6);
    nn::GruCell<double> cd("g", 4, 6);
    cf.init(rng_f);
    cd.init(rng_d);
    Rng inputs(6);
    const M x = gradcheck::uniform(4, 2, inputs);
    const M h = gradcheck::uniform(6, 2, inputs);
    const M out_d = cd.forward(x, h);
    const nn::Matrix<float> out_f = cf.forward(x.cast<float>(), h.cast<float>());
    CHECK((out_f.cast<double>() - out_d).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("Adam steps do not depend on the gradient scale") {
    Rng rng(21);
    const M g = gradcheck::uniform(4, 3, rng);
    nn::Parameter<double> a("a", 4, 3), b("b", 4, 3);
    nn::AdamConfig cfg;
    for (int step = 0; step < 50; ++step) {
        nn::adam_step(a, g, cfg);
        nn::adam_step(b, M(1000.0 * g), cfg);
    }
    CHECK((a.value - b.value).cwiseAbs().maxCoeff() < 1e-6);
    for (nn::Index i = 0; i < g.size(); ++i) CHECK((a.value.data()[i] > 0) == (g.data()[i] < 0));
}
