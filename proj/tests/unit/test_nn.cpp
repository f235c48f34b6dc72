#include <cmath>
#include <sstream>

#include "doctest.h"
#include "exid/common/error.hpp"
#include "exid/nn/adam.hpp"
#include "exid/nn/checkpoint.hpp"
#include "exid/nn/functional.hpp"
#include "exid/nn/mlp.hpp"
#include "gradcheck.hpp"

using namespace exid;
using namespace exid::nn;

TEST_SUITE("nn") {
  TEST_CASE("selu reference values") {
    CHECK(selu(0.0) == 0.0);
    CHECK(selu(1.0) == doctest::Approx(1.0507009873554805).epsilon(1e-15));
    CHECK(selu(-1.0) == doctest::Approx(-1.1113307378125628).epsilon(1e-14));
    CHECK(selu_derivative(2.0) == doctest::Approx(kSeluScale));
    CHECK(selu_derivative(-1.0) == doctest::Approx(kSeluScale * kSeluAlpha * std::exp(-1.0)));
  }

  TEST_CASE("lecun normal init has zero biases and the expected weight scale") {
    Rng rng(1);
    const MlpParams p = MlpParams::lecun_normal({400, 300, 2}, 0.0, rng);
    CHECK(p.layers[0].bias.isZero());
    const double var = p.layers[0].weight.array().square().mean();
    CHECK(var == doctest::Approx(1.0 / 400).epsilon(0.05));
    CHECK(p.parameter_count() == 400 * 300 + 300 + 300 * 2 + 2);
  }

  TEST_CASE("forward matches a hand computation") {
    MlpParams p = MlpParams::zeros({2, 2, 1});
    p.layers[0].weight << 1.0, -1.0, 0.5, 2.0;
    p.layers[0].bias << 0.0, -1.0;
    p.layers[1].weight << 1.0, 1.0;
    p.layers[1].bias << 0.25;
    Vector x(2);
    x << 1.0, 2.0;
    // hidden pre-activations: [-1, 3.5]
    const double expected = selu(-1.0) + selu(3.5) + 0.25;
    CHECK(predict(p, x)(0) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("shape errors") {
    Rng rng(2);
    const MlpParams p = MlpParams::lecun_normal({3, 4, 2}, 0.0, rng);
    CHECK_THROWS_AS(predict(p, Matrix(Matrix::Zero(2, 5))), ShapeError);
    auto fwd = forward(p, Matrix(Matrix::Zero(2, 3)));
    CHECK_THROWS_AS(backward(p, fwd.cache, Matrix::Zero(3, 2)), ShapeError);
    CHECK_THROWS_AS(backward(p, ForwardCache{}, Matrix::Zero(2, 2)), UsageError);
    CHECK_THROWS_AS(MlpParams::lecun_normal({3, 4, 2}, 1.0, rng), UsageError);
  }

  TEST_CASE("backward matches finite differences") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const MlpParams p = MlpParams::lecun_normal({3, 5, 4, 2}, 0.0, rng);
      const Matrix x = testing::random_matrix(6, 3, rng);
      const Matrix w = testing::random_matrix(6, 2, rng);
      auto fwd = forward(p, x);
      const Gradients g = backward(p, fwd.cache, w);
      const double err = testing::gradient_relative_error(
          p, g, [&](const MlpParams& q) { return (predict(q, x).array() * w.array()).sum(); });
      CHECK(err < 1e-6);
    }
  }

  TEST_CASE("backward replays dropout masks") {
    Rng rng(4);
    const MlpParams p = MlpParams::lecun_normal({3, 6, 2}, 0.5, rng);
    const Matrix x = testing::random_matrix(4, 3, rng);
    const Matrix w = testing::random_matrix(4, 2, rng);
    Rng drop(9);
    auto fwd = forward(p, x, ForwardMode::mc_dropout, &drop);
    const Gradients g = backward(p, fwd.cache, w);
    // With the masks fixed the network is smooth in its parameters.
    auto loss = [&](const MlpParams& q) {
      Matrix h = x;
      for (std::size_t l = 0; l < q.layers.size(); ++l) {
        Matrix z = (h * q.layers[l].weight.transpose()).rowwise() + q.layers[l].bias.transpose();
        if (l + 1 < q.layers.size()) {
          h = z.unaryExpr([](double v) { return selu(v); }).cwiseProduct(fwd.cache.masks[l]);
        } else {
          h = z;
        }
      }
      return (h.array() * w.array()).sum();
    };
    CHECK(testing::gradient_relative_error(p, g, loss) < 1e-6);
  }

  TEST_CASE("deterministic forward ignores dropout") {
    Rng rng(5);
    const MlpParams p = MlpParams::lecun_normal({3, 8, 2}, 0.5, rng);
    const Matrix x = testing::random_matrix(5, 3, rng);
    CHECK(forward(p, x).output == predict(p, x));
  }

  TEST_CASE("mc_stats variance is zero without dropout and positive with it") {
    Rng rng(6);
    MlpParams p = MlpParams::lecun_normal({3, 16, 2}, 0.0, rng);
    const Matrix x = testing::random_matrix(4, 3, rng);
    Rng mc(1);
    const McStats zero = mc_stats(p, x, 10, mc);
    CHECK(zero.variance.isZero());
    CHECK((zero.mean - predict(p, x)).cwiseAbs().maxCoeff() < 1e-12);
    p.dropout_rate = 0.5;
    const McStats noisy = mc_stats(p, x, 10, mc);
    CHECK((noisy.variance.array() > 0.0).all());
    CHECK_THROWS_AS(mc_stats(p, x, 0, mc), UsageError);
  }

  TEST_CASE("softmax and logsumexp are stable") {
    Matrix z(2, 3);
    z << 1000.0, 1000.0, 1000.0, -5.0, 0.0, 5.0;
    const Matrix s = softmax_rows(z);
    CHECK(s.rowwise().sum().isApprox(Vector::Ones(2)));
    CHECK(s(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(logsumexp_rows(z)(0) == doctest::Approx(1000.0 + std::log(3.0)));
    CHECK(log_softmax_rows(z)(1, 2) == doctest::Approx(5.0 - std::log(std::exp(-5.0) + 1.0 + std::exp(5.0))));
  }

  TEST_CASE("argmax breaks ties towards the lowest index") {
    const std::vector<double> a{1.0, 3.0, 3.0};
    CHECK(argmax(a) == 1);
    const std::vector<double> b{2.0, 2.0, 2.0};
    CHECK(argmax(b) == 0);
  }

  TEST_CASE("loss gradients match finite differences") {
    Rng rng(7);
    const Matrix logits = testing::random_matrix(4, 3, rng);
    const std::vector<int> labels{0, 2, 1, 2};
    const LossAndGrad ce = cross_entropy_labels(logits, labels);
    Matrix targets = softmax_rows(testing::random_matrix(4, 3, rng));
    const LossAndGrad soft = cross_entropy_soft(logits, targets);
    const Matrix tgt = testing::random_matrix(4, 3, rng);
    const LossAndGrad mse = half_mse(logits, tgt);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      Matrix up = logits, down = logits;
      up.data()[i] += h;
      down.data()[i] -= h;
      CHECK(ce.grad.data()[i] == doctest::Approx((cross_entropy_labels(up, labels).loss - cross_entropy_labels(down, labels).loss) / (2 * h)).epsilon(1e-6));
      CHECK(soft.grad.data()[i] == doctest::Approx((cross_entropy_soft(up, targets).loss - cross_entropy_soft(down, targets).loss) / (2 * h)).epsilon(1e-6));
      CHECK(mse.grad.data()[i] == doctest::Approx((half_mse(up, tgt).loss - half_mse(down, tgt).loss) / (2 * h)).epsilon(1e-6));
    }
    Matrix uniform = Matrix::Zero(1, 2);
    const std::vector<int> zero{0};
    CHECK(cross_entropy_labels(uniform, zero).loss == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("first Adam step moves each parameter by lr against the gradient sign") {
    MlpParams p = MlpParams::zeros({2, 2, 1});
    Gradients g = Gradients::zeros_like(p);
    g.layers[0].weight << 0.5, -2.0, 0.0, 1e-3;
    g.layers[1].bias << -4.0;
    AdamState s = AdamState::for_params(p);
    adam_step(p, g, s, 0.1);
    CHECK(p.layers[0].weight(0, 0) == doctest::Approx(-0.1 * 0.5 / (0.5 + 1e-8)));
    CHECK(p.layers[0].weight(0, 1) == doctest::Approx(0.1));
    CHECK(p.layers[0].weight(1, 0) == 0.0);
    CHECK(p.layers[1].bias(0) == doctest::Approx(0.1));
    CHECK(s.step == 1);
    g.layers[0].weight(0, 0) = std::nan("");
    CHECK_THROWS_AS(adam_step(p, g, s, 0.1), TrainingError);
  }

  TEST_CASE("global norm clipping") {
    MlpParams p = MlpParams::zeros({1, 1});
    Gradients g = Gradients::zeros_like(p);
    g.layers[0].weight << 12.0;
    g.layers[0].bias << 16.0;
    CHECK(clip_global_norm(g, 10.0) == doctest::Approx(20.0));
    CHECK(g.layers[0].weight(0, 0) == doctest::Approx(6.0));
    CHECK(g.layers[0].bias(0) == doctest::Approx(8.0));
    CHECK(clip_global_norm(g, 100.0) == doctest::Approx(10.0));
    CHECK(g.layers[0].bias(0) == doctest::Approx(8.0));
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    Rng rng(8);
    Checkpoint ck{MlpParams::lecun_normal({3, 7, 2}, 0.5, rng), {{"env_id", "cartpole"}, {"role", "critic"}}};
    ck.params.layers[1].bias(0) = 1.0 / 3.0;
    std::stringstream buf;
    write_checkpoint(buf, ck);
    const Checkpoint back = read_checkpoint(buf);
    CHECK(back.params == ck.params);
    CHECK(back.meta == ck.meta);
  }

  TEST_CASE("malformed checkpoints report the line") {
    std::stringstream bad("exid-mlp 1\ndropout 0\nlayers 2 2 1\nw 1 2\nb 0\nw oops 1\n");
    try {
      read_checkpoint(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() > 0);
    }
  }
}
