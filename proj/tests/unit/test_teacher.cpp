#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/data/batching.hpp"
#include "exid/env/minigrid.hpp"
#include "exid/eval/evaluate.hpp"
#include "exid/knowledge/builtin_trees.hpp"
#include "exid/knowledge/dsl.hpp"
#include "exid/nn/functional.hpp"
#include "exid/teacher/teacher.hpp"
#include "gradcheck.hpp"

using namespace exid;
using namespace exid::teacher;

namespace {

TeacherPolicy constant_logits(std::vector<double> logits) {
  TeacherPolicy t;
  t.env_id = "mountaincar";
  t.params = nn::MlpParams::zeros({2, static_cast<int>(logits.size())}, 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) t.params.layers[0].bias(static_cast<Eigen::Index>(i)) = logits[i];
  return t;
}

TeacherPolicy random_teacher(const std::string& env_id, std::uint64_t seed) {
  const EnvSpec& spec = env_spec(env_id);
  Rng rng(seed);
  TeacherPolicy t;
  t.env_id = env_id;
  t.params = nn::MlpParams::lecun_normal({spec.obs_dim, 8, 8, spec.n_actions}, 0.0, rng);
  return t;
}

const TeacherPolicy& mountaincar_teacher() {
  static const TeacherPolicy t = [] {
    Rng rng = make_rng(1, "teacher.states");
    const auto states = sample_synthetic_states("mountaincar", 50000, rng);
    return train_teacher_bc(knowledge::builtin_tree("mountaincar"), states, TeacherConfig{}, 1);
  }();
  return t;
}

}  // namespace

TEST_SUITE("teacher") {
  TEST_CASE("teacher_action picks the largest logit, lowest index on ties") {
    const std::vector<double> s{0.0, 0.0};
    CHECK(teacher_action(constant_logits({2, 1, 0}), s) == 0);
    CHECK(teacher_action(constant_logits({1, 1, 1}), s) == 0);
    CHECK(teacher_action(constant_logits({0, 5, 0}), s) == 1);
    const nn::Matrix p = constant_logits({0, 5, 0}).probabilities({s, s});
    CHECK(p.rows() == 2);
    CHECK(p.row(0).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("uniform synthetic states for gym environments") {
    Rng rng(4);
    const std::size_t n = 10000;
    const auto states = sample_synthetic_states("mountaincar", n, rng);
    REQUIRE(states.size() == n);
    const EnvSpec& spec = env_spec("mountaincar");
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& b = spec.obs_bounds[k];
      double mean = 0.0;
      for (const auto& s : states) {
        CHECK(s[k] >= b.low);
        CHECK(s[k] <= b.high);
        mean += s[k];
      }
      mean /= static_cast<double>(n);
      const double sigma = (b.high - b.low) / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
      CHECK(std::abs(mean - 0.5 * (b.low + b.high)) <= 3.0 * sigma);
    }
    Rng a(9), b(9);
    CHECK(sample_synthetic_states("cartpole", 100, a) == sample_synthetic_states("cartpole", 100, b));
  }

  TEST_CASE("minigrid synthetic states are distinct valid observations") {
    for (const char* id : {"minigrid-dynobs-6x6", "minigrid-lavagap-7x7"}) {
      Rng rng(2);
      const auto states = sample_synthetic_states(id, 500, rng);
      CHECK(states.size() > 100);
      CHECK(states.size() <= 500);
      std::set<Observation> unique(states.begin(), states.end());
      CHECK(unique.size() == states.size());
      for (const auto& s : states) {
        for (int idx : {env::view::kFront, env::view::kRight, env::view::kLeft}) {
          const double v = s[static_cast<std::size_t>(idx)];
          const bool valid = v == env::code::empty || v == env::code::wall || v == env::code::ball ||
                             v == env::code::goal || v == env::code::lava;
          CHECK(valid);
        }
      }
    }
  }

  TEST_CASE("gradient of the behavior cloning loss") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const auto params = nn::MlpParams::lecun_normal({3, 5, 4, 3}, 0.0, rng);
      const nn::Matrix x = testing::random_matrix(6, 3, rng);
      std::vector<int> labels(6);
      for (int& l : labels) l = uniform_int(rng, 3);
      const LossWithGrads lg = bc_loss(params, x, labels);
      const double err = testing::gradient_relative_error(
          params, lg.grads, [&](const nn::MlpParams& p) { return bc_loss(p, x, labels).loss; });
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("gradient of the distillation loss") {
    Rng rng(18);
    for (int trial = 0; trial < 20; ++trial) {
      const auto params = nn::MlpParams::lecun_normal({3, 5, 4, 3}, 0.0, rng);
      const nn::Matrix x = testing::random_matrix(6, 3, rng);
      const nn::Matrix q = testing::random_matrix(6, 3, rng, 3.0);
      const LossWithGrads lg = distillation_loss(params, x, q);
      const double err = testing::gradient_relative_error(
          params, lg.grads, [&](const nn::MlpParams& p) { return distillation_loss(p, x, q).loss; });
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("distillation loss value") {
    // One state, teacher uniform over 2 actions, critic Q = [0, 0]: -sum 0.5 log 0.5 = log 2.
    nn::MlpParams p = nn::MlpParams::zeros({1, 2}, 0.0);
    const nn::Matrix x = nn::Matrix::Zero(1, 1);
    const nn::Matrix q = nn::Matrix::Zero(1, 2);
    CHECK(distillation_loss(p, x, q).loss == doctest::Approx(std::log(2.0)));
    const nn::Matrix q2 = nn::Matrix::Zero(2, 2);
    CHECK(distillation_loss(p, nn::Matrix::Zero(2, 1), q2).loss == doctest::Approx(2.0 * std::log(2.0)));
  }

  TEST_CASE("matched distributions are a fixed point") {
    TeacherPolicy t = random_teacher("mountaincar", 3);
    Rng rng(3);
    const auto states = sample_synthetic_states("mountaincar", 16, rng);
    const InputScaler scaler(env_spec("mountaincar"));
    const nn::Matrix q = t.logits(data::scaled_matrix(scaler, states));  // softmax(q) == teacher
    const TeacherPolicy before = t;
    update_teacher(t, q, states, 0.5);
    for (std::size_t l = 0; l < t.params.layers.size(); ++l) {
      CHECK((t.params.layers[l].weight - before.params.layers[l].weight).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("zero learning rate and empty batches leave the teacher unchanged") {
    TeacherPolicy t = random_teacher("mountaincar", 4);
    const TeacherPolicy before = t;
    Rng rng(4);
    const auto states = sample_synthetic_states("mountaincar", 8, rng);
    nn::Matrix q = nn::Matrix::Zero(8, 3);
    q.col(2).setConstant(5.0);
    update_teacher(t, q, states, 0.0);
    CHECK(t.params == before.params);
    update_teacher(t, nn::Matrix(0, 3), {}, 0.1);
    CHECK(t.params == before.params);
  }

  TEST_CASE("repeated updates follow a confident critic") {
    TeacherPolicy t = random_teacher("mountaincar", 5);
    Rng rng(5);
    const auto states = sample_synthetic_states("mountaincar", 32, rng);
    nn::Matrix q = nn::Matrix::Zero(32, 3);
    q.col(0).setConstant(10.0);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 300; ++i) {
      last = update_teacher(t, q, states, 0.01);
      if (i == 0) first = last;
    }
    CHECK(last < first);
    for (const auto& s : states) CHECK(teacher_action(t, s) == 0);
    CHECK(t.update_count == 300);
  }

  TEST_CASE("one small update barely moves held-out behavior") {
    TeacherPolicy t = random_teacher("cartpole", 6);
    Rng rng(6);
    const auto batch = sample_synthetic_states("cartpole", 32, rng);
    const auto held_out = sample_synthetic_states("cartpole", 2000, rng);
    std::vector<int> before;
    for (const auto& s : held_out) before.push_back(teacher_action(t, s));
    nn::Matrix q = testing::random_matrix(32, 2, rng, 5.0);
    update_teacher(t, q, batch, 1e-4);
    int same = 0;
    for (std::size_t i = 0; i < held_out.size(); ++i) same += teacher_action(t, held_out[i]) == before[i];
    CHECK(same >= 0.99 * static_cast<double>(held_out.size()));
  }

  TEST_CASE("constant tree gives a constant teacher") {
    const knowledge::Vocabulary v = knowledge::Vocabulary::for_env(env_spec("mountaincar"));
    Rng rng(7);
    const auto states = sample_synthetic_states("mountaincar", 2000, rng);
    TeacherConfig cfg;
    cfg.hidden = {16};
    const TeacherPolicy t = train_teacher_bc(knowledge::parse_tree("(act left)", &v), states, cfg, 7);
    Rng probe(8);
    for (const auto& s : sample_synthetic_states("mountaincar", 500, probe)) CHECK(teacher_action(t, s) == 0);
  }

  TEST_CASE("unreachable agreement is a training error") {
    const knowledge::Vocabulary v = knowledge::Vocabulary::for_env(env_spec("mountaincar"));
    Rng rng(9);
    const auto states = sample_synthetic_states("mountaincar", 500, rng);
    TeacherConfig cfg;
    cfg.hidden = {2};
    cfg.max_epochs = 1;
    cfg.required_agreement = 1.0;
    cfg.early_stop_agreement = 1.0;
    const auto tree = knowledge::parse_tree(
        "(if (pos > 0) (if (vel > 0) (act left) (act right)) (if (vel > 0) (act right) (act noop)))", &v);
    CHECK_THROWS_AS(train_teacher_bc(tree, states, cfg, 1), TrainingError);
    CHECK_THROWS_AS(train_teacher_bc(tree, {}, cfg, 1), UsageError);
  }

  TEST_CASE("mountaincar teacher from the built-in tree") {
    const TeacherPolicy& t = mountaincar_teacher();
    CHECK(t.holdout_agreement >= 0.95);
    CHECK(t.sample_count == 50000);
    REQUIRE(!t.loss_curve.empty());
    for (std::size_t i = 1; i < t.loss_curve.size(); ++i) CHECK(t.loss_curve[i] <= t.loss_curve[i - 1]);

    const std::vector<std::uint64_t> seeds{1};
    const auto report = eval::evaluate_policy(
        "mountaincar", [&](std::span<const double> s) { return teacher_action(t, s); }, 10, seeds);
    // Rule baseline band: -159.9 +- 52.28.
    CHECK(report.mean() >= -159.9 - 52.28);
    CHECK(report.mean() <= -159.9 + 52.28);
  }

  TEST_CASE("checkpoint round trip") {
    TeacherPolicy t = random_teacher("cartpole", 10);
    t.sample_count = 123;
    t.holdout_agreement = 0.975;
    const auto path = std::filesystem::temp_directory_path() / "exid_teacher_test.ckpt";
    save_teacher(path, t);
    const TeacherPolicy back = load_teacher(path, "cartpole");
    CHECK(back.params == t.params);
    CHECK(back.env_id == "cartpole");
    CHECK(back.sample_count == 123);
    CHECK(back.holdout_agreement == 0.975);
    CHECK_THROWS_AS(load_teacher(path, "mountaincar"), EnvMismatchError);
    std::filesystem::remove(path);
  }
}
