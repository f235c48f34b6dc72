#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/data/dqn.hpp"
#include "exid/data/generate.hpp"
#include "exid/eval/evaluate.hpp"
#include "exid/knowledge/builtin_trees.hpp"
#include "exid/knowledge/dsl.hpp"
#include "exid/nn/functional.hpp"
#include "exid/train/bc.hpp"
#include "exid/train/exid.hpp"
#include "exid/train/losses.hpp"
#include "gradcheck.hpp"

using namespace exid;
using namespace exid::train;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.hidden = {6, 5};
  c.dropout = 0.0;
  c.batch_size = 8;
  c.total_steps = 300;
  c.steps_per_episode = 10;
  c.warm_start_k = 3;
  c.gate_check_every = 2;
  c.lr = 1e-3;
  c.teacher_lr = 1e-3;
  return c;
}

data::Dataset random_dataset(const std::string& env_id, std::size_t n, std::uint64_t seed) {
  const EnvSpec& spec = env_spec(env_id);
  Rng rng(seed);
  data::Dataset d;
  d.env_id = env_id;
  d.obs_dim = spec.obs_dim;
  d.n_actions = spec.n_actions;
  for (std::size_t i = 0; i < n; ++i) {
    data::Transition t;
    for (const auto& b : spec.obs_bounds) {
      t.s.push_back(uniform_real(rng, b.low, b.high));
      t.s_next.push_back(uniform_real(rng, b.low, b.high));
    }
    t.a = uniform_int(rng, spec.n_actions);
    t.r = uniform_real(rng, -1.0, 1.0);
    t.done = bernoulli(rng, 0.1);
    d.transitions.push_back(t);
  }
  return d;
}

teacher::TeacherPolicy fixed_teacher(const std::string& env_id, int action) {
  const EnvSpec& spec = env_spec(env_id);
  teacher::TeacherPolicy t;
  t.env_id = env_id;
  t.params = nn::MlpParams::zeros({spec.obs_dim, spec.n_actions}, 0.0);
  t.params.layers[0].bias(action) = 1.0;
  return t;
}

teacher::TeacherPolicy random_teacher(const std::string& env_id, std::uint64_t seed) {
  const EnvSpec& spec = env_spec(env_id);
  Rng rng(seed);
  teacher::TeacherPolicy t;
  t.env_id = env_id;
  t.params = nn::MlpParams::lecun_normal({spec.obs_dim, 8, spec.n_actions}, 0.0, rng);
  return t;
}

Critic with_params(const Critic& base, const nn::MlpParams& p) {
  Critic c = base;
  c.params = p;
  return c;
}

bool identical(const nn::MlpParams& a, const nn::MlpParams& b) { return a == b; }

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("uniform Q with zero Bellman residual leaves alpha log 2") {
    const double q = 0.7;
    nn::Matrix qm = nn::Matrix::Constant(4, 2, q);
    nn::Vector y = nn::Vector::Constant(4, q);
    const std::vector<int> actions{0, 1, 1, 0};
    double conservative = 0.0, bellman = 0.0;
    const OutputLoss l = cql_output_loss(qm, y, actions, 0.1, &conservative, &bellman);
    CHECK(l.loss == doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-12));
    CHECK(l.loss == doctest::Approx(0.06931).epsilon(1e-4));
    CHECK(bellman == 0.0);
  }

  TEST_CASE("alpha zero is the Bellman MSE") {
    Rng rng(1);
    const nn::Matrix qm = testing::random_matrix(5, 3, rng);
    const nn::Vector y = testing::random_matrix(5, 1, rng).col(0);
    const std::vector<int> actions{0, 2, 1, 1, 0};
    double mse = 0.0;
    for (int i = 0; i < 5; ++i) mse += std::pow(qm(i, actions[static_cast<std::size_t>(i)]) - y(i), 2);
    CHECK(cql_output_loss(qm, y, actions, 0.0).loss == doctest::Approx(0.5 * mse / 5.0).epsilon(1e-12));
  }

  TEST_CASE("Bellman targets") {
    TrainConfig cfg = tiny_config();
    Critic c = Critic::create("mountaincar", cfg, 1);
    data::Dataset d = random_dataset("mountaincar", 4, 2);
    d.transitions[1].done = true;
    d.transitions[0].done = false;
    const Batch b = make_batch(c.scaler, d.transitions);
    const nn::Vector y = bellman_targets(c.target_params, b, 0.9);
    const nn::Matrix qn = nn::predict(c.target_params, b.x_next);
    CHECK(y(0) == doctest::Approx(b.rewards(0) + 0.9 * qn.row(0).maxCoeff()));
    CHECK(y(1) == b.rewards(1));
  }

  TEST_CASE("gradient of the CQL loss") {
    TrainConfig cfg = tiny_config();
    for (int trial = 0; trial < 20; ++trial) {
      Critic c = Critic::create("cartpole", cfg, static_cast<std::uint64_t>(trial));
      Rng rng(static_cast<std::uint64_t>(100 + trial));
      c.target_params = nn::MlpParams::lecun_normal(c.params.layer_sizes, 0.0, rng);
      const data::Dataset d = random_dataset("cartpole", 6, static_cast<std::uint64_t>(trial));
      const Batch b = make_batch(c.scaler, d.transitions);
      const CqlLoss l = cql_loss(c, b, 0.3, 0.95);
      const double err = testing::gradient_relative_error(c.params, l.grads, [&](const nn::MlpParams& p) {
        return cql_loss(with_params(c, p), b, 0.3, 0.95).loss;
      });
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("gradient of the regularizer") {
    TrainConfig cfg = tiny_config();
    for (int trial = 0; trial < 20; ++trial) {
      const Critic c = Critic::create("mountaincar", cfg, static_cast<std::uint64_t>(trial));
      const data::Dataset d = random_dataset("mountaincar", 5, static_cast<std::uint64_t>(50 + trial));
      std::vector<Observation> s;
      std::vector<int> a_s, a_t;
      Rng rng(static_cast<std::uint64_t>(trial));
      for (const auto& t : d.transitions) {
        s.push_back(t.s);
        a_s.push_back(uniform_int(rng, 3));
        a_t.push_back((a_s.back() + 1 + uniform_int(rng, 2)) % 3);
      }
      const LossResult l = reg_loss(c, s, a_s, a_t);
      const double err = testing::gradient_relative_error(
          c.params, l.grads, [&](const nn::MlpParams& p) { return reg_loss(with_params(c, p), s, a_s, a_t).loss; });
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("target network receives no gradient") {
    TrainConfig cfg = tiny_config();
    Critic c = Critic::create("cartpole", cfg, 3);
    const data::Dataset d = random_dataset("cartpole", 8, 3);
    const Batch b = make_batch(c.scaler, d.transitions);
    const CqlLoss before = cql_loss(c, b, 0.1, 0.99);
    Critic shifted = c;
    shifted.target_params.layers[0].bias.array() += 0.3;
    const CqlLoss after = cql_loss(shifted, b, 0.1, 0.99);
    CHECK(before.loss != after.loss);  // the target enters the value
    CHECK(before.grads.layers.size() == c.params.layers.size());
    // Only the Bellman residual changes, so the conservative gradient part is shared: the
    // difference must be explained by the targets alone.
    const nn::Vector y1 = bellman_targets(c.target_params, b, 0.99);
    const nn::Vector y2 = bellman_targets(shifted.target_params, b, 0.99);
    const nn::Matrix q = nn::predict(c.params, b.x);
    const OutputLoss o1 = cql_output_loss(q, y1, b.actions, 0.1);
    const OutputLoss o2 = cql_output_loss(q, y2, b.actions, 0.1);
    CHECK((o1.grad - o2.grad).cwiseAbs().maxCoeff() > 0.0);
    CHECK(before.loss == doctest::Approx(o1.loss).epsilon(1e-12));
  }

  TEST_CASE("regularizer examples") {
    nn::Matrix q(1, 2);
    q << 1.0, 0.5;
    const std::vector<std::size_t> rows{0};
    CHECK(reg_output_loss(q, rows, std::vector<int>{0}, std::vector<int>{1}).loss == doctest::Approx(0.25));

    nn::Matrix q3(3, 2);
    q3 << 0.1, 0.0, 0.2, 0.0, 0.3, 0.0;
    const std::vector<std::size_t> rows3{0, 1, 2};
    const std::vector<int> as{0, 0, 0}, at{1, 1, 1};
    CHECK(reg_output_loss(q3, rows3, as, at).loss == doctest::Approx(0.014 / 0.3).epsilon(1e-9));
    CHECK(reg_output_loss(q3, rows3, as, at).loss == doctest::Approx(0.046667).epsilon(1e-5));

    const Critic c = Critic::create("mountaincar", tiny_config(), 1);
    const LossResult empty = reg_loss(c, {}, {}, {});
    CHECK(empty.loss == 0.0);
    CHECK(empty.grads.squared_norm() == 0.0);
  }

  TEST_CASE("regularizer is zero exactly when actions agree") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = uniform_int(rng, 6);
      const nn::Matrix q = testing::random_matrix(std::max(n, 1), 3, rng);
      std::vector<std::size_t> rows;
      std::vector<int> as, at;
      bool all_agree = true;
      for (int i = 0; i < n; ++i) {
        rows.push_back(static_cast<std::size_t>(i));
        as.push_back(uniform_int(rng, 3));
        at.push_back(bernoulli(rng, 0.6) ? as.back() : uniform_int(rng, 3));
        all_agree &= as.back() == at.back();
      }
      const double loss = reg_output_loss(q, rows, as, at).loss;
      CHECK((loss == 0.0) == (all_agree || n == 0));
    }
  }

  TEST_CASE("collect_matching") {
    const TrainConfig cfg = tiny_config();
    Critic c = Critic::create("mountaincar", cfg, 1);
    c.params = nn::MlpParams::zeros({2, 3}, 0.0);
    c.params.layers[0].bias(0) = 1.0;  // critic greedy action is always left
    const knowledge::Vocabulary v = knowledge::Vocabulary::for_env(env_spec("mountaincar"));
    const auto tree = knowledge::parse_tree("(guard (pos > 0) (act right))", &v);

    std::vector<data::Transition> ts;
    for (double p : {-0.5, 0.1, -0.3, 0.4, -1.0}) ts.push_back({{p, 0.0}, 0, -1.0, {p, 0.0}, false});
    const Batch b = make_batch(c.scaler, ts);

    const Matching m = collect_matching(b, tree, c, fixed_teacher("mountaincar", 2));
    REQUIRE(m.size() == 2);
    CHECK(m.rows == std::vector<std::size_t>{1, 3});
    CHECK(m.states[0][0] == 0.1);
    CHECK(m.states[1][0] == 0.4);
    CHECK(m.a_s == std::vector<int>{0, 0});
    CHECK(m.a_t == std::vector<int>{2, 2});

    CHECK(collect_matching(b, tree, c, fixed_teacher("mountaincar", 0)).empty());
    const auto never = knowledge::parse_tree("(guard (pos > 5) (act right))", &v);
    CHECK(collect_matching(b, never, c, fixed_teacher("mountaincar", 2)).empty());
  }

  TEST_CASE("combined loss") {
    TrainConfig cfg = tiny_config();
    const Critic c = Critic::create("mountaincar", cfg, 4);
    const data::Dataset d = random_dataset("mountaincar", 32, 4);
    const Batch b = make_batch(c.scaler, d.transitions);
    const auto tree = knowledge::builtin_tree("mountaincar");
    const auto teacher = random_teacher("mountaincar", 4);

    cfg.lambda = 0.0;
    const CqlLoss cql = cql_loss(c, b, cfg.alpha, cfg.gamma);
    const CombinedLoss zero = combined_loss(c, b, &tree, &teacher, cfg);
    CHECK(zero.loss == cql.loss);
    CHECK(zero.reg == 0.0);
    for (std::size_t l = 0; l < cql.grads.layers.size(); ++l) {
      CHECK(zero.grads.layers[l].weight == cql.grads.layers[l].weight);
      CHECK(zero.grads.layers[l].bias == cql.grads.layers[l].bias);
    }

    cfg.lambda = 1.0;
    const CombinedLoss one = combined_loss(c, b, &tree, &teacher, cfg);
    REQUIRE_FALSE(one.matching.empty());
    CHECK(one.reg_applied);
    CHECK(one.reg > 0.0);
    CHECK(one.loss == doctest::Approx(one.cql + one.reg).epsilon(1e-12));
    cfg.lambda = 0.5;
    const CombinedLoss half = combined_loss(c, b, &tree, &teacher, cfg);
    CHECK(half.loss == doctest::Approx(half.cql + 0.5 * half.reg).epsilon(1e-12));

    const CombinedLoss suppressed = combined_loss(c, b, &tree, &teacher, cfg, true);
    CHECK(suppressed.loss == cql.loss);
    CHECK_FALSE(suppressed.reg_applied);
  }

  TEST_CASE("a regularizer step narrows the gap") {
    TrainConfig cfg = tiny_config();
    const Critic c = Critic::create("mountaincar", cfg, 5);
    const data::Dataset d = random_dataset("mountaincar", 16, 5);
    std::vector<Observation> s;
    std::vector<int> as, at;
    for (const auto& t : d.transitions) {
      s.push_back(t.s);
      as.push_back(c.greedy_action(t.s));
      at.push_back((as.back() + 1) % 3);
    }
    auto gap = [&](const Critic& k) {
      const nn::Matrix q = k.q_batch(s);
      double g = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        g += q(static_cast<Eigen::Index>(i), as[i]) - q(static_cast<Eigen::Index>(i), at[i]);
      }
      return g;
    };
    const LossResult l = reg_loss(c, s, as, at);
    Critic stepped = c;
    for (std::size_t k = 0; k < stepped.params.layers.size(); ++k) {
      stepped.params.layers[k].weight -= 1e-3 * l.grads.layers[k].weight;
      stepped.params.layers[k].bias -= 1e-3 * l.grads.layers[k].bias;
    }
    CHECK(gap(c) > 0.0);
    CHECK(gap(stepped) < gap(c));
  }

  TEST_CASE("gate truth table") {
    CHECK(gate_decision(1.0, 0.5, 0.1, 0.2));
    CHECK_FALSE(gate_decision(0.5, 0.5, 0.1, 0.2));
    CHECK_FALSE(gate_decision(1.0, 0.5, 0.2, 0.2));
    CHECK_FALSE(gate_decision(1.0, 0.5, 0.3, 0.2));
    CHECK_FALSE(gate_decision(0.4, 0.5, 0.1, 0.2));
    CHECK_FALSE(gate_decision(0.4, 0.5, 0.3, 0.2));

    TrainConfig cfg = tiny_config();
    Rng rng(1);
    const Critic c = Critic::create("mountaincar", cfg, 1);
    CHECK_FALSE(gate_condition(c, {}, {}, {}, 10, rng).fired);

    // Without dropout both variances are zero, so the strict variance test fails.
    const std::vector<Observation> s{{-0.5, 0.0}, {0.1, 0.02}};
    const std::vector<int> as{c.greedy_action(s[0]), c.greedy_action(s[1])};
    const std::vector<int> at{(as[0] + 1) % 3, (as[1] + 1) % 3};
    const GateStats g = gate_condition(c, s, as, at, 10, rng);
    CHECK(g.var_s == 0.0);
    CHECK(g.var_t == 0.0);
    CHECK(g.mean_q_s > g.mean_q_t);
    CHECK_FALSE(g.fired);

    cfg.dropout = 0.5;
    const Critic noisy = Critic::create("mountaincar", cfg, 1);
    const GateStats gn = gate_condition(noisy, s, as, at, 10, rng);
    CHECK(gn.var_s > 0.0);
    CHECK(gn.fired == gate_decision(gn.mean_q_s, gn.mean_q_t, gn.var_s, gn.var_t));
  }

  TEST_CASE("soft update") {
    nn::MlpParams online = nn::MlpParams::zeros({1, 1}, 0.0);
    online.layers[0].weight(0, 0) = 1.0;
    online.layers[0].bias(0) = 1.0;
    nn::MlpParams target = nn::MlpParams::zeros({1, 1}, 0.0);
    soft_update(target, online, 0.1);
    CHECK(target.layers[0].weight(0, 0) == doctest::Approx(0.1));
    nn::MlpParams frozen = target;
    soft_update(frozen, online, 0.0);
    CHECK(frozen == target);
    soft_update(target, online, 1.0);
    CHECK(target == online);
  }

  TEST_CASE("lambda zero reproduces CQL bit for bit") {
    TrainConfig cfg = tiny_config();
    cfg.dropout = 0.5;
    cfg.lambda = 0.0;
    cfg.update_teacher = false;
    const data::Dataset d = random_dataset("mountaincar", 200, 6);
    const auto tree = knowledge::builtin_tree("mountaincar");
    const ExidResult a = train_exid(d, random_teacher("mountaincar", 6), tree, cfg, 11);
    const ExidResult b = train_cql(d, cfg, 11);
    CHECK(identical(a.critic.params, b.critic.params));
    CHECK(identical(a.critic.target_params, b.critic.target_params));
    CHECK(a.log.cql_loss == b.log.cql_loss);
  }

  TEST_CASE("training is deterministic and the log is consistent") {
    TrainConfig cfg = tiny_config();
    cfg.dropout = 0.5;
    const data::Dataset d = random_dataset("mountaincar", 200, 7);
    const auto tree = knowledge::builtin_tree("mountaincar");
    const auto teacher = random_teacher("mountaincar", 7);
    const ExidResult a = train_exid(d, teacher, tree, cfg, 3);
    const ExidResult b = train_exid(d, teacher, tree, cfg, 3);
    CHECK(identical(a.critic.params, b.critic.params));
    CHECK(a.log.combined_loss == b.log.combined_loss);
    CHECK(a.log.consistent());
    CHECK(a.log.steps() == static_cast<std::size_t>(cfg.total_steps));
    std::ostringstream ca, cb;
    a.log.write_csv(ca);
    b.log.write_csv(cb);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("step,cql_loss,reg_loss,combined_loss,reg_contribution,matched,gate_checked,gate_fired,teacher_updates", 0) == 0);

    for (std::size_t t = 0; t < a.log.steps(); ++t) {
      const long step = static_cast<long>(t) + 1;
      const bool due = step > cfg.warm_start_steps() && (step - cfg.warm_start_steps()) % cfg.gate_period_steps() == 0;
      if (a.log.gate_checked[t]) CHECK(due);
      if (a.log.gate_fired[t]) CHECK(a.log.reg_loss[t] == 0.0);
      for (double v : {a.log.cql_loss[t], a.log.combined_loss[t]}) CHECK(std::isfinite(v));
    }
    CHECK_FALSE(train_exid(d, teacher, tree, cfg, 4).critic.params == a.critic.params);
  }

  TEST_CASE("warm start covering the whole run never updates the teacher") {
    TrainConfig cfg = tiny_config();
    cfg.dropout = 0.5;
    cfg.warm_start_k = static_cast<int>(cfg.total_steps / cfg.steps_per_episode);
    const data::Dataset d = random_dataset("mountaincar", 200, 8);
    const auto teacher = random_teacher("mountaincar", 8);
    const ExidResult r = train_exid(d, teacher, knowledge::builtin_tree("mountaincar"), cfg, 1);
    CHECK(r.log.teacher_updates.back() == 0);
    REQUIRE(r.teacher.has_value());
    CHECK(r.teacher->params == teacher.params);
    for (bool checked : r.log.gate_checked) CHECK_FALSE(checked);
  }

  TEST_CASE("environment mismatch") {
    const data::Dataset d = random_dataset("cartpole", 10, 1);
    CHECK_THROWS_AS(train_exid(d, random_teacher("mountaincar", 1), knowledge::builtin_tree("mountaincar"),
                               tiny_config(), 1),
                    EnvMismatchError);
  }

  TEST_CASE("config parsing and defaults") {
    const TrainConfig mc = TrainConfig::defaults_for("mountaincar");
    CHECK(mc.lambda == 0.5);
    CHECK(mc.warm_start_k == 30);
    CHECK(mc.alpha == 0.1);
    CHECK(mc.lr == 1e-4);
    CHECK(mc.batch_size == 32);
    CHECK(mc.mc_passes_T == 10);
    CHECK(mc.dropout == 0.5);
    CHECK(mc.gate_check_every == 15);
    CHECK(mc.warm_start_steps() == 3000);
    CHECK(TrainConfig::defaults_for("minigrid-dynobs-6x6").lambda == 0.1);
    CHECK(TrainConfig::defaults_for("minigrid-lavagap-7x7").lambda == 0.1);

    const TrainConfig parsed = parse_train_config("# comment\nlambda = 0.25\n\nhidden = 32,16\nupdate_teacher = false\n");
    CHECK(parsed.lambda == 0.25);
    CHECK(parsed.hidden == std::vector<int>{32, 16});
    CHECK_FALSE(parsed.update_teacher);
    CHECK(parse_train_config(mc.to_text()) == mc);
    try {
      parse_train_config("lambda = 0.1\nbogus = 3\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    TrainConfig bad;
    bad.lambda = 1.5;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = TrainConfig{};
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
  }

  TEST_CASE("critic checkpoint round trip") {
    const Critic c = Critic::create("cartpole", tiny_config(), 2);
    const auto path = std::filesystem::temp_directory_path() / "exid_critic_test.ckpt";
    save_critic(path, c);
    const Critic back = load_critic(path, "cartpole");
    CHECK(back.params == c.params);
    CHECK(back.target_params == c.params);
    CHECK_THROWS_AS(load_critic(path, "mountaincar"), EnvMismatchError);
    std::filesystem::remove(path);
  }

  TEST_CASE("behavior cloning on a single action") {
    data::Dataset d = random_dataset("cartpole", 300, 3);
    for (auto& t : d.transitions) t.a = 1;
    TrainConfig cfg = tiny_config();
    cfg.total_steps = 400;
    const BcResult r = train_bc(d, cfg, 1);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const std::vector<double> s{uniform_real(rng, -2, 2), uniform_real(rng, -2, 2), uniform_real(rng, -0.2, 0.2),
                                  uniform_real(rng, -2, 2)};
      CHECK(r.policy.act(s) == 1);
    }
    for (std::size_t i = 1; i < r.epoch_loss.size(); ++i) CHECK(r.epoch_loss[i] <= r.epoch_loss[i - 1]);
  }

  TEST_CASE("cartpole baselines on expert data") {
    const data::DqnResult online = data::train_online_dqn("cartpole", data::DqnConfig::defaults_for("cartpole"), 1);
    const data::Dataset expert = data::generate_expert(online.policy, 100000, 1);
    const std::vector<std::uint64_t> seeds{1};
    const auto rule = eval::evaluate_rule(knowledge::builtin_tree("cartpole"), 10, seeds);

    const TrainConfig cfg = TrainConfig::defaults_for("cartpole");
    const BcResult bc = train_bc(expert, cfg, 1);
    for (std::size_t i = 1; i < bc.epoch_loss.size(); ++i) CHECK(bc.epoch_loss[i] <= bc.epoch_loss[i - 1]);
    const auto bc_eval = eval::evaluate_policy("cartpole", [&](std::span<const double> s) { return bc.policy.act(s); },
                                               10, seeds);
    CHECK(bc_eval.mean() > rule.mean());

    const ExidResult cql = train_cql(expert, cfg, 1);
    for (double v : cql.log.cql_loss) REQUIRE(std::isfinite(v));
    const auto cql_eval = eval::evaluate_policy(
        "cartpole", [&](std::span<const double> s) { return cql.critic.greedy_action(s); }, 10, seeds);
    CHECK(cql_eval.mean() >= 250.0);
  }
}
