#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "exid/common/error.hpp"
#include "exid/common/rng.hpp"
#include "exid/data/dataset.hpp"
#include "exid/data/dqn.hpp"
#include "exid/data/generate.hpp"
#include "exid/data/reduction.hpp"
#include "exid/env/cartpole.hpp"
#include "exid/env/mountain_car.hpp"
#include "exid/knowledge/dsl.hpp"

using namespace exid;
using namespace exid::data;

namespace {

data::QPolicy random_policy(const std::string& env_id, std::uint64_t seed) {
  const EnvSpec& spec = env_spec(env_id);
  Rng rng(seed);
  return {env_id, nn::MlpParams::lecun_normal({spec.obs_dim, 16, spec.n_actions}, 0.0, rng)};
}

Dataset small_dataset(std::size_t n) {
  Dataset d;
  d.env_id = "mountaincar";
  d.obs_dim = 2;
  d.n_actions = 3;
  d.meta.seed = 5;
  Rng rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    t.s = {uniform_real(rng, -1.2, 0.6), uniform_real(rng, -0.07, 0.07)};
    t.a = uniform_int(rng, 3);
    t.r = -1.0;
    t.s_next = {uniform_real(rng, -1.2, 0.6), uniform_real(rng, -0.07, 0.07)};
    t.done = i % 97 == 0;
    d.transitions.push_back(t);
  }
  return d;
}

std::size_t occupied_bins(const Dataset& d) {
  const StateDiscretizer disc(env_spec(d.env_id));
  std::set<std::string> keys;
  for (const auto& t : d.transitions) keys.insert(disc.key(t.s));
  return keys.size();
}

const DqnResult& trained(const std::string& env_id) {
  static std::map<std::string, DqnResult> cache;
  auto it = cache.find(env_id);
  if (it == cache.end()) it = cache.emplace(env_id, train_online_dqn(env_id, DqnConfig::defaults_for(env_id), 1)).first;
  return it->second;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("dataset kind names") {
    CHECK(parse_kind("expert") == DatasetKind::expert);
    CHECK(parse_kind("replay") == DatasetKind::replay);
    CHECK(to_string(DatasetKind::noisy) == "noisy");
    CHECK_THROWS_AS(parse_kind("medium"), UsageError);
  }

  TEST_CASE("save then load is bit exact") {
    Dataset d = small_dataset(50);
    d.transitions[0].r = 0.1;
    d.transitions[1].r = std::numeric_limits<double>::denorm_min();
    d.transitions[2].r = -0.0;
    d.transitions[3].r = 1.0 / 3.0;
    d.transitions[4].s[0] = std::nextafter(-0.5, 0.0);
    d.meta.epsilon = 0.2;
    d.meta.source_score = -112.25;
    d.kind = DatasetKind::noisy;
    std::stringstream ss;
    write_dataset(ss, d);
    const Dataset back = read_dataset(ss);
    CHECK(back == d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(bit_equal(back.transitions[i].r, d.transitions[i].r));
      for (std::size_t k = 0; k < 2; ++k) {
        CHECK(bit_equal(back.transitions[i].s[k], d.transitions[i].s[k]));
        CHECK(bit_equal(back.transitions[i].s_next[k], d.transitions[i].s_next[k]));
      }
    }
  }

  TEST_CASE("malformed files report the line") {
    const Dataset d = small_dataset(3);
    std::stringstream ss;
    write_dataset(ss, d);
    std::string text = ss.str();

    std::string wrong_count = text;
    wrong_count.replace(wrong_count.find("count=3"), 7, "count=4");
    std::stringstream a(wrong_count);
    CHECK_THROWS_AS(read_dataset(a), ParseError);

    std::string bad_row = text;
    const std::size_t third = bad_row.find('\n', bad_row.find('\n', bad_row.find('\n') + 1) + 1);
    bad_row.insert(third, " extra");
    std::stringstream b(bad_row);
    try {
      read_dataset(b);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }

    std::stringstream c("not-a-dataset\n");
    CHECK_THROWS_AS(read_dataset(c), ParseError);
  }

  TEST_CASE("loading into the wrong environment") {
    const Dataset d = small_dataset(4);
    const auto path = std::filesystem::temp_directory_path() / "exid_test_env_mismatch.txt";
    save_dataset(path, d);
    CHECK(load_dataset(path, "mountaincar") == d);
    CHECK_THROWS_AS(load_dataset(path, "cartpole"), EnvMismatchError);
    CHECK_THROWS_AS(require_env(d, "cartpole"), EnvMismatchError);
    std::filesystem::remove(path);
  }

  TEST_CASE("validation") {
    Dataset d = small_dataset(2);
    CHECK_NOTHROW(d.validate());
    d.transitions[0].a = 3;
    CHECK_THROWS(d.validate());
    d.transitions[0].a = 0;
    d.transitions[1].r = std::nan("");
    CHECK_THROWS(d.validate());
    Dataset empty = small_dataset(0);
    CHECK_THROWS(empty.validate());
  }

  TEST_CASE("reduce takes a fraction first") {
    const Dataset d = small_dataset(1000);
    ReductionSpec spec;
    spec.fraction = 0.1;
    const Dataset r = reduce(d, spec);
    CHECK(r.size() == 100);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.transitions[i] == d.transitions[i]);
    spec.fraction = 0.0;
    CHECK_THROWS_AS(spec.validate(), UsageError);
  }

  TEST_CASE("random take is seeded and keeps order") {
    const Dataset d = small_dataset(1000);
    ReductionSpec spec;
    spec.fraction = 0.1;
    spec.take = TakeMode::random;
    spec.seed = 4;
    const Dataset a = reduce(d, spec);
    CHECK(a.size() == 100);
    CHECK(a == reduce(d, spec));
    spec.seed = 5;
    CHECK_FALSE(a == reduce(d, spec));
    std::size_t cursor = 0;
    for (const auto& t : a.transitions) {
      while (cursor < d.size() && !(d.transitions[cursor] == t)) ++cursor;
      CHECK(cursor < d.size());
      ++cursor;
    }
  }

  TEST_CASE("removal predicate") {
    const Dataset d = small_dataset(1000);
    const auto v = knowledge::Vocabulary::for_env(env_spec("mountaincar"));
    ReductionSpec spec;
    spec.removal = knowledge::parse_predicate("pos > -0.8", v);
    const Dataset r = reduce(d, spec);
    CHECK(r.size() > 0);
    CHECK(r.size() < d.size());
    for (const auto& t : r.transitions) CHECK_FALSE(t.s[0] > -0.8);
    CHECK(reduce(r, spec) == r);

    spec.removal = knowledge::parse_predicate("pos > -2", v);
    CHECK_THROWS_AS(reduce(d, spec), EmptyDatasetError);
  }

  TEST_CASE("verify_reduced") {
    const Dataset d = small_dataset(500);
    const ReductionReport same = verify_reduced(d, d);
    CHECK_FALSE(same.proper_subset);
    CHECK_FALSE(same.ok());
    CHECK_FALSE(same.violations().empty());
    CHECK_THROWS_AS(require_reduced(d, d), VerificationError);

    Dataset one_less = d;
    one_less.transitions.pop_back();
    const ReductionReport r = verify_reduced(d, one_less);
    CHECK(r.proper_subset);
    CHECK(r.counts_reduced);

    Dataset foreign = one_less;
    foreign.transitions[0].r = 5.0;
    CHECK_FALSE(verify_reduced(d, foreign).proper_subset);

    Dataset other_env = d;
    other_env.env_id = "cartpole";
    CHECK_THROWS_AS(verify_reduced(d, other_env), EnvMismatchError);

    ReductionSpec spec;
    spec.fraction = 0.1;
    spec.removal = knowledge::parse_predicate("pos > -0.8", knowledge::Vocabulary::for_env(env_spec("mountaincar")));
    const ReductionReport standard = require_reduced(d, reduce(d, spec));
    CHECK(standard.ok());
    CHECK(standard.absent_states > 0);
  }

  TEST_CASE("expert generation is greedy and replays through the model") {
    for (const char* id : {"mountaincar", "cartpole"}) {
      const QPolicy p = random_policy(id, 3);
      const Dataset d = generate_expert(p, 2000, 7);
      CHECK(d.size() == 2000);
      CHECK(d.kind == DatasetKind::expert);
      CHECK(d.env_id == id);
      CHECK_NOTHROW(d.validate());
      for (const auto& t : d.transitions) CHECK(t.a == p.act(t.s));
      CHECK(generate_expert(p, 2000, 7) == d);
      for (std::size_t i = 0; i < d.size(); i += 37) {
        const Transition& t = d.transitions[i];
        StepResult st;
        if (std::string(id) == "mountaincar") {
          env::MountainCar e;
          e.reset(0);
          e.set_state(t.s[0], t.s[1]);
          st = e.step(t.a);
        } else {
          env::CartPole e;
          e.reset(0);
          e.set_state({t.s[0], t.s[1], t.s[2], t.s[3]});
          st = e.step(t.a);
        }
        CHECK(st.observation == t.s_next);
        CHECK(st.reward == t.r);
        if (t.done) CHECK(st.done);
      }
    }
  }

  TEST_CASE("noisy generation") {
    const QPolicy p = random_policy("mountaincar", 8);
    const Dataset expert = generate_expert(p, 5000, 2);
    Dataset zero = generate_noisy(p, 0.0, 5000, 2);
    CHECK(zero.transitions == expert.transitions);
    CHECK(zero.kind == DatasetKind::noisy);

    const std::size_t n = 10000;
    const Dataset uniform = generate_noisy(p, 1.0, n, 2);
    std::array<double, 3> counts{};
    for (const auto& t : uniform.transitions) counts[static_cast<std::size_t>(t.a)] += 1.0;
    const double mean = n / 3.0;
    const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
    for (double c : counts) CHECK(std::abs(c - mean) <= 3.0 * sigma);

    const Dataset noisy = generate_noisy(p, 0.2, n, 2);
    CHECK(noisy.meta.epsilon == 0.2);
    double off = 0.0;
    for (const auto& t : noisy.transitions) off += t.a != p.act(t.s);
    const double q = 0.2 * 2.0 / 3.0;
    CHECK(std::abs(off - n * q) <= 3.0 * std::sqrt(n * q * (1.0 - q)));
  }

  TEST_CASE("replay takes the head of the log") {
    const QPolicy p = random_policy("cartpole", 1);
    const Dataset src = generate_expert(p, 300, 1);
    const Dataset r = generate_replay("cartpole", src.transitions, 300, 9);
    CHECK(r.kind == DatasetKind::replay);
    CHECK(r.transitions == src.transitions);
    const Dataset head = generate_replay("cartpole", src.transitions, 120, 9);
    CHECK(head.size() == 120);
    for (std::size_t i = 0; i < head.size(); ++i) CHECK(head.transitions[i] == src.transitions[i]);
    CHECK_THROWS_AS(generate_replay("cartpole", src.transitions, 301, 9), UsageError);
  }

  TEST_CASE("minigrid discretization is exact") {
    const StateDiscretizer disc(env_spec("minigrid-lavagap-7x7"));
    std::vector<double> a(98, 0.1), b(98, 0.1);
    CHECK(disc.key(a) == disc.key(b));
    b[52] = 0.9;
    CHECK(disc.key(a) != disc.key(b));
    const StateDiscretizer mc(env_spec("mountaincar"));
    CHECK(mc.key(std::vector<double>{-0.5, 0.0}) == mc.key(std::vector<double>{-0.5 + 1e-5, 0.0}));
    CHECK(mc.key(std::vector<double>{-5.0, 0.0}) == mc.key(std::vector<double>{-1.2, 0.0}));
  }

  TEST_CASE("cartpole online dqn reaches 300") {
    const DqnResult& r = trained("cartpole");
    CHECK(static_cast<long>(r.log.size()) == DqnConfig::defaults_for("cartpole").total_steps);
    CHECK(greedy_return(r.policy, 10, 77) >= 300.0);
  }

  TEST_CASE("mountaincar online dqn and dataset coverage") {
    const DqnResult& r = trained("mountaincar");
    CHECK(static_cast<long>(r.log.size()) == DqnConfig::defaults_for("mountaincar").total_steps);
    CHECK(greedy_return(r.policy, 10, 77) >= -150.0);

    const std::size_t n = 20000;
    const Dataset expert = generate_expert(r.policy, n, 3);
    const Dataset noisy = generate_noisy(r.policy, 0.2, n, 3);
    CHECK(occupied_bins(expert) < occupied_bins(noisy));
    // The whole training log against an expert dataset of the same size.
    const Dataset replay = generate_replay("mountaincar", r.log, r.log.size(), 3);
    CHECK(occupied_bins(replay) >= occupied_bins(generate_expert(r.policy, r.log.size(), 3)));

    ReductionSpec spec;
    spec.fraction = 0.1;
    spec.removal = knowledge::parse_predicate("pos > -0.8", knowledge::Vocabulary::for_env(env_spec("mountaincar")));
    CHECK(require_reduced(expert, reduce(expert, spec)).ok());
  }
}
