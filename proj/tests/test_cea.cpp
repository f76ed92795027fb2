#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cea/cea.hpp"
#include "cea/envs.hpp"
#include "cea/replay.hpp"
#include "cea/rng.hpp"
#include "cea/runner.hpp"

using namespace cea;
using cea::augment::CeaAugmenter;
using cea::augment::CeaConfig;
using cea::augment::CtpMatch;
using cea::augment::DistanceMetric;
using replay::Action;
using replay::PerBuffer;
using replay::Provenance;
using replay::Transition;
using Vector = std::vector<double>;

namespace {

PerBuffer filled_gridworld_buffer(std::size_t capacity, int episodes,
                                  std::uint64_t seed) {
  PerBuffer buf(capacity, 0.2, 0.6, 1e-6);
  envs::GridWorld env;
  Rng rng(seed);
  for (int ep = 0; ep < episodes; ++ep) {
    Vector s = env.reset(rng.next_u64());
    bool done = false;
    while (!done) {
      const Action a = Action::make_discrete(
          static_cast<int>(rng.uniform_index(4)));
      const envs::StepResult r = env.step(a);
      buf.push({s, a, r.r, r.s_next, r.done, Provenance::Real});
      s = r.s_next;
      done = r.done;
    }
  }
  return buf;
}

}  // namespace

TEST_CASE("ctp_match: zero distance copies the reward verbatim") {
  CeaConfig cfg;
  cfg.threshold_ratio = 1.0;
  const std::vector<Vector> real = {{0, 0}, {1, 1}, {2, 2}};
  const std::vector<double> rewards = {0.25, 0.5, 0.75};
  const std::vector<Vector> cf = {{1, 1}};
  const auto matches = augment::ctp_match(cf, real, rewards, cfg);
  REQUIRE(matches.size() == 1);
  CHECK(matches[0].real_index == 1);
  CHECK(matches[0].distance == 0.0);
  CHECK(matches[0].reward == 0.5);
}

TEST_CASE("ctp_match: threshold keeps exactly ceil(ratio * n) closest pairs") {
  CeaConfig cfg;
  cfg.threshold_ratio = 0.1;
  std::vector<Vector> real = {{0.0}};
  std::vector<double> rewards = {1.0};
  std::vector<Vector> cf;
  for (int i = 0; i < 10; ++i) cf.push_back({static_cast<double>(i)});
  const auto matches = augment::ctp_match(cf, real, rewards, cfg);
  REQUIRE(matches.size() == 1);  // ceil(0.1 * 10)
  CHECK(matches[0].counterfactual_index == 0);  // the closest one

  cfg.threshold_ratio = 0.25;
  CHECK(augment::ctp_match(cf, real, rewards, cfg).size() == 3);  // ceil(2.5)

  // sorted ascending by distance
  cfg.threshold_ratio = 1.0;
  const auto all = augment::ctp_match(cf, real, rewards, cfg);
  for (std::size_t i = 1; i < all.size(); ++i)
    CHECK(all[i].distance >= all[i - 1].distance);
}

TEST_CASE("ctp_match: metric choice changes the winner") {
  CeaConfig cfg;
  cfg.threshold_ratio = 1.0;
  // query (0.9, 0.9): euclidean favors (1.2, 1.2), manhattan favors (0.3, 0.9)
  const std::vector<Vector> real = {{1.2, 1.2}, {0.3, 0.9}};
  const std::vector<double> rewards = {1.0, 2.0};
  const std::vector<Vector> cf = {{0.9, 0.9}};
  cfg.metric = DistanceMetric::Euclidean;
  CHECK(augment::ctp_match(cf, real, rewards, cfg)[0].real_index == 0);
  cfg.metric = DistanceMetric::Manhattan;
  // manhattan: |0.9-1.2|*2 = 0.6 vs |0.9-0.3| = 0.6 -- tie, first wins
  CHECK(augment::ctp_match(cf, real, rewards, cfg)[0].distance ==
        doctest::Approx(0.6));

  CHECK_THROWS_AS(augment::ctp_match(cf, {}, {}, cfg), std::invalid_argument);
}

TEST_CASE("ctp_match: gridworld treasure transition shares its reward") {
  envs::GridWorld env;
  // enumerate every real transition as the pool
  std::vector<Vector> real;
  std::vector<double> rewards;
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x)
      for (int a = 0; a < 4; ++a) {
        const auto o = env.transition(x, y, a);
        real.push_back(env.observe(o.x, o.y));
        rewards.push_back(o.r);
      }
  // a counterfactual landing exactly on the treasure cell
  const std::vector<Vector> cf = {env.observe(5, 5)};
  CeaConfig cfg;
  cfg.threshold_ratio = 1.0;
  const auto matches = augment::ctp_match(cf, real, rewards, cfg);
  CHECK(matches[0].distance == 0.0);
  CHECK(matches[0].reward == 1.0);
}

TEST_CASE("done_flag_policy copies the matched transition's flag") {
  Transition terminal;
  terminal.done = true;
  Transition ongoing;
  ongoing.done = false;
  CHECK(augment::done_flag_policy(terminal));
  CHECK_FALSE(augment::done_flag_policy(ongoing));
}

TEST_CASE("augment: refuses an untrained model, respects the stop fraction") {
  PerBuffer buf = filled_gridworld_buffer(512, 8, 1);
  Rng rng(2);
  sta::ActionEncoding enc{true, 4, 1.0};
  Rng mrng(3);
  sta::StaModel untrained(4, enc, {}, mrng);

  CeaConfig cfg;
  kde::SamplerConfig scfg;
  CeaAugmenter aug(cfg, scfg);
  CHECK_THROWS_AS(aug.augment(buf, untrained, rng), std::runtime_error);

  // full-enough buffer: zero work
  sta::StaModel trained = untrained;
  trained.mark_trained();
  CeaConfig stop_cfg;
  stop_cfg.stop_at_fill_fraction = 0.01;
  CeaAugmenter aug2(stop_cfg, scfg);
  const auto res = aug2.augment(buf, trained, rng);
  CHECK(res.added == 0);
  CHECK(res.candidates == 0);
}

TEST_CASE("augment: discrete expansion, retention and annealing counts") {
  runner::EnvParams ep;
  const auto env = runner::build_env("gridworld", ep);
  Rng prng(11);
  Rng sta_rng = prng.substream("sta");
  const sta::StaModel model =
      runner::pretrain_sta(*env, 1500, 600, 128, {}, sta_rng);

  PerBuffer buf = filled_gridworld_buffer(4096, 40, 4);
  const auto [real_before, cf_before] = buf.counts();
  REQUIRE(cf_before == 0);

  CeaConfig cfg;
  cfg.base_batch = 32;
  cfg.threshold_ratio = 0.1;
  cfg.injection_cap = 128;
  cfg.anneal_decay = 0.9;
  kde::SamplerConfig scfg;
  CeaAugmenter aug(cfg, scfg);
  Rng rng(5);

  const auto r1 = aug.augment(buf, model, rng);
  // 32 sources x 3 complementary actions
  CHECK(r1.candidates == 96);
  CHECK(r1.retained == 10);  // ceil(0.1 * 96)
  CHECK(r1.added == 10);
  const auto [real_after, cf_after] = buf.counts();
  CHECK(real_after == real_before);
  CHECK(cf_after == 10);

  // added counts never increase across calls
  int prev = r1.added;
  for (int call = 0; call < 9; ++call) {
    const auto r = aug.augment(buf, model, rng);
    CHECK(r.added <= prev);
    prev = r.added;
  }
  CHECK(aug.current_cap() < 128.0);

  // injected counterfactuals: reward comes from the nearest real neighbor
  std::size_t checked = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Transition& t = buf.at(i);
    if (t.provenance != Provenance::Counterfactual) continue;
    double best_d = 1e18;
    double best_r = 0.0;
    bool best_done = false;
    for (std::size_t j = 0; j < buf.size(); ++j) {
      const Transition& o = buf.at(j);
      if (o.provenance != Provenance::Real) continue;
      double d = 0.0;
      for (std::size_t k = 0; k < t.s_next.size(); ++k)
        d += (t.s_next[k] - o.s_next[k]) * (t.s_next[k] - o.s_next[k]);
      d = std::sqrt(d);
      if (d < best_d) {
        best_d = d;
        best_r = o.r;
        best_done = o.done;
      }
    }
    CHECK(t.r == best_r);
    CHECK(t.done == best_done);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("augment: never mutates stored real transitions") {
  runner::EnvParams ep;
  const auto env = runner::build_env("gridworld", ep);
  Rng prng(12);
  Rng sta_rng = prng.substream("sta");
  const sta::StaModel model =
      runner::pretrain_sta(*env, 1000, 400, 128, {}, sta_rng);

  PerBuffer buf = filled_gridworld_buffer(4096, 20, 6);
  std::vector<Transition> before;
  for (std::size_t i = 0; i < buf.size(); ++i) before.push_back(buf.at(i));

  CeaConfig cfg;
  kde::SamplerConfig scfg;
  CeaAugmenter aug(cfg, scfg);
  Rng rng(7);
  aug.augment(buf, model, rng);

  for (std::size_t i = 0; i < before.size(); ++i) {
    const Transition& now = buf.at(i);
    CHECK(now.s == before[i].s);
    CHECK(now.r == before[i].r);
    CHECK(now.s_next == before[i].s_next);
    CHECK(now.done == before[i].done);
    CHECK(now.provenance == Provenance::Real);
  }
}

TEST_CASE("augment: continuous spaces sample entropy-optimized actions") {
  runner::EnvParams ep;
  ep.pend_max_steps = 60;
  const auto env = runner::build_env("pendulum", ep);
  Rng prng(13);
  Rng sta_rng = prng.substream("sta");
  const sta::StaModel model =
      runner::pretrain_sta(*env, 600, 250, 64, {}, sta_rng);

  PerBuffer buf(4096, 0.2, 0.6, 1e-6);
  Rng erng(8);
  Vector s = env->reset(erng.next_u64());
  for (int step = 0; step < 200; ++step) {
    const Action a = Action::make_continuous({erng.uniform(-2, 2)});
    const envs::StepResult r = env->step(a);
    buf.push({s, a, r.r, r.s_next, r.done, Provenance::Real});
    s = r.done ? env->reset(erng.next_u64()) : r.s_next;
  }

  CeaConfig cfg;
  cfg.base_batch = 8;
  kde::SamplerConfig scfg;
  scfg.n_samples = 3;
  scfg.iters = 30;
  scfg.bounds = {{-2.0, 2.0}};
  CeaAugmenter aug(cfg, scfg);
  Rng rng(9);
  const auto res = aug.augment(buf, model, rng);
  CHECK(res.candidates == 24);  // 8 sources x 3 samples
  CHECK(res.retained == 3);     // ceil(0.1 * 24)
  CHECK(res.added == 3);
  // injected actions are continuous and within bounds
  std::size_t cf_seen = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Transition& t = buf.at(i);
    if (t.provenance != Provenance::Counterfactual) continue;
    REQUIRE_FALSE(t.a.discrete());
    CHECK(std::fabs(t.a.value[0]) <= 2.0);
    ++cf_seen;
  }
  CHECK(cf_seen == 3);
}
