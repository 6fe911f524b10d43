#include <doctest.h>

#include "hypermorl/envs.hpp"
#include "hypermorl/trainer.hpp"

using namespace hypermorl;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.total_steps = 20000;
  cfg.alpha = 0.15;
  cfg.num_preferences = 4;
  cfg.d = 3;
  cfg.lr = 2e-4;
  cfg.seed = 5;
  cfg.policy_hidden = {8};
  cfg.embedding_hidden = {8};
  cfg.policy_output_gain = 0.01;
  cfg.ppo.critic_hidden = {16};
  cfg.ppo.min_log_std = -1.5;
  cfg.snapshot_count = 2;
  cfg.eval_resolution = 5;
  cfg.eval_episodes = 4;
  return cfg;
}

std::vector<Trajectory> one_rollout(const Environment& env, const MlpLayout& layout,
                                    const FlatParams& theta, std::uint64_t seed) {
  auto local = env.clone();
  local->seed(seed);
  Rng rng(seed);
  return {rollout(*local, layout, theta, rng)};
}

AdvantageBatch fake_advantages(const Trajectory& traj, Rng& rng) {
  std::normal_distribution<double> normal;
  AdvantageBatch adv;
  adv.log_probs = traj.log_probs;
  for (int t = 0; t < traj.length(); ++t) {
    Vec a(traj.rewards[t].size());
    for (int i = 0; i < a.size(); ++i) a[i] = normal(rng);
    adv.advantages.push_back(a);
  }
  return adv;
}

}  // namespace

TEST_CASE("default hyperparameters") {
  const TrainConfig cfg;
  CHECK(cfg.lr == 5e-5);
  CHECK(cfg.alpha == 0.15);
  CHECK(cfg.d == 10);
  CHECK(cfg.num_preferences == 6);
}

TEST_CASE("compute_stage_iterations") {
  const auto s = compute_stage_iterations(1000, 0.15, 5, 10);
  CHECK(s.warmup == 15);
  CHECK(s.psl == 17);
  CHECK(compute_stage_iterations(1000, 0.0, 5, 10).warmup == 0);
  for (long T : {999L, 12345L, 2000000L}) {
    for (double a : {0.0, 0.05, 0.1, 0.15, 0.2, 0.33}) {
      const auto st = compute_stage_iterations(T, a, 6, 50);
      CHECK(st.warmup * 50 + st.psl * 6 * 50 <= T);
    }
  }
}

TEST_CASE("warmup with zero iterations only resets exploration") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  TrainingState state = init_training(cfg, env.spec());
  const Slice& ls = state.phi.policy.log_std_slice();
  state.phi.b.segment(ls.offset, ls.length).setConstant(-2.0);
  HypernetParams expected = state.phi;
  expected.b = reset_exploration(expected.b, expected.policy);
  warmup(state, env, 0, cfg);
  CHECK(state.phi == expected);
  CHECK(state.env_steps == 0);
}

TEST_CASE("warmup trains b only and improves the uniform-preference return") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  TrainingState state = init_training(cfg, env.spec());
  const RowMat W0 = state.phi.W;
  const Vec mu0 = state.phi.mu;
  warmup(state, env, 300, cfg);
  CHECK(state.phi.W.isZero());
  CHECK(state.phi.W == W0);
  CHECK(state.phi.mu == mu0);
  const Slice& ls = state.phi.policy.log_std_slice();
  CHECK(state.phi.b.segment(ls.offset, ls.length).isZero());
  REQUIRE(state.log.records.size() == 300);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 30; ++i) {
    first += state.log.records[i].scalarized_returns[0];
    last += state.log.records[270 + i].scalarized_returns[0];
  }
  MESSAGE("warm-up scalarized return: first 30 mean " << first / 30 << ", last 30 mean "
                                                      << last / 30);
  CHECK(last > first);
  const Vec theta = hypernet_forward(state.phi, uniform_preference(2));
  for (const auto& w : preference_grid(2, 99)) CHECK(hypernet_forward(state.phi, w) == theta);
}

TEST_CASE("psl_gradient averaging identities") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  TrainingState state = init_training(cfg, env.spec());
  Rng rng(3);
  for (long i = 0; i < state.phi.W.size(); ++i) state.phi.W.data()[i] = 0.01 * (i % 7 - 3);
  const Preference w(Vec::Constant(2, 0.5));
  Vec wv(2);
  wv << 0.2, 0.8;
  const Preference w2(wv);
  const auto trajs = one_rollout(env, state.phi.policy, hypernet_forward(state.phi, w), 9);
  const std::vector<AdvantageBatch> advs{fake_advantages(trajs[0], rng)};

  const FlatParams g_theta = scalarized_policy_gradient(
      state.phi.policy, hypernet_forward(state.phi, w), trajs, advs, w, cfg.ppo.clip_eps,
      cfg.ppo.normalize_advantages, cfg.ppo.min_log_std);
  const Vec single = flatten(hypernet_vjp(state.phi, w, g_theta));

  const Vec k1 = flatten(psl_gradient(state.phi, {w}, {trajs}, {advs}, cfg));
  CHECK(k1 == single);

  const Vec k4 = flatten(psl_gradient(state.phi, {w, w, w, w}, {trajs, trajs, trajs, trajs},
                                      {advs, advs, advs, advs}, cfg));
  CHECK((k4 - single).cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, single.cwiseAbs().maxCoeff()));

  const auto trajs2 = one_rollout(env, state.phi.policy, hypernet_forward(state.phi, w2), 10);
  const std::vector<AdvantageBatch> advs2{fake_advantages(trajs2[0], rng)};
  const Vec g2 = flatten(psl_gradient(state.phi, {w2}, {trajs2}, {advs2}, cfg));
  const Vec pair = flatten(psl_gradient(state.phi, {w, w2}, {trajs, trajs2}, {advs, advs2}, cfg));
  CHECK((pair - 0.5 * (single + g2)).cwiseAbs().maxCoeff() < 1e-14);

  cfg.workers = 3;
  const Vec threaded = flatten(psl_gradient(state.phi, {w, w2}, {trajs, trajs2}, {advs, advs2}, cfg));
  CHECK(threaded == pair);
}

TEST_CASE("train is deterministic and spends the budget exactly") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  const TrainResult a = train(cfg, env);
  const TrainResult b = train(cfg, env);
  CHECK(a.state.phi == b.state.phi);
  CHECK(flatten(a.state.phi) == flatten(b.state.phi));
  const long T_tra = a.steps_per_trajectory;
  CHECK(a.state.env_steps ==
        a.stages.warmup * T_tra + a.stages.psl * cfg.num_preferences * T_tra);
  CHECK(a.state.env_steps <= cfg.total_steps);
  CHECK(a.snapshots.size() >= 2);

  TrainConfig threaded = cfg;
  threaded.workers = 2;
  const TrainResult c = train(threaded, env);
  CHECK(flatten(c.state.phi) == flatten(a.state.phi));
}

TEST_CASE("alpha = 0 skips warm-up") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  cfg.alpha = 0.0;
  cfg.snapshot_count = 0;
  const TrainResult r = train(cfg, env);
  CHECK(r.stages.warmup == 0);
  for (const auto& rec : r.state.log.records) CHECK(rec.stage == "psl");
}

TEST_CASE("TrainConfig validation names the field") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  cfg.alpha = 1.0;
  CHECK_THROWS_WITH(cfg.validate(env.spec()), doctest::Contains("alpha"));
  cfg = small_config();
  cfg.d = 100000;
  CHECK_THROWS_WITH(cfg.validate(env.spec()), doctest::Contains("d:"));
  cfg = small_config();
  cfg.total_steps = 10;
  cfg.alpha = 0.0;
  CHECK_THROWS_WITH(cfg.validate(env.spec()), doctest::Contains("total_steps"));
}

TEST_CASE("first psl_step after warm-up has zero grad_mu") {
  const MoLqrEnv env(default_lqr_config());
  TrainConfig cfg = small_config();
  TrainingState state = init_training(cfg, env.spec());
  warmup(state, env, 20, cfg);
  const PslStepInfo info = psl_step(state, env, cfg);
  CHECK(info.mean_grad.mu.isZero());
  CHECK_FALSE(info.mean_grad.W.isZero());
}
