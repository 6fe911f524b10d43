#include "hypermorl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "parallel.hpp"

namespace hypermorl {

namespace {

enum Block { kBlockW = 0, kBlockMu = 1, kBlockB = 2 };

constexpr std::uint64_t kWarmupTag = 0x7761726dULL;  // "warm"
constexpr std::uint64_t kPslTag = 0x70736cULL;       // "psl"

// Independent, reproducible stream per (seed, stage, iteration, slot).
Rng stream(std::uint64_t seed, std::uint64_t tag, long iteration, long slot) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(iteration),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(iteration) >> 32),
                    static_cast<std::uint32_t>(slot)};
  return Rng(seq);
}

// Trajectories for one preference with their advantage estimates.
struct PreferenceBatch {
  std::vector<Trajectory> trajs;
  std::vector<AdvantageBatch> advs;
  double scalarized_return = 0.0;  // mean over trajectories, unscaled rewards
};

PreferenceBatch collect(const Environment& env, const MlpLayout& layout,
                        const FlatParams& theta, const Preference& w,
                        const CriticNet& critic, const TrainConfig& cfg,
                        Rng rng) {
  auto local = env.clone();
  local->seed(rng());
  const double gamma = env.spec().gamma;
  PreferenceBatch batch;
  for (int r = 0; r < cfg.rollouts_per_preference; ++r) {
    Trajectory traj = rollout(*local, layout, theta, rng, false, cfg.ppo.min_log_std);
    batch.scalarized_return += scalarize(discounted_return(traj, gamma), w);
    traj = scale_rewards(std::move(traj), cfg.ppo.reward_scale);
    batch.advs.push_back(gae(traj, critic_values(critic, traj, w), gamma,
                             cfg.ppo.gae_lambda));
    batch.trajs.push_back(std::move(traj));
  }
  batch.scalarized_return /= cfg.rollouts_per_preference;
  return batch;
}

void add_critic_samples(const std::vector<Trajectory>& trajs,
                        const std::vector<AdvantageBatch>& advs, const Preference& w,
                        std::vector<CriticSample>& out) {
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const auto& traj = trajs[k];
    for (int t = 0; t < traj.length(); ++t) {
      out.push_back({traj.states[t], w.weights(), t, advs[k].targets[t]});
    }
  }
}

long batch_steps(const PreferenceBatch& batch) {
  long steps = 0;
  for (const auto& t : batch.trajs) steps += t.length();
  return steps;
}

AdamState fresh_phi_adam(const HypernetParams& phi) {
  return AdamState({static_cast<long>(phi.W.size()), static_cast<long>(phi.mu.size()),
                    static_cast<long>(phi.b.size())});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

void TrainConfig::validate(const MomdpSpec& spec) const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument(key + ": " + why);
  };
  if (total_steps < 1) fail("total_steps", "must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) fail("alpha", "must lie in [0, 1)");
  if (num_preferences < 1) fail("num_preferences", "must be >= 1");
  if (d < 1) fail("d", "must be >= 1");
  if (!(lr > 0.0)) fail("lr", "must be > 0");
  if (rollouts_per_preference < 1) fail("rollouts_per_preference", "must be >= 1");
  if (snapshot_count < 0) fail("snapshot_count", "must be >= 0");
  if (eval_resolution < 1) fail("eval_resolution", "must be >= 1");
  if (eval_episodes < 1) fail("eval_episodes", "must be >= 1");
  if (eval_reference.size() != 0 && eval_reference.size() != spec.num_objectives) {
    fail("reference", "needs one entry per objective");
  }
  if (workers < 1) fail("workers", "must be >= 1");
  for (int h : policy_hidden) {
    if (h < 1) fail("policy_hidden", "sizes must be >= 1");
  }
  for (int h : embedding_hidden) {
    if (h < 1) fail("embedding_hidden", "sizes must be >= 1");
  }
  if (!ppo.reward_scale.empty() &&
      static_cast<int>(ppo.reward_scale.size()) != spec.num_objectives) {
    fail("reward_scale", "needs one entry per objective");
  }
  ppo.validate();
  const long t_tra = static_cast<long>(rollouts_per_preference) * spec.horizon;
  const auto stages = compute_stage_iterations(total_steps, alpha, num_preferences, t_tra);
  if (alpha > 0.0 && stages.warmup < 1) {
    fail("alpha", "warm-up budget alpha*T is smaller than one trajectory");
  }
  if (stages.psl < 1) {
    fail("total_steps", "(1 - alpha) T / (K T_tra) allows no Pareto-set-learning iteration");
  }
  MlpLayout policy = [&] {
    std::vector<int> sizes{spec.state_dim};
    sizes.insert(sizes.end(), policy_hidden.begin(), policy_hidden.end());
    sizes.push_back(spec.action_dim);
    return MlpLayout(sizes, spec.action_dim);
  }();
  if (d > policy.num_params()) fail("d", "must not exceed the policy parameter count");
}

StageIterations compute_stage_iterations(long total_steps, double alpha, int K,
                                         long steps_per_trajectory) {
  if (steps_per_trajectory <= 0) {
    throw std::invalid_argument("steps per trajectory must be > 0");
  }
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha in [0, 1)");
  const double T = static_cast<double>(total_steps);
  const double ttra = static_cast<double>(steps_per_trajectory);
  StageIterations out;
  out.warmup = static_cast<long>(std::floor(alpha * T / ttra));
  out.psl = static_cast<long>(std::floor((1.0 - alpha) * T / (K * ttra)));
  // Rounding in alpha*T must never push the total past the budget.
  while (out.warmup * steps_per_trajectory +
             out.psl * K * steps_per_trajectory > total_steps &&
         out.psl > 0) {
    --out.psl;
  }
  return out;
}

void write_train_record(std::ostream& out, const TrainRecord& record) {
  out << std::setprecision(17) << "{\"iteration\":" << record.iteration
      << ",\"stage\":\"" << record.stage << "\",\"env_steps\":" << record.env_steps
      << ",\"wall_seconds\":" << record.wall_seconds << ",\"preferences\":[";
  for (std::size_t i = 0; i < record.preferences.size(); ++i) {
    out << (i ? "," : "") << '[';
    for (int j = 0; j < record.preferences[i].size(); ++j) {
      out << (j ? "," : "") << record.preferences[i][j];
    }
    out << ']';
  }
  out << "],\"scalarized_returns\":[";
  for (std::size_t i = 0; i < record.scalarized_returns.size(); ++i) {
    out << (i ? "," : "") << record.scalarized_returns[i];
  }
  out << "]}\n";
}

TrainingState init_training(const TrainConfig& cfg, const MomdpSpec& spec) {
  cfg.validate(spec);
  TrainingState state;
  Rng rng = stream(cfg.seed, 0x696e6974ULL, 0, 0);  // "init"
  std::vector<int> policy_sizes{spec.state_dim};
  policy_sizes.insert(policy_sizes.end(), cfg.policy_hidden.begin(),
                      cfg.policy_hidden.end());
  policy_sizes.push_back(spec.action_dim);
  std::vector<int> embed_sizes{spec.num_objectives};
  embed_sizes.insert(embed_sizes.end(), cfg.embedding_hidden.begin(),
                     cfg.embedding_hidden.end());
  embed_sizes.push_back(cfg.d);
  state.phi = bias_hyper_init(rng, MlpLayout(policy_sizes, spec.action_dim),
                              MlpLayout(embed_sizes), cfg.policy_output_gain);
  const int n_critics =
      cfg.critic_mode == CriticMode::kShared ? 1 : cfg.num_preferences;
  for (int i = 0; i < n_critics; ++i) {
    state.critics.push_back(
        make_critic(spec.state_dim, spec.num_objectives, spec.horizon,
                    cfg.ppo.critic_hidden, rng));
  }
  state.adam = fresh_phi_adam(state.phi);
  state.rng = stream(cfg.seed, 0x70726566ULL, 0, 0);  // "pref"
  return state;
}

void warmup_step(TrainingState& state, const Environment& env,
                 const TrainConfig& cfg, AdamState& b_adam) {
  const Preference w = uniform_preference(env.spec().num_objectives);
  CriticNet& critic = state.critics.front();
  const auto start = std::chrono::steady_clock::now();
  const long g = state.iteration;
  // W = 0 throughout, so the policy is pi_b.
  PreferenceBatch batch;
  try {
    batch = collect(env, state.phi.policy, state.phi.b, w, critic, cfg,
                    stream(cfg.seed, kWarmupTag, g, 0));
  } catch (const std::domain_error& e) {
    throw NumericalError("warm-up iteration " + std::to_string(g) + ": " + e.what());
  }
  for (int e = 0; e < cfg.ppo.epochs; ++e) {
    const FlatParams grad = scalarized_policy_gradient(
        state.phi.policy, state.phi.b, batch.trajs, batch.advs, w,
        cfg.ppo.clip_eps, cfg.ppo.normalize_advantages, cfg.ppo.min_log_std);
    b_adam.begin_step();
    b_adam.update(0, state.phi.b, -grad, cfg.lr);
  }
  if (!all_finite(state.phi.b)) {
    throw NumericalError("warm-up iteration " + std::to_string(g) +
                         ": non-finite policy parameters");
  }
  std::vector<CriticSample> samples;
  add_critic_samples(batch.trajs, batch.advs, w, samples);
  critic_update(critic, samples, cfg.ppo.critic_lr, cfg.ppo.critic_epochs);

  state.env_steps += batch_steps(batch);
  ++state.iteration;
  TrainRecord rec;
  rec.iteration = state.iteration;
  rec.stage = "warmup";
  rec.env_steps = state.env_steps;
  rec.preferences = {w.weights()};
  rec.scalarized_returns = {batch.scalarized_return};
  rec.wall_seconds = seconds_since(start);
  state.log.records.push_back(std::move(rec));
}

void warmup(TrainingState& state, const Environment& env, long iterations,
            const TrainConfig& cfg) {
  AdamState b_adam({static_cast<long>(state.phi.b.size())});
  for (long g = 0; g < iterations; ++g) warmup_step(state, env, cfg, b_adam);
  state.phi.b = reset_exploration(state.phi.b, state.phi.policy);
  state.adam = fresh_phi_adam(state.phi);
}

HypernetGrad psl_gradient(const HypernetParams& phi,
                          const std::vector<Preference>& prefs,
                          const std::vector<std::vector<Trajectory>>& trajs,
                          const std::vector<std::vector<AdvantageBatch>>& advs,
                          const TrainConfig& cfg) {
  const std::size_t K = prefs.size();
  if (K == 0 || trajs.size() != K || advs.size() != K) {
    throw std::invalid_argument("psl_gradient needs one batch per preference");
  }
  std::vector<HypernetGrad> grads(K);
  detail::parallel_for(K, cfg.workers, [&](std::size_t i) {
    const FlatParams theta = hypernet_forward(phi, prefs[i]);
    const FlatParams g_theta = scalarized_policy_gradient(
        phi.policy, theta, trajs[i], advs[i], prefs[i], cfg.ppo.clip_eps,
        cfg.ppo.normalize_advantages, cfg.ppo.min_log_std);
    grads[i] = hypernet_vjp(phi, prefs[i], g_theta);
  });
  // Fixed reduction order keeps results independent of the worker count.
  HypernetGrad mean = HypernetGrad::zeros_like(phi);
  for (const auto& g : grads) mean += g;
  mean *= 1.0 / static_cast<double>(K);
  return mean;
}

PslStepInfo psl_step(TrainingState& state, const Environment& env,
                     const TrainConfig& cfg) {
  const int K = cfg.num_preferences;
  const int m = env.spec().num_objectives;
  const long iteration = state.iteration;
  const auto start = std::chrono::steady_clock::now();

  PslStepInfo info;
  for (int i = 0; i < K; ++i) info.preferences.push_back(sample_preference(state.rng, m));
  const auto& prefs = info.preferences;

  auto critic_for = [&](int i) -> CriticNet& {
    return state.critics[state.critics.size() == 1 ? 0 : static_cast<std::size_t>(i)];
  };

  std::vector<PreferenceBatch> batches(K);
  detail::parallel_for(K, cfg.workers, [&](std::size_t i) {
    const FlatParams theta = hypernet_forward(state.phi, prefs[i]);
    try {
      batches[i] = collect(env, state.phi.policy, theta, prefs[i],
                           critic_for(static_cast<int>(i)), cfg,
                           stream(cfg.seed, kPslTag, iteration, static_cast<long>(i)));
    } catch (const std::domain_error& e) {
      throw NumericalError("PSL iteration " + std::to_string(iteration) +
                           ", preference " + std::to_string(i) + ": " + e.what());
    }
  });

  std::vector<std::vector<Trajectory>> trajs(K);
  std::vector<std::vector<AdvantageBatch>> advs(K);
  for (int i = 0; i < K; ++i) {
    trajs[i] = std::move(batches[i].trajs);
    advs[i] = std::move(batches[i].advs);
  }
  for (int e = 0; e < cfg.ppo.epochs; ++e) {
    const HypernetGrad mean = psl_gradient(state.phi, prefs, trajs, advs, cfg);
    if (e == 0) info.mean_grad = mean;
    state.adam.begin_step();
    state.adam.update(kBlockW, Eigen::Map<Vec>(state.phi.W.data(), state.phi.W.size()),
                      -Eigen::Map<const Vec>(mean.W.data(), mean.W.size()), cfg.lr);
    state.adam.update(kBlockMu, state.phi.mu, -mean.mu, cfg.lr);
    state.adam.update(kBlockB, state.phi.b, -mean.b, cfg.lr);
  }
  if (!all_finite(flatten(state.phi))) {
    throw NumericalError("PSL iteration " + std::to_string(iteration) +
                         ": non-finite hypernet parameters");
  }

  if (state.critics.size() == 1) {
    std::vector<CriticSample> samples;
    for (int i = 0; i < K; ++i) add_critic_samples(trajs[i], advs[i], prefs[i], samples);
    critic_update(state.critics.front(), samples, cfg.ppo.critic_lr,
                  cfg.ppo.critic_epochs);
  } else {
    for (int i = 0; i < K; ++i) {
      std::vector<CriticSample> samples;
      add_critic_samples(trajs[i], advs[i], prefs[i], samples);
      critic_update(state.critics[i], samples, cfg.ppo.critic_lr,
                    cfg.ppo.critic_epochs);
    }
  }

  TrainRecord rec;
  rec.stage = "psl";
  for (int i = 0; i < K; ++i) {
    for (const auto& t : trajs[i]) state.env_steps += t.length();
    rec.preferences.push_back(prefs[i].weights());
    rec.scalarized_returns.push_back(batches[i].scalarized_return);
  }
  ++state.iteration;
  rec.iteration = state.iteration;
  rec.env_steps = state.env_steps;
  rec.wall_seconds = seconds_since(start);
  state.log.records.push_back(std::move(rec));
  return info;
}

TrainResult train(const TrainConfig& cfg, const Environment& env,
                  const SnapshotCallback& on_snapshot,
                  const RecordCallback& on_record) {
  const MomdpSpec& spec = env.spec();
  TrainResult result;
  result.state = init_training(cfg, spec);
  result.steps_per_trajectory =
      static_cast<long>(cfg.rollouts_per_preference) * spec.horizon;
  result.stages = compute_stage_iterations(cfg.total_steps, cfg.alpha,
                                           cfg.num_preferences,
                                           result.steps_per_trajectory);
  TrainingState& state = result.state;

  std::size_t emitted = 0;
  auto flush_records = [&] {
    if (!on_record) return;
    for (; emitted < state.log.records.size(); ++emitted) {
      on_record(state.log.records[emitted]);
    }
  };

  warmup(state, env, result.stages.warmup, cfg);
  flush_records();

  const auto grid = preference_grid(spec.num_objectives, cfg.eval_resolution);
  const long every =
      cfg.snapshot_count > 0 ? std::max<long>(1, result.stages.psl / cfg.snapshot_count) : 0;
  for (long g = 1; g <= result.stages.psl; ++g) {
    psl_step(state, env, cfg);
    flush_records();
    const bool last = g == result.stages.psl;
    if (every > 0 && (g % every == 0 || last)) {
      Snapshot snap;
      snap.iteration = state.iteration;
      snap.env_steps = state.env_steps;
      snap.front =
          evaluate_hypernet(state.phi, env, grid, cfg.eval_episodes, false, cfg.workers)
              .front;
      if (cfg.eval_reference.size() == spec.num_objectives &&
          spec.num_objectives <= 3) {
        snap.hv = hypervolume(snap.front, HvConfig{cfg.eval_reference});
      }
      if (on_snapshot) on_snapshot(snap, state);
      result.snapshots.push_back(std::move(snap));
    }
  }
  return result;
}

}  // namespace hypermorl
