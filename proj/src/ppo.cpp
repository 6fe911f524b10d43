#include "hypermorl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hypermorl {

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0)) throw std::invalid_argument("clip_eps: must be > 0");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("gae_lambda: must lie in [0, 1]");
  }
  if (epochs < 1) throw std::invalid_argument("epochs: must be >= 1");
  if (!(critic_lr > 0.0)) throw std::invalid_argument("critic_lr: must be > 0");
  if (critic_epochs < 0) throw std::invalid_argument("critic_epochs: must be >= 0");
  for (int h : critic_hidden) {
    if (h < 1) throw std::invalid_argument("critic_hidden: sizes must be >= 1");
  }
  if (std::isnan(min_log_std) || min_log_std > 0.0) {
    throw std::invalid_argument("min_log_std: must be <= 0");
  }
  for (double s : reward_scale) {
    if (!(s > 0.0)) throw std::invalid_argument("reward_scale: entries must be > 0");
  }
}

Trajectory rollout_from(Environment& env, const Vec& start,
                        const MlpLayout& layout, const FlatParams& theta,
                        Rng& rng, bool deterministic, double min_log_std) {
  const int horizon = env.spec().horizon;
  Trajectory traj;
  traj.states.reserve(horizon);
  traj.actions.reserve(horizon);
  traj.log_probs.reserve(horizon);
  traj.rewards.reserve(horizon);
  Vec state = start;
  for (int t = 0; t < horizon; ++t) {
    const GaussianOutput dist = policy_forward(layout, theta, state, min_log_std);
    Vec action = deterministic ? dist.mean : sample_action(dist, rng);
    if (!all_finite(action)) throw std::domain_error("rollout produced NaN action");
    const double lp = log_prob(dist.mean, dist.std, action);
    StepResult step = env.step(action);
    if (!all_finite(step.reward) || !all_finite(step.next_state)) {
      throw std::domain_error("rollout produced non-finite state or reward");
    }
    traj.states.push_back(std::move(state));
    traj.actions.push_back(std::move(action));
    traj.log_probs.push_back(lp);
    traj.rewards.push_back(std::move(step.reward));
    state = std::move(step.next_state);
    if (step.done) break;
  }
  traj.final_state = std::move(state);
  traj.terminated = true;
  return traj;
}

Trajectory rollout(Environment& env, const MlpLayout& layout,
                   const FlatParams& theta, Rng& rng, bool deterministic,
                   double min_log_std) {
  const Vec start = env.reset();
  return rollout_from(env, start, layout, theta, rng, deterministic, min_log_std);
}

Trajectory scale_rewards(Trajectory traj, const std::vector<double>& scale) {
  if (scale.empty()) return traj;
  for (auto& r : traj.rewards) {
    if (r.size() != static_cast<long>(scale.size())) {
      throw std::invalid_argument("reward_scale length does not match m");
    }
    for (int i = 0; i < r.size(); ++i) r[i] *= scale[i];
  }
  return traj;
}

namespace {

Vec critic_input(const CriticNet& critic, const Vec& state, const Vec& pref,
                 int step) {
  Vec in(state.size() + pref.size() + 1);
  in << state, pref, static_cast<double>(step) / critic.horizon;
  return in;
}

}  // namespace

Vec CriticNet::value(const Vec& state, const Preference& w, int step) const {
  return mlp_output(layout, params, critic_input(*this, state, w.weights(), step));
}

CriticNet make_critic(int state_dim, int m, int horizon,
                      const std::vector<int>& hidden, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("critic horizon must be >= 1");
  std::vector<int> sizes{state_dim + m + 1};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(m);
  CriticNet critic;
  critic.layout = MlpLayout(std::move(sizes));
  critic.params = init_params(critic.layout, rng);
  critic.optimizer = AdamState({critic.layout.num_params()});
  critic.horizon = horizon;
  return critic;
}

double critic_loss(const CriticNet& critic,
                   const std::vector<CriticSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty critic batch");
  double loss = 0.0;
  for (const auto& s : batch) {
    const Vec out = mlp_output(critic.layout, critic.params,
                               critic_input(critic, s.state, s.preference, s.step));
    loss += (out - s.target).squaredNorm();
  }
  return loss / static_cast<double>(batch.size());
}

std::vector<double> critic_update(CriticNet& critic,
                                  const std::vector<CriticSample>& batch,
                                  double lr, int epochs) {
  if (batch.empty()) throw std::invalid_argument("empty critic batch");
  std::vector<double> trace;
  trace.reserve(epochs + 1);
  const double inv = 1.0 / static_cast<double>(batch.size());
  FlatParams grad(critic.layout.num_params());
  for (int e = 0; e < epochs; ++e) {
    grad.setZero();
    double loss = 0.0;
    for (const auto& s : batch) {
      const MlpCache cache = mlp_forward(critic.layout, critic.params,
                                         critic_input(critic, s.state, s.preference, s.step));
      const Vec residual = cache.output() - s.target;
      loss += residual.squaredNorm();
      mlp_backward(critic.layout, critic.params, cache, 2.0 * inv * residual,
                   grad);
    }
    trace.push_back(loss * inv);
    critic.optimizer.begin_step();
    critic.optimizer.update(0, critic.params, grad, lr);
  }
  trace.push_back(critic_loss(critic, batch));
  return trace;
}

std::vector<Vec> critic_values(const CriticNet& critic, const Trajectory& traj,
                               const Preference& w) {
  std::vector<Vec> values;
  values.reserve(traj.length() + 1);
  for (int t = 0; t < traj.length(); ++t) {
    values.push_back(critic.value(traj.states[t], w, t));
  }
  if (traj.terminated) {
    values.push_back(Vec::Zero(w.size()));
  } else {
    values.push_back(critic.value(traj.final_state, w, traj.length()));
  }
  return values;
}

AdvantageBatch gae(const Trajectory& traj, const std::vector<Vec>& values,
                   double gamma, double lambda) {
  const int t_len = traj.length();
  if (static_cast<int>(values.size()) != t_len + 1) {
    throw std::invalid_argument("gae needs T + 1 value vectors");
  }
  if (t_len == 0) throw std::invalid_argument("gae on empty trajectory");
  const auto m = traj.rewards.front().size();
  for (const auto& v : values) {
    if (v.size() != m) throw std::invalid_argument("value dimension mismatch");
  }
  AdvantageBatch out;
  out.advantages.assign(t_len, Vec());
  out.targets.assign(t_len, Vec());
  out.log_probs = traj.log_probs;
  Vec running = Vec::Zero(m);
  for (int t = t_len - 1; t >= 0; --t) {
    if (traj.rewards[t].size() != m) {
      throw std::invalid_argument("reward dimension mismatch");
    }
    const Vec delta = traj.rewards[t] + gamma * values[t + 1] - values[t];
    running = delta + gamma * lambda * running;
    out.advantages[t] = running;
    out.targets[t] = running + values[t];
  }
  return out;
}

FlatParams scalarized_policy_gradient(const MlpLayout& layout,
                                      const FlatParams& theta,
                                      const std::vector<Trajectory>& trajs,
                                      const std::vector<AdvantageBatch>& advs,
                                      const Preference& w, double clip_eps,
                                      bool normalize, double min_log_std) {
  if (trajs.size() != advs.size()) {
    throw std::invalid_argument("one advantage batch per trajectory required");
  }
  std::vector<double> scalar;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    if (static_cast<int>(advs[k].advantages.size()) != trajs[k].length() ||
        static_cast<int>(advs[k].log_probs.size()) != trajs[k].length()) {
      throw std::invalid_argument("advantage batch does not match trajectory");
    }
    for (const auto& a : advs[k].advantages) scalar.push_back(scalarize(a, w));
  }
  FlatParams grad = FlatParams::Zero(layout.num_params());
  if (scalar.empty()) return grad;

  if (normalize && scalar.size() > 1) {
    double mean = 0.0;
    for (double s : scalar) mean += s;
    mean /= static_cast<double>(scalar.size());
    double var = 0.0;
    for (double s : scalar) var += (s - mean) * (s - mean);
    var /= static_cast<double>(scalar.size());
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& s : scalar) s = (s - mean) * inv_std;
  }

  const double inv_n = 1.0 / static_cast<double>(scalar.size());
  std::size_t idx = 0;
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const Trajectory& traj = trajs[k];
    for (int t = 0; t < traj.length(); ++t, ++idx) {
      const double a_w = scalar[idx];
      if (a_w == 0.0) continue;
      const GaussianOutput dist =
          policy_forward(layout, theta, traj.states[t], min_log_std);
      const double lp = log_prob(dist.mean, dist.std, traj.actions[t]);
      const double ratio = std::exp(lp - advs[k].log_probs[t]);
      // The min() selects the clipped constant branch (zero gradient) only
      // when the ratio has already moved past the trust region in the
      // direction the advantage favours.
      if ((a_w > 0.0 && ratio > 1.0 + clip_eps) ||
          (a_w < 0.0 && ratio < 1.0 - clip_eps)) {
        continue;
      }
      accumulate_grad_logprob(layout, theta, traj.states[t], traj.actions[t],
                              inv_n * a_w * ratio, grad, min_log_std);
    }
  }
  return grad;
}

FlatParams scalarized_policy_gradient(const MlpLayout& layout,
                                      const FlatParams& theta,
                                      const Trajectory& traj,
                                      const AdvantageBatch& adv,
                                      const Preference& w, double clip_eps,
                                      bool normalize, double min_log_std) {
  return scalarized_policy_gradient(layout, theta, std::vector<Trajectory>{traj},
                                    std::vector<AdvantageBatch>{adv}, w,
                                    clip_eps, normalize, min_log_std);
}

}  // namespace hypermorl
