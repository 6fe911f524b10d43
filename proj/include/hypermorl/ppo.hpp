#ifndef HYPERMORL_PPO_HPP_
#define HYPERMORL_PPO_HPP_

#include <vector>

#include "hypermorl/adam.hpp"
#include "hypermorl/nn.hpp"

namespace hypermorl {

struct PpoConfig {
  double clip_eps = 0.2;
  double gae_lambda = 0.95;
  int epochs = 4;
  bool normalize_advantages = true;
  std::vector<int> critic_hidden{64, 64};
  double critic_lr = 1e-3;
  int critic_epochs = 10;
  // Per-objective multiplier applied to rewards before advantage estimation;
  // empty means 1 for every objective.
  std::vector<double> reward_scale;
  // Lower bound on the policy's log_std during rollouts and updates.
  double min_log_std = kNoLogStdFloor;

  void validate() const;
};

// Runs one episode of the Gaussian policy from env.reset(). Actions are
// sampled with rng unless deterministic, in which case the mean is used.
Trajectory rollout(Environment& env, const MlpLayout& layout,
                   const FlatParams& theta, Rng& rng, bool deterministic = false,
                   double min_log_std = kNoLogStdFloor);
Trajectory rollout_from(Environment& env, const Vec& start,
                        const MlpLayout& layout, const FlatParams& theta,
                        Rng& rng, bool deterministic = false,
                        double min_log_std = kNoLogStdFloor);

Trajectory scale_rewards(Trajectory traj, const std::vector<double>& scale);

// Value network V(s, w, t / horizon) -> R^m, shared across preferences. The
// step index is an input because episodes are truncated at the horizon.
struct CriticNet {
  MlpLayout layout;
  FlatParams params;
  AdamState optimizer;
  int horizon = 1;

  Vec value(const Vec& state, const Preference& w, int step) const;
};

CriticNet make_critic(int state_dim, int m, int horizon,
                      const std::vector<int>& hidden, Rng& rng);

struct CriticSample {
  Vec state;
  Vec preference;
  int step = 0;
  Vec target;
};

double critic_loss(const CriticNet& critic, const std::vector<CriticSample>& batch);

// Full-batch ADAM regression of V(s, w) onto the vector targets. Returns the
// loss before each epoch followed by the final loss (epochs + 1 entries).
std::vector<double> critic_update(CriticNet& critic,
                                  const std::vector<CriticSample>& batch,
                                  double lr, int epochs);

// Critic values for every visited state plus the bootstrap entry (zero when
// the episode terminated), i.e. T + 1 vectors.
std::vector<Vec> critic_values(const CriticNet& critic, const Trajectory& traj,
                               const Preference& w);

struct AdvantageBatch {
  std::vector<Vec> advantages;  // A_t, length m each
  std::vector<Vec> targets;     // A_t + V_t
  std::vector<double> log_probs;
};

// Per-objective GAE. values holds T + 1 entries (bootstrap last).
AdvantageBatch gae(const Trajectory& traj, const std::vector<Vec>& values,
                   double gamma, double lambda);

// Ascent direction of the clipped surrogate
//   mean_t min(r_t A_t^w, clip(r_t, 1 - eps, 1 + eps) A_t^w),  A_t^w = w'A_t,
// where r_t = pi_theta(a_t|s_t) / pi_old(a_t|s_t). At theta = theta_old this
// is mean_t A_t^w grad log pi(a_t|s_t). A^w is optionally normalized to zero
// mean and unit std over the batch.
FlatParams scalarized_policy_gradient(const MlpLayout& layout,
                                      const FlatParams& theta,
                                      const Trajectory& traj,
                                      const AdvantageBatch& adv,
                                      const Preference& w, double clip_eps,
                                      bool normalize,
                                      double min_log_std = kNoLogStdFloor);

// Same, over several trajectories collected for one preference; the
// normalization then spans the concatenated batch.
FlatParams scalarized_policy_gradient(const MlpLayout& layout,
                                      const FlatParams& theta,
                                      const std::vector<Trajectory>& trajs,
                                      const std::vector<AdvantageBatch>& advs,
                                      const Preference& w, double clip_eps,
                                      bool normalize,
                                      double min_log_std = kNoLogStdFloor);

}  // namespace hypermorl

#endif  // HYPERMORL_PPO_HPP_
