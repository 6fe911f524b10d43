#ifndef HYPERMORL_TRAINER_HPP_
#define HYPERMORL_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypermorl/adam.hpp"
#include "hypermorl/hypernet.hpp"
#include "hypermorl/metrics.hpp"
#include "hypermorl/ppo.hpp"

namespace hypermorl {

// Raised when a rollout or update produces non-finite numbers.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CriticMode { kShared, kPerSlot };

struct TrainConfig {
  long total_steps = 200000;  // T
  double alpha = 0.15;
  int num_preferences = 6;  // K
  int d = 10;
  double lr = 5e-5;
  std::uint64_t seed = 0;
  std::vector<int> policy_hidden{16, 16};
  std::vector<int> embedding_hidden{32};
  // Gain of the policy's output layer at init; small values start the mean
  // action near zero.
  double policy_output_gain = 1.0;
  int rollouts_per_preference = 1;
  CriticMode critic_mode = CriticMode::kShared;
  PpoConfig ppo;

  // Snapshot schedule: every max(1, G_PSL / snapshot_count) PSL iterations
  // (0 disables snapshots). Grid resolution / episodes / reference point.
  int snapshot_count = 20;
  int eval_resolution = 20;
  int eval_episodes = 1;
  Vec eval_reference;
  int workers = 1;

  // Throws std::invalid_argument naming the offending field.
  void validate(const MomdpSpec& spec) const;
};

struct StageIterations {
  long warmup = 0;  // G_W
  long psl = 0;     // G_PSL
};

// G_W = floor(alpha T / T_tra), G_PSL = floor((1 - alpha) T / (K T_tra)).
StageIterations compute_stage_iterations(long total_steps, double alpha, int K,
                                         long steps_per_trajectory);

struct TrainRecord {
  long iteration = 0;
  std::string stage;  // "warmup" | "psl"
  long env_steps = 0;  // cumulative
  std::vector<Vec> preferences;
  std::vector<double> scalarized_returns;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  long env_steps() const { return records.empty() ? 0 : records.back().env_steps; }
};

void write_train_record(std::ostream& out, const TrainRecord& record);

struct TrainingState {
  HypernetParams phi;
  std::vector<CriticNet> critics;
  AdamState adam;
  long env_steps = 0;
  long iteration = 0;
  TrainLog log;
  Rng rng;  // preference sampling stream
};

// Bias-HyperInit plus critic init; no environment interaction.
TrainingState init_training(const TrainConfig& cfg, const MomdpSpec& spec);

// Warm-up stage: G_W iterations of PPO on b at the uniform preference (W and
// mu untouched), then reset of b's log_std slice. Leaves a fresh ADAM state
// over {W, mu, b} for the next stage.
void warmup(TrainingState& state, const Environment& env, long iterations,
            const TrainConfig& cfg);

// One warm-up iteration on b; b_adam holds the single-block ADAM state of b.
void warmup_step(TrainingState& state, const Environment& env,
                 const TrainConfig& cfg, AdamState& b_adam);

// Mean over preferences of the hypernet pullback of each preference's
// scalarized PPO gradient at the current phi.
HypernetGrad psl_gradient(const HypernetParams& phi,
                          const std::vector<Preference>& prefs,
                          const std::vector<std::vector<Trajectory>>& trajs,
                          const std::vector<std::vector<AdvantageBatch>>& advs,
                          const TrainConfig& cfg);

// One Pareto-set-learning iteration: sample K preferences, roll out
// H(w_i) for each, pull the scalarized PPO gradient back through the
// hypernet and apply ADAM to the mean over the K preferences.
struct PslStepInfo {
  std::vector<Preference> preferences;
  HypernetGrad mean_grad;  // mean over preferences, first PPO epoch
};
PslStepInfo psl_step(TrainingState& state, const Environment& env,
                     const TrainConfig& cfg);

struct Snapshot {
  long iteration = 0;
  long env_steps = 0;
  ParetoFront front;
  double hv = 0.0;
};

struct TrainResult {
  TrainingState state;
  StageIterations stages;
  long steps_per_trajectory = 0;
  std::vector<Snapshot> snapshots;
};

using SnapshotCallback =
    std::function<void(const Snapshot&, const TrainingState&)>;
using RecordCallback = std::function<void(const TrainRecord&)>;

TrainResult train(const TrainConfig& cfg, const Environment& env,
                  const SnapshotCallback& on_snapshot = {},
                  const RecordCallback& on_record = {});

}  // namespace hypermorl

#endif  // HYPERMORL_TRAINER_HPP_
