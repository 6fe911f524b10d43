#ifndef HYPERMORL_MOMDP_HPP_
#define HYPERMORL_MOMDP_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hypermorl {

using Rng = std::mt19937_64;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kSimplexTolerance = 1e-9;

// A point on the (m-1)-simplex. Construction validates non-negativity and the
// unit sum, so every live Preference satisfies the simplex invariants.
class Preference {
 public:
  explicit Preference(Vec weights);

  const Vec& weights() const { return weights_; }
  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }

 private:
  Vec weights_;
};

bool operator==(const Preference& a, const Preference& b);

struct MomdpSpec {
  int state_dim = 1;
  int action_dim = 1;
  int num_objectives = 2;
  double gamma = 1.0;
  int horizon = 1;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// One episode. rewards[t] is the reward vector produced by actions[t], i.e.
// r^(t+1) in the usual (s0, a0, r1, s1, ...) notation lives at slot t.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> actions;
  std::vector<double> log_probs;
  std::vector<Vec> rewards;
  // Bootstrap state reached after the last action (not part of the T steps).
  Vec final_state;
  bool terminated = true;

  int length() const { return static_cast<int>(rewards.size()); }
  int num_objectives() const;
  void validate() const;
};

struct StepResult {
  Vec next_state;
  Vec reward;
  bool done = false;
};

// Environment contract: reset() followed by at most horizon steps yields a
// valid trajectory; identical seeds and action sequences reproduce identical
// trajectories bit for bit. Instances are single-threaded.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const MomdpSpec& spec() const = 0;
  virtual std::string id() const = 0;

  void seed(std::uint64_t s) { rng_.seed(s); }

  // Samples an initial state from the environment's start distribution.
  virtual Vec reset() = 0;
  virtual Vec reset_to(const Vec& state) = 0;
  virtual StepResult step(const Vec& action) = 0;

  // Deterministic start states used by evaluation; every policy is scored on
  // the same starts so fronts from different policies are comparable.
  virtual std::vector<Vec> evaluation_starts(int count) const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  Rng rng_{0};
};

// Sum_t gamma^t r_t, componentwise.
Vec discounted_return(const Trajectory& traj, double gamma);

Preference uniform_preference(int m);

// Flat Dirichlet draw (uniform density on the simplex).
Preference sample_preference(Rng& rng, int m);

// Simplex-lattice design: every (k_1/H, ..., k_m/H) with sum k_i = H.
// Ordered lexicographically by (k_1, ..., k_{m-1}) ascending.
std::vector<Preference> preference_grid(int m, int resolution);

// Number of points in the lattice, C(H+m-1, m-1).
std::uint64_t preference_grid_size(int m, int resolution);

double scalarize(const Vec& objectives, const Preference& w);

// Debug CSV: one row per step (t, s_*, a_*, log_prob, r_*) or per preference.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_preferences_csv(std::ostream& out,
                           const std::vector<Preference>& prefs);
std::vector<Preference> read_preferences_csv(std::istream& in);

}  // namespace hypermorl

#endif  // HYPERMORL_MOMDP_HPP_
