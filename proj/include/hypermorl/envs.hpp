#ifndef HYPERMORL_ENVS_HPP_
#define HYPERMORL_ENVS_HPP_

#include <memory>
#include <string>
#include <vector>

#include "hypermorl/momdp.hpp"

namespace hypermorl {

// ---------------------------------------------------------------------------
// Multi-objective LQR. Objective i pays x'Q_i x + a'R_i a per step, so every
// reward component is <= 0. x' = A x + B a; x_0 ~ N(0, init_std^2 I).
// ---------------------------------------------------------------------------
struct LqrConfig {
  Mat A;
  Mat B;
  std::vector<Mat> Q;
  std::vector<Mat> R;
  double init_std = 1.0;
  int horizon = 50;
  double gamma = 0.95;

  void validate() const;
};

// p = q = 2, m = 2: objective 0 is the state cost with a light control
// penalty, objective 1 is pure control effort.
LqrConfig default_lqr_config();

class MoLqrEnv final : public Environment {
 public:
  explicit MoLqrEnv(LqrConfig config);

  const MomdpSpec& spec() const override { return spec_; }
  std::string id() const override { return "mo-lqr"; }
  const LqrConfig& config() const { return config_; }
  const Vec& state() const { return x_; }

  Vec reset() override;
  Vec reset_to(const Vec& state) override;
  StepResult step(const Vec& action) override;
  // Gaussian draws whitened so their empirical second moment is exactly
  // init_std^2 I; any linear controller scores its exact expectation on them.
  std::vector<Vec> evaluation_starts(int count) const override;
  std::unique_ptr<Environment> clone() const override;

 private:
  LqrConfig config_;
  MomdpSpec spec_;
  Vec x_;
  int t_ = 0;
};

// ---------------------------------------------------------------------------
// Multi-objective point navigation. The action is a 2-D velocity command in
// units of max_speed; commands longer than 1 are rescaled to length 1.
// Objective i pays the distance from the new position to goal i.
// ---------------------------------------------------------------------------
struct PointNavConfig {
  std::vector<Vec> goals;
  Vec start = Vec::Zero(2);
  double max_speed = 0.25;
  int horizon = 30;
  double gamma = 1.0;

  void validate() const;
};

PointNavConfig default_pointnav_config(int m);

class MoPointNavEnv final : public Environment {
 public:
  explicit MoPointNavEnv(PointNavConfig config);

  const MomdpSpec& spec() const override { return spec_; }
  std::string id() const override { return "mo-pointnav"; }
  const PointNavConfig& config() const { return config_; }
  const Vec& position() const { return pos_; }

  Vec reset() override;
  Vec reset_to(const Vec& state) override;
  StepResult step(const Vec& action) override;
  std::vector<Vec> evaluation_starts(int count) const override;
  std::unique_ptr<Environment> clone() const override;

 private:
  PointNavConfig config_;
  MomdpSpec spec_;
  Vec pos_;
  int t_ = 0;
};

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------
struct OracleEntry {
  Preference preference;
  Vec objectives;
};

struct OracleFront {
  std::vector<OracleEntry> entries;  // non-dominated entries only
  std::string method;
};

// Time-varying optimal feedback a_t = -K_t x_t of the discounted
// finite-horizon LQR with costs (Q, R), by backward Riccati recursion.
std::vector<Mat> lqr_gains(const LqrConfig& cfg, const Mat& Q, const Mat& R);

// Exact discounted per-objective returns of a_t = -K_t x_t from
// x_0 ~ N(0, Sigma0), via covariance propagation.
Vec lqr_exact_returns(const LqrConfig& cfg, const std::vector<Mat>& gains,
                      const Mat& sigma0);

// Scalarized LQR per preference, exact returns, dominance-filtered.
OracleFront lqr_oracle_front(const LqrConfig& cfg,
                             const std::vector<Preference>& grid);

// Monte-Carlo estimate of the same controller's returns (cross-check).
Vec lqr_monte_carlo_returns(const LqrConfig& cfg, const std::vector<Mat>& gains,
                            int episodes, std::uint64_t seed);

// Objective vector of "drive at max speed to target, then hold".
Vec pointnav_target_returns(const PointNavConfig& cfg, const Vec& target);

// Targets are barycentric lattice points of the goal simplex; the attached
// preference is the barycentric weight vector of each target.
OracleFront pointnav_oracle_front(const PointNavConfig& cfg,
                                  const std::vector<Preference>& target_grid);

}  // namespace hypermorl

#endif  // HYPERMORL_ENVS_HPP_
