#include "hypermorl/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "hypermorl/metrics.hpp"

namespace hypermorl {

namespace {

void require_finite(const Vec& action) {
  if (!action.allFinite()) throw std::domain_error("action contains NaN or inf");
}

bool symmetric(const Mat& M) { return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12; }

bool positive_semidefinite(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(M);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

bool positive_definite(const Mat& M) {
  Eigen::LLT<Mat> llt(M);
  return llt.info() == Eigen::Success;
}

}  // namespace

// ---------------------------------------------------------------------------
// MO-LQR
// ---------------------------------------------------------------------------

void LqrConfig::validate() const {
  const auto p = A.rows();
  if (p < 1 || A.cols() != p) throw std::invalid_argument("A must be square");
  if (B.rows() != p || B.cols() < 1) throw std::invalid_argument("B must be p x q");
  const auto q = B.cols();
  if (Q.size() < 2 || Q.size() != R.size()) {
    throw std::invalid_argument("need one (Q, R) pair per objective, m >= 2");
  }
  for (std::size_t i = 0; i < Q.size(); ++i) {
    if (Q[i].rows() != p || Q[i].cols() != p || !symmetric(Q[i]) ||
        !positive_semidefinite(Q[i])) {
      throw std::invalid_argument("Q_" + std::to_string(i) +
                                  " must be symmetric PSD p x p");
    }
    if (R[i].rows() != q || R[i].cols() != q || !symmetric(R[i]) ||
        !positive_definite(R[i])) {
      throw std::invalid_argument("R_" + std::to_string(i) +
                                  " must be symmetric PD q x q");
    }
  }
  if (!(init_std >= 0.0)) throw std::invalid_argument("init_std must be >= 0");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma in (0, 1]");
}

LqrConfig default_lqr_config() {
  LqrConfig cfg;
  cfg.A.resize(2, 2);
  cfg.A << 0.95, 0.15,
          -0.05, 0.90;
  cfg.B = Mat::Identity(2, 2);
  cfg.Q = {Mat::Identity(2, 2), Mat::Zero(2, 2)};
  cfg.R = {0.01 * Mat::Identity(2, 2), Mat::Identity(2, 2)};
  cfg.init_std = 1.0;
  cfg.horizon = 50;
  cfg.gamma = 0.95;
  return cfg;
}

MoLqrEnv::MoLqrEnv(LqrConfig config) : config_(std::move(config)) {
  config_.validate();
  spec_.state_dim = static_cast<int>(config_.A.rows());
  spec_.action_dim = static_cast<int>(config_.B.cols());
  spec_.num_objectives = static_cast<int>(config_.Q.size());
  spec_.gamma = config_.gamma;
  spec_.horizon = config_.horizon;
  spec_.validate();
  x_ = Vec::Zero(spec_.state_dim);
}

Vec MoLqrEnv::reset() {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec x(spec_.state_dim);
  for (int i = 0; i < x.size(); ++i) x[i] = config_.init_std * normal(rng_);
  return reset_to(x);
}

Vec MoLqrEnv::reset_to(const Vec& state) {
  if (state.size() != spec_.state_dim) {
    throw std::invalid_argument("LQR state dimension mismatch");
  }
  x_ = state;
  t_ = 0;
  return x_;
}

StepResult MoLqrEnv::step(const Vec& action) {
  if (action.size() != spec_.action_dim) {
    throw std::invalid_argument("LQR action dimension mismatch");
  }
  require_finite(action);
  if (t_ >= spec_.horizon) throw std::logic_error("step after episode end");
  StepResult out;
  out.reward.resize(spec_.num_objectives);
  for (int i = 0; i < spec_.num_objectives; ++i) {
    out.reward[i] = -(x_.dot(config_.Q[i] * x_) + action.dot(config_.R[i] * action));
  }
  x_ = config_.A * x_ + config_.B * action;
  ++t_;
  out.next_state = x_;
  out.done = t_ >= spec_.horizon;
  return out;
}

std::vector<Vec> MoLqrEnv::evaluation_starts(int count) const {
  const int p = spec_.state_dim;
  if (count < p) {
    throw std::invalid_argument("LQR evaluation needs at least p start states");
  }
  Rng rng(0x5eedf00dULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat Y(count, p);
  for (int r = 0; r < count; ++r) {
    for (int c = 0; c < p; ++c) Y(r, c) = normal(rng);
  }
  const Mat S = Y.transpose() * Y / static_cast<double>(count);
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("degenerate LQR evaluation starts");
  }
  // Y L^{-T} has empirical second moment exactly I.
  const Mat white = llt.matrixU().solve<Eigen::OnTheRight>(Y) * config_.init_std;
  std::vector<Vec> starts;
  starts.reserve(count);
  for (int r = 0; r < count; ++r) starts.emplace_back(white.row(r).transpose());
  return starts;
}

std::unique_ptr<Environment> MoLqrEnv::clone() const {
  return std::make_unique<MoLqrEnv>(*this);
}

// ---------------------------------------------------------------------------
// MO-PointNav
// ---------------------------------------------------------------------------

void PointNavConfig::validate() const {
  if (goals.size() < 2) throw std::invalid_argument("pointnav needs >= 2 goals");
  for (const auto& g : goals) {
    if (g.size() != 2) throw std::invalid_argument("pointnav goals must be 2-D");
  }
  if (start.size() != 2) throw std::invalid_argument("pointnav start must be 2-D");
  if (!(max_speed > 0.0)) throw std::invalid_argument("max_speed must be > 0");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma in (0, 1]");
}

PointNavConfig default_pointnav_config(int m) {
  PointNavConfig cfg;
  if (m == 2) {
    cfg.goals = {Vec(2), Vec(2)};
    cfg.goals[0] << -1.0, 2.0;
    cfg.goals[1] << 1.0, 2.0;
  } else if (m == 3) {
    cfg.goals = {Vec(2), Vec(2), Vec(2)};
    cfg.goals[0] << -1.0, 1.5;
    cfg.goals[1] << 1.0, 1.5;
    cfg.goals[2] << 0.0, 3.0;
  } else {
    throw std::invalid_argument("default pointnav config exists for m = 2, 3");
  }
  cfg.start = Vec::Zero(2);
  cfg.max_speed = 0.25;
  cfg.horizon = 30;
  cfg.gamma = 1.0;
  return cfg;
}

MoPointNavEnv::MoPointNavEnv(PointNavConfig config) : config_(std::move(config)) {
  config_.validate();
  spec_.state_dim = 2;
  spec_.action_dim = 2;
  spec_.num_objectives = static_cast<int>(config_.goals.size());
  spec_.gamma = config_.gamma;
  spec_.horizon = config_.horizon;
  spec_.validate();
  pos_ = config_.start;
}

Vec MoPointNavEnv::reset() { return reset_to(config_.start); }

Vec MoPointNavEnv::reset_to(const Vec& state) {
  if (state.size() != 2) throw std::invalid_argument("pointnav state must be 2-D");
  pos_ = state;
  t_ = 0;
  return pos_;
}

StepResult MoPointNavEnv::step(const Vec& action) {
  if (action.size() != 2) throw std::invalid_argument("pointnav action must be 2-D");
  require_finite(action);
  if (t_ >= spec_.horizon) throw std::logic_error("step after episode end");
  const double norm = action.norm();
  const Vec velocity =
      config_.max_speed * (norm > 1.0 ? Vec(action / norm) : action);
  pos_ += velocity;
  ++t_;
  StepResult out;
  out.reward.resize(spec_.num_objectives);
  for (int i = 0; i < spec_.num_objectives; ++i) {
    out.reward[i] = -(pos_ - config_.goals[i]).norm();
  }
  out.next_state = pos_;
  out.done = t_ >= spec_.horizon;
  return out;
}

std::vector<Vec> MoPointNavEnv::evaluation_starts(int count) const {
  if (count < 1) throw std::invalid_argument("need at least one evaluation start");
  return std::vector<Vec>(count, config_.start);
}

std::unique_ptr<Environment> MoPointNavEnv::clone() const {
  return std::make_unique<MoPointNavEnv>(*this);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

std::vector<Mat> lqr_gains(const LqrConfig& cfg, const Mat& Q, const Mat& R) {
  if (!positive_definite(R)) {
    throw std::invalid_argument("scalarized R is not positive definite");
  }
  const Mat& A = cfg.A;
  const Mat& B = cfg.B;
  const double g = cfg.gamma;
  std::vector<Mat> gains(cfg.horizon);
  Mat P = Mat::Zero(A.rows(), A.rows());  // cost-to-go after the last step
  for (int t = cfg.horizon - 1; t >= 0; --t) {
    const Mat H = R + g * B.transpose() * P * B;
    const Mat K = H.ldlt().solve(g * B.transpose() * P * A);
    const Mat closed = A - B * K;
    P = Q + K.transpose() * R * K + g * closed.transpose() * P * closed;
    P = 0.5 * (P + P.transpose());
    gains[t] = K;
  }
  return gains;
}

Vec lqr_exact_returns(const LqrConfig& cfg, const std::vector<Mat>& gains,
                      const Mat& sigma0) {
  const auto m = cfg.Q.size();
  Vec J = Vec::Zero(static_cast<long>(m));
  Mat sigma = sigma0;
  double discount = 1.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    const Mat& K = gains[t];
    for (std::size_t i = 0; i < m; ++i) {
      J[static_cast<long>(i)] -=
          discount * ((cfg.Q[i] + K.transpose() * cfg.R[i] * K) * sigma).trace();
    }
    const Mat closed = cfg.A - cfg.B * K;
    sigma = closed * sigma * closed.transpose();
    discount *= cfg.gamma;
  }
  return J;
}

Vec lqr_monte_carlo_returns(const LqrConfig& cfg, const std::vector<Mat>& gains,
                            int episodes, std::uint64_t seed) {
  MoLqrEnv env(cfg);
  env.seed(seed);
  Vec total = Vec::Zero(static_cast<long>(cfg.Q.size()));
  for (int e = 0; e < episodes; ++e) {
    Vec x = env.reset();
    double discount = 1.0;
    for (int t = 0; t < cfg.horizon; ++t) {
      const StepResult step = env.step(-gains[t] * x);
      total += discount * step.reward;
      discount *= cfg.gamma;
      x = step.next_state;
    }
  }
  return total / static_cast<double>(episodes);
}

namespace {

OracleFront filtered(std::vector<OracleEntry> raw, std::string method) {
  std::vector<Vec> points;
  points.reserve(raw.size());
  for (const auto& e : raw) points.push_back(e.objectives);
  const ParetoFront front = filter_front(points);
  OracleFront out;
  out.method = std::move(method);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!front.entries[i].dominated) out.entries.push_back(std::move(raw[i]));
  }
  return out;
}

}  // namespace

OracleFront lqr_oracle_front(const LqrConfig& cfg,
                             const std::vector<Preference>& grid) {
  cfg.validate();
  if (grid.empty()) throw std::invalid_argument("empty preference grid");
  const auto m = cfg.Q.size();
  const Mat sigma0 = cfg.init_std * cfg.init_std *
                     Mat::Identity(cfg.A.rows(), cfg.A.rows());
  std::vector<OracleEntry> raw;
  raw.reserve(grid.size());
  for (const auto& w : grid) {
    if (static_cast<std::size_t>(w.size()) != m) {
      throw std::invalid_argument("preference dimension does not match LQR m");
    }
    Mat Q = Mat::Zero(cfg.A.rows(), cfg.A.rows());
    Mat R = Mat::Zero(cfg.B.cols(), cfg.B.cols());
    for (std::size_t i = 0; i < m; ++i) {
      Q += w[static_cast<int>(i)] * cfg.Q[i];
      R += w[static_cast<int>(i)] * cfg.R[i];
    }
    const auto gains = lqr_gains(cfg, Q, R);
    raw.push_back({w, lqr_exact_returns(cfg, gains, sigma0)});
  }
  return filtered(std::move(raw), "lqr-riccati-exact");
}

Vec pointnav_target_returns(const PointNavConfig& cfg, const Vec& target) {
  MoPointNavEnv env(cfg);
  Vec pos = env.reset();
  Vec J = Vec::Zero(static_cast<long>(cfg.goals.size()));
  double discount = 1.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    // Velocity command in units of max_speed; the last approach step is
    // shortened so the point stops exactly on the target.
    const Vec action = (target - pos) / cfg.max_speed;
    const StepResult step = env.step(action);
    J += discount * step.reward;
    discount *= cfg.gamma;
    pos = step.next_state;
  }
  return J;
}

OracleFront pointnav_oracle_front(const PointNavConfig& cfg,
                                  const std::vector<Preference>& target_grid) {
  cfg.validate();
  if (target_grid.empty()) throw std::invalid_argument("empty target grid");
  std::vector<OracleEntry> raw;
  raw.reserve(target_grid.size());
  for (const auto& bary : target_grid) {
    if (static_cast<std::size_t>(bary.size()) != cfg.goals.size()) {
      throw std::invalid_argument("target weights must have one entry per goal");
    }
    Vec target = Vec::Zero(2);
    for (std::size_t i = 0; i < cfg.goals.size(); ++i) {
      target += bary[static_cast<int>(i)] * cfg.goals[i];
    }
    raw.push_back({bary, pointnav_target_returns(cfg, target)});
  }
  return filtered(std::move(raw), "pointnav-target-grid");
}

}  // namespace hypermorl
