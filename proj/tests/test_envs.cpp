#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hypermorl/config.hpp"
#include "hypermorl/envs.hpp"
#include "hypermorl/metrics.hpp"
#include "hypermorl/runner.hpp"

using namespace hypermorl;

namespace {

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

LqrConfig scalar_lqr() {
  LqrConfig cfg;
  cfg.A = scalar(1.0);
  cfg.B = scalar(1.0);
  cfg.Q = {scalar(1.0), scalar(0.0)};
  cfg.R = {scalar(0.1), scalar(1.0)};
  cfg.horizon = 10;
  cfg.gamma = 0.9;
  return cfg;
}

LqrConfig symmetric_lqr() {
  LqrConfig cfg;
  cfg.A.resize(2, 2);
  cfg.A << 0.9, 0.2,
           0.2, 0.9;
  cfg.B = Mat::Identity(2, 2);
  Mat q1 = Mat::Zero(2, 2), q2 = Mat::Zero(2, 2);
  q1(0, 0) = 1.0;
  q2(1, 1) = 1.0;
  cfg.Q = {q1, q2};
  Mat r1 = Mat::Zero(2, 2), r2 = Mat::Zero(2, 2);
  r1(0, 0) = 0.5;
  r1(1, 1) = 0.1;
  r2(0, 0) = 0.1;
  r2(1, 1) = 0.5;
  cfg.R = {r1, r2};
  return cfg;
}

Vec v1(double a) { return Vec::Constant(1, a); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::filesystem::path kRoot = HYPERMORL_SOURCE_DIR;

}  // namespace

TEST_CASE("lqr_step hand cases") {
  MoLqrEnv env(scalar_lqr());
  env.reset_to(v1(1.0));
  const StepResult a = env.step(v1(-1.0));
  CHECK(a.next_state[0] == 0.0);

  env.reset_to(v1(1.0));
  const StepResult b = env.step(v1(0.0));
  CHECK(b.reward[0] == -1.0);
  CHECK(b.reward[1] == 0.0);

  MoLqrEnv sym(symmetric_lqr());
  Vec x(2);
  x << 1.0, 0.0;
  sym.reset_to(x);
  const StepResult c = sym.step(Vec::Zero(2));
  CHECK(c.reward[0] == -1.0);
  CHECK(c.reward[1] == 0.0);
}

TEST_CASE("lqr episode ends at the horizon") {
  MoLqrEnv env(scalar_lqr());
  env.seed(3);
  env.reset();
  for (int t = 0; t < 9; ++t) CHECK_FALSE(env.step(v1(0.0)).done);
  CHECK(env.step(v1(0.0)).done);
  CHECK_THROWS_AS(env.step(v1(0.0)), std::logic_error);
}

TEST_CASE("lqr seeding reproduces trajectories") {
  MoLqrEnv a(default_lqr_config()), b(default_lqr_config());
  a.seed(11);
  b.seed(11);
  CHECK(a.reset() == b.reset());
  CHECK(a.step(Vec::Ones(2)).next_state == b.step(Vec::Ones(2)).next_state);
}

TEST_CASE("lqr evaluation starts are whitened") {
  MoLqrEnv env(default_lqr_config());
  const auto starts = env.evaluation_starts(100);
  Mat S = Mat::Zero(2, 2);
  for (const Vec& s : starts) S += s * s.transpose();
  S /= 100.0;
  CHECK((S - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lqr oracle corner preference maximizes its objective") {
  const LqrConfig cfg = default_lqr_config();
  const auto grid = preference_grid(2, 20);
  const OracleFront front = lqr_oracle_front(cfg, grid);
  const OracleEntry* corner = nullptr;
  double best = -INFINITY;
  for (const auto& e : front.entries) {
    if (e.preference[0] == 1.0) corner = &e;
    best = std::max(best, e.objectives[0]);
  }
  REQUIRE(corner != nullptr);
  CHECK(corner->objectives[0] == best);
}

TEST_CASE("lqr oracle symmetric instance at the uniform preference") {
  const LqrConfig cfg = symmetric_lqr();
  const OracleFront front = lqr_oracle_front(cfg, {uniform_preference(2)});
  REQUIRE(front.entries.size() == 1);
  const Vec& j = front.entries[0].objectives;
  CHECK(j[0] == doctest::Approx(j[1]).epsilon(1e-12));
}

TEST_CASE("lqr exact returns agree with the scalar Riccati closed form") {
  // One step, gamma irrelevant: cost is q x^2 + r k^2 x^2 with k = 0 at the
  // last step, so J_0 = -q E[x^2] = -q.
  LqrConfig cfg = scalar_lqr();
  cfg.horizon = 1;
  const auto gains = lqr_gains(cfg, scalar(1.0), scalar(0.1));
  CHECK(gains[0](0, 0) == 0.0);
  const Vec j = lqr_exact_returns(cfg, gains, scalar(1.0));
  CHECK(j[0] == doctest::Approx(-1.0));

  // Two steps, undiscounted: P1 = q, k0 = a b P1 / (r + b^2 P1).
  cfg.horizon = 2;
  cfg.gamma = 1.0;
  const auto g2 = lqr_gains(cfg, scalar(1.0), scalar(0.1));
  CHECK(g2[0](0, 0) == doctest::Approx(1.0 / 1.1));
}

TEST_CASE("lqr golden front matches the fixture and Monte-Carlo") {
  const RunConfig cfg = load_run_config(kRoot / "configs/mo_lqr.yaml");
  const auto tmp = std::filesystem::temp_directory_path() / "hypermorl_lqr_oracle.csv";
  run_oracle(cfg.environment, cfg.evaluation.resolution, tmp);
  CHECK(slurp(tmp) == slurp(kRoot / "fixtures/mo_lqr_oracle.csv"));

  const LqrConfig& lqr = cfg.environment.lqr;
  std::ifstream in(kRoot / "fixtures/mo_lqr_oracle.csv");
  const ParetoFront golden = read_front_csv(in);
  REQUIRE(golden.entries.size() == 21);
  for (const auto& e : golden.entries) {
    const Preference& w = *e.preference;
    const Mat Q = w[0] * lqr.Q[0] + w[1] * lqr.Q[1];
    const Mat R = w[0] * lqr.R[0] + w[1] * lqr.R[1];
    const auto gains = lqr_gains(lqr, Q, R);
    const Vec mc = lqr_monte_carlo_returns(lqr, gains, 10000, 2024);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(mc[i] - e.objectives[i]) <= 0.01 * std::abs(e.objectives[i]) + 1e-12);
    }
  }
}

TEST_CASE("pointnav step clips speed and pays distances") {
  MoPointNavEnv env(default_pointnav_config(2));
  env.reset();
  Vec a(2);
  a << 0.0, 4.0;
  const StepResult s = env.step(a);
  CHECK(s.next_state[0] == 0.0);
  CHECK(s.next_state[1] == doctest::Approx(0.25));
  CHECK(s.reward[0] == doctest::Approx(-std::hypot(1.0, 1.75)));
  CHECK(s.reward[1] == doctest::Approx(-std::hypot(1.0, 1.75)));
}

TEST_CASE("pointnav oracle corners and symmetry") {
  const PointNavConfig cfg = default_pointnav_config(2);
  const auto grid = preference_grid(2, 20);
  const OracleFront front = pointnav_oracle_front(cfg, grid);
  double best0 = -INFINITY;
  for (const auto& e : front.entries) best0 = std::max(best0, e.objectives[0]);
  const Vec corner = pointnav_target_returns(cfg, cfg.goals[0]);
  CHECK(corner[0] == best0);

  const Vec mid = pointnav_target_returns(cfg, 0.5 * (cfg.goals[0] + cfg.goals[1]));
  CHECK(mid[0] == doctest::Approx(mid[1]).epsilon(1e-12));
}

TEST_CASE("pointnav golden fronts match the fixtures") {
  for (const char* name : {"mo_pointnav2", "mo_pointnav3"}) {
    const RunConfig cfg = load_run_config(kRoot / "configs" / (std::string(name) + ".yaml"));
    const auto tmp = std::filesystem::temp_directory_path() / (std::string(name) + "_oracle.csv");
    run_oracle(cfg.environment, cfg.evaluation.resolution, tmp);
    CHECK(slurp(tmp) == slurp(kRoot / "fixtures" / (std::string(name) + "_oracle.csv")));
  }
}

TEST_CASE("oracle is repeatable") {
  const RunConfig cfg = load_run_config(kRoot / "configs/mo_lqr.yaml");
  const auto a = std::filesystem::temp_directory_path() / "hypermorl_oracle_a.csv";
  const auto b = std::filesystem::temp_directory_path() / "hypermorl_oracle_b.csv";
  run_oracle(cfg.environment, 20, a);
  run_oracle(cfg.environment, 20, b);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("oracle fronts are mutually non-dominated") {
  const OracleFront lqr = lqr_oracle_front(default_lqr_config(), preference_grid(2, 40));
  const OracleFront pn = pointnav_oracle_front(default_pointnav_config(3), preference_grid(3, 10));
  for (const OracleFront* f : {&lqr, &pn}) {
    for (const auto& a : f->entries) {
      for (const auto& b : f->entries) CHECK_FALSE(dominates(a.objectives, b.objectives));
    }
  }
}

// The optimal scalarized return is a pointwise maximum of linear functions of
// w, hence convex; the optimal scalarized cost is its negation and concave.
TEST_CASE("lqr scalarized optimal cost is concave in the preference") {
  const LqrConfig cfg = default_lqr_config();
  const auto grid = preference_grid(2, 40);
  std::vector<double> value;
  const Mat sigma0 = Mat::Identity(2, 2);
  for (const auto& w : grid) {
    const Mat Q = w[0] * cfg.Q[0] + w[1] * cfg.Q[1];
    const Mat R = w[0] * cfg.R[0] + w[1] * cfg.R[1];
    value.push_back(scalarize(lqr_exact_returns(cfg, lqr_gains(cfg, Q, R), sigma0), w));
  }
  for (std::size_t i = 1; i + 1 < value.size(); ++i) {
    CHECK(-value[i] >= 0.5 * (-value[i - 1] - value[i + 1]) - 1e-12);
  }
}

TEST_CASE("pointnav seeded replay is bitwise identical") {
  MoPointNavEnv a(default_pointnav_config(3)), b(default_pointnav_config(3));
  a.seed(4);
  b.seed(4);
  a.reset();
  b.reset();
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 30; ++t) {
    Vec act(2);
    act << normal(rng), normal(rng);
    const StepResult sa = a.step(act), sb = b.step(act);
    CHECK(sa.next_state == sb.next_state);
    CHECK(sa.reward == sb.reward);
  }
}
