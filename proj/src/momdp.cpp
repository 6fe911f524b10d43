#include "hypermorl/momdp.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hypermorl {

Preference::Preference(Vec weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw std::invalid_argument("empty preference");
  double sum = 0.0;
  for (int i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0)) {
      throw std::invalid_argument("preference component " + std::to_string(i) +
                                  " is negative or NaN");
    }
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("preference components sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

bool operator==(const Preference& a, const Preference& b) {
  return a.size() == b.size() && a.weights() == b.weights();
}

void MomdpSpec::validate() const {
  if (state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
  if (action_dim < 1) throw std::invalid_argument("action_dim must be >= 1");
  if (num_objectives < 2) {
    throw std::invalid_argument("num_objectives must be >= 2");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
}

int Trajectory::num_objectives() const {
  return rewards.empty() ? 0 : static_cast<int>(rewards.front().size());
}

void Trajectory::validate() const {
  const auto t = rewards.size();
  if (t == 0) throw std::invalid_argument("empty trajectory");
  if (states.size() != t || actions.size() != t || log_probs.size() != t) {
    throw std::invalid_argument(
        "trajectory states/actions/log_probs/rewards lengths differ");
  }
  const auto m = rewards.front().size();
  for (const auto& r : rewards) {
    if (r.size() != m) {
      throw std::invalid_argument("reward vectors differ in dimension");
    }
  }
}

Vec discounted_return(const Trajectory& traj, double gamma) {
  if (traj.rewards.empty()) throw std::invalid_argument("empty trajectory");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
  const auto m = traj.rewards.front().size();
  Vec total = Vec::Zero(m);
  double discount = 1.0;
  for (const auto& r : traj.rewards) {
    if (r.size() != m) {
      throw std::invalid_argument("reward vectors differ in dimension");
    }
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

Preference uniform_preference(int m) {
  if (m < 2) throw std::invalid_argument("uniform_preference needs m >= 2");
  return Preference(Vec::Constant(m, 1.0 / m));
}

Preference sample_preference(Rng& rng, int m) {
  if (m < 2) throw std::invalid_argument("sample_preference needs m >= 2");
  // Normalized unit exponentials are Dirichlet(1, ..., 1).
  std::exponential_distribution<double> expo(1.0);
  Vec w(m);
  double sum = 0.0;
  do {
    for (int i = 0; i < m; ++i) w[i] = expo(rng);
    sum = w.sum();
  } while (!(sum > 0.0));
  w /= sum;
  // Push rounding residue into the largest entry so the sum is exact to 1 ulp.
  Eigen::Index arg = 0;
  w.maxCoeff(&arg);
  w[arg] += 1.0 - w.sum();
  if (w[arg] < 0.0) w[arg] = 0.0;
  return Preference(std::move(w));
}

namespace {

void lattice(int m, int remaining, int depth, int resolution,
             std::vector<int>& counts, std::vector<Preference>& out) {
  if (depth == m - 1) {
    counts[depth] = remaining;
    Vec w(m);
    for (int i = 0; i < m; ++i) {
      w[i] = static_cast<double>(counts[i]) / resolution;
    }
    out.emplace_back(std::move(w));
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    counts[depth] = k;
    lattice(m, remaining - k, depth + 1, resolution, counts, out);
  }
}

}  // namespace

std::uint64_t preference_grid_size(int m, int resolution) {
  // C(H+m-1, m-1), computed incrementally to stay exact.
  std::uint64_t c = 1;
  for (int i = 1; i <= m - 1; ++i) {
    c = c * static_cast<std::uint64_t>(resolution + i) / i;
  }
  return c;
}

std::vector<Preference> preference_grid(int m, int resolution) {
  if (m < 2) throw std::invalid_argument("preference_grid needs m >= 2");
  if (resolution < 1) {
    throw std::invalid_argument("preference_grid needs resolution >= 1");
  }
  std::vector<Preference> out;
  out.reserve(preference_grid_size(m, resolution));
  std::vector<int> counts(m, 0);
  lattice(m, resolution, 0, resolution, counts, out);
  return out;
}

double scalarize(const Vec& objectives, const Preference& w) {
  if (objectives.size() != w.size()) {
    throw std::invalid_argument("scalarize: dimension mismatch");
  }
  return w.weights().dot(objectives);
}

namespace {

void write_row(std::ostream& out, const Vec& v, bool leading_comma) {
  for (int i = 0; i < v.size(); ++i) {
    if (leading_comma || i > 0) out << ',';
    out << v[i];
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  traj.validate();
  const auto sd = traj.states.front().size();
  const auto ad = traj.actions.front().size();
  const auto m = traj.rewards.front().size();
  out << "t";
  for (int i = 0; i < sd; ++i) out << ",s_" << i;
  for (int i = 0; i < ad; ++i) out << ",a_" << i;
  out << ",log_prob";
  for (int i = 0; i < m; ++i) out << ",r_" << i;
  out << '\n';
  out << std::setprecision(17);
  for (int t = 0; t < traj.length(); ++t) {
    out << t;
    write_row(out, traj.states[t], true);
    write_row(out, traj.actions[t], true);
    out << ',' << traj.log_probs[t];
    write_row(out, traj.rewards[t], true);
    out << '\n';
  }
}

void write_preferences_csv(std::ostream& out,
                           const std::vector<Preference>& prefs) {
  if (prefs.empty()) return;
  const int m = prefs.front().size();
  for (int i = 0; i < m; ++i) out << (i ? "," : "") << "pref_" << i;
  out << '\n' << std::setprecision(17);
  for (const auto& p : prefs) {
    write_row(out, p.weights(), false);
    out << '\n';
  }
}

std::vector<Preference> read_preferences_csv(std::istream& in) {
  std::vector<Preference> prefs;
  std::string line;
  if (!std::getline(in, line)) return prefs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    prefs.emplace_back(Eigen::Map<Vec>(vals.data(), vals.size()));
  }
  return prefs;
}

}  // namespace hypermorl
