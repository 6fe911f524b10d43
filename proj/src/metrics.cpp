#include "hypermorl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hypermorl/ppo.hpp"
#include "parallel.hpp"

namespace hypermorl {

int ParetoFront::num_objectives() const {
  return entries.empty() ? 0 : static_cast<int>(entries.front().objectives.size());
}

std::vector<Vec> ParetoFront::non_dominated() const {
  std::vector<Vec> out;
  for (const auto& e : entries) {
    if (!e.dominated) out.push_back(e.objectives);
  }
  return out;
}

std::vector<Vec> ParetoFront::objectives() const {
  std::vector<Vec> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.objectives);
  return out;
}

bool dominates(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dominates: dimension mismatch");
  bool strict = false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

namespace {

bool lex_greater(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

// Indices of points not dominated by any other point. A dominator of p is
// lexicographically greater than p, and whenever some point dominates p a
// non-dominated one does too, so each point is only tested against the
// non-dominated points seen before it in descending lexicographic order.
std::vector<char> dominated_flags(const std::vector<Vec>& points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_greater(points[a], points[b]);
  });
  std::vector<char> flags(n, 0);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec& p = points[order[k]];
    if (k > 0 && points[order[k - 1]] == p) {
      flags[order[k]] = flags[order[k - 1]];
      continue;
    }
    bool dom = false;
    for (std::size_t j : keep) {
      if (dominates(points[j], p)) {
        dom = true;
        break;
      }
    }
    flags[order[k]] = dom ? 1 : 0;
    if (!dom) keep.push_back(order[k]);
  }
  return flags;
}

}  // namespace

ParetoFront filter_front(const std::vector<Vec>& points) {
  if (points.empty()) throw std::invalid_argument("filter_front: no points");
  const auto m = points.front().size();
  for (const auto& p : points) {
    if (p.size() != m) throw std::invalid_argument("filter_front: dimension mismatch");
  }
  const auto flags = dominated_flags(points);
  ParetoFront front;
  front.entries.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    front.entries.push_back({std::nullopt, points[i], flags[i] != 0});
  }
  return front;
}

ParetoFront filter_front(ParetoFront front) {
  const auto flags = dominated_flags(front.objectives());
  for (std::size_t i = 0; i < flags.size(); ++i) {
    front.entries[i].dominated = flags[i] != 0;
  }
  return front;
}

namespace {

// Area of the union of boxes [0, x] x [0, y] over a staircase {x -> y} kept
// with x ascending and y descending.
double staircase_area(const std::map<double, double>& stair) {
  double area = 0.0;
  double prev_x = 0.0;
  for (const auto& [x, y] : stair) {
    area += (x - prev_x) * y;
    prev_x = x;
  }
  return area;
}

// Inserts (x, y) into the staircase unless it is weakly dominated; removes the
// points it dominates.
void staircase_insert(std::map<double, double>& stair, double x, double y) {
  auto it = stair.lower_bound(x);
  if (it != stair.end() && it->second >= y) return;
  // Remove points with x' <= x and y' <= y.
  auto hi = stair.upper_bound(x);
  auto lo = hi;
  while (lo != stair.begin()) {
    auto prev = std::prev(lo);
    if (prev->second <= y) {
      lo = prev;
    } else {
      break;
    }
  }
  stair.erase(lo, hi);
  stair[x] = y;
}

}  // namespace

HvResult hypervolume_detailed(const std::vector<Vec>& points, const HvConfig& cfg) {
  const auto m = cfg.reference.size();
  if (m < 2) throw std::invalid_argument("hypervolume needs m >= 2");
  if (m > 3) throw std::domain_error("exact hypervolume supports m <= 3 only");
  HvResult result;
  std::vector<Vec> pts;
  pts.reserve(points.size());
  for (const auto& p : points) {
    if (p.size() != m) throw std::invalid_argument("hypervolume: dimension mismatch");
    if ((p.array() > cfg.reference.array()).all()) {
      pts.push_back(p - cfg.reference);
    } else {
      ++result.excluded;
    }
  }
  if (pts.empty()) return result;
  // Sort descending by the last coordinate; duplicates collapse naturally.
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return lex_greater(a.reverse(), b.reverse());
  });
  if (m == 2) {
    // Points relative to the origin; sweep by descending y, accumulating the
    // new x-extent times the y-height.
    double best_x = 0.0;
    double hv = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double x = pts[k][0];
      const double y = pts[k][1];
      if (x > best_x) {
        hv += (x - best_x) * y;
        best_x = x;
      }
    }
    result.value = hv;
    return result;
  }
  // m == 3: sweep z downward; between consecutive z levels the dominated
  // cross-section is the 2-D staircase of every point with larger z.
  std::map<double, double> stair;
  double hv = 0.0;
  std::size_t k = 0;
  while (k < pts.size()) {
    const double z = pts[k][2];
    while (k < pts.size() && pts[k][2] == z) {
      staircase_insert(stair, pts[k][0], pts[k][1]);
      ++k;
    }
    const double next_z = (k < pts.size()) ? pts[k][2] : 0.0;
    hv += staircase_area(stair) * (z - next_z);
  }
  result.value = hv;
  return result;
}

double hypervolume(const std::vector<Vec>& points, const HvConfig& cfg) {
  return hypervolume_detailed(points, cfg).value;
}

double hypervolume(const ParetoFront& front, const HvConfig& cfg) {
  return hypervolume_detailed(front.non_dominated(), cfg).value;
}

double hvip(double hv_x, double hv_0) {
  if (!(hv_0 > 0.0)) throw std::invalid_argument("hvip needs a positive baseline HV");
  return (hv_x - hv_0) / hv_0 * 100.0;
}

Vec reference_from_points(const std::vector<Vec>& points, double margin) {
  if (points.empty()) throw std::invalid_argument("reference_from_points: no points");
  Vec lo = points.front();
  Vec hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return lo - margin * (hi - lo);
}

EvaluatedFront evaluate_hypernet(const HypernetParams& phi, const Environment& env,
                                 const std::vector<Preference>& grid,
                                 int episodes_per_pref, bool keep_thetas,
                                 int workers) {
  if (grid.empty()) throw std::invalid_argument("evaluate_hypernet: empty grid");
  if (episodes_per_pref < 1) {
    throw std::invalid_argument("evaluate_hypernet: episodes_per_pref must be >= 1");
  }
  if (env.spec().num_objectives != phi.m()) {
    throw std::invalid_argument("environment m does not match hypernet m");
  }
  const auto starts = env.evaluation_starts(episodes_per_pref);
  const double gamma = env.spec().gamma;
  std::vector<Vec> objectives(grid.size());
  std::vector<FlatParams> thetas(keep_thetas ? grid.size() : 0);

  auto evaluate_range = [&](std::size_t begin, std::size_t end) {
    auto local = env.clone();
    Rng unused(0);
    for (std::size_t i = begin; i < end; ++i) {
      const FlatParams theta = hypernet_forward(phi, grid[i]);
      Vec total = Vec::Zero(phi.m());
      for (const auto& s : starts) {
        const Trajectory traj =
            rollout_from(*local, local->reset_to(s), phi.policy, theta, unused, true);
        total += discounted_return(traj, gamma);
      }
      objectives[i] = total / static_cast<double>(starts.size());
      if (keep_thetas) thetas[i] = theta;
    }
  };

  const std::size_t n = grid.size();
  const std::size_t nw = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);
  detail::parallel_for(nw, static_cast<int>(nw), [&](std::size_t w) {
    evaluate_range(n * w / nw, n * (w + 1) / nw);
  });

  EvaluatedFront out;
  out.front = filter_front(objectives);
  for (std::size_t i = 0; i < n; ++i) out.front.entries[i].preference = grid[i];
  out.thetas = std::move(thetas);
  return out;
}

namespace {

Mat centered_rows(const std::vector<FlatParams>& thetas) {
  const auto n = thetas.front().size();
  Mat X(static_cast<long>(thetas.size()), n);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i].size() != n) throw std::invalid_argument("parameter length mismatch");
    X.row(static_cast<long>(i)) = thetas[i].transpose();
  }
  X.rowwise() -= X.colwise().mean();
  return X;
}

// Top-k eigenpairs of a symmetric PSD matrix by power iteration with
// deflation. Starting vectors are fixed so results are deterministic.
void power_iteration(const Mat& G, int k, std::vector<double>& values,
                     std::vector<Vec>& vectors) {
  Mat work = G;
  const long n = G.rows();
  for (int c = 0; c < k; ++c) {
    Vec v(n);
    for (long i = 0; i < n; ++i) v[i] = 1.0 + 0.37 * std::sin(1.3 * i + 0.7 * c);
    for (const auto& u : vectors) v -= u.dot(v) * u;
    double lambda = 0.0;
    if (v.norm() > 0.0) v.normalize();
    for (int it = 0; it < 5000; ++it) {
      Vec next = work * v;
      for (const auto& u : vectors) next -= u.dot(next) * u;
      const double norm = next.norm();
      if (norm <= 1e-300) {
        lambda = 0.0;
        break;
      }
      next /= norm;
      const double change = (next - v).norm();
      v = next;
      lambda = v.dot(work * v);
      if (change < 1e-13) break;
    }
    values.push_back(std::max(lambda, 0.0));
    vectors.push_back(v);
    work -= lambda * v * v.transpose();
  }
}

}  // namespace

double PrincipalVariances::explained(int k) const {
  if (!(total > 0.0)) return 1.0;
  double s = 0.0;
  for (int i = 0; i < k && i < static_cast<int>(leading.size()); ++i) s += leading[i];
  return s / total;
}

PrincipalVariances principal_variances(const std::vector<FlatParams>& thetas,
                                       int k) {
  if (thetas.size() < 2) throw std::invalid_argument("need >= 2 parameter vectors");
  const Mat X = centered_rows(thetas);
  const double denom = static_cast<double>(thetas.size());
  // Gram matrix shares the non-zero spectrum of the covariance.
  const Mat G = X * X.transpose() / denom;
  PrincipalVariances out;
  out.total = G.trace();
  std::vector<Vec> vectors;
  power_iteration(G, std::min<int>(k, static_cast<int>(G.rows())), out.leading,
                  vectors);
  return out;
}

std::vector<Vec> project_front_params(const std::vector<FlatParams>& thetas,
                                      int target_dim) {
  if (thetas.size() < 3) throw std::invalid_argument("need >= 3 parameter vectors");
  if (target_dim < 1) throw std::invalid_argument("target_dim must be >= 1");
  const Mat X = centered_rows(thetas);
  if (X.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("fewer than 2 distinct parameter vectors");
  }
  const Mat G = X * X.transpose();
  std::vector<double> values;
  std::vector<Vec> vectors;
  power_iteration(G, std::min<int>(target_dim, static_cast<int>(G.rows())), values,
                  vectors);
  // For Gram eigenvector u with eigenvalue l, the score of row i on the
  // matching principal direction is sqrt(l) * u_i.
  std::vector<Vec> out(thetas.size(), Vec::Zero(target_dim));
  for (std::size_t c = 0; c < vectors.size(); ++c) {
    const double scale = std::sqrt(values[c]);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      out[i][static_cast<long>(c)] = scale * vectors[c][static_cast<long>(i)];
    }
  }
  return out;
}

void write_front_csv(std::ostream& out, const ParetoFront& front) {
  const int m = front.num_objectives();
  for (int i = 0; i < m; ++i) out << "pref_" << i << ',';
  for (int i = 0; i < m; ++i) out << "obj_" << i << ',';
  out << "dominated\n";
  out << std::setprecision(17);
  for (const auto& e : front.entries) {
    for (int i = 0; i < m; ++i) {
      if (e.preference) {
        out << (*e.preference)[i];
      } else {
        out << "nan";
      }
      out << ',';
    }
    for (int i = 0; i < m; ++i) out << e.objectives[i] << ',';
    out << (e.dominated ? 1 : 0) << '\n';
  }
}

ParetoFront read_front_csv(std::istream& in) {
  ParetoFront front;
  std::string line;
  if (!std::getline(in, line)) return front;
  int columns = 1;
  for (char c : line) columns += (c == ',');
  if (columns < 5 || (columns - 1) % 2 != 0) {
    throw std::runtime_error("front CSV header has unexpected column count");
  }
  const int m = (columns - 1) / 2;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != columns) {
      throw std::runtime_error("front CSV line " + std::to_string(line_no) +
                               ": expected " + std::to_string(columns) + " cells");
    }
    FrontEntry e;
    if (cells[0] != "nan") {
      Vec w(m);
      for (int i = 0; i < m; ++i) w[i] = std::stod(cells[i]);
      e.preference = Preference(std::move(w));
    }
    e.objectives.resize(m);
    for (int i = 0; i < m; ++i) e.objectives[i] = std::stod(cells[m + i]);
    e.dominated = cells[2 * m] == "1";
    front.entries.push_back(std::move(e));
  }
  return front;
}

}  // namespace hypermorl
