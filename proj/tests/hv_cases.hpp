#ifndef HYPERMORL_TESTS_HV_CASES_HPP_
#define HYPERMORL_TESTS_HV_CASES_HPP_

#include <algorithm>
#include <random>
#include <vector>

#include "hypermorl/metrics.hpp"

namespace hvcases {

using hypermorl::Vec;

inline Vec pt(std::initializer_list<double> xs) {
  Vec v(static_cast<long>(xs.size()));
  long i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

struct Case {
  std::vector<Vec> points;
  Vec reference;
  double expected;
};

// Values worked out by hand as unions of axis-aligned boxes.
inline std::vector<Case> hand_cases() {
  return {
      {{pt({2, 3})}, pt({0, 0}), 6.0},
      {{pt({1, 3}), pt({2, 2}), pt({3, 1})}, pt({0, 0}), 6.0},
      {{pt({1, 1, 1}), pt({2, 2, 2})}, pt({0, 0, 0}), 8.0},
      {{pt({1, 1}), pt({0.5, 0.5})}, pt({0, 0}), 1.0},
      {{pt({3, 1}), pt({1, 3})}, pt({0, 0}), 5.0},
      {{pt({0, 0})}, pt({-1, -1}), 1.0},
      {{pt({0, 5}), pt({2, 2})}, pt({0, 0}), 4.0},
      {{pt({1, 2, 3}), pt({3, 2, 1})}, pt({0, 0, 0}), 10.0},
      {{pt({2, 1, 1}), pt({1, 2, 1}), pt({1, 1, 2})}, pt({0, 0, 0}), 4.0},
      {{pt({2, 2}), pt({2, 2})}, pt({0, 0}), 4.0},
  };
}

// Inclusion-exclusion over all subsets; exact for small point sets.
inline double inclusion_exclusion(const std::vector<Vec>& pts, const Vec& ref) {
  const int n = static_cast<int>(pts.size());
  double total = 0.0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    Vec corner = Vec::Constant(ref.size(), 1e300);
    int bits = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        corner = corner.cwiseMin(pts[i]);
        ++bits;
      }
    }
    double vol = 1.0;
    for (long k = 0; k < ref.size(); ++k) vol *= std::max(0.0, corner[k] - ref[k]);
    total += (bits % 2 ? 1.0 : -1.0) * vol;
  }
  return total;
}

// Monte-Carlo estimate over a box 10% larger than [ref, max]; returns the
// estimate and its standard error.
inline std::pair<double, double> monte_carlo(const std::vector<Vec>& pts, const Vec& ref,
                                             int samples, std::uint64_t seed) {
  Vec hi = ref;
  for (const auto& p : pts) hi = hi.cwiseMax(p);
  hi += 0.1 * (hi - ref);
  double box = 1.0;
  for (long k = 0; k < ref.size(); ++k) box *= hi[k] - ref[k];
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long hits = 0;
  Vec x(ref.size());
  for (int s = 0; s < samples; ++s) {
    for (long k = 0; k < ref.size(); ++k) x[k] = ref[k] + u(rng) * (hi[k] - ref[k]);
    for (const auto& p : pts) {
      if ((p.array() >= x.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  const double f = static_cast<double>(hits) / samples;
  return {box * f, box * std::sqrt(f * (1.0 - f) / samples)};
}

inline std::vector<bool> brute_force_dominated(const std::vector<Vec>& pts) {
  std::vector<bool> out(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const bool geq = (pts[j].array() >= pts[i].array()).all();
      const bool gt = (pts[j].array() > pts[i].array()).any();
      if (geq && gt) out[i] = true;
    }
  }
  return out;
}

}  // namespace hvcases

#endif  // HYPERMORL_TESTS_HV_CASES_HPP_
