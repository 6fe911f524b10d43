#ifndef HYPERMORL_METRICS_HPP_
#define HYPERMORL_METRICS_HPP_

#include <iosfwd>
#include <optional>
#include <vector>

#include "hypermorl/hypernet.hpp"
#include "hypermorl/momdp.hpp"

namespace hypermorl {

struct FrontEntry {
  std::optional<Preference> preference;
  Vec objectives;
  bool dominated = false;
};

struct ParetoFront {
  std::vector<FrontEntry> entries;

  int num_objectives() const;
  std::vector<Vec> non_dominated() const;
  std::vector<Vec> objectives() const;
};

// Maximization: a >= b everywhere and a > b somewhere.
bool dominates(const Vec& a, const Vec& b);

// Flags every point dominated by another point; identical points never
// dominate each other.
ParetoFront filter_front(const std::vector<Vec>& points);
ParetoFront filter_front(ParetoFront front);

struct HvConfig {
  Vec reference;
};

struct HvResult {
  double value = 0.0;
  int excluded = 0;  // points that do not strictly dominate the reference
};

// Exact hypervolume for m in {2, 3}; throws std::domain_error for m > 3.
HvResult hypervolume_detailed(const std::vector<Vec>& points,
                              const HvConfig& cfg);
double hypervolume(const ParetoFront& front, const HvConfig& cfg);
double hypervolume(const std::vector<Vec>& points, const HvConfig& cfg);

// Percentage improvement of hv_x over the baseline hv_0.
double hvip(double hv_x, double hv_0);

// Reference point at per-objective minimum minus `margin` of the range.
Vec reference_from_points(const std::vector<Vec>& points, double margin = 0.1);

struct EvaluatedFront {
  ParetoFront front;
  std::vector<FlatParams> thetas;  // aligned with front.entries
};

// Deterministic (mean-action) evaluation of theta = H(w) for each w in grid,
// averaged over env.evaluation_starts(episodes_per_pref). The result is
// dominance-flagged.
EvaluatedFront evaluate_hypernet(const HypernetParams& phi, const Environment& env,
                                 const std::vector<Preference>& grid,
                                 int episodes_per_pref, bool keep_thetas = false,
                                 int workers = 1);

// Principal-component projection of centered parameter vectors onto the top
// target_dim directions, computed by power iteration on the Gram matrix.
std::vector<Vec> project_front_params(const std::vector<FlatParams>& thetas,
                                      int target_dim = 2);

// Leading k variances (descending) of the centered vectors and the total
// variance, from the same power iteration.
struct PrincipalVariances {
  std::vector<double> leading;
  double total = 0.0;

  double explained(int k) const;
};
PrincipalVariances principal_variances(const std::vector<FlatParams>& thetas,
                                       int k);

// Front CSV: pref_0..pref_{m-1}, obj_0..obj_{m-1}, dominated.
void write_front_csv(std::ostream& out, const ParetoFront& front);
ParetoFront read_front_csv(std::istream& in);

}  // namespace hypermorl

#endif  // HYPERMORL_METRICS_HPP_
