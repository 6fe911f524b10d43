#ifndef HYPERMORL_ADAM_HPP_
#define HYPERMORL_ADAM_HPP_

#include <vector>

#include "hypermorl/momdp.hpp"

namespace hypermorl {

// ADAM with one (m, v) moment pair per parameter block and a single step
// counter shared by all blocks.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Vec> m;
  std::vector<Vec> v;

  AdamState() = default;
  explicit AdamState(const std::vector<long>& block_sizes);

  // Advances the shared step counter; call once before the block updates
  // of one optimizer step.
  void begin_step() { ++step; }

  // Descent step on one block: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void update(int block, Eigen::Ref<Vec> params, const Eigen::Ref<const Vec>& grad,
              double lr);
};

}  // namespace hypermorl

#endif  // HYPERMORL_ADAM_HPP_
