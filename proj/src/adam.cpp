#include "hypermorl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace hypermorl {

AdamState::AdamState(const std::vector<long>& block_sizes) {
  for (long n : block_sizes) {
    m.push_back(Vec::Zero(n));
    v.push_back(Vec::Zero(n));
  }
}

void AdamState::update(int block, Eigen::Ref<Vec> params,
                       const Eigen::Ref<const Vec>& grad, double lr) {
  if (block < 0 || block >= static_cast<int>(m.size())) {
    throw std::out_of_range("unknown ADAM block");
  }
  if (step < 1) throw std::logic_error("AdamState::update before begin_step");
  Vec& mb = m[block];
  Vec& vb = v[block];
  if (params.size() != mb.size() || grad.size() != mb.size()) {
    throw std::invalid_argument("ADAM block size mismatch");
  }
  mb = beta1 * mb + (1.0 - beta1) * grad;
  vb = beta2 * vb + (1.0 - beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params.array() -=
      lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
}

}  // namespace hypermorl
