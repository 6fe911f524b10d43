#include "hypermorl/hypernet.hpp"

#include <stdexcept>

namespace hypermorl {

long HypernetParams::num_params() const {
  return static_cast<long>(n()) * d() + n() + embedding.num_params();
}

void HypernetParams::validate() const {
  if (W.rows() != n() || W.cols() != d()) {
    throw std::invalid_argument("hypernet W must be n x d");
  }
  if (b.size() != n()) throw std::invalid_argument("hypernet b must have length n");
  if (mu.size() != embedding.num_params()) {
    throw std::invalid_argument("hypernet mu does not match embedding layout");
  }
  if (d() > n()) throw std::invalid_argument("hypernet needs d <= n");
}

bool operator==(const HypernetParams& a, const HypernetParams& b) {
  return a.policy == b.policy && a.embedding == b.embedding && a.W == b.W &&
         a.mu == b.mu && a.b == b.b;
}

HypernetGrad HypernetGrad::zeros_like(const HypernetParams& phi) {
  return {RowMat::Zero(phi.n(), phi.d()), FlatParams::Zero(phi.mu.size()),
          FlatParams::Zero(phi.n())};
}

HypernetGrad& HypernetGrad::operator+=(const HypernetGrad& other) {
  W += other.W;
  mu += other.mu;
  b += other.b;
  return *this;
}

HypernetGrad& HypernetGrad::operator*=(double s) {
  W *= s;
  mu *= s;
  b *= s;
  return *this;
}

FlatParams hypernet_forward(const HypernetParams& phi, const Preference& w) {
  if (w.size() != phi.m()) {
    throw std::invalid_argument("preference dimension does not match hypernet");
  }
  const Vec z = mlp_output(phi.embedding, phi.mu, w.weights());
  FlatParams theta = phi.b;
  theta.noalias() += phi.W * z;
  return theta;
}

HypernetParams bias_hyper_init(Rng& rng, const MlpLayout& policy,
                               const MlpLayout& embedding,
                               double policy_output_gain) {
  HypernetParams phi;
  phi.policy = policy;
  phi.embedding = embedding;
  phi.W = RowMat::Zero(policy.num_params(), embedding.output_dim());
  phi.b = init_params(policy, rng, policy_output_gain);
  phi.mu = init_params(embedding, rng);
  phi.validate();
  return phi;
}

HypernetGrad hypernet_vjp(const HypernetParams& phi, const Preference& w,
                          const FlatParams& g_theta) {
  if (g_theta.size() != phi.n()) {
    throw std::invalid_argument("g_theta length must equal n");
  }
  if (w.size() != phi.m()) {
    throw std::invalid_argument("preference dimension does not match hypernet");
  }
  const MlpCache cache = mlp_forward(phi.embedding, phi.mu, w.weights());
  HypernetGrad g;
  g.b = g_theta;
  g.W = g_theta * cache.output().transpose();
  g.mu = FlatParams::Zero(phi.mu.size());
  const Vec grad_z = phi.W.transpose() * g_theta;
  mlp_backward(phi.embedding, phi.mu, cache, grad_z, g.mu);
  return g;
}

Vec flatten(const HypernetParams& phi) {
  const long wn = phi.W.size();
  Vec flat(phi.num_params());
  flat.head(wn) = Eigen::Map<const Vec>(phi.W.data(), wn);
  flat.segment(wn, phi.mu.size()) = phi.mu;
  flat.tail(phi.b.size()) = phi.b;
  return flat;
}

void unflatten(const Vec& flat, HypernetParams& phi) {
  if (flat.size() != phi.num_params()) {
    throw std::invalid_argument("flat hypernet vector has wrong length");
  }
  const long wn = phi.W.size();
  Eigen::Map<Vec>(phi.W.data(), wn) = flat.head(wn);
  phi.mu = flat.segment(wn, phi.mu.size());
  phi.b = flat.tail(phi.b.size());
}

Vec flatten(const HypernetGrad& g) {
  const long wn = g.W.size();
  Vec flat(wn + g.mu.size() + g.b.size());
  flat.head(wn) = Eigen::Map<const Vec>(g.W.data(), wn);
  flat.segment(wn, g.mu.size()) = g.mu;
  flat.tail(g.b.size()) = g.b;
  return flat;
}

}  // namespace hypermorl
