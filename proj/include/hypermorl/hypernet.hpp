#ifndef HYPERMORL_HYPERNET_HPP_
#define HYPERMORL_HYPERNET_HPP_

#include "hypermorl/nn.hpp"

namespace hypermorl {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// theta(w) = W f_mu(w) + b. W is n x d, f_mu an MLP from the m-simplex to R^d,
// b the shared policy parameter vector.
struct HypernetParams {
  MlpLayout policy;     // layout of theta, n = policy.num_params()
  MlpLayout embedding;  // f_mu: m -> ... -> d
  RowMat W;
  FlatParams mu;
  FlatParams b;

  int n() const { return policy.num_params(); }
  int d() const { return embedding.output_dim(); }
  int m() const { return embedding.input_dim(); }
  // n*d + n + |mu|
  long num_params() const;

  void validate() const;
};

bool operator==(const HypernetParams& a, const HypernetParams& b);

struct HypernetGrad {
  RowMat W;
  FlatParams mu;
  FlatParams b;

  static HypernetGrad zeros_like(const HypernetParams& phi);
  HypernetGrad& operator+=(const HypernetGrad& other);
  HypernetGrad& operator*=(double s);
};

FlatParams hypernet_forward(const HypernetParams& phi, const Preference& w);

// Bias-HyperInit: W = 0, b and mu from the standard per-layer init. Every
// preference therefore maps to the same policy b until W moves.
HypernetParams bias_hyper_init(Rng& rng, const MlpLayout& policy,
                               const MlpLayout& embedding,
                               double policy_output_gain = 1.0);

// Pullback of g_theta through theta = W f_mu(w) + b:
//   grad_b = g,  grad_W = g f_mu(w)^T,  grad_mu = J_f(w)^T (W^T g).
HypernetGrad hypernet_vjp(const HypernetParams& phi, const Preference& w,
                          const FlatParams& g_theta);

// Flat view of phi as [W row-major | mu | b], used by finite-difference checks
// and optimizers that treat phi as one vector.
Vec flatten(const HypernetParams& phi);
void unflatten(const Vec& flat, HypernetParams& phi);
Vec flatten(const HypernetGrad& g);

}  // namespace hypermorl

#endif  // HYPERMORL_HYPERNET_HPP_
