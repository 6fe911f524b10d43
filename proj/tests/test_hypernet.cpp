#include <doctest.h>

#include <cmath>

#include "hypermorl/hypernet.hpp"

using namespace hypermorl;

namespace {

Vec random_vec(Rng& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

HypernetParams random_phi(Rng& rng, const MlpLayout& policy, const MlpLayout& embedding) {
  HypernetParams phi = bias_hyper_init(rng, policy, embedding);
  phi.W = random_vec(rng, phi.n() * phi.d(), 0.3).reshaped<Eigen::RowMajor>(phi.n(), phi.d());
  phi.mu = random_vec(rng, embedding.num_params(), 0.5);
  phi.b = random_vec(rng, phi.n(), 0.5);
  return phi;
}

double rel_err(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

}  // namespace

TEST_CASE("W = 0 maps every preference to b") {
  Rng rng(1);
  const HypernetParams phi = bias_hyper_init(rng, MlpLayout({2, 4, 2}, 2), MlpLayout({2, 8, 3}));
  CHECK(phi.W.isZero());
  for (const auto& w : preference_grid(2, 99)) CHECK(hypernet_forward(phi, w) == phi.b);
}

TEST_CASE("single nonzero column of W") {
  Rng rng(2);
  HypernetParams phi = bias_hyper_init(rng, MlpLayout({2, 3, 2}, 2), MlpLayout({2, 5, 3}));
  const Vec c = random_vec(rng, phi.n());
  phi.W.col(1) = c;
  const Preference w(Vec::Constant(2, 0.5));
  const Vec z = mlp_output(phi.embedding, phi.mu, w.weights());
  CHECK((hypernet_forward(phi, w) - (z[1] * c + phi.b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("hypernet_forward matches an independent composition") {
  Rng rng(3);
  const HypernetParams phi = random_phi(rng, MlpLayout({3, 4, 2}, 2), MlpLayout({3, 6, 2}));
  Vec wv(3);
  wv << 0.2, 0.3, 0.5;
  const Preference w(wv);
  // f_mu by hand: 3 -> 6 (tanh) -> 2 (linear).
  const Vec& mu = phi.mu;
  Vec h(6), z(2);
  for (int o = 0; o < 6; ++o) {
    double s = mu[18 + o];
    for (int i = 0; i < 3; ++i) s += mu[o * 3 + i] * wv[i];
    h[o] = std::tanh(s);
  }
  for (int o = 0; o < 2; ++o) {
    double s = mu[24 + 12 + o];
    for (int i = 0; i < 6; ++i) s += mu[24 + o * 6 + i] * h[i];
    z[o] = s;
  }
  Vec theta(phi.n());
  for (int r = 0; r < phi.n(); ++r) theta[r] = phi.W(r, 0) * z[0] + phi.W(r, 1) * z[1] + phi.b[r];
  CHECK((hypernet_forward(phi, w) - theta).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("bias_hyper_init") {
  Rng a(10), b(11);
  const MlpLayout policy({2, 4, 2}, 2), emb({2, 8, 3});
  const HypernetParams pa = bias_hyper_init(a, policy, emb);
  const HypernetParams pb = bias_hyper_init(b, policy, emb);
  CHECK(pa.b != pb.b);
  for (long i = 0; i < pa.W.size(); ++i) CHECK(pa.W.data()[i] == 0.0);
  const Vec first = hypernet_forward(pa, preference_grid(2, 99)[0]);
  for (const auto& w : preference_grid(2, 99)) CHECK(hypernet_forward(pa, w) == first);
}

TEST_CASE("hypernet_vjp with W = 0") {
  Rng rng(4);
  const HypernetParams phi = bias_hyper_init(rng, MlpLayout({2, 3, 2}, 2), MlpLayout({2, 5, 3}));
  const Vec g = random_vec(rng, phi.n());
  const HypernetGrad grad = hypernet_vjp(phi, uniform_preference(2), g);
  CHECK(grad.mu.isZero());
  CHECK(grad.b == g);
}

TEST_CASE("hypernet_vjp d = 1 outer product") {
  Rng rng(5);
  HypernetParams phi = bias_hyper_init(rng, MlpLayout({1, 1}), MlpLayout({2, 1}));
  REQUIRE(phi.n() == 2);
  const Preference w(Vec::Constant(2, 0.5));
  const double z = mlp_output(phi.embedding, phi.mu, w.weights())[0];
  Vec g(2);
  g << 0.7, -1.3;
  const HypernetGrad grad = hypernet_vjp(phi, w, g);
  CHECK(grad.W(0, 0) == doctest::Approx(z * 0.7));
  CHECK(grad.W(1, 0) == doctest::Approx(z * -1.3));
}

TEST_CASE("hypernet_vjp matches central differences through the policy") {
  Rng rng(6);
  const MlpLayout policy({2, 4, 2}, 2);  // n = 24
  for (int d = 1; d <= 3; ++d) {
    const HypernetParams phi = random_phi(rng, policy, MlpLayout({2, 4, d}));
    const Preference w(Vec::Constant(2, 0.5));
    const Vec s = random_vec(rng, 2), a = random_vec(rng, 2);
    auto objective = [&](const HypernetParams& p) {
      const auto dist = policy_forward(policy, hypernet_forward(p, w), s);
      return log_prob(dist.mean, dist.std, a);
    };
    const FlatParams g = policy_grad_logprob(policy, hypernet_forward(phi, w), s, a);
    const Vec analytic = flatten(hypernet_vjp(phi, w, g));
    const Vec x = flatten(phi);
    Vec fd(x.size());
    for (long i = 0; i < x.size(); ++i) {
      HypernetParams p = phi, q = phi;
      Vec xp = x, xq = x;
      xp[i] += 1e-6;
      xq[i] -= 1e-6;
      unflatten(xp, p);
      unflatten(xq, q);
      fd[i] = (objective(p) - objective(q)) / 2e-6;
    }
    CHECK(rel_err(analytic, fd) < 1e-4);
  }
}

TEST_CASE("flatten and unflatten round trip") {
  Rng rng(7);
  const HypernetParams phi = random_phi(rng, MlpLayout({2, 3, 2}, 2), MlpLayout({2, 4, 3}));
  HypernetParams copy = phi;
  copy.W.setZero();
  copy.mu.setZero();
  copy.b.setZero();
  unflatten(flatten(phi), copy);
  CHECK(copy == phi);
  CHECK(flatten(phi).size() == phi.num_params());
}

TEST_CASE("hypernet properties") {
  Rng rng(31);
  std::uniform_int_distribution<int> width(1, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 2, d = width(rng);
    const int out = width(rng);
    HypernetParams phi = random_phi(rng, MlpLayout({width(rng), width(rng), out}, out),
                                    MlpLayout({m, width(rng), d}));
    HypernetParams copy = phi;
    unflatten(flatten(phi), copy);
    CHECK(copy == phi);
    CHECK(phi.num_params() == static_cast<long>(phi.n()) * d + phi.n() + phi.mu.size());
  }

  const HypernetParams phi = random_phi(rng, MlpLayout({2, 4, 2}, 2), MlpLayout({2, 8, 3}));
  double previous = 0.0;
  for (int h : {50, 100, 200, 400}) {
    const auto grid = preference_grid(2, h);
    double lipschitz = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double dt = (hypernet_forward(phi, grid[i + 1]) - hypernet_forward(phi, grid[i])).norm();
      lipschitz = std::max(lipschitz, dt / (grid[i + 1].weights() - grid[i].weights()).norm());
    }
    CHECK(std::isfinite(lipschitz));
    if (previous > 0.0) CHECK(std::abs(lipschitz - previous) < 0.05 * previous);
    previous = lipschitz;
  }

  const Mat W = phi.W;
  const Eigen::ColPivHouseholderQR<Mat> qr(W);
  for (const auto& w : preference_grid(2, 99)) {
    const Vec r = hypernet_forward(phi, w) - phi.b;
    CHECK((W * qr.solve(r) - r).norm() < 1e-8);
  }
}

TEST_CASE("shipped hypernets use fewer parameters than independent policies") {
  // m = 2 grid of 20 + 1 points, m = 3 grid of 66 points.
  for (auto [m, grid_size] : {std::pair{2, 21}, std::pair{3, 66}}) {
    Rng rng(1);
    const HypernetParams phi =
        bias_hyper_init(rng, MlpLayout({2, 16, 16, 2}, 2), MlpLayout({m, 32, 10}));
    CHECK(grid_size > phi.d() + 1);
    CHECK(phi.num_params() < static_cast<long>(grid_size) * phi.n());
  }
}
