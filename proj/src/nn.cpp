#include "hypermorl/nn.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hypermorl {

MlpLayout::MlpLayout(std::vector<int> sizes, int log_std_dim)
    : sizes_(std::move(sizes)), log_std_dim_(log_std_dim) {
  if (sizes_.size() < 2) {
    throw std::invalid_argument("MlpLayout needs at least input and output");
  }
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("MlpLayout sizes must be >= 1");
  }
  if (log_std_dim_ < 0) throw std::invalid_argument("negative log_std_dim");
  if (log_std_dim_ > 0 && log_std_dim_ != sizes_.back()) {
    throw std::invalid_argument("log_std_dim must equal the output dimension");
  }
  int offset = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    const int w = sizes_[l] * sizes_[l + 1];
    slices_.push_back({"W" + std::to_string(l), offset, w});
    offset += w;
    slices_.push_back({"b" + std::to_string(l), offset, sizes_[l + 1]});
    offset += sizes_[l + 1];
  }
  if (log_std_dim_ > 0) {
    slices_.push_back({"log_std", offset, log_std_dim_});
    offset += log_std_dim_;
  }
  num_params_ = offset;
}

const Slice& MlpLayout::log_std_slice() const {
  if (!has_log_std()) throw std::logic_error("layout has no log_std slice");
  return slices_.back();
}

std::string MlpLayout::describe() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    out << (i ? "," : "") << sizes_[i];
  }
  if (log_std_dim_ > 0) out << '+' << log_std_dim_;
  return out.str();
}

MlpLayout MlpLayout::parse(const std::string& text) {
  std::string body = text;
  int log_std = 0;
  if (auto plus = text.find('+'); plus != std::string::npos) {
    body = text.substr(0, plus);
    log_std = std::stoi(text.substr(plus + 1));
  }
  std::vector<int> sizes;
  std::stringstream ss(body);
  std::string cell;
  while (std::getline(ss, cell, ',')) sizes.push_back(std::stoi(cell));
  return MlpLayout(std::move(sizes), log_std);
}

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> weights(const MlpLayout& layout,
                                   const FlatParams& params, int l) {
  const auto& s = layout.weight_slice(l);
  return {params.data() + s.offset, layout.sizes()[l + 1], layout.sizes()[l]};
}

Eigen::Map<RowMajor> weights(const MlpLayout& layout, FlatParams& params,
                             int l) {
  const auto& s = layout.weight_slice(l);
  return {params.data() + s.offset, layout.sizes()[l + 1], layout.sizes()[l]};
}

}  // namespace

MlpCache mlp_forward(const MlpLayout& layout, const FlatParams& params,
                     const Vec& input) {
  if (params.size() != layout.num_params()) {
    throw std::invalid_argument("parameter vector length does not match layout");
  }
  if (input.size() != layout.input_dim()) {
    throw std::invalid_argument("input dimension does not match layout");
  }
  MlpCache cache;
  cache.activations.reserve(layout.sizes().size());
  cache.activations.push_back(input);
  const int layers = layout.num_layers();
  for (int l = 0; l < layers; ++l) {
    const auto& b = layout.bias_slice(l);
    Vec z = weights(layout, params, l) * cache.activations.back() +
            params.segment(b.offset, b.length);
    if (l + 1 < layers) z = z.array().tanh();
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

Vec mlp_output(const MlpLayout& layout, const FlatParams& params,
               const Vec& input) {
  return mlp_forward(layout, params, input).activations.back();
}

void mlp_backward(const MlpLayout& layout, const FlatParams& params,
                  const MlpCache& cache, const Vec& grad_output,
                  FlatParams& grad_params, Vec* grad_input) {
  if (grad_params.size() != layout.num_params()) {
    throw std::invalid_argument("gradient buffer length does not match layout");
  }
  // delta holds d(loss)/d(pre-activation) of the current layer.
  Vec delta = grad_output;
  for (int l = layout.num_layers() - 1; l >= 0; --l) {
    const Vec& in = cache.activations[l];
    weights(layout, grad_params, l).noalias() += delta * in.transpose();
    const auto& b = layout.bias_slice(l);
    grad_params.segment(b.offset, b.length) += delta;
    if (l == 0 && grad_input == nullptr) break;
    Vec upstream = weights(layout, params, l).transpose() * delta;
    if (l == 0) {
      *grad_input = std::move(upstream);
      break;
    }
    // tanh'(z) = 1 - tanh(z)^2, and activations[l] = tanh(z_{l-1}).
    delta = upstream.array() * (1.0 - in.array().square());
  }
}

FlatParams init_params(const MlpLayout& layout, Rng& rng, double output_gain) {
  FlatParams params = FlatParams::Zero(layout.num_params());
  for (int l = 0; l < layout.num_layers(); ++l) {
    const double gain = (l + 1 == layout.num_layers()) ? output_gain : 1.0;
    const double bound = gain / std::sqrt(static_cast<double>(layout.sizes()[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const auto& s = layout.weight_slice(l);
    for (int i = 0; i < s.length; ++i) params[s.offset + i] = dist(rng);
  }
  return params;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

namespace {

Vec effective_log_std(const MlpLayout& layout, const FlatParams& theta,
                      double min_log_std) {
  const auto& ls = layout.log_std_slice();
  return theta.segment(ls.offset, ls.length).cwiseMax(min_log_std);
}

}  // namespace

GaussianOutput policy_forward(const MlpLayout& layout, const FlatParams& theta,
                              const Vec& state, double min_log_std) {
  if (!layout.has_log_std()) {
    throw std::invalid_argument("policy layout needs a log_std slice");
  }
  if (!all_finite(theta)) throw std::domain_error("policy parameters contain NaN");
  return {mlp_output(layout, theta, state),
          effective_log_std(layout, theta, min_log_std).array().exp()};
}

double log_prob(const Vec& mean, const Vec& std, const Vec& action) {
  if (mean.size() != std.size() || mean.size() != action.size()) {
    throw std::invalid_argument("log_prob: dimension mismatch");
  }
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double total = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    if (!(std[i] > 0.0)) throw std::invalid_argument("log_prob: std must be > 0");
    const double z = (action[i] - mean[i]) / std[i];
    total += -0.5 * z * z - std::log(std[i]) - kHalfLog2Pi;
  }
  return total;
}

double accumulate_grad_logprob(const MlpLayout& layout, const FlatParams& theta,
                               const Vec& state, const Vec& action,
                               double scale, FlatParams& grad,
                               double min_log_std) {
  const MlpCache cache = mlp_forward(layout, theta, state);
  const Vec& mean = cache.output();
  const auto& ls = layout.log_std_slice();
  const Vec raw_log_std = theta.segment(ls.offset, ls.length);
  const Vec log_std = raw_log_std.cwiseMax(min_log_std);
  const Vec std = log_std.array().exp();
  const double lp = log_prob(mean, std, action);
  if (scale == 0.0) return lp;

  const Vec diff = action - mean;
  const Vec inv_var = (-2.0 * log_std).array().exp();
  // d/d mean = (a - mu) / sigma^2 ; d/d log_sigma = -1 + (a - mu)^2 / sigma^2.
  const Vec grad_mean = scale * diff.cwiseProduct(inv_var);
  mlp_backward(layout, theta, cache, grad_mean, grad);
  for (int i = 0; i < ls.length; ++i) {
    if (raw_log_std[i] < min_log_std) continue;
    grad[ls.offset + i] += scale * (diff[i] * diff[i] * inv_var[i] - 1.0);
  }
  return lp;
}

FlatParams policy_grad_logprob(const MlpLayout& layout, const FlatParams& theta,
                               const Vec& state, const Vec& action) {
  if (!all_finite(theta)) throw std::domain_error("policy parameters contain NaN");
  FlatParams grad = FlatParams::Zero(layout.num_params());
  accumulate_grad_logprob(layout, theta, state, action, 1.0, grad);
  return grad;
}

Vec sample_action(const GaussianOutput& dist, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec a(dist.mean.size());
  for (int i = 0; i < a.size(); ++i) a[i] = dist.mean[i] + dist.std[i] * normal(rng);
  return a;
}

FlatParams reset_exploration(const FlatParams& theta, const MlpLayout& layout) {
  if (theta.size() != layout.num_params()) {
    throw std::invalid_argument("parameter vector length does not match layout");
  }
  FlatParams out = theta;
  const auto& ls = layout.log_std_slice();
  out.segment(ls.offset, ls.length).setZero();
  return out;
}

}  // namespace hypermorl
