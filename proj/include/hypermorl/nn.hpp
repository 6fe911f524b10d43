#ifndef HYPERMORL_NN_HPP_
#define HYPERMORL_NN_HPP_

#include <limits>
#include <string>
#include <vector>

#include "hypermorl/momdp.hpp"

namespace hypermorl {

// Flat parameter vector; its meaning comes from the owning MlpLayout.
using FlatParams = Vec;

struct Slice {
  std::string name;
  int offset = 0;
  int length = 0;

  int end() const { return offset + length; }
};

// Fully connected tanh network packed into one flat vector. Per layer l the
// weight matrix W_l (out x in, row-major) is followed by its bias b_l. An
// optional trailing "log_std" slice holds state-independent Gaussian
// log standard deviations for a policy head.
class MlpLayout {
 public:
  MlpLayout() = default;
  MlpLayout(std::vector<int> sizes, int log_std_dim = 0);

  const std::vector<int>& sizes() const { return sizes_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_params() const { return num_params_; }
  int log_std_dim() const { return log_std_dim_; }
  bool has_log_std() const { return log_std_dim_ > 0; }

  const std::vector<Slice>& slices() const { return slices_; }
  const Slice& weight_slice(int layer) const { return slices_[2 * layer]; }
  const Slice& bias_slice(int layer) const { return slices_[2 * layer + 1]; }
  const Slice& log_std_slice() const;

  // "4,16,16,2+2" style descriptor; parse(describe()) == *this.
  std::string describe() const;
  static MlpLayout parse(const std::string& text);

  friend bool operator==(const MlpLayout& a, const MlpLayout& b) {
    return a.sizes_ == b.sizes_ && a.log_std_dim_ == b.log_std_dim_;
  }

 private:
  std::vector<int> sizes_;
  int log_std_dim_ = 0;
  int num_params_ = 0;
  std::vector<Slice> slices_;
};

// Post-activation values per layer; activations[0] is the input and
// activations.back() the (linear) output.
struct MlpCache {
  std::vector<Vec> activations;

  const Vec& output() const { return activations.back(); }
};

MlpCache mlp_forward(const MlpLayout& layout, const FlatParams& params,
                     const Vec& input);

Vec mlp_output(const MlpLayout& layout, const FlatParams& params,
               const Vec& input);

// Reverse pass: adds d(loss)/d(params) into grad_params for a given
// d(loss)/d(output). When grad_input is non-null it receives d/d(input).
void mlp_backward(const MlpLayout& layout, const FlatParams& params,
                  const MlpCache& cache, const Vec& grad_output,
                  FlatParams& grad_params, Vec* grad_input = nullptr);

// Scaled-uniform init: W_l ~ U(-g/sqrt(fan_in), g/sqrt(fan_in)) with gain
// g = 1 for hidden layers and output_gain for the last layer; biases and
// log_std start at zero.
FlatParams init_params(const MlpLayout& layout, Rng& rng,
                       double output_gain = 1.0);

struct GaussianOutput {
  Vec mean;
  Vec std;
};

inline constexpr double kNoLogStdFloor = -std::numeric_limits<double>::infinity();

// std = exp(max(log_std, min_log_std)); the floor has zero gradient.
GaussianOutput policy_forward(const MlpLayout& layout, const FlatParams& theta,
                              const Vec& state,
                              double min_log_std = kNoLogStdFloor);

// Diagonal Gaussian log density summed over action dimensions.
double log_prob(const Vec& mean, const Vec& std, const Vec& action);

FlatParams policy_grad_logprob(const MlpLayout& layout, const FlatParams& theta,
                               const Vec& state, const Vec& action);

// grad += scale * d log pi(action | state) / d theta; returns log pi.
double accumulate_grad_logprob(const MlpLayout& layout, const FlatParams& theta,
                               const Vec& state, const Vec& action,
                               double scale, FlatParams& grad,
                               double min_log_std = kNoLogStdFloor);

Vec sample_action(const GaussianOutput& dist, Rng& rng);

// Sets the log_std slice to zero (std = 1); every other entry is untouched.
FlatParams reset_exploration(const FlatParams& theta, const MlpLayout& layout);

bool all_finite(const Vec& v);

}  // namespace hypermorl

#endif  // HYPERMORL_NN_HPP_
