#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inl/rng.hpp"
#include "inl/tensor.hpp"

namespace inl {

enum class Activation { linear, relu, sigmoid, tanh, softmax };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t out_dim = 0;
  Activation activation = Activation::linear;
};

struct DenseLayer {
  Tensor weights;               // [out_dim x in_dim]
  std::vector<double> biases;   // [out_dim]
  Activation activation = Activation::linear;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

struct LayerGrad {
  Tensor weights;
  std::vector<double> biases;
};
using NetGrad = std::vector<LayerGrad>;

struct BackwardResult {
  NetGrad grads;
  Tensor delta_in;  // [b x in_dim], per-sample error at the input layer
};

// Zero gradient with the same shapes as `layers`.
NetGrad zero_grad_like(std::span<const DenseLayer> layers);
void add_scaled(NetGrad& acc, const NetGrad& g, double scale = 1.0);

// Plain multilayer perceptron with an explicit forward cache.
//
// Error-vector convention: backward_from_delta takes, for every sample i, the
// gradient of that sample's loss with respect to the output activations. The
// parameter gradients it returns are averaged over the batch; delta_in is kept
// per sample so it can be cut into sub-vectors and handed to upstream nets,
// which then average again. A net that is stitched together from several
// pieces therefore sees exactly the gradient of the batch-mean loss.
class FeedForwardNet {
 public:
  FeedForwardNet() = default;
  // Glorot-uniform weights, zero biases.
  FeedForwardNet(std::size_t in_dim, std::span<const LayerSpec> specs, Rng& rng);
  explicit FeedForwardNet(std::vector<DenseLayer> layers);

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_params() const;

  std::span<DenseLayer> layers() { return layers_; }
  std::span<const DenseLayer> layers() const { return layers_; }

  // Runs the batch and caches every layer's input, pre-activation and output.
  Tensor forward(const Tensor& batch);
  // Same computation without touching the cache.
  Tensor predict(const Tensor& batch) const;

  BackwardResult backward_from_delta(const Tensor& delta_out) const;

  // w <- w - eta * grad_w, b <- b - eta * grad_b. Invalidates the cache.
  void apply_sgd(const NetGrad& grads, double eta);

  bool has_cache() const { return cache_valid_; }
  void clear_cache() { cache_valid_ = false; }

  // Flat parameter view in layer order: weights (row-major) then biases.
  std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> params);

 private:
  struct LayerCache {
    Tensor input;
    Tensor pre;
    Tensor out;
  };

  std::vector<DenseLayer> layers_;
  std::vector<LayerCache> cache_;
  bool cache_valid_ = false;
};

// Layer-by-layer mean of identically shaped nets (federated aggregation).
FeedForwardNet average_nets(std::span<const FeedForwardNet* const> nets);
bool same_architecture(const FeedForwardNet& a, const FeedForwardNet& b);

// Diagonal Gaussian encoder head: the last layer of width 2d is read as
// [mean | log-variance]. The prior is the standard normal.
struct GaussianHead {
  std::size_t latent_dim = 0;
};

struct LatentSample {
  Tensor mu;      // [b x d]
  Tensor logvar;  // [b x d]
  Tensor noise;   // [b x d]
  Tensor u;       // [b x d]
};

void check_head(const GaussianHead& head, const FeedForwardNet& net);

// u = mu + exp(logvar / 2) * noise, elementwise.
std::vector<double> sample_latent(const GaussianHead& head, std::span<const double> mu,
                                  std::span<const double> logvar, std::span<const double> noise);

// Splits the 2d-wide output and applies the reparametrisation per sample.
LatentSample sample_latent_batch(const GaussianHead& head, const Tensor& head_out, Tensor noise);

// log N(u; mu, diag(exp(logvar))) - log N(u; 0, I).
double gaussian_log_ratio(std::span<const double> u, std::span<const double> mu,
                          std::span<const double> logvar);

// Closed-form KL(N(mu, diag(exp(logvar))) || N(0, I)).
double gaussian_kl_standard(std::span<const double> mu, std::span<const double> logvar);

// Gradient of the per-sample objective with respect to the head's 2d-wide
// output, given the gradient `grad_u` reaching u from downstream and a local
// coefficient on the sample's log-ratio (the total derivative through the
// reparametrisation, noise held fixed).
Tensor head_backward(const LatentSample& sample, const Tensor& grad_u, double ratio_coef);

inline constexpr double kLogLossFloor = 1e-12;

// log(1 / p_hat[y]) in nats, with p_hat[y] clamped to kLogLossFloor.
double log_loss(std::size_t y, std::span<const double> p_hat);

}  // namespace inl
