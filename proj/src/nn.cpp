#include "inl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "inl/errors.hpp"

namespace inl {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear" || name == "identity") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "softmax") return Activation::softmax;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

namespace {

void activate_row(Activation act, std::span<const double> z, std::span<double> a) {
  switch (act) {
    case Activation::linear:
      std::copy(z.begin(), z.end(), a.begin());
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = 1.0 / (1.0 + std::exp(-z[i]));
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::tanh(z[i]);
      break;
    case Activation::softmax: {
      const double m = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        a[i] = std::exp(z[i] - m);
        sum += a[i];
      }
      for (double& v : a) v /= sum;
      break;
    }
  }
}

// delta = dL/dz given g = dL/da for one sample.
void activation_backward_row(Activation act, std::span<const double> z, std::span<const double> a,
                             std::span<const double> g, std::span<double> delta) {
  switch (act) {
    case Activation::linear:
      std::copy(g.begin(), g.end(), delta.begin());
      break;
    case Activation::relu:
      // relu'(0) := 0
      for (std::size_t i = 0; i < z.size(); ++i) delta[i] = z[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < z.size(); ++i) delta[i] = g[i] * a[i] * (1.0 - a[i]);
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < z.size(); ++i) delta[i] = g[i] * (1.0 - a[i] * a[i]);
      break;
    case Activation::softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * g[i];
      for (std::size_t i = 0; i < a.size(); ++i) delta[i] = a[i] * (g[i] - dot);
      break;
    }
  }
}

Tensor layer_forward(const DenseLayer& layer, const Tensor& input, Tensor* pre_out) {
  const std::size_t b = input.rows();
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  Tensor pre = Tensor::matrix(b, out);
  Tensor act = Tensor::matrix(b, out);
  for (std::size_t r = 0; r < b; ++r) {
    auto x = input.row(r);
    auto z = pre.row(r);
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = &layer.weights(o, 0);
      double acc = layer.biases[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[i] * x[i];
      z[o] = acc;
    }
    activate_row(layer.activation, z, act.row(r));
  }
  if (pre_out) *pre_out = std::move(pre);
  return act;
}

}  // namespace

NetGrad zero_grad_like(std::span<const DenseLayer> layers) {
  NetGrad g;
  g.reserve(layers.size());
  for (const auto& l : layers) {
    g.push_back({Tensor::matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)});
  }
  return g;
}

void add_scaled(NetGrad& acc, const NetGrad& g, double scale) {
  if (acc.size() != g.size()) throw ShapeError("add_scaled: layer count mismatch");
  for (std::size_t l = 0; l < acc.size(); ++l) {
    require_same_shape(acc[l].weights, g[l].weights, "add_scaled");
    auto& aw = acc[l].weights.data();
    const auto& gw = g[l].weights.data();
    for (std::size_t i = 0; i < aw.size(); ++i) aw[i] += scale * gw[i];
    for (std::size_t i = 0; i < acc[l].biases.size(); ++i) acc[l].biases[i] += scale * g[l].biases[i];
  }
}

FeedForwardNet::FeedForwardNet(std::size_t in_dim, std::span<const LayerSpec> specs, Rng& rng) {
  if (specs.empty()) throw ValidationError("a network needs at least one layer");
  if (in_dim == 0) throw ValidationError("input dimension must be positive");
  std::size_t prev = in_dim;
  for (const auto& spec : specs) {
    if (spec.out_dim == 0) throw ValidationError("layer width must be positive");
    DenseLayer layer;
    layer.weights = Tensor::matrix(spec.out_dim, prev);
    layer.biases.assign(spec.out_dim, 0.0);
    layer.activation = spec.activation;
    const double limit = std::sqrt(6.0 / static_cast<double>(prev + spec.out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weights.data()) w = dist(rng);
    layers_.push_back(std::move(layer));
    prev = spec.out_dim;
  }
}

FeedForwardNet::FeedForwardNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("a network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights.rows() != layers_[l].biases.size()) {
      throw ShapeError("layer " + std::to_string(l) + ": weight rows != bias length");
    }
    if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim()) {
      throw ShapeError("layer " + std::to_string(l) + " input dim " +
                       std::to_string(layers_[l].in_dim()) + " != previous output dim " +
                       std::to_string(layers_[l - 1].out_dim()));
    }
  }
}

std::size_t FeedForwardNet::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

Tensor FeedForwardNet::forward(const Tensor& batch) {
  if (batch.rank() != 2 || batch.cols() != in_dim()) {
    throw ShapeError("forward: batch shape " + batch.shape_string() + " but network expects " +
                     std::to_string(in_dim()) + " inputs");
  }
  cache_.resize(layers_.size());
  const Tensor* input = &batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& c = cache_[l];
    c.input = *input;
    c.out = layer_forward(layers_[l], c.input, &c.pre);
    input = &c.out;
  }
  cache_valid_ = true;
  return cache_.back().out;
}

Tensor FeedForwardNet::predict(const Tensor& batch) const {
  if (batch.rank() != 2 || batch.cols() != in_dim()) {
    throw ShapeError("predict: batch shape " + batch.shape_string() + " but network expects " +
                     std::to_string(in_dim()) + " inputs");
  }
  Tensor x = batch;
  for (const auto& layer : layers_) x = layer_forward(layer, x, nullptr);
  return x;
}

BackwardResult FeedForwardNet::backward_from_delta(const Tensor& delta_out) const {
  if (!cache_valid_) throw ProtocolError("backward_from_delta called without a forward cache");
  const Tensor& last = cache_.back().out;
  require_same_shape(delta_out, last, "backward_from_delta");

  const std::size_t b = delta_out.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  BackwardResult result;
  result.grads.resize(layers_.size());

  // grad_a holds dL/da for the current layer's output, per sample.
  Tensor grad_a = delta_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    const auto& c = cache_[l];
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();

    Tensor delta = Tensor::matrix(b, out);
    for (std::size_t r = 0; r < b; ++r) {
      activation_backward_row(layer.activation, c.pre.row(r), c.out.row(r), grad_a.row(r), delta.row(r));
    }

    LayerGrad& g = result.grads[l];
    g.weights = Tensor::matrix(out, in);
    g.biases.assign(out, 0.0);
    for (std::size_t r = 0; r < b; ++r) {
      auto d = delta.row(r);
      auto x = c.input.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        double* gw = &g.weights(o, 0);
        for (std::size_t i = 0; i < in; ++i) gw[i] += dv * x[i];
        g.biases[o] += dv;
      }
    }
    for (double& v : g.weights.data()) v *= inv_b;
    for (double& v : g.biases) v *= inv_b;

    // W^T delta: no activation factor at the network input.
    Tensor grad_prev = Tensor::matrix(b, in);
    for (std::size_t r = 0; r < b; ++r) {
      auto d = delta.row(r);
      auto gp = grad_prev.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        const double* w = &layer.weights(o, 0);
        for (std::size_t i = 0; i < in; ++i) gp[i] += w[i] * dv;
      }
    }
    grad_a = std::move(grad_prev);
  }
  result.delta_in = std::move(grad_a);
  return result;
}

void FeedForwardNet::apply_sgd(const NetGrad& grads, double eta) {
  if (!(eta >= 0.0)) throw ValidationError("learning rate must be non-negative");
  if (grads.size() != layers_.size()) throw ShapeError("apply_sgd: layer count mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    require_same_shape(layers_[l].weights, grads[l].weights, "apply_sgd");
    if (grads[l].biases.size() != layers_[l].biases.size()) throw ShapeError("apply_sgd: bias length");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& w = layers_[l].weights.data();
    const auto& gw = grads[l].weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * gw[i];
    auto& bias = layers_[l].biases;
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] -= eta * grads[l].biases[i];
  }
  cache_valid_ = false;
}

std::vector<double> FeedForwardNet::flat_params() const {
  std::vector<double> p;
  p.reserve(num_params());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.data().begin(), l.weights.data().end());
    p.insert(p.end(), l.biases.begin(), l.biases.end());
  }
  return p;
}

void FeedForwardNet::set_flat_params(std::span<const double> params) {
  if (params.size() != num_params()) throw ShapeError("set_flat_params: wrong parameter count");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (double& w : l.weights.data()) w = params[k++];
    for (double& v : l.biases) v = params[k++];
  }
  cache_valid_ = false;
}

bool same_architecture(const FeedForwardNet& a, const FeedForwardNet& b) {
  if (a.num_layers() != b.num_layers()) return false;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const auto& la = a.layers()[l];
    const auto& lb = b.layers()[l];
    if (la.weights.shape() != lb.weights.shape() || la.activation != lb.activation) return false;
  }
  return true;
}

FeedForwardNet average_nets(std::span<const FeedForwardNet* const> nets) {
  if (nets.empty()) throw ValidationError("average of zero networks");
  for (const auto* n : nets) {
    if (!same_architecture(*nets.front(), *n)) {
      throw ShapeError("cannot average networks with different architectures");
    }
  }
  // Mean as first + average offset from it, so identical replicas average
  // back to themselves bit for bit.
  const std::vector<double> base = nets.front()->flat_params();
  std::vector<double> offset(base.size(), 0.0);
  for (const auto* n : nets.subspan(1)) {
    const auto p = n->flat_params();
    for (std::size_t i = 0; i < p.size(); ++i) offset[i] += p[i] - base[i];
  }
  std::vector<double> mean(base.size());
  const auto count = static_cast<double>(nets.size());
  for (std::size_t i = 0; i < base.size(); ++i) mean[i] = base[i] + offset[i] / count;
  FeedForwardNet out = *nets.front();
  out.set_flat_params(mean);
  return out;
}

void check_head(const GaussianHead& head, const FeedForwardNet& net) {
  if (head.latent_dim == 0) throw ValidationError("latent_dim must be positive");
  if (net.out_dim() != 2 * head.latent_dim) {
    throw ShapeError("Gaussian head with latent_dim " + std::to_string(head.latent_dim) +
                     " needs a final layer of width " + std::to_string(2 * head.latent_dim) +
                     ", got " + std::to_string(net.out_dim()));
  }
}

std::vector<double> sample_latent(const GaussianHead& head, std::span<const double> mu,
                                  std::span<const double> logvar, std::span<const double> noise) {
  const std::size_t d = head.latent_dim;
  if (mu.size() != d || logvar.size() != d || noise.size() != d) {
    throw ShapeError("sample_latent: mu/logvar/noise must all have length " + std::to_string(d));
  }
  std::vector<double> u(d);
  for (std::size_t k = 0; k < d; ++k) u[k] = mu[k] + std::exp(0.5 * logvar[k]) * noise[k];
  return u;
}

LatentSample sample_latent_batch(const GaussianHead& head, const Tensor& head_out, Tensor noise) {
  const std::size_t d = head.latent_dim;
  if (head_out.cols() != 2 * d) throw ShapeError("head output width must be 2 * latent_dim");
  LatentSample s;
  s.mu = slice_cols(head_out, 0, d);
  s.logvar = slice_cols(head_out, d, d);
  require_same_shape(noise, s.mu, "sample_latent_batch noise");
  s.noise = std::move(noise);
  s.u = Tensor::matrix(head_out.rows(), d);
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    s.u[i] = s.mu[i] + std::exp(0.5 * s.logvar[i]) * s.noise[i];
  }
  return s;
}

double gaussian_log_ratio(std::span<const double> u, std::span<const double> mu,
                          std::span<const double> logvar) {
  if (u.size() != mu.size() || u.size() != logvar.size()) {
    throw ShapeError("gaussian_log_ratio: length mismatch");
  }
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!std::isfinite(u[k]) || !std::isfinite(mu[k]) || !std::isfinite(logvar[k])) {
      throw ValidationError("gaussian_log_ratio: non-finite input");
    }
    const double diff = u[k] - mu[k];
    r += -0.5 * logvar[k] - 0.5 * diff * diff * std::exp(-logvar[k]) + 0.5 * u[k] * u[k];
  }
  return r;
}

double gaussian_kl_standard(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) throw ShapeError("gaussian_kl_standard: length mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    kl += 0.5 * (mu[k] * mu[k] + std::exp(logvar[k]) - 1.0 - logvar[k]);
  }
  return kl;
}

Tensor head_backward(const LatentSample& s, const Tensor& grad_u, double ratio_coef) {
  require_same_shape(grad_u, s.u, "head_backward");
  const std::size_t b = s.u.rows();
  const std::size_t d = s.u.cols();
  Tensor g = Tensor::matrix(b, 2 * d);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      const double u = s.u(r, k);
      const double eps = s.noise(r, k);
      const double sigma = std::exp(0.5 * s.logvar(r, k));
      const double gu = grad_u(r, k);
      // du/dmu = 1, du/dlogvar = sigma * eps / 2. The ratio's total
      // derivatives are u and (u * sigma * eps - 1) / 2.
      g(r, k) = gu + ratio_coef * u;
      g(r, d + k) = gu * 0.5 * sigma * eps + ratio_coef * 0.5 * (u * sigma * eps - 1.0);
    }
  }
  return g;
}

double log_loss(std::size_t y, std::span<const double> p_hat) {
  if (y >= p_hat.size()) throw ValidationError("log_loss: label outside the prediction support");
  double sum = 0.0;
  for (double p : p_hat) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("log_loss: negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("log_loss: probabilities do not sum to one");
  return -std::log(std::max(p_hat[y], kLogLossFloor));
}

}  // namespace inl
