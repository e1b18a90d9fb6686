#include "vsop/nn.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace vsop::nn {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

// Derivative expressed through the activation y = f(z); relu has z > 0 iff y > 0.
double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

bool normalize_in_place(std::vector<double>& x) {
  const double n = norm2(x);
  if (!(n > kSigmaFloor)) return false;
  for (double& v : x) v /= n;
  return true;
}

Matrix scaled(const Matrix& w, double factor) {
  Matrix out = w;
  for (double& v : out.values()) v *= factor;
  return out;
}

}  // namespace

double spectral_sigma(const DenseLayer& layer) {
  const auto wv = matvec(layer.weight, layer.spectral.v);
  return dot(layer.spectral.u, wv);
}

SpectralResult spectral_normalize(DenseLayer& layer, std::size_t iterations) {
  if (!layer.spectral.enabled) throw std::logic_error("spectral_normalize: spectral flag not set");
  if (iterations == 0) throw std::invalid_argument("spectral_normalize: iterations must be >= 1");
  auto& st = layer.spectral;
  if (st.u.size() != layer.out()) {
    st.u.assign(layer.out(), 1.0 / std::sqrt(static_cast<double>(layer.out())));
  }
  bool degenerate = false;
  for (std::size_t it = 0; it < iterations; ++it) {
    auto v = transposed_matvec(layer.weight, st.u);
    if (!normalize_in_place(v)) {
      degenerate = true;
      break;
    }
    auto u = matvec(layer.weight, v);
    if (!normalize_in_place(u)) {
      degenerate = true;
      break;
    }
    st.v = std::move(v);
    st.u = std::move(u);
  }
  if (st.v.size() != layer.in()) st.v.assign(layer.in(), 0.0);
  SpectralResult result;
  double sigma = degenerate ? 0.0 : spectral_sigma(layer);
  if (!(sigma > kSigmaFloor)) {
    result.clamped = true;
    sigma = kSigmaFloor;
  }
  result.sigma = sigma;
  result.weight = scaled(layer.weight, 1.0 / sigma);
  return result;
}

Matrix effective_weight(const DenseLayer& layer) {
  if (!layer.spectral.enabled) return layer.weight;
  const double sigma = std::max(spectral_sigma(layer), kSigmaFloor);
  return scaled(layer.weight, 1.0 / sigma);
}

Matrix orthogonal_init(std::size_t out, std::size_t in, double gain, Rng& rng) {
  if (out == 0 || in == 0) throw DimensionError("orthogonal_init: zero dimension");
  if (!(gain > 0.0)) throw std::invalid_argument("orthogonal_init: gain must be positive");
  const std::size_t tall = std::max(out, in);
  const std::size_t narrow = std::min(out, in);
  // Columns of q are made orthonormal by modified Gram-Schmidt, run twice.
  std::vector<std::vector<double>> q(narrow, std::vector<double>(tall));
  for (auto& col : q)
    for (double& v : col) v = rng.normal();
  for (std::size_t j = 0; j < narrow; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const double proj = dot(q[k], q[j]);
        for (std::size_t i = 0; i < tall; ++i) q[j][i] -= proj * q[k][i];
      }
    }
    if (!normalize_in_place(q[j])) throw std::runtime_error("orthogonal_init: degenerate draw");
  }
  Matrix w(out, in);
  for (std::size_t j = 0; j < narrow; ++j)
    for (std::size_t i = 0; i < tall; ++i) {
      if (out >= in)
        w(i, j) = gain * q[j][i];
      else
        w(j, i) = gain * q[j][i];
    }
  return w;
}

std::uint64_t Mlp::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

Mlp::Mlp(std::vector<DenseLayer> layers, double dropout_rate)
    : layers_(std::move(layers)), dropout_rate_(dropout_rate) {
  validate();
}

Mlp::Mlp(const Mlp& other)
    : layers_(other.layers_), dropout_rate_(other.dropout_rate_), id_(next_id()), revision_(0) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    layers_ = other.layers_;
    dropout_rate_ = other.dropout_rate_;
    ++revision_;
  }
  return *this;
}

void Mlp::validate() const {
  if (layers_.empty()) throw DimensionError("Mlp: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.out()) throw DimensionError("Mlp: bias length differs from weight rows");
    if (l + 1 < layers_.size() && layers_[l + 1].in() != layer.out())
      throw DimensionError("Mlp: layer " + std::to_string(l) + " output does not chain into next layer");
  }
  if (layers_.back().activation != Activation::identity)
    throw std::invalid_argument("Mlp: final layer must use identity activation");
  if (!(dropout_rate_ >= 0.0 && dropout_rate_ < 1.0))
    throw std::invalid_argument("Mlp: dropout rate must lie in [0, 1)");
}

Mlp Mlp::make(const MlpSpec& spec, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t prev = spec.input;
  auto add = [&](std::size_t width, Activation act, double gain, bool spectral) {
    DenseLayer layer;
    layer.weight = orthogonal_init(width, prev, gain, rng);
    layer.bias.assign(width, 0.0);
    layer.activation = act;
    if (spectral) {
      layer.spectral.enabled = true;
      layer.spectral.u.resize(width);
      for (double& v : layer.spectral.u) v = rng.normal();
      normalize_in_place(layer.spectral.u);
      spectral_normalize(layer, 1);
    }
    layers.push_back(std::move(layer));
    prev = width;
  };
  for (std::size_t width : spec.hidden) add(width, spec.hidden_activation, spec.hidden_gain, spec.spectral_hidden);
  add(spec.output, Activation::identity, spec.output_gain, false);
  return Mlp(std::move(layers), spec.dropout_rate);
}

std::vector<DenseLayer>& Mlp::mutable_layers() {
  ++revision_;
  return layers_;
}

void Mlp::set_dropout_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("Mlp: dropout rate must lie in [0, 1)");
  dropout_rate_ = p;
}

void Mlp::power_iteration(std::size_t iterations) {
  bool touched = false;
  for (auto& layer : layers_) {
    if (!layer.spectral.enabled) continue;
    spectral_normalize(layer, iterations);
    touched = true;
  }
  if (touched) ++revision_;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

DropoutMask ones_mask(const Mlp& net, std::size_t rows) {
  DropoutMask mask;
  mask.rate = 0.0;
  for (std::size_t l = 0; l < net.hidden_layer_count(); ++l)
    mask.layers.emplace_back(rows, net.layers()[l].out(), 1.0);
  return mask;
}

DropoutMask sample_dropout_mask(const Mlp& net, Rng& rng, std::size_t rows) {
  const double p = net.dropout_rate();
  DropoutMask mask = ones_mask(net, rows);
  mask.rate = p;
  mask.source_seed = rng.seed();
  // p = 0 consumes no draws so enabling sampling at p = 0 leaves every other
  // random stream untouched.
  if (p == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  for (auto& layer : mask.layers)
    for (double& v : layer.values()) v = rng.bernoulli(p) ? 0.0 : keep_scale;
  return mask;
}

namespace {

void check_mask(const Mlp& net, const DropoutMask& mask, std::size_t batch) {
  if (mask.layers.size() != net.hidden_layer_count())
    throw DimensionError("forward: mask layer count does not match hidden layers");
  for (std::size_t l = 0; l < mask.layers.size(); ++l) {
    const auto& m = mask.layers[l];
    if (m.cols() != net.layers()[l].out() || (m.rows() != 1 && m.rows() != batch))
      throw DimensionError("forward: mask shape mismatch at layer " + std::to_string(l));
  }
}

template <bool kRecord>
Matrix run_forward(const Mlp& net, const Matrix& input, const DropoutMask* mask, ForwardCache* cache) {
  if (input.cols() != net.input_dim())
    throw DimensionError("forward: input has " + std::to_string(input.cols()) + " columns, network expects " +
                         std::to_string(net.input_dim()));
  if (mask) check_mask(net, *mask, input.rows());
  const auto& layers = net.layers();
  Matrix x = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    double sigma = 1.0;
    Matrix w_eff;
    const Matrix* w = &layer.weight;
    if (layer.spectral.enabled) {
      sigma = std::max(spectral_sigma(layer), kSigmaFloor);
      w_eff = scaled(layer.weight, 1.0 / sigma);
      w = &w_eff;
    }
    Matrix z = matmul_transposed(x, *w);
    for (std::size_t b = 0; b < z.rows(); ++b) {
      auto zr = z.row(b);
      for (std::size_t j = 0; j < zr.size(); ++j) zr[j] = activate(layer.activation, zr[j] + layer.bias[j]);
    }
    if constexpr (kRecord) {
      cache->inputs.push_back(std::move(x));
      cache->activations.push_back(z);
      cache->weights.push_back(layer.spectral.enabled ? std::move(w_eff) : layer.weight);
      cache->sigma.push_back(sigma);
      cache->spectral_u.push_back(layer.spectral.u);
      cache->spectral_v.push_back(layer.spectral.v);
    }
    if (mask && l < mask->layers.size()) {
      const Matrix& m = mask->layers[l];
      for (std::size_t b = 0; b < z.rows(); ++b) {
        auto zr = z.row(b);
        auto mr = m.row(m.rows() == 1 ? 0 : b);
        for (std::size_t j = 0; j < zr.size(); ++j) zr[j] *= mr[j];
      }
    }
    x = std::move(z);
  }
  return x;
}

}  // namespace

ForwardResult forward(const Mlp& net, const Matrix& input, const DropoutMask* mask) {
  ForwardResult result;
  result.cache.net_id = net.id();
  result.cache.revision = net.revision();
  result.output = run_forward<true>(net, input, mask, &result.cache);
  if (mask) result.cache.mask = *mask;
  return result;
}

ForwardResult forward(const Mlp& net, std::span<const double> input, const DropoutMask* mask) {
  return forward(net, Matrix(1, input.size(), std::vector<double>(input.begin(), input.end())), mask);
}

Matrix predict(const Mlp& net, const Matrix& input, const DropoutMask* mask) {
  return run_forward<false>(net, input, mask, nullptr);
}

std::vector<double> predict(const Mlp& net, std::span<const double> input, const DropoutMask* mask) {
  Matrix out = predict(net, Matrix(1, input.size(), std::vector<double>(input.begin(), input.end())), mask);
  return out.data();
}

MlpGrad MlpGrad::zeros_like(const Mlp& net) {
  MlpGrad g;
  for (const auto& layer : net.layers())
    g.layers.push_back({Matrix(layer.out(), layer.in()), std::vector<double>(layer.out(), 0.0)});
  return g;
}

void MlpGrad::scale(double factor) {
  for (auto& l : layers) {
    for (double& v : l.weight.values()) v *= factor;
    for (double& v : l.bias) v *= factor;
  }
}

void MlpGrad::add(const MlpGrad& other) {
  if (other.layers.size() != layers.size()) throw DimensionError("MlpGrad::add: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto dst = layers[l].weight.values();
    auto src = other.layers[l].weight.values();
    if (dst.size() != src.size()) throw DimensionError("MlpGrad::add: shape mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) layers[l].bias[i] += other.layers[l].bias[i];
  }
}

double MlpGrad::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += dot(l.weight.values(), l.weight.values()) + dot(l.bias, l.bias);
  return s;
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& grad_output) {
  if (cache.net_id != net.id() || cache.revision != net.revision())
    throw StaleCacheError("backward: cache was produced by a different network state");
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size()) throw StaleCacheError("backward: cache layer count mismatch");
  const std::size_t batch = cache.inputs.front().rows();
  if (grad_output.rows() != batch || grad_output.cols() != net.output_dim())
    throw DimensionError("backward: grad_output shape mismatch");

  BackwardResult result;
  result.params.layers.resize(layers.size());
  Matrix delta = grad_output;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const Matrix& y = cache.activations[l];
    if (cache.mask && l < cache.mask->layers.size()) {
      const Matrix& m = cache.mask->layers[l];
      for (std::size_t b = 0; b < batch; ++b) {
        auto dr = delta.row(b);
        auto mr = m.row(m.rows() == 1 ? 0 : b);
        for (std::size_t j = 0; j < dr.size(); ++j) dr[j] *= mr[j];
      }
    }
    if (layer.activation != Activation::identity) {
      for (std::size_t b = 0; b < batch; ++b) {
        auto dr = delta.row(b);
        auto yr = y.row(b);
        for (std::size_t j = 0; j < dr.size(); ++j) dr[j] *= activate_grad(layer.activation, yr[j]);
      }
    }
    LayerGrad& g = result.params.layers[l];
    g.weight = transposed_matmul(delta, cache.inputs[l]);
    g.bias.assign(layer.out(), 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      auto dr = delta.row(b);
      for (std::size_t j = 0; j < dr.size(); ++j) g.bias[j] += dr[j];
    }
    if (layer.spectral.enabled) {
      // W_eff = W / (u^T W v) with u, v held fixed:
      // dL/dW = G / sigma - <G, W_eff> / sigma * u v^T
      const double sigma = cache.sigma[l];
      const double inner = frobenius_inner(g.weight, cache.weights[l]);
      const auto& u = cache.spectral_u[l];
      const auto& v = cache.spectral_v[l];
      for (std::size_t i = 0; i < g.weight.rows(); ++i)
        for (std::size_t j = 0; j < g.weight.cols(); ++j)
          g.weight(i, j) = g.weight(i, j) / sigma - inner / sigma * u[i] * v[j];
    }
    Matrix dx = matmul(delta, cache.weights[l]);
    delta = std::move(dx);
  }
  result.input_grad = std::move(delta);
  return result;
}

}  // namespace vsop::nn
