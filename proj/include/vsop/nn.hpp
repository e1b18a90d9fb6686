#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsop/matrix.hpp"
#include "vsop/rng.hpp"

namespace vsop::nn {

enum class Activation { relu, tanh, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// Power-iteration state for a spectrally normalized layer. The stored weight
// stays un-normalized; the forward pass divides by sigma = u^T W v.
struct SpectralState {
  bool enabled = false;
  std::vector<double> u;  // left singular vector estimate, length out
  std::vector<double> v;  // right singular vector estimate, length in
};

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::identity;
  SpectralState spectral;

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
};

struct SpectralResult {
  Matrix weight;  // W / sigma
  double sigma = 0.0;
  bool clamped = false;  // sigma underflowed and was clamped to kSigmaFloor
};

inline constexpr double kSigmaFloor = 1e-12;

// Runs `iterations` rounds of v <- normalize(W^T u), u <- normalize(W v),
// persists u and v in the layer and returns the normalized weight.
SpectralResult spectral_normalize(DenseLayer& layer, std::size_t iterations);

// sigma = u^T W v for the persisted vectors, without iterating.
double spectral_sigma(const DenseLayer& layer);

// Weight used by the forward pass (normalized when the spectral flag is set).
Matrix effective_weight(const DenseLayer& layer);

// Random orthogonal matrix scaled by gain: W^T W = gain^2 I when out >= in,
// W W^T = gain^2 I otherwise.
Matrix orthogonal_init(std::size_t out, std::size_t in, double gain, Rng& rng);

struct MlpSpec {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::size_t output = 0;
  Activation hidden_activation = Activation::tanh;
  double dropout_rate = 0.0;
  bool spectral_hidden = false;  // spectral normalization on hidden layers
  double hidden_gain = 1.4142135623730951;
  double output_gain = 1.0;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<DenseLayer> layers, double dropout_rate);
  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  static Mlp make(const MlpSpec& spec, Rng& rng);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  // Mutable access bumps the revision so caches taken earlier become stale.
  std::vector<DenseLayer>& mutable_layers();

  std::size_t input_dim() const { return layers_.front().in(); }
  std::size_t output_dim() const { return layers_.back().out(); }
  std::size_t hidden_layer_count() const { return layers_.empty() ? 0 : layers_.size() - 1; }

  double dropout_rate() const { return dropout_rate_; }
  void set_dropout_rate(double p);

  std::uint64_t id() const { return id_; }
  std::uint64_t revision() const { return revision_; }
  void mark_updated() { ++revision_; }

  // One power iteration round on every spectrally normalized layer.
  void power_iteration(std::size_t iterations = 1);

  std::size_t parameter_count() const;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  double dropout_rate_ = 0.0;
  std::uint64_t id_ = next_id();
  std::uint64_t revision_ = 0;

  static std::uint64_t next_id();
};

// Per-hidden-layer masks with entries in {0, 1/(1-p)}. Each mask has one row
// (shared across the batch) or one row per batch sample.
struct DropoutMask {
  std::vector<Matrix> layers;
  double rate = 0.0;
  std::uint64_t source_seed = 0;  // seed of the generator that produced it
};

DropoutMask sample_dropout_mask(const Mlp& net, Rng& rng, std::size_t rows = 1);
DropoutMask ones_mask(const Mlp& net, std::size_t rows = 1);

struct ForwardCache {
  std::uint64_t net_id = 0;
  std::uint64_t revision = 0;
  std::vector<Matrix> inputs;       // input to layer l (post-mask)
  std::vector<Matrix> activations;  // activation of layer l, before masking
  std::vector<Matrix> weights;      // effective weight used by layer l
  std::vector<double> sigma;        // spectral sigma per layer (1 when off)
  std::vector<std::vector<double>> spectral_u;
  std::vector<std::vector<double>> spectral_v;
  std::optional<DropoutMask> mask;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

// Batched forward pass: input is batch x input_dim.
ForwardResult forward(const Mlp& net, const Matrix& input, const DropoutMask* mask = nullptr);
ForwardResult forward(const Mlp& net, std::span<const double> input, const DropoutMask* mask = nullptr);

// Forward pass without recording a cache.
Matrix predict(const Mlp& net, const Matrix& input, const DropoutMask* mask = nullptr);
std::vector<double> predict(const Mlp& net, std::span<const double> input,
                            const DropoutMask* mask = nullptr);

struct LayerGrad {
  Matrix weight;
  std::vector<double> bias;
};

struct MlpGrad {
  std::vector<LayerGrad> layers;

  static MlpGrad zeros_like(const Mlp& net);
  void scale(double factor);
  void add(const MlpGrad& other);
  double squared_norm() const;
};

struct BackwardResult {
  MlpGrad params;
  Matrix input_grad;
};

// Exact gradients of sum_{b,j} grad_output(b,j) * output(b,j) with respect to
// parameters and inputs, for the forward pass recorded in `cache`.
BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& grad_output);

class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace vsop::nn
