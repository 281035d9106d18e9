#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eegemo/rng.hpp"
#include "eegemo/tensor.hpp"

namespace eegemo {

enum class LayerKind { conv2d, conv3d, maxpool2d, maxpool3d, dropout, flatten, fc, softmax };

// One declarative layer. Only the fields of the active kind are meaningful.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t kh = 0, kw = 0, kt = 0;  // conv kernel dims (kt: 3d only)
  std::size_t out_channels = 0;        // conv
  std::size_t ph = 0, pw = 0, pt = 0;  // pool dims (pt: 3d only)
  double rate = 0.0;                   // dropout probability
  std::size_t out_units = 0;           // fc
  bool relu = false;                   // conv / fc hidden activation

  static LayerSpec conv(std::size_t kh, std::size_t kw, std::size_t out_channels,
                        bool relu = true);
  static LayerSpec conv3d(std::size_t kh, std::size_t kw, std::size_t kt,
                          std::size_t out_channels, bool relu = true);
  static LayerSpec maxpool(std::size_t ph, std::size_t pw);
  static LayerSpec maxpool3d(std::size_t ph, std::size_t pw, std::size_t pt);
  static LayerSpec dropout(double rate);
  static LayerSpec flatten();
  static LayerSpec fc(std::size_t out_units, bool relu);
  static LayerSpec softmax();

  void validate(std::size_t layer_index) const;
  std::string describe() const;
};

// A named layer stack plus the input shape it expects: rank 3 (H x W x C)
// for the 2D networks, rank 4 (H x W x T x C) for the 3D variants.
struct ModelSpec {
  std::string name;
  std::vector<std::size_t> input_shape;
  std::vector<LayerSpec> layers;

  bool three_d() const { return input_shape.size() == 4; }
  void validate() const;
};

// The four architecture names, in depth order.
const std::vector<std::string>& architecture_names();
bool is_architecture_name(const std::string& name);

// Builds the layer stack for one of the named architectures. A rank-4 input
// shape selects the 3D variant: k x k kernels become k x k x k (a 2 x 1
// kernel becomes 2 x 1 x 2) and 2 x 2 pools become 2 x 2 x 2.
ModelSpec make_architecture(const std::string& name,
                            const std::vector<std::size_t>& input_shape);

struct LayerParams {
  Tensor w;  // conv: kh x kw [x kt] x in_ch x out_ch; fc: out x in
  Tensor b;  // out_channels / out_units
};

enum class RunMode { train, eval };

// Per-sample workspace filled by forward and consumed by backward. Reusing a
// cache whose masks_ready flag is set replays the stored dropout masks, which
// is what finite-difference gradient checks need.
struct ForwardCache {
  std::vector<Tensor> acts;  // acts[0] = input, acts[i+1] = output of layer i
  std::vector<std::vector<double>> patches;          // conv im2col workspace
  std::vector<std::vector<std::size_t>> pool_index;  // argmax source indices
  std::vector<std::vector<std::uint8_t>> drop_mask;  // kept-element flags
  bool masks_ready = false;
  // Scratch reused by backward to keep per-sample allocations off the hot path.
  std::vector<Tensor> dacts_scratch;
  std::vector<double> dpatches_scratch;
};

class Model {
 public:
  // Seeded scaled-uniform init: weights uniform on +-sqrt(6/fan_in), biases 0.
  Model(ModelSpec spec, std::uint64_t init_seed);
  Model(ModelSpec spec, std::vector<LayerParams> params);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerParams>& params() const { return params_; }
  std::vector<LayerParams>& params() { return params_; }
  std::size_t param_count() const;

  // shape_after(i) is the output shape of layer i-1 (shape_after(0) = input).
  const std::vector<std::size_t>& shape_after(std::size_t i) const { return shapes_[i]; }

  // Runs the stack and returns the class probabilities (the cache keeps every
  // intermediate). train mode draws dropout masks from `rng` unless the cache
  // already holds them.
  Tensor forward(const Tensor& x, RunMode mode, ForwardCache& cache, Rng* rng = nullptr) const;

  // Cross-entropy of the cached logits against `label`, computed in log space.
  double loss_from_cache(const ForwardCache& cache, int label) const;

  // Adds d(loss)/d(param) for one cached sample into `grads` (shapes must
  // match params()). Optionally also emits d(loss)/d(input).
  void backward(ForwardCache& cache, int label, std::vector<LayerParams>& grads,
                Tensor* dinput = nullptr) const;

  // Zero gradient accumulators shaped like the parameters.
  std::vector<LayerParams> zero_like_params() const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  ModelSpec spec_;
  std::vector<LayerParams> params_;
  std::vector<std::vector<std::size_t>> shapes_;
};

// Full discrete 1-D convolution (kernel flipped): output length n+m-1.
std::vector<double> full_convolve_1d(std::span<const double> f, std::span<const double> g);

// Numerically stable softmax (max-shifted exponentials).
std::vector<double> softmax(std::span<const double> logits);

}  // namespace eegemo
