#include "eegemo/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "json.hpp"

#include "eegemo/util.hpp"

namespace eegemo {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

std::string layer_tag(std::size_t i, const LayerSpec& spec) {
  return "layer " + std::to_string(i) + " (" + spec.describe() + ")";
}

[[noreturn]] void layer_error(std::size_t i, const LayerSpec& spec, const std::string& msg) {
  throw ValidationError(layer_tag(i, spec) + ": " + msg);
}

void ensure_shape(Tensor& t, const std::vector<std::size_t>& shape) {
  if (t.shape == shape) return;
  t = Tensor(shape);
}

// -------- im2col / col2im --------
// Patch rows are output positions in row-major order; patch columns follow
// the weight tensor layout (kernel offsets outer, input channel inner), so a
// plain GEMM against the flattened weights yields the convolution.

void im2col_2d(const double* in, std::size_t h, std::size_t w, std::size_t c, std::size_t kh,
               std::size_t kw, std::vector<double>& patches) {
  const std::size_t cols = kh * kw * c;
  patches.assign(h * w * cols, 0.0);
  const std::ptrdiff_t pad_h = static_cast<std::ptrdiff_t>((kh - 1) / 2);
  const std::ptrdiff_t pad_w = static_cast<std::ptrdiff_t>((kw - 1) / 2);
  double* prow = patches.data();
  for (std::size_t oh = 0; oh < h; ++oh) {
    for (std::size_t ow = 0; ow < w; ++ow, prow += cols) {
      for (std::size_t di = 0; di < kh; ++di) {
        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + di) - pad_h;
        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t dj = 0; dj < kw; ++dj) {
          const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + dj) - pad_w;
          if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
          std::copy_n(in + (static_cast<std::size_t>(ih) * w + static_cast<std::size_t>(iw)) * c,
                      c, prow + (di * kw + dj) * c);
        }
      }
    }
  }
}

void col2im_2d(const double* dpatches, std::size_t h, std::size_t w, std::size_t c,
               std::size_t kh, std::size_t kw, double* din) {
  const std::size_t cols = kh * kw * c;
  const std::ptrdiff_t pad_h = static_cast<std::ptrdiff_t>((kh - 1) / 2);
  const std::ptrdiff_t pad_w = static_cast<std::ptrdiff_t>((kw - 1) / 2);
  const double* prow = dpatches;
  for (std::size_t oh = 0; oh < h; ++oh) {
    for (std::size_t ow = 0; ow < w; ++ow, prow += cols) {
      for (std::size_t di = 0; di < kh; ++di) {
        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + di) - pad_h;
        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t dj = 0; dj < kw; ++dj) {
          const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + dj) - pad_w;
          if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
          double* dst =
              din + (static_cast<std::size_t>(ih) * w + static_cast<std::size_t>(iw)) * c;
          const double* src = prow + (di * kw + dj) * c;
          for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
        }
      }
    }
  }
}

void im2col_3d(const double* in, std::size_t h, std::size_t w, std::size_t t, std::size_t c,
               std::size_t kh, std::size_t kw, std::size_t kt, std::vector<double>& patches) {
  const std::size_t cols = kh * kw * kt * c;
  patches.assign(h * w * t * cols, 0.0);
  const std::ptrdiff_t pad_h = static_cast<std::ptrdiff_t>((kh - 1) / 2);
  const std::ptrdiff_t pad_w = static_cast<std::ptrdiff_t>((kw - 1) / 2);
  const std::ptrdiff_t pad_t = static_cast<std::ptrdiff_t>((kt - 1) / 2);
  double* prow = patches.data();
  for (std::size_t oh = 0; oh < h; ++oh)
    for (std::size_t ow = 0; ow < w; ++ow)
      for (std::size_t ot = 0; ot < t; ++ot, prow += cols) {
        for (std::size_t di = 0; di < kh; ++di) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + di) - pad_h;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dj = 0; dj < kw; ++dj) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + dj) - pad_w;
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
            for (std::size_t dt = 0; dt < kt; ++dt) {
              const std::ptrdiff_t it = static_cast<std::ptrdiff_t>(ot + dt) - pad_t;
              if (it < 0 || it >= static_cast<std::ptrdiff_t>(t)) continue;
              std::copy_n(in + ((static_cast<std::size_t>(ih) * w +
                                 static_cast<std::size_t>(iw)) *
                                    t +
                                static_cast<std::size_t>(it)) *
                                   c,
                          c, prow + ((di * kw + dj) * kt + dt) * c);
            }
          }
        }
      }
}

void col2im_3d(const double* dpatches, std::size_t h, std::size_t w, std::size_t t,
               std::size_t c, std::size_t kh, std::size_t kw, std::size_t kt, double* din) {
  const std::size_t cols = kh * kw * kt * c;
  const std::ptrdiff_t pad_h = static_cast<std::ptrdiff_t>((kh - 1) / 2);
  const std::ptrdiff_t pad_w = static_cast<std::ptrdiff_t>((kw - 1) / 2);
  const std::ptrdiff_t pad_t = static_cast<std::ptrdiff_t>((kt - 1) / 2);
  const double* prow = dpatches;
  for (std::size_t oh = 0; oh < h; ++oh)
    for (std::size_t ow = 0; ow < w; ++ow)
      for (std::size_t ot = 0; ot < t; ++ot, prow += cols) {
        for (std::size_t di = 0; di < kh; ++di) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh + di) - pad_h;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dj = 0; dj < kw; ++dj) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + dj) - pad_w;
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
            for (std::size_t dt = 0; dt < kt; ++dt) {
              const std::ptrdiff_t it = static_cast<std::ptrdiff_t>(ot + dt) - pad_t;
              if (it < 0 || it >= static_cast<std::ptrdiff_t>(t)) continue;
              double* dst = din + ((static_cast<std::size_t>(ih) * w +
                                    static_cast<std::size_t>(iw)) *
                                       t +
                                   static_cast<std::size_t>(it)) *
                                      c;
              const double* src = prow + ((di * kw + dj) * kt + dt) * c;
              for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
            }
          }
        }
      }
}

}  // namespace

// -------- layer specs --------

LayerSpec LayerSpec::conv(std::size_t kh, std::size_t kw, std::size_t out_channels, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.kh = kh;
  s.kw = kw;
  s.out_channels = out_channels;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::conv3d(std::size_t kh, std::size_t kw, std::size_t kt,
                            std::size_t out_channels, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::conv3d;
  s.kh = kh;
  s.kw = kw;
  s.kt = kt;
  s.out_channels = out_channels;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t ph, std::size_t pw) {
  LayerSpec s;
  s.kind = LayerKind::maxpool2d;
  s.ph = ph;
  s.pw = pw;
  return s;
}

LayerSpec LayerSpec::maxpool3d(std::size_t ph, std::size_t pw, std::size_t pt) {
  LayerSpec s;
  s.kind = LayerKind::maxpool3d;
  s.ph = ph;
  s.pw = pw;
  s.pt = pt;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  return s;
}

LayerSpec LayerSpec::fc(std::size_t out_units, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::fc;
  s.out_units = out_units;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::softmax;
  return s;
}

void LayerSpec::validate(std::size_t layer_index) const {
  switch (kind) {
    case LayerKind::conv2d:
      if (kh < 1 || kw < 1 || out_channels < 1)
        layer_error(layer_index, *this, "kernel dims and out_channels must be >= 1");
      break;
    case LayerKind::conv3d:
      if (kh < 1 || kw < 1 || kt < 1 || out_channels < 1)
        layer_error(layer_index, *this, "kernel dims and out_channels must be >= 1");
      break;
    case LayerKind::maxpool2d:
      if (ph < 1 || pw < 1) layer_error(layer_index, *this, "pool dims must be >= 1");
      break;
    case LayerKind::maxpool3d:
      if (ph < 1 || pw < 1 || pt < 1) layer_error(layer_index, *this, "pool dims must be >= 1");
      break;
    case LayerKind::dropout:
      if (!(rate >= 0.0 && rate < 1.0))
        layer_error(layer_index, *this, "dropout rate must lie in [0, 1)");
      break;
    case LayerKind::fc:
      if (out_units < 1) layer_error(layer_index, *this, "out_units must be >= 1");
      break;
    case LayerKind::flatten:
    case LayerKind::softmax:
      break;
  }
}

std::string LayerSpec::describe() const {
  auto n = [](std::size_t v) { return std::to_string(v); };
  switch (kind) {
    case LayerKind::conv2d: return "Conv " + n(kh) + "x" + n(kw) + "x" + n(out_channels);
    case LayerKind::conv3d:
      return "Conv3D " + n(kh) + "x" + n(kw) + "x" + n(kt) + "x" + n(out_channels);
    case LayerKind::maxpool2d: return "MaxPool " + n(ph) + "x" + n(pw);
    case LayerKind::maxpool3d: return "MaxPool3D " + n(ph) + "x" + n(pw) + "x" + n(pt);
    case LayerKind::dropout: return "Dropout " + format_double(rate);
    case LayerKind::flatten: return "Flatten";
    case LayerKind::fc: return "FC " + n(out_units);
    case LayerKind::softmax: return "Softmax";
  }
  return "?";
}

// -------- architectures --------

const std::vector<std::string>& architecture_names() {
  static const std::vector<std::string> names = {"3Conv", "4Conv", "5Conv", "6Conv"};
  return names;
}

bool is_architecture_name(const std::string& name) {
  const auto& names = architecture_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ModelSpec make_architecture(const std::string& name,
                            const std::vector<std::size_t>& input_shape) {
  if (!is_architecture_name(name))
    throw ConfigError("unknown architecture '" + name + "' (expected 3Conv..6Conv)");
  if (input_shape.size() != 3 && input_shape.size() != 4)
    throw ValidationError("architecture input shape must have rank 3 or 4, got " +
                          shape_str(input_shape));
  const bool td = input_shape.size() == 4;
  // 3D variant rule: an h x w kernel gains temporal extent equal to its
  // height; 2 x 2 pooling gains a temporal 2.
  auto conv = [td](std::size_t h, std::size_t w, std::size_t ch) {
    return td ? LayerSpec::conv3d(h, w, h, ch) : LayerSpec::conv(h, w, ch);
  };
  auto pool = [td] { return td ? LayerSpec::maxpool3d(2, 2, 2) : LayerSpec::maxpool(2, 2); };

  std::vector<LayerSpec> layers;
  if (name == "3Conv") {
    layers = {conv(5, 5, 32), conv(3, 3, 32), pool(), conv(3, 3, 64)};
  } else if (name == "4Conv") {
    layers = {conv(5, 5, 32), conv(3, 3, 32), pool(), conv(2, 2, 64), conv(2, 2, 64)};
  } else if (name == "5Conv") {
    layers = {conv(5, 5, 32), conv(2, 2, 32), conv(2, 2, 32),
              pool(),         conv(2, 2, 64), conv(2, 2, 64)};
  } else {  // 6Conv
    layers = {conv(5, 5, 32), conv(2, 2, 32), conv(2, 2, 32), pool(),
              conv(2, 2, 64), conv(2, 2, 64), conv(2, 1, 64)};
  }
  layers.push_back(LayerSpec::dropout(0.5));
  layers.push_back(LayerSpec::flatten());
  layers.push_back(LayerSpec::fc(128, true));
  layers.push_back(LayerSpec::dropout(0.5));
  layers.push_back(LayerSpec::fc(2, false));
  layers.push_back(LayerSpec::softmax());

  ModelSpec spec;
  spec.name = name;
  spec.input_shape = input_shape;
  spec.layers = std::move(layers);
  return spec;
}

void ModelSpec::validate() const {
  if (input_shape.size() != 3 && input_shape.size() != 4)
    throw ValidationError("model input shape must have rank 3 (HxWxC) or 4 (HxWxTxC), got " +
                          shape_str(input_shape));
  for (std::size_t d : input_shape)
    if (d == 0) throw ValidationError("model input shape has a zero dim: " + shape_str(input_shape));
  if (layers.empty()) throw ValidationError("model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].validate(i);
  std::size_t softmax_count = 0;
  for (const auto& l : layers)
    if (l.kind == LayerKind::softmax) ++softmax_count;
  if (softmax_count != 1 || layers.back().kind != LayerKind::softmax)
    throw ValidationError("model must end in exactly one Softmax layer");
  if (layers.size() < 2 || layers[layers.size() - 2].kind != LayerKind::fc ||
      layers[layers.size() - 2].out_units != 2)
    throw ValidationError("model head must be FC 2 followed by Softmax");
}

namespace {

std::vector<std::vector<std::size_t>> infer_shapes(const ModelSpec& spec) {
  std::vector<std::vector<std::size_t>> shapes;
  shapes.reserve(spec.layers.size() + 1);
  shapes.push_back(spec.input_shape);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::vector<std::size_t>& in = shapes.back();
    std::vector<std::size_t> out;
    switch (l.kind) {
      case LayerKind::conv2d: {
        if (in.size() != 3)
          layer_error(i, l, "expects rank-3 input (HxWxC), got " + shape_str(in));
        out = {in[0], in[1], l.out_channels};
        break;
      }
      case LayerKind::conv3d: {
        if (in.size() != 4)
          layer_error(i, l, "expects rank-4 input (HxWxTxC), got " + shape_str(in));
        out = {in[0], in[1], in[2], l.out_channels};
        break;
      }
      case LayerKind::maxpool2d: {
        if (in.size() != 3)
          layer_error(i, l, "expects rank-3 input (HxWxC), got " + shape_str(in));
        if (in[0] < l.ph || in[1] < l.pw)
          layer_error(i, l, "pool window exceeds input " + shape_str(in));
        out = {in[0] / l.ph, in[1] / l.pw, in[2]};
        break;
      }
      case LayerKind::maxpool3d: {
        if (in.size() != 4)
          layer_error(i, l, "expects rank-4 input (HxWxTxC), got " + shape_str(in));
        if (in[0] < l.ph || in[1] < l.pw || in[2] < l.pt)
          layer_error(i, l, "pool window exceeds input " + shape_str(in));
        out = {in[0] / l.ph, in[1] / l.pw, in[2] / l.pt, in[3]};
        break;
      }
      case LayerKind::dropout: out = in; break;
      case LayerKind::flatten: out = {Tensor::count(in)}; break;
      case LayerKind::fc: {
        if (in.size() != 1)
          layer_error(i, l, "expects flattened rank-1 input, got " + shape_str(in));
        out = {l.out_units};
        break;
      }
      case LayerKind::softmax: {
        if (in.size() != 1)
          layer_error(i, l, "expects rank-1 input, got " + shape_str(in));
        out = in;
        break;
      }
    }
    shapes.push_back(std::move(out));
  }
  return shapes;
}

}  // namespace

// -------- model --------

Model::Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  spec_.validate();
  shapes_ = infer_shapes(spec_);
  params_.resize(spec_.layers.size());
  Rng rng(init_seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    std::vector<std::size_t> wshape;
    std::size_t fan_in = 0, nb = 0;
    if (l.kind == LayerKind::conv2d) {
      const std::size_t cin = shapes_[i][2];
      wshape = {l.kh, l.kw, cin, l.out_channels};
      fan_in = l.kh * l.kw * cin;
      nb = l.out_channels;
    } else if (l.kind == LayerKind::conv3d) {
      const std::size_t cin = shapes_[i][3];
      wshape = {l.kh, l.kw, l.kt, cin, l.out_channels};
      fan_in = l.kh * l.kw * l.kt * cin;
      nb = l.out_channels;
    } else if (l.kind == LayerKind::fc) {
      const std::size_t in = shapes_[i][0];
      wshape = {l.out_units, in};
      fan_in = in;
      nb = l.out_units;
    } else {
      continue;  // parameterless layer keeps empty tensors
    }
    params_[i].w = Tensor(wshape);
    params_[i].b = Tensor({nb});
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : params_[i].w.data) v = rng.uniform(-bound, bound);
  }
}

Model::Model(ModelSpec spec, std::vector<LayerParams> params) : spec_(std::move(spec)) {
  spec_.validate();
  shapes_ = infer_shapes(spec_);
  if (params.size() != spec_.layers.size())
    throw ValidationError("model parameters cover " + std::to_string(params.size()) +
                          " layers, expected " + std::to_string(spec_.layers.size()));
  // Rebuild the expected shapes and check the supplied arrays against them.
  Model shaped(spec_, std::uint64_t{0});
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].w.shape != shaped.params_[i].w.shape ||
        params[i].b.shape != shaped.params_[i].b.shape)
      throw ValidationError(layer_tag(i, spec_.layers[i]) + ": parameter shape mismatch, got w" +
                            shape_str(params[i].w.shape) + " b" + shape_str(params[i].b.shape));
  }
  params_ = std::move(params);
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.w.size() + p.b.size();
  return n;
}

std::vector<LayerParams> Model::zero_like_params() const {
  std::vector<LayerParams> g(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].w.size() == 0) continue;
    g[i].w = Tensor(params_[i].w.shape);
    g[i].b = Tensor(params_[i].b.shape);
  }
  return g;
}

Tensor Model::forward(const Tensor& x, RunMode mode, ForwardCache& cache, Rng* rng) const {
  if (x.shape != shapes_[0])
    throw ValidationError("model input shape " + shape_str(x.shape) + " does not match expected " +
                          shape_str(shapes_[0]));
  const std::size_t n = spec_.layers.size();
  cache.acts.resize(n + 1);
  cache.patches.resize(n);
  cache.pool_index.resize(n);
  cache.drop_mask.resize(n);

  ensure_shape(cache.acts[0], x.shape);
  cache.acts[0].data = x.data;

  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = spec_.layers[i];
    const Tensor& in = cache.acts[i];
    Tensor& out = cache.acts[i + 1];
    ensure_shape(out, shapes_[i + 1]);
    switch (l.kind) {
      case LayerKind::conv2d: {
        const std::size_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
        im2col_2d(in.data.data(), h, w, c, l.kh, l.kw, cache.patches[i]);
        const Index rows = static_cast<Index>(h * w);
        const Index cols = static_cast<Index>(l.kh * l.kw * c);
        const Index cout = static_cast<Index>(l.out_channels);
        Eigen::Map<const MatRM> p(cache.patches[i].data(), rows, cols);
        Eigen::Map<const MatRM> wm(params_[i].w.data.data(), cols, cout);
        Eigen::Map<MatRM> om(out.data.data(), rows, cout);
        om.noalias() = p * wm;
        om.rowwise() +=
            Eigen::Map<const Eigen::RowVectorXd>(params_[i].b.data.data(), cout);
        if (l.relu)
          for (double& v : out.data) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::conv3d: {
        const std::size_t h = in.shape[0], w = in.shape[1], t = in.shape[2], c = in.shape[3];
        im2col_3d(in.data.data(), h, w, t, c, l.kh, l.kw, l.kt, cache.patches[i]);
        const Index rows = static_cast<Index>(h * w * t);
        const Index cols = static_cast<Index>(l.kh * l.kw * l.kt * c);
        const Index cout = static_cast<Index>(l.out_channels);
        Eigen::Map<const MatRM> p(cache.patches[i].data(), rows, cols);
        Eigen::Map<const MatRM> wm(params_[i].w.data.data(), cols, cout);
        Eigen::Map<MatRM> om(out.data.data(), rows, cout);
        om.noalias() = p * wm;
        om.rowwise() +=
            Eigen::Map<const Eigen::RowVectorXd>(params_[i].b.data.data(), cout);
        if (l.relu)
          for (double& v : out.data) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::maxpool2d: {
        const std::size_t w = in.shape[1], c = in.shape[2];
        const std::size_t oh_n = out.shape[0], ow_n = out.shape[1];
        auto& idx = cache.pool_index[i];
        idx.resize(out.size());
        std::size_t o = 0;
        for (std::size_t oh = 0; oh < oh_n; ++oh)
          for (std::size_t ow = 0; ow < ow_n; ++ow)
            for (std::size_t ch = 0; ch < c; ++ch, ++o) {
              double best = -std::numeric_limits<double>::infinity();
              std::size_t best_i = 0;
              for (std::size_t di = 0; di < l.ph; ++di)
                for (std::size_t dj = 0; dj < l.pw; ++dj) {
                  const std::size_t src = ((oh * l.ph + di) * w + (ow * l.pw + dj)) * c + ch;
                  if (in.data[src] > best) {
                    best = in.data[src];
                    best_i = src;
                  }
                }
              out.data[o] = best;
              idx[o] = best_i;
            }
        break;
      }
      case LayerKind::maxpool3d: {
        const std::size_t w = in.shape[1], t = in.shape[2], c = in.shape[3];
        const std::size_t oh_n = out.shape[0], ow_n = out.shape[1], ot_n = out.shape[2];
        auto& idx = cache.pool_index[i];
        idx.resize(out.size());
        std::size_t o = 0;
        for (std::size_t oh = 0; oh < oh_n; ++oh)
          for (std::size_t ow = 0; ow < ow_n; ++ow)
            for (std::size_t ot = 0; ot < ot_n; ++ot)
              for (std::size_t ch = 0; ch < c; ++ch, ++o) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_i = 0;
                for (std::size_t di = 0; di < l.ph; ++di)
                  for (std::size_t dj = 0; dj < l.pw; ++dj)
                    for (std::size_t dt = 0; dt < l.pt; ++dt) {
                      const std::size_t src =
                          (((oh * l.ph + di) * w + (ow * l.pw + dj)) * t + (ot * l.pt + dt)) * c +
                          ch;
                      if (in.data[src] > best) {
                        best = in.data[src];
                        best_i = src;
                      }
                    }
                out.data[o] = best;
                idx[o] = best_i;
              }
        break;
      }
      case LayerKind::dropout: {
        if (mode == RunMode::eval || l.rate == 0.0) {
          out.data = in.data;
          if (mode == RunMode::train && !cache.masks_ready)
            cache.drop_mask[i].assign(in.size(), std::uint8_t{1});
          break;
        }
        auto& mask = cache.drop_mask[i];
        if (!cache.masks_ready) {
          if (rng == nullptr)
            throw ValidationError(layer_tag(i, l) + ": train-mode dropout needs an RNG");
          mask.resize(in.size());
          for (auto& m : mask) m = rng->uniform() >= l.rate ? 1 : 0;
        }
        const double scale = 1.0 / (1.0 - l.rate);
        for (std::size_t j = 0; j < in.size(); ++j)
          out.data[j] = mask[j] ? in.data[j] * scale : 0.0;
        break;
      }
      case LayerKind::flatten: {
        out.data = in.data;
        break;
      }
      case LayerKind::fc: {
        const Index nin = static_cast<Index>(in.size());
        const Index nout = static_cast<Index>(l.out_units);
        Eigen::Map<const MatRM> wm(params_[i].w.data.data(), nout, nin);
        Eigen::Map<const Eigen::VectorXd> xv(in.data.data(), nin);
        Eigen::Map<Eigen::VectorXd> yv(out.data.data(), nout);
        yv.noalias() = wm * xv;
        yv += Eigen::Map<const Eigen::VectorXd>(params_[i].b.data.data(), nout);
        if (l.relu)
          for (double& v : out.data) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::softmax: {
        const auto probs = softmax(std::span<const double>(in.data));
        std::copy(probs.begin(), probs.end(), out.data.begin());
        break;
      }
    }
  }
  if (mode == RunMode::train) cache.masks_ready = true;
  const Tensor& probs = cache.acts[n];
  if (!probs.all_finite())
    throw ValidationError("forward produced non-finite probabilities");
  return probs;
}

double Model::loss_from_cache(const ForwardCache& cache, int label) const {
  const std::size_t n = spec_.layers.size();
  if (cache.acts.size() != n + 1)
    throw ValidationError("loss requested without a completed forward pass");
  const Tensor& logits = cache.acts[n - 1];  // input of the softmax layer
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw ValidationError("label " + std::to_string(label) + " out of range");
  double mx = logits.data[0];
  for (double v : logits.data) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits.data) sum += std::exp(v - mx);
  return mx + std::log(sum) - logits.data[static_cast<std::size_t>(label)];
}

void Model::backward(ForwardCache& cache, int label, std::vector<LayerParams>& grads,
                     Tensor* dinput) const {
  const std::size_t n = spec_.layers.size();
  if (cache.acts.size() != n + 1)
    throw ValidationError("backward called without a preceding forward pass");
  if (grads.size() != n) throw ValidationError("gradient accumulator layout mismatch");

  auto& dacts = cache.dacts_scratch;
  dacts.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) ensure_shape(dacts[i], cache.acts[i].shape);

  // Softmax + cross-entropy fused: d(loss)/d(logits) = probs - onehot.
  if (label < 0 || static_cast<std::size_t>(label) >= cache.acts[n].size())
    throw ValidationError("label " + std::to_string(label) + " out of range");
  dacts[n - 1].data = cache.acts[n].data;
  dacts[n - 1].data[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t ii = n - 1; ii-- > 0;) {
    const std::size_t i = ii;
    const LayerSpec& l = spec_.layers[i];
    const Tensor& in = cache.acts[i];
    const Tensor& out = cache.acts[i + 1];
    Tensor& dout = dacts[i + 1];
    Tensor& din = dacts[i];
    switch (l.kind) {
      case LayerKind::conv2d: {
        if (l.relu)
          for (std::size_t j = 0; j < dout.size(); ++j)
            if (out.data[j] <= 0.0) dout.data[j] = 0.0;
        const std::size_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
        const Index rows = static_cast<Index>(h * w);
        const Index cols = static_cast<Index>(l.kh * l.kw * c);
        const Index cout = static_cast<Index>(l.out_channels);
        Eigen::Map<const MatRM> p(cache.patches[i].data(), rows, cols);
        Eigen::Map<const MatRM> dm(dout.data.data(), rows, cout);
        Eigen::Map<MatRM> gw(grads[i].w.data.data(), cols, cout);
        gw.noalias() += p.transpose() * dm;
        Eigen::Map<Eigen::RowVectorXd> gb(grads[i].b.data.data(), cout);
        gb += dm.colwise().sum();
        auto& dpatches = cache.dpatches_scratch;
        dpatches.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
        Eigen::Map<MatRM> dp(dpatches.data(), rows, cols);
        Eigen::Map<const MatRM> wm(params_[i].w.data.data(), cols, cout);
        dp.noalias() = dm * wm.transpose();
        din.fill(0.0);
        col2im_2d(dpatches.data(), h, w, c, l.kh, l.kw, din.data.data());
        break;
      }
      case LayerKind::conv3d: {
        if (l.relu)
          for (std::size_t j = 0; j < dout.size(); ++j)
            if (out.data[j] <= 0.0) dout.data[j] = 0.0;
        const std::size_t h = in.shape[0], w = in.shape[1], t = in.shape[2], c = in.shape[3];
        const Index rows = static_cast<Index>(h * w * t);
        const Index cols = static_cast<Index>(l.kh * l.kw * l.kt * c);
        const Index cout = static_cast<Index>(l.out_channels);
        Eigen::Map<const MatRM> p(cache.patches[i].data(), rows, cols);
        Eigen::Map<const MatRM> dm(dout.data.data(), rows, cout);
        Eigen::Map<MatRM> gw(grads[i].w.data.data(), cols, cout);
        gw.noalias() += p.transpose() * dm;
        Eigen::Map<Eigen::RowVectorXd> gb(grads[i].b.data.data(), cout);
        gb += dm.colwise().sum();
        auto& dpatches = cache.dpatches_scratch;
        dpatches.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
        Eigen::Map<MatRM> dp(dpatches.data(), rows, cols);
        Eigen::Map<const MatRM> wm(params_[i].w.data.data(), cols, cout);
        dp.noalias() = dm * wm.transpose();
        din.fill(0.0);
        col2im_3d(dpatches.data(), h, w, t, c, l.kh, l.kw, l.kt, din.data.data());
        break;
      }
      case LayerKind::maxpool2d:
      case LayerKind::maxpool3d: {
        din.fill(0.0);
        const auto& idx = cache.pool_index[i];
        for (std::size_t j = 0; j < dout.size(); ++j) din.data[idx[j]] += dout.data[j];
        break;
      }
      case LayerKind::dropout: {
        const auto& mask = cache.drop_mask[i];
        if (mask.empty() || l.rate == 0.0) {
          din.data = dout.data;
        } else {
          const double scale = 1.0 / (1.0 - l.rate);
          for (std::size_t j = 0; j < dout.size(); ++j)
            din.data[j] = mask[j] ? dout.data[j] * scale : 0.0;
        }
        break;
      }
      case LayerKind::flatten: {
        din.data = dout.data;
        break;
      }
      case LayerKind::fc: {
        if (l.relu)
          for (std::size_t j = 0; j < dout.size(); ++j)
            if (out.data[j] <= 0.0) dout.data[j] = 0.0;
        const Index nin = static_cast<Index>(in.size());
        const Index nout = static_cast<Index>(l.out_units);
        Eigen::Map<const Eigen::VectorXd> dv(dout.data.data(), nout);
        Eigen::Map<const Eigen::VectorXd> xv(in.data.data(), nin);
        Eigen::Map<MatRM> gw(grads[i].w.data.data(), nout, nin);
        gw.noalias() += dv * xv.transpose();
        Eigen::Map<Eigen::VectorXd> gb(grads[i].b.data.data(), nout);
        gb += dv;
        Eigen::Map<const MatRM> wm(params_[i].w.data.data(), nout, nin);
        Eigen::Map<Eigen::VectorXd> dx(din.data.data(), nin);
        dx.noalias() = wm.transpose() * dv;
        break;
      }
      case LayerKind::softmax:
        throw ValidationError("softmax must be the final layer");
    }
  }
  if (dinput != nullptr) *dinput = dacts[0];
}

// -------- persistence --------

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::conv3d: return "conv3d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::maxpool3d: return "maxpool3d";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
    case LayerKind::fc: return "fc";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

LayerKind kind_from_name(const std::string& s) {
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "conv3d") return LayerKind::conv3d;
  if (s == "maxpool2d") return LayerKind::maxpool2d;
  if (s == "maxpool3d") return LayerKind::maxpool3d;
  if (s == "dropout") return LayerKind::dropout;
  if (s == "flatten") return LayerKind::flatten;
  if (s == "fc") return LayerKind::fc;
  if (s == "softmax") return LayerKind::softmax;
  throw ValidationError("model file: unknown layer kind '" + s + "'");
}

}  // namespace

void Model::save(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["format"] = "eegemo-model";
  doc["version"] = 1;
  doc["name"] = spec_.name;
  doc["input_shape"] = spec_.input_shape;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : spec_.layers) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::conv2d:
        j["kh"] = l.kh;
        j["kw"] = l.kw;
        j["out_channels"] = l.out_channels;
        j["relu"] = l.relu;
        break;
      case LayerKind::conv3d:
        j["kh"] = l.kh;
        j["kw"] = l.kw;
        j["kt"] = l.kt;
        j["out_channels"] = l.out_channels;
        j["relu"] = l.relu;
        break;
      case LayerKind::maxpool2d:
        j["ph"] = l.ph;
        j["pw"] = l.pw;
        break;
      case LayerKind::maxpool3d:
        j["ph"] = l.ph;
        j["pw"] = l.pw;
        j["pt"] = l.pt;
        break;
      case LayerKind::dropout: j["rate"] = l.rate; break;
      case LayerKind::fc:
        j["out_units"] = l.out_units;
        j["relu"] = l.relu;
        break;
      case LayerKind::flatten:
      case LayerKind::softmax: break;
    }
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (const auto& p : params_) {
    nlohmann::ordered_json j;
    j["w_shape"] = p.w.shape;
    j["w"] = p.w.data;
    j["b_shape"] = p.b.shape;
    j["b"] = p.b.data;
    params.push_back(std::move(j));
  }
  doc["params"] = std::move(params);
  write_text_file(path, doc.dump());
}

Model Model::load(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file '" + path + "': " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "eegemo-model")
      throw ValidationError("model file '" + path + "': not a model container");
    if (doc.at("version").get<int>() != 1)
      throw ValidationError("model file '" + path + "': unsupported version");
    ModelSpec spec;
    spec.name = doc.at("name").get<std::string>();
    spec.input_shape = doc.at("input_shape").get<std::vector<std::size_t>>();
    for (const auto& j : doc.at("layers")) {
      LayerSpec l;
      l.kind = kind_from_name(j.at("kind").get<std::string>());
      switch (l.kind) {
        case LayerKind::conv2d:
          l.kh = j.at("kh").get<std::size_t>();
          l.kw = j.at("kw").get<std::size_t>();
          l.out_channels = j.at("out_channels").get<std::size_t>();
          l.relu = j.at("relu").get<bool>();
          break;
        case LayerKind::conv3d:
          l.kh = j.at("kh").get<std::size_t>();
          l.kw = j.at("kw").get<std::size_t>();
          l.kt = j.at("kt").get<std::size_t>();
          l.out_channels = j.at("out_channels").get<std::size_t>();
          l.relu = j.at("relu").get<bool>();
          break;
        case LayerKind::maxpool2d:
          l.ph = j.at("ph").get<std::size_t>();
          l.pw = j.at("pw").get<std::size_t>();
          break;
        case LayerKind::maxpool3d:
          l.ph = j.at("ph").get<std::size_t>();
          l.pw = j.at("pw").get<std::size_t>();
          l.pt = j.at("pt").get<std::size_t>();
          break;
        case LayerKind::dropout: l.rate = j.at("rate").get<double>(); break;
        case LayerKind::fc:
          l.out_units = j.at("out_units").get<std::size_t>();
          l.relu = j.at("relu").get<bool>();
          break;
        case LayerKind::flatten:
        case LayerKind::softmax: break;
      }
      spec.layers.push_back(l);
    }
    std::vector<LayerParams> params;
    for (const auto& j : doc.at("params")) {
      LayerParams p;
      const auto wshape = j.at("w_shape").get<std::vector<std::size_t>>();
      const auto bshape = j.at("b_shape").get<std::vector<std::size_t>>();
      p.w.shape = wshape;
      p.w.data = j.at("w").get<std::vector<double>>();
      p.b.shape = bshape;
      p.b.data = j.at("b").get<std::vector<double>>();
      // Layers without parameters round-trip as empty tensors (shape [] with no data).
      const auto size_ok = [](const std::vector<std::size_t>& shape, std::size_t n) {
        return shape.empty() ? n == 0 : n == Tensor::count(shape);
      };
      if (!size_ok(wshape, p.w.data.size()) || !size_ok(bshape, p.b.data.size()))
        throw ValidationError("model file '" + path + "': parameter array size mismatch");
      params.push_back(std::move(p));
    }
    return Model(std::move(spec), std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file '" + path + "': " + e.what());
  }
}

// -------- free functions --------

std::vector<double> full_convolve_1d(std::span<const double> f, std::span<const double> g) {
  if (f.empty() || g.empty()) throw ValidationError("full_convolve_1d: empty operand");
  std::vector<double> out(f.size() + g.size() - 1, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) out[i + j] += f[i] * g[j];
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax: empty input");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace eegemo
