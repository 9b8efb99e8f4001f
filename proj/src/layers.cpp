#include "plantxvit/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gemm.hpp"
#include "plantxvit/error.hpp"

namespace plantxvit {
namespace {

// View of an image tensor as a batch.
struct ImageDims {
  std::size_t batch, height, width, channels;
  bool batched;
};

template <typename T>
ImageDims image_dims(const Tensor<T>& x, const char* op) {
  if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2), false};
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), true};
  throw ShapeError(std::string(op) + ": expected [H,W,C] or [B,H,W,C], got " +
                   to_string(x.shape()));
}

Shape image_shape(const ImageDims& d, std::size_t h, std::size_t w, std::size_t c) {
  if (d.batched) return {d.batch, h, w, c};
  return {h, w, c};
}

template <typename T>
void im2col(const T* image, const ImageDims& d, std::size_t kh, std::size_t kw,
            const ConvGeometry& gh, const ConvGeometry& gw, std::size_t stride, T* col) {
  const std::size_t c = d.channels;
  const std::size_t row_len = kh * kw * c;
  for (std::size_t oh = 0; oh < gh.out; ++oh) {
    for (std::size_t ow = 0; ow < gw.out; ++ow) {
      T* dst = col + (oh * gw.out + ow) * row_len;
      for (std::size_t ki = 0; ki < kh; ++ki) {
        const long ih = static_cast<long>(oh * stride + ki) - static_cast<long>(gh.pad_before);
        for (std::size_t kj = 0; kj < kw; ++kj) {
          const long iw = static_cast<long>(ow * stride + kj) - static_cast<long>(gw.pad_before);
          T* cell = dst + (ki * kw + kj) * c;
          if (ih < 0 || iw < 0 || ih >= static_cast<long>(d.height) ||
              iw >= static_cast<long>(d.width)) {
            std::fill_n(cell, c, T(0));
          } else {
            std::copy_n(image + (static_cast<std::size_t>(ih) * d.width + iw) * c, c, cell);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ImageDims& d, std::size_t kh, std::size_t kw,
                const ConvGeometry& gh, const ConvGeometry& gw, std::size_t stride, T* image) {
  const std::size_t c = d.channels;
  const std::size_t row_len = kh * kw * c;
  for (std::size_t oh = 0; oh < gh.out; ++oh) {
    for (std::size_t ow = 0; ow < gw.out; ++ow) {
      const T* src = col + (oh * gw.out + ow) * row_len;
      for (std::size_t ki = 0; ki < kh; ++ki) {
        const long ih = static_cast<long>(oh * stride + ki) - static_cast<long>(gh.pad_before);
        if (ih < 0 || ih >= static_cast<long>(d.height)) continue;
        for (std::size_t kj = 0; kj < kw; ++kj) {
          const long iw = static_cast<long>(ow * stride + kj) - static_cast<long>(gw.pad_before);
          if (iw < 0 || iw >= static_cast<long>(d.width)) continue;
          const T* cell = src + (ki * kw + kj) * c;
          T* dst = image + (static_cast<std::size_t>(ih) * d.width + iw) * c;
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += cell[ch];
        }
      }
    }
  }
}

template <typename T>
Tensor<T> sequence_as_batch(const Tensor<T>& x, const char* op) {
  if (x.rank() == 3) return x;
  if (x.rank() == 2) return reshape(x, {1, x.dim(0), x.dim(1)});
  throw ShapeError(std::string(op) + ": expected [n,d] or [B,n,d], got " + to_string(x.shape()));
}

}  // namespace

ConvGeometry conv_geometry(std::size_t in, std::size_t window, std::size_t stride, Padding padding) {
  if (stride == 0 || window == 0) throw ShapeError("window and stride must be positive");
  ConvGeometry g;
  if (padding == Padding::kValid) {
    if (window > in) {
      throw ShapeError("window " + std::to_string(window) + " larger than input " +
                       std::to_string(in));
    }
    g.out = (in - window) / stride + 1;
    return g;
  }
  g.out = (in + stride - 1) / stride;
  const std::size_t needed = (g.out - 1) * stride + window;
  const std::size_t total = needed > in ? needed - in : 0;
  g.pad_before = total / 2;
  return g;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Conv2DParams<T>& params) {
  const ImageDims d = image_dims(x, "conv2d");
  const Tensor<T>& kernel = params.kernel;
  if (kernel.rank() != 4 || kernel.dim(2) != d.channels) {
    throw ShapeError("conv2d: kernel " + to_string(kernel.shape()) + " does not match input " +
                     to_string(x.shape()));
  }
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  if (params.bias.shape() != Shape{cout}) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(cout) + "]");
  }
  const std::size_t stride = params.stride;
  const ConvGeometry gh = conv_geometry(d.height, kh, stride, params.padding);
  const ConvGeometry gw = conv_geometry(d.width, kw, stride, params.padding);
  const std::size_t rows = gh.out * gw.out;
  const std::size_t row_len = kh * kw * d.channels;
  const std::size_t in_size = d.height * d.width * d.channels;
  // A 1x1 stride-1 convolution reads the image directly as its column matrix.
  const bool pointwise = kh == 1 && kw == 1 && stride == 1;

  std::vector<T> out(d.batch * rows * cout);
  std::vector<T> col(pointwise ? 0 : rows * row_len);
  auto xd = x.data();
  auto bd = params.bias.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    const T* image = xd.data() + b * in_size;
    const T* lhs = image;
    if (!pointwise) {
      im2col(image, d, kh, kw, gh, gw, stride, col.data());
      lhs = col.data();
    }
    T* dst = out.data() + b * rows * cout;
    detail::gemm(lhs, kernel.data().data(), dst, rows, row_len, cout, false, false, false);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < cout; ++o) dst[r * cout + o] += bd[o];
    }
  }

  const Tensor<T> bias = params.bias;
  return make_result<T>(
      Tensor<T>(image_shape(d, gh.out, gw.out, cout), std::move(out)), {&x, &kernel, &bias},
      [x, kernel, d, kh, kw, gh, gw, stride, rows, row_len, in_size, cout, pointwise](
          std::span<const T> g, std::span<std::vector<T>* const> grads) {
        std::vector<T> col(pointwise ? 0 : rows * row_len);
        auto xd = x.data();
        for (std::size_t b = 0; b < d.batch; ++b) {
          const T* gb = g.data() + b * rows * cout;
          const T* image = xd.data() + b * in_size;
          if (grads[1]) {
            const T* lhs = image;
            if (!pointwise) {
              im2col(image, d, kh, kw, gh, gw, stride, col.data());
              lhs = col.data();
            }
            detail::gemm(lhs, gb, grads[1]->data(), row_len, rows, cout, true, false, true);
          }
          if (grads[2]) {
            T* gbias = grads[2]->data();
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t o = 0; o < cout; ++o) gbias[o] += gb[r * cout + o];
            }
          }
          if (grads[0]) {
            T* gx = grads[0]->data() + b * in_size;
            if (pointwise) {
              detail::gemm(gb, kernel.data().data(), gx, rows, cout, row_len, false, true, true);
            } else {
              detail::gemm(gb, kernel.data().data(), col.data(), rows, cout, row_len, false, true,
                           false);
              col2im_add(col.data(), d, kh, kw, gh, gw, stride, gx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t size, std::size_t stride, Padding padding) {
  const ImageDims d = image_dims(x, "maxpool2d");
  if (padding == Padding::kValid &&
      (d.height < size || d.width < size || (d.height - size) % stride != 0 ||
       (d.width - size) % stride != 0)) {
    throw ShapeError("maxpool2d: " + std::to_string(size) + "x" + std::to_string(size) +
                     " stride " + std::to_string(stride) + " does not tile input " +
                     to_string(x.shape()) + " without padding");
  }
  const ConvGeometry gh = conv_geometry(d.height, size, stride, padding);
  const ConvGeometry gw = conv_geometry(d.width, size, stride, padding);
  const std::size_t c = d.channels;
  const std::size_t out_size = gh.out * gw.out * c;
  std::vector<T> out(d.batch * out_size);
  std::vector<std::size_t> argmax(out.size());
  auto xd = x.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    const std::size_t in_base = b * d.height * d.width * c;
    for (std::size_t oh = 0; oh < gh.out; ++oh) {
      for (std::size_t ow = 0; ow < gw.out; ++ow) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_at = 0;
          for (std::size_t ki = 0; ki < size; ++ki) {
            const long ih = static_cast<long>(oh * stride + ki) - static_cast<long>(gh.pad_before);
            if (ih < 0 || ih >= static_cast<long>(d.height)) continue;
            for (std::size_t kj = 0; kj < size; ++kj) {
              const long iw =
                  static_cast<long>(ow * stride + kj) - static_cast<long>(gw.pad_before);
              if (iw < 0 || iw >= static_cast<long>(d.width)) continue;
              const std::size_t at = in_base + (static_cast<std::size_t>(ih) * d.width + iw) * c + ch;
              if (xd[at] > best) {
                best = xd[at];
                best_at = at;
              }
            }
          }
          const std::size_t o = b * out_size + (oh * gw.out + ow) * c + ch;
          out[o] = best;
          argmax[o] = best_at;
        }
      }
    }
  }
  return make_result<T>(Tensor<T>(image_shape(d, gh.out, gw.out, c), std::move(out)), {&x},
                        [argmax = std::move(argmax)](std::span<const T> g,
                                                     std::span<std::vector<T>* const> grads) {
                          auto& gx = *grads[0];
                          for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
                        });
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || x.shape().back() != weight.dim(0) ||
      bias.shape() != Shape{weight.dim(1)}) {
    throw ShapeError("dense: input " + to_string(x.shape()) + ", weight " +
                     to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
  }
  const std::size_t m = weight.dim(0), n = weight.dim(1);
  const Tensor<T> flat = x.rank() == 2 ? x : reshape(x, {x.numel() / m, m});
  Tensor<T> y = add_trailing(matmul(flat, weight), bias);
  if (x.rank() == 2) return y;
  Shape out_shape = x.shape();
  out_shape.back() = n;
  return reshape(y, std::move(out_shape));
}

InceptionConfig InceptionConfig::reference_matched() {
  InceptionConfig c;
  c.branch1 = 64;
  c.branch2_reduce = 256;
  c.branch2_out = 112;
  c.branch3_reduce = 208;
  c.branch3_mid = 48;
  c.branch3_out = 80;
  c.pool_proj = 64;
  return c;
}

void InceptionConfig::validate() const {
  for (std::size_t w : {branch1, branch2_reduce, branch2_out, branch3_reduce, branch3_mid,
                        branch3_out, pool_proj}) {
    if (w == 0) throw ConfigError("inception branch widths must be positive");
  }
  if (output_channels() != kInceptionOutputChannels) {
    throw ConfigError("inception branch outputs sum to " + std::to_string(output_channels()) +
                      ", expected " + std::to_string(kInceptionOutputChannels));
  }
}

std::vector<InceptionConvSpec> inception_layout(const InceptionConfig& c, std::size_t in) {
  auto conv = [](std::string name, std::size_t branch, bool split, std::size_t kh, std::size_t kw,
                 std::size_t cin, std::size_t cout) {
    return InceptionConvSpec{std::move(name), branch, split, kh, kw, cin, cout};
  };
  return {
      conv("b1_1x1", 0, false, 1, 1, in, c.branch1),
      conv("b2_1x1", 1, false, 1, 1, in, c.branch2_reduce),
      conv("b2_1x3", 1, true, 1, 3, c.branch2_reduce, c.branch2_out),
      conv("b2_3x1", 1, true, 3, 1, c.branch2_reduce, c.branch2_out),
      conv("b3_1x1", 2, false, 1, 1, in, c.branch3_reduce),
      conv("b3_3x3", 2, false, 3, 3, c.branch3_reduce, c.branch3_mid),
      conv("b3_1x3", 2, true, 1, 3, c.branch3_mid, c.branch3_out),
      conv("b3_3x1", 2, true, 3, 1, c.branch3_mid, c.branch3_out),
      conv("b4_1x1", 3, false, 1, 1, in, c.pool_proj),
  };
}

template <typename T>
InceptionParams<T> make_inception_params(
    const InceptionConfig& config, std::size_t in_channels,
    const std::function<Conv2DParams<T>(const InceptionConvSpec&)>& conv_for) {
  InceptionParams<T> params;
  params.branches.resize(4);
  params.branches[3].pool_first = true;
  for (const auto& spec : inception_layout(config, in_channels)) {
    Conv2DParams<T> conv = conv_for(spec);
    conv.stride = 1;
    conv.padding = Padding::kSame;
    if (conv.kernel.shape() != Shape{spec.kernel_h, spec.kernel_w, spec.in_channels,
                                     spec.out_channels}) {
      throw ShapeError("inception " + spec.name + ": kernel " + to_string(conv.kernel.shape()));
    }
    auto& branch = params.branches[spec.branch];
    (spec.split ? branch.split : branch.chain).push_back(std::move(conv));
  }
  return params;
}

template <typename T>
Tensor<T> inception_branch(const Tensor<T>& x, const InceptionBranch<T>& branch) {
  Tensor<T> h = branch.pool_first ? maxpool2d(x, 3, 1, Padding::kSame) : x;
  for (const auto& conv : branch.chain) h = relu(conv2d(h, conv));
  if (branch.split.empty()) return h;
  std::vector<Tensor<T>> parts;
  for (const auto& conv : branch.split) parts.push_back(relu(conv2d(h, conv)));
  return concat_last(parts);
}

template <typename T>
Tensor<T> inception_forward(const Tensor<T>& x, const InceptionParams<T>& params,
                            const InceptionConfig& config) {
  config.validate();
  std::vector<Tensor<T>> outputs;
  for (const auto& branch : params.branches) outputs.push_back(inception_branch(x, branch));
  Tensor<T> out = concat_last(outputs);
  if (out.shape().back() != config.output_channels()) {
    throw ShapeError("inception: parameters produce " + std::to_string(out.shape().back()) +
                     " channels, config says " + std::to_string(config.output_channels()));
  }
  return out;
}

template <typename T>
Tensor<T> extract_patches(const Tensor<T>& fmap, std::size_t patch) {
  const ImageDims d = image_dims(fmap, "extract_patches");
  if (patch == 0 || patch > d.height || patch > d.width) {
    throw ShapeError("extract_patches: patch size " + std::to_string(patch) +
                     " does not fit feature map " + to_string(fmap.shape()));
  }
  const std::size_t nh = d.height / patch, nw = d.width / patch;
  const std::size_t c = d.channels;
  const std::size_t row_len = patch * patch * c;
  const std::size_t per_image = nh * nw * row_len;
  const std::size_t in_size = d.height * d.width * c;
  // index[i] = source offset (within one image) of output element i.
  std::vector<std::size_t> index(per_image);
  for (std::size_t pi = 0; pi < nh; ++pi) {
    for (std::size_t pj = 0; pj < nw; ++pj) {
      for (std::size_t r = 0; r < patch; ++r) {
        for (std::size_t s = 0; s < patch; ++s) {
          const std::size_t dst = ((pi * nw + pj) * patch * patch + r * patch + s) * c;
          const std::size_t src = ((pi * patch + r) * d.width + pj * patch + s) * c;
          for (std::size_t ch = 0; ch < c; ++ch) index[dst + ch] = src + ch;
        }
      }
    }
  }
  std::vector<T> out(d.batch * per_image);
  auto xd = fmap.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t i = 0; i < per_image; ++i) out[b * per_image + i] = xd[b * in_size + index[i]];
  }
  Shape shape = d.batched ? Shape{d.batch, nh * nw, row_len} : Shape{nh * nw, row_len};
  return make_result<T>(Tensor<T>(std::move(shape), std::move(out)), {&fmap},
                        [index = std::move(index), per_image, in_size, batch = d.batch](
                            std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          auto& gx = *grads[0];
                          for (std::size_t b = 0; b < batch; ++b) {
                            for (std::size_t i = 0; i < per_image; ++i) {
                              gx[b * in_size + index[i]] += g[b * per_image + i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> assemble_patches(const Tensor<T>& patches, std::size_t grid_h, std::size_t grid_w,
                           std::size_t patch, std::size_t channels) {
  const std::size_t row_len = patch * patch * channels;
  if (patches.shape() != Shape{grid_h * grid_w, row_len}) {
    throw ShapeError("assemble_patches: expected [" + std::to_string(grid_h * grid_w) + "," +
                     std::to_string(row_len) + "], got " + to_string(patches.shape()));
  }
  const std::size_t width = grid_w * patch;
  std::vector<T> out(grid_h * patch * width * channels);
  auto pd = patches.data();
  for (std::size_t pi = 0; pi < grid_h; ++pi) {
    for (std::size_t pj = 0; pj < grid_w; ++pj) {
      for (std::size_t r = 0; r < patch; ++r) {
        for (std::size_t s = 0; s < patch; ++s) {
          const std::size_t src = ((pi * grid_w + pj) * patch * patch + r * patch + s) * channels;
          const std::size_t dst = ((pi * patch + r) * width + pj * patch + s) * channels;
          std::copy_n(pd.data() + src, channels, out.data() + dst);
        }
      }
    }
  }
  return Tensor<T>({grid_h * patch, width, channels}, std::move(out));
}

template <typename T>
Tensor<T> patch_encode(const Tensor<T>& patches, const PatchEncoderParams<T>& params) {
  const std::size_t n = patches.rank() >= 2 ? patches.shape()[patches.rank() - 2] : 0;
  if (params.position.rank() != 2 || params.position.dim(0) != n ||
      params.position.dim(1) != params.projection.shape().back()) {
    throw ShapeError("patch_encode: positional embedding " + to_string(params.position.shape()) +
                     " does not match " + std::to_string(n) + " patches");
  }
  return add_trailing(dense(patches, params.projection, params.bias), params.position);
}

template <typename T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k) {
  if (q.rank() != k.rank() || q.shape().back() != k.shape().back()) {
    throw ShapeError("attention: Q " + to_string(q.shape()) + " and K " + to_string(k.shape()) +
                     " differ in width");
  }
  const Tensor<T> qb = sequence_as_batch(q, "attention");
  const Tensor<T> kb = sequence_as_batch(k, "attention");
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(q.shape().back()));
  Tensor<T> w = softmax(scale(batch_matmul(qb, kb, true), inv_scale), 2);
  if (q.rank() == 2) return reshape(w, {q.dim(0), k.dim(0)});
  return w;
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  if (k.rank() != v.rank() || k.shape()[k.rank() - 2] != v.shape()[v.rank() - 2]) {
    throw ShapeError("attention: K " + to_string(k.shape()) + " and V " + to_string(v.shape()) +
                     " differ in row count");
  }
  const Tensor<T> w = sequence_as_batch(attention_weights(q, k), "attention");
  Tensor<T> out = batch_matmul(w, sequence_as_batch(v, "attention"));
  if (q.rank() == 2) return reshape(out, {q.dim(0), v.dim(1)});
  return out;
}

template <typename T>
std::size_t AttentionParams<T>::param_count() const {
  std::size_t n = output.numel() + output_bias.numel();
  for (const auto& h : heads) {
    n += h.query.numel() + h.query_bias.numel() + h.key.numel() + h.key_bias.numel() +
         h.value.numel() + h.value_bias.numel();
  }
  return n;
}

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionParams<T>& params) {
  if (params.heads.empty()) throw ShapeError("multi_head_attention: no heads");
  std::vector<Tensor<T>> outputs;
  outputs.reserve(params.heads.size());
  for (const auto& h : params.heads) {
    outputs.push_back(scaled_dot_attention(dense(x, h.query, h.query_bias),
                                           dense(x, h.key, h.key_bias),
                                           dense(x, h.value, h.value_bias)));
  }
  return dense(concat_last(outputs), params.output, params.output_bias);
}

template <typename T>
std::size_t TransformerBlockParams<T>::param_count() const {
  return norm1_gamma.numel() + norm1_beta.numel() + attention.param_count() +
         norm2_gamma.numel() + norm2_beta.numel() + mlp_hidden.numel() +
         mlp_hidden_bias.numel() + mlp_out.numel() + mlp_out_bias.numel();
}

template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const TransformerBlockParams<T>& p) {
  const Tensor<T> attended =
      add(multi_head_attention(layer_norm(x, p.norm1_gamma, p.norm1_beta, p.eps), p.attention), x);
  const Tensor<T> hidden =
      gelu(dense(layer_norm(attended, p.norm2_gamma, p.norm2_beta, p.eps), p.mlp_hidden,
                 p.mlp_hidden_bias));
  return add(dense(hidden, p.mlp_out, p.mlp_out_bias), attended);
}

template <typename T>
Tensor<T> global_avg_pool_1d(const Tensor<T>& x) {
  if (x.rank() == 2) return mean_axis(x, 0);
  if (x.rank() == 3) return mean_axis(x, 1);
  throw ShapeError("global_avg_pool_1d: expected [n,d] or [B,n,d], got " + to_string(x.shape()));
}

#define PLANTXVIT_INSTANTIATE_LAYERS(T)                                                   \
  template Tensor<T> conv2d(const Tensor<T>&, const Conv2DParams<T>&);                    \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t, Padding);      \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> inception_branch(const Tensor<T>&, const InceptionBranch<T>&);       \
  template InceptionParams<T> make_inception_params(                                      \
      const InceptionConfig&, std::size_t,                                                \
      const std::function<Conv2DParams<T>(const InceptionConvSpec&)>&);                   \
  template Tensor<T> inception_forward(const Tensor<T>&, const InceptionParams<T>&,       \
                                       const InceptionConfig&);                           \
  template Tensor<T> extract_patches(const Tensor<T>&, std::size_t);                      \
  template Tensor<T> assemble_patches(const Tensor<T>&, std::size_t, std::size_t,         \
                                      std::size_t, std::size_t);                          \
  template Tensor<T> patch_encode(const Tensor<T>&, const PatchEncoderParams<T>&);        \
  template Tensor<T> attention_weights(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> scaled_dot_attention(const Tensor<T>&, const Tensor<T>&,             \
                                          const Tensor<T>&);                              \
  template struct AttentionParams<T>;                                                     \
  template Tensor<T> multi_head_attention(const Tensor<T>&, const AttentionParams<T>&);   \
  template struct TransformerBlockParams<T>;                                              \
  template Tensor<T> transformer_block(const Tensor<T>&, const TransformerBlockParams<T>&); \
  template Tensor<T> global_avg_pool_1d(const Tensor<T>&);

PLANTXVIT_INSTANTIATE_LAYERS(float)
PLANTXVIT_INSTANTIATE_LAYERS(double)

}  // namespace plantxvit
