#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "plantxvit/ops.hpp"
#include "plantxvit/tensor.hpp"

// Layer vocabulary of the hybrid CNN / vision-transformer classifier. Image
// tensors are channels-last: [H,W,C] for one image or [B,H,W,C] for a batch.
// Sequence tensors are [n,d] or [B,n,d].

namespace plantxvit {

enum class Padding { kSame, kValid };

inline constexpr std::size_t kInceptionOutputChannels = 512;

template <typename T>
struct Conv2DParams {
  Tensor<T> kernel;  // [kh, kw, in_ch, out_ch]
  Tensor<T> bias;    // [out_ch]
  std::size_t stride = 1;
  Padding padding = Padding::kSame;

  std::size_t param_count() const { return kernel.numel() + bias.numel(); }
};

// Spatial output size and leading padding along one axis.
struct ConvGeometry {
  std::size_t out = 0;
  std::size_t pad_before = 0;
};

// 'same' follows the usual convention: out = ceil(in / stride) with the extra
// padding row/column going after. Throws ShapeError when a 'valid' window does
// not fit.
ConvGeometry conv_geometry(std::size_t in, std::size_t window, std::size_t stride, Padding padding);

// Cross-correlation plus bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Conv2DParams<T>& params);

// Window maximum per channel. In 'valid' mode the window must tile the input
// exactly; in 'same' mode out-of-range cells are ignored.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t size = 2, std::size_t stride = 2,
                    Padding padding = Padding::kValid);

// Affine map on the last axis: x [..., m] W [m, n] b [n].
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Branch widths of the four-branch inception block:
//   1x1 | 1x1 -> {1x3, 3x1} | 1x1 -> 3x3 -> {1x3, 3x1} | 3x3 max-pool -> 1x1
struct InceptionConfig {
  std::size_t branch1 = 64;
  std::size_t branch2_reduce = 64;
  std::size_t branch2_out = 64;  // width of each of the parallel 1x3 / 3x1 convs
  std::size_t branch3_reduce = 64;
  std::size_t branch3_mid = 96;
  std::size_t branch3_out = 96;
  std::size_t pool_proj = 128;

  std::size_t output_channels() const {
    return branch1 + 2 * branch2_out + 2 * branch3_out + pool_proj;
  }

  // Widths found by search whose parameter count for 128 input channels is
  // 361,728 while keeping 512 output channels.
  static InceptionConfig reference_matched();

  // Throws ConfigError if any width is zero or the outputs do not sum to 512.
  void validate() const;

  bool operator==(const InceptionConfig&) const = default;
};

// One branch: optional 3x3/stride-1 'same' max-pool, then a chain of
// convolutions, then optionally a set of parallel convolutions applied to the
// chain output and concatenated. Every convolution is followed by ReLU.
template <typename T>
struct InceptionBranch {
  bool pool_first = false;
  std::vector<Conv2DParams<T>> chain;
  std::vector<Conv2DParams<T>> split;
};

template <typename T>
struct InceptionParams {
  std::vector<InceptionBranch<T>> branches;
};

// One convolution of the inception block, in branch order.
struct InceptionConvSpec {
  std::string name;  // e.g. "b3_3x3", "b2_1x3"
  std::size_t branch = 0;
  bool split = false;  // member of the branch's parallel tail
  std::size_t kernel_h = 1, kernel_w = 1, in_channels = 0, out_channels = 0;

  std::size_t param_count() const {
    return kernel_h * kernel_w * in_channels * out_channels + out_channels;
  }
};

std::vector<InceptionConvSpec> inception_layout(const InceptionConfig& config,
                                                std::size_t in_channels);

// Assembles branch structures from the layout, asking `conv_for` for the
// weights of each convolution (stride 1, 'same').
template <typename T>
InceptionParams<T> make_inception_params(
    const InceptionConfig& config, std::size_t in_channels,
    const std::function<Conv2DParams<T>(const InceptionConvSpec&)>& conv_for);

template <typename T>
Tensor<T> inception_branch(const Tensor<T>& x, const InceptionBranch<T>& branch);

// Channel concatenation of all branches; `config` must validate.
template <typename T>
Tensor<T> inception_forward(const Tensor<T>& x, const InceptionParams<T>& params,
                            const InceptionConfig& config);

// Non-overlapping p x p patches, top-left aligned, remainder rows/columns
// dropped. [H,W,C] -> [nh*nw, p*p*C] (or batched), each row a row-major
// flattened patch.
template <typename T>
Tensor<T> extract_patches(const Tensor<T>& fmap, std::size_t patch);

// Inverse of extract_patches over the cropped region: [nh*nw, p*p*C] ->
// [nh*p, nw*p, C].
template <typename T>
Tensor<T> assemble_patches(const Tensor<T>& patches, std::size_t grid_h, std::size_t grid_w,
                           std::size_t patch, std::size_t channels);

template <typename T>
struct PatchEncoderParams {
  Tensor<T> projection;  // [p*p*C, d]
  Tensor<T> bias;        // [d]
  Tensor<T> position;    // [n_patches, d]

  std::size_t param_count() const {
    return projection.numel() + bias.numel() + position.numel();
  }
};

// Row-wise projection followed by a learned positional embedding per patch.
template <typename T>
Tensor<T> patch_encode(const Tensor<T>& patches, const PatchEncoderParams<T>& params);

// softmax(Q K^T / sqrt(dk)) along the key axis. Rank 2 or rank 3 inputs.
template <typename T>
Tensor<T> attention_weights(const Tensor<T>& q, const Tensor<T>& k);

// softmax(Q K^T / sqrt(dk)) V.
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v);

template <typename T>
struct AttentionHead {
  Tensor<T> query, query_bias;
  Tensor<T> key, key_bias;
  Tensor<T> value, value_bias;
};

template <typename T>
struct AttentionParams {
  std::vector<AttentionHead<T>> heads;  // each projection [d, key_dim]
  Tensor<T> output;                     // [heads * key_dim, d]
  Tensor<T> output_bias;                // [d]

  std::size_t param_count() const;
};

// Per-head attention over projections of the same input, heads concatenated
// and projected back to the model width.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionParams<T>& params);

template <typename T>
struct TransformerBlockParams {
  Tensor<T> norm1_gamma, norm1_beta;
  AttentionParams<T> attention;
  Tensor<T> norm2_gamma, norm2_beta;
  Tensor<T> mlp_hidden, mlp_hidden_bias;  // [d, hidden], [hidden]
  Tensor<T> mlp_out, mlp_out_bias;        // [hidden, d], [d]
  T eps = static_cast<T>(kLayerNormEpsilon);

  std::size_t param_count() const;
};

// y = MHA(LN1(x)) + x;  out = MLP(LN2(y)) + y with MLP = dense, GELU, dense.
template <typename T>
Tensor<T> transformer_block(const Tensor<T>& x, const TransformerBlockParams<T>& params);

// Column means: [n,d] -> [d], [B,n,d] -> [B,d].
template <typename T>
Tensor<T> global_avg_pool_1d(const Tensor<T>& x);

// Parameter count of one transformer block in the standard parameterisation.
constexpr std::size_t transformer_block_param_count(std::size_t d, std::size_t heads,
                                                    std::size_t key_dim, std::size_t hidden) {
  const std::size_t attention = 3 * heads * (d * key_dim + key_dim) + (heads * key_dim * d + d);
  const std::size_t norms = 2 * 2 * d;
  const std::size_t mlp = (d * hidden + hidden) + (hidden * d + d);
  return attention + norms + mlp;
}

}  // namespace plantxvit
