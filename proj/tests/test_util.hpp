#pragma once

#include <cstdint>
#include <vector>

#include "plantxvit/layers.hpp"
#include "plantxvit/tensor.hpp"

namespace plantxvit::testing {

template <typename T>
std::vector<T> values(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

template <typename T = double>
Tensor<T> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return Tensor<T>(std::move(shape), Fill::uniform(lo, hi, seed));
}

template <typename T>
AttentionParams<T> random_attention(std::size_t d, std::size_t heads, std::size_t key_dim,
                                    std::uint64_t seed, double spread = 0.5) {
  AttentionParams<T> p;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::uint64_t s = seed + 10 * h;
    p.heads.push_back({random_tensor<T>({d, key_dim}, s + 1, -spread, spread),
                       random_tensor<T>({key_dim}, s + 2, -spread, spread),
                       random_tensor<T>({d, key_dim}, s + 3, -spread, spread),
                       random_tensor<T>({key_dim}, s + 4, -spread, spread),
                       random_tensor<T>({d, key_dim}, s + 5, -spread, spread),
                       random_tensor<T>({key_dim}, s + 6, -spread, spread)});
  }
  p.output = random_tensor<T>({heads * key_dim, d}, seed + 1000, -spread, spread);
  p.output_bias = random_tensor<T>({d}, seed + 1001, -spread, spread);
  return p;
}

template <typename T>
TransformerBlockParams<T> random_block(std::size_t d, std::size_t heads, std::size_t key_dim,
                                       std::size_t hidden, std::uint64_t seed) {
  TransformerBlockParams<T> p;
  p.norm1_gamma = random_tensor<T>({d}, seed + 1, 0.5, 1.5);
  p.norm1_beta = random_tensor<T>({d}, seed + 2, -0.2, 0.2);
  p.attention = random_attention<T>(d, heads, key_dim, seed + 100);
  p.norm2_gamma = random_tensor<T>({d}, seed + 3, 0.5, 1.5);
  p.norm2_beta = random_tensor<T>({d}, seed + 4, -0.2, 0.2);
  p.mlp_hidden = random_tensor<T>({d, hidden}, seed + 5, -0.5, 0.5);
  p.mlp_hidden_bias = random_tensor<T>({hidden}, seed + 6, -0.2, 0.2);
  p.mlp_out = random_tensor<T>({hidden, d}, seed + 7, -0.5, 0.5);
  p.mlp_out_bias = random_tensor<T>({d}, seed + 8, -0.2, 0.2);
  return p;
}

// Rebuilds parameter structs from a flat list so grad_check can treat every
// weight as an input.
template <typename T>
std::vector<Tensor<T>> flatten(const AttentionParams<T>& p) {
  std::vector<Tensor<T>> out;
  for (const auto& h : p.heads) {
    for (const auto* t : {&h.query, &h.query_bias, &h.key, &h.key_bias, &h.value, &h.value_bias}) {
      out.push_back(*t);
    }
  }
  out.push_back(p.output);
  out.push_back(p.output_bias);
  return out;
}

template <typename T>
AttentionParams<T> unflatten_attention(const std::vector<Tensor<T>>& flat, std::size_t offset,
                                       std::size_t heads) {
  AttentionParams<T> p;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t o = offset + 6 * h;
    p.heads.push_back({flat[o], flat[o + 1], flat[o + 2], flat[o + 3], flat[o + 4], flat[o + 5]});
  }
  p.output = flat[offset + 6 * heads];
  p.output_bias = flat[offset + 6 * heads + 1];
  return p;
}

template <typename T>
std::vector<Tensor<T>> flatten(const TransformerBlockParams<T>& p) {
  std::vector<Tensor<T>> out{p.norm1_gamma, p.norm1_beta, p.norm2_gamma, p.norm2_beta,
                             p.mlp_hidden,  p.mlp_hidden_bias, p.mlp_out, p.mlp_out_bias};
  for (auto& t : flatten(p.attention)) out.push_back(t);
  return out;
}

template <typename T>
TransformerBlockParams<T> unflatten_block(const std::vector<Tensor<T>>& flat, std::size_t offset,
                                          std::size_t heads) {
  TransformerBlockParams<T> p;
  p.norm1_gamma = flat[offset + 0];
  p.norm1_beta = flat[offset + 1];
  p.norm2_gamma = flat[offset + 2];
  p.norm2_beta = flat[offset + 3];
  p.mlp_hidden = flat[offset + 4];
  p.mlp_hidden_bias = flat[offset + 5];
  p.mlp_out = flat[offset + 6];
  p.mlp_out_bias = flat[offset + 7];
  p.attention = unflatten_attention(flat, offset + 8, heads);
  return p;
}

}  // namespace plantxvit::testing
