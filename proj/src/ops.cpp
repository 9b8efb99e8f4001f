#include "plantxvit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gemm.hpp"
#include "plantxvit/error.hpp"

namespace plantxvit {
namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(x.shape()));
  }
}

// Sizes of the dimensions before, at and after `axis`.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T>
void add_into(std::vector<T>* dst, std::span<const T> src) {
  if (dst == nullptr) return;
  for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result<T>(Tensor<T>(a.shape(), std::move(out)), {&a, &b},
                        [](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          add_into(grads[0], g);
                          add_into(grads[1], g);
                        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result<T>(Tensor<T>(a.shape(), std::move(out)), {&a, &b},
                        [](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          add_into(grads[0], g);
                          if (grads[1]) {
                            for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] -= g[i];
                          }
                        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result<T>(Tensor<T>(a.shape(), std::move(out)), {&a, &b},
                        [a, b](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          auto x = a.data();
                          auto y = b.data();
                          if (grads[0]) {
                            for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * y[i];
                          }
                          if (grads[1]) {
                            for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] += g[i] * x[i];
                          }
                        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v *= factor;
  return make_result<T>(Tensor<T>(x.shape(), std::move(out)), {&x},
                        [factor](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * factor;
                        });
}

template <typename T>
Tensor<T> add_trailing(const Tensor<T>& x, const Tensor<T>& y) {
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  if (ys.size() > xs.size() || !std::equal(ys.rbegin(), ys.rend(), xs.rbegin())) {
    throw ShapeError("add_trailing: " + to_string(ys) + " is not a suffix of " + to_string(xs));
  }
  const std::size_t block = y.numel();
  const std::size_t reps = x.numel() / block;
  std::vector<T> out(x.data().begin(), x.data().end());
  auto yd = y.data();
  for (std::size_t r = 0; r < reps; ++r) {
    T* row = out.data() + r * block;
    for (std::size_t i = 0; i < block; ++i) row[i] += yd[i];
  }
  return make_result<T>(Tensor<T>(xs, std::move(out)), {&x, &y},
                        [block, reps](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          add_into(grads[0], g);
                          if (grads[1]) {
                            auto& gy = *grads[1];
                            for (std::size_t r = 0; r < reps; ++r) {
                              for (std::size_t i = 0; i < block; ++i) gy[i] += g[r * block + i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  return make_result<T>(Tensor<T>::scalar(total), {&x},
                        [](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          for (T& v : *grads[0]) v += g[0];
                        });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape;
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (i != axis) out_shape.push_back(x.shape()[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  const T inv = T(1) / static_cast<T>(s.len);
  std::vector<T> out(s.outer * s.inner, T(0));
  auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < s.len; ++l) {
      const T* src = xd.data() + (o * s.len + l) * s.inner;
      T* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  for (T& v : out) v *= inv;
  return make_result<T>(Tensor<T>(std::move(out_shape), std::move(out)), {&x},
                        [s, inv](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          auto& gx = *grads[0];
                          for (std::size_t o = 0; o < s.outer; ++o) {
                            for (std::size_t l = 0; l < s.len; ++l) {
                              T* dst = gx.data() + (o * s.len + l) * s.inner;
                              const T* src = g.data() + o * s.inner;
                              for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i] * inv;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (checked_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>(Tensor<T>(std::move(shape), std::move(out)), {&x},
                        [](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          add_into(grads[0], g);
                        });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  std::vector<T> out(m * n);
  detail::gemm(a.data().data(), b.data().data(), out.data(), m, k, n, false, false, false);
  return make_result<T>(Tensor<T>({m, n}, std::move(out)), {&a, &b},
                        [a, b, m, k, n](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          if (grads[0]) {  // dA = dC B^T
                            detail::gemm(g.data(), b.data().data(), grads[0]->data(), m, n, k, false,
                                         true, true);
                          }
                          if (grads[1]) {  // dB = A^T dC
                            detail::gemm(a.data().data(), g.data(), grads[1]->data(), k, m, n, true,
                                         false, true);
                          }
                        });
}

template <typename T>
Tensor<T> batch_matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  require_rank(a, 3, "batch_matmul");
  require_rank(b, 3, "batch_matmul");
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
  const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
  if (b.dim(0) != batch || bk != k) {
    throw ShapeError("batch_matmul: incompatible " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  std::vector<T> out(batch * m * n);
  for (std::size_t i = 0; i < batch; ++i) {
    detail::gemm(a.data().data() + i * m * k, b.data().data() + i * k * n, out.data() + i * m * n, m,
                 k, n, false, transpose_b, false);
  }
  return make_result<T>(
      Tensor<T>({batch, m, n}, std::move(out)), {&a, &b},
      [a, b, batch, m, k, n, transpose_b](std::span<const T> g,
                                          std::span<std::vector<T>* const> grads) {
        for (std::size_t i = 0; i < batch; ++i) {
          const T* gi = g.data() + i * m * n;
          const T* ai = a.data().data() + i * m * k;
          const T* bi = b.data().data() + i * k * n;
          if (grads[0]) {  // dA = dC op(B)^T
            detail::gemm(gi, bi, grads[0]->data() + i * m * k, m, n, k, false, !transpose_b, true);
          }
          if (grads[1]) {
            if (transpose_b) {  // B is [n,k]: dB = dC^T A
              detail::gemm(gi, ai, grads[1]->data() + i * k * n, n, m, k, true, false, true);
            } else {  // dB = A^T dC
              detail::gemm(ai, gi, grads[1]->data() + i * k * n, k, m, n, true, false, true);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis);
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      T peak = xd[base];
      for (std::size_t l = 1; l < s.len; ++l) peak = std::max(peak, xd[base + l * s.inner]);
      T total = 0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const T e = std::exp(xd[base + l * s.inner] - peak);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) out[base + l * s.inner] /= total;
    }
  }
  Tensor<T> y(x.shape(), std::move(out));
  return make_result<T>(y, {&x}, [y, s](std::span<const T> g, std::span<std::vector<T>* const> grads) {
    auto yd = y.data();
    auto& gx = *grads[0];
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.len * s.inner + i;
        T dot = 0;
        for (std::size_t l = 0; l < s.len; ++l) {
          dot += g[base + l * s.inner] * yd[base + l * s.inner];
        }
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t j = base + l * s.inner;
          gx[j] += yd[j] * (g[j] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(xd[i] > T(0))) throw NumericError("log of a non-positive value");
    out[i] = std::log(xd[i]);
  }
  return make_result<T>(Tensor<T>(x.shape(), std::move(out)), {&x},
                        [x](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          auto xd = x.data();
                          for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] / xd[i];
                        });
}

template <typename T>
Tensor<T> clip(const Tensor<T>& x, T lo, T hi) {
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(xd[i], lo, hi);
  return make_result<T>(Tensor<T>(x.shape(), std::move(out)), {&x},
                        [x, lo, hi](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          auto xd = x.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (xd[i] >= lo && xd[i] <= hi) (*grads[0])[i] += g[i];
                          }
                        });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
  return make_result<T>(Tensor<T>(x.shape(), std::move(out)), {&x},
                        [x](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          auto xd = x.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (xd[i] > T(0)) (*grads[0])[i] += g[i];
                          }
                        });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = T(0.5) * xd[i] * (T(1) + std::erf(xd[i] * inv_sqrt2));
  }
  return make_result<T>(Tensor<T>(x.shape(), std::move(out)), {&x},
                        [x, inv_sqrt2](std::span<const T> g, std::span<std::vector<T>* const> grads) {
                          const T inv_sqrt_2pi =
                              static_cast<T>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
                          auto xd = x.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T v = xd[i];
                            const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
                            const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
                            (*grads[0])[i] += g[i] * (cdf + v * pdf);
                          }
                        });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: gamma/beta must be [" + std::to_string(d) + "], got " +
                     to_string(gamma.shape()) + " and " + to_string(beta.shape()));
  }
  const std::size_t rows = x.numel() / d;
  std::vector<T> normed(x.numel());
  std::vector<T> inv_std(rows);
  std::vector<T> out(x.numel());
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd.data() + r * d;
    T mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + eps);
    inv_std[r] = rstd;
    for (std::size_t i = 0; i < d; ++i) {
      const T h = (row[i] - mu) * rstd;
      normed[r * d + i] = h;
      out[r * d + i] = h * gd[i] + bd[i];
    }
  }
  return make_result<T>(
      Tensor<T>(x.shape(), std::move(out)), {&x, &gamma, &beta},
      [gamma, normed = std::move(normed), inv_std = std::move(inv_std), rows, d](
          std::span<const T> g, std::span<std::vector<T>* const> grads) {
        auto gd = gamma.data();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* h = normed.data() + r * d;
          const T* gr = g.data() + r * d;
          if (grads[1]) {
            for (std::size_t i = 0; i < d; ++i) (*grads[1])[i] += gr[i] * h[i];
          }
          if (grads[2]) {
            for (std::size_t i = 0; i < d; ++i) (*grads[2])[i] += gr[i];
          }
          if (grads[0]) {
            T mean_dh = 0;
            T mean_dh_h = 0;
            for (std::size_t i = 0; i < d; ++i) {
              const T dh = gr[i] * gd[i];
              mean_dh += dh;
              mean_dh_h += dh * h[i];
            }
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            T* gx = grads[0]->data() + r * d;
            for (std::size_t i = 0; i < d; ++i) {
              gx[i] += inv_std[r] * (gr[i] * gd[i] - mean_dh - h[i] * mean_dh_h);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> concat_last(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_last: no inputs");
  const Shape& first = parts.front().shape();
  const Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      throw ShapeError("concat_last: leading dims differ, " + to_string(first) + " vs " +
                       to_string(s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = parts.front().numel() / widths.front();
  std::vector<T> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto src = parts[k].data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  std::vector<const Tensor<T>*> inputs;
  for (const auto& p : parts) inputs.push_back(&p);
  return make_result<T>(
      Tensor<T>(std::move(out_shape), std::move(out)),
      std::span<const Tensor<T>* const>(inputs),
      [widths, rows, total](std::span<const T> g, std::span<std::vector<T>* const> grads) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          if (grads[k]) {
            T* dst = grads[k]->data();
            for (std::size_t r = 0; r < rows; ++r) {
              const T* src = g.data() + r * total + offset;
              for (std::size_t i = 0; i < widths[k]; ++i) dst[r * widths[k] + i] += src[i];
            }
          }
          offset += widths[k];
        }
      });
}

template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  const std::size_t width = x.shape().back();
  if (begin >= end || end > width) {
    throw ShapeError("slice_last: bad range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") for " + to_string(x.shape()));
  }
  const std::size_t rows = x.numel() / width;
  const std::size_t w = end - begin;
  std::vector<T> out(rows * w);
  auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xd.data() + r * width + begin, w, out.data() + r * w);
  }
  Shape out_shape = x.shape();
  out_shape.back() = w;
  return make_result<T>(Tensor<T>(std::move(out_shape), std::move(out)), {&x},
                        [rows, w, width, begin](std::span<const T> g,
                                                std::span<std::vector<T>* const> grads) {
                          T* dst = grads[0]->data();
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t i = 0; i < w; ++i) {
                              dst[r * width + begin + i] += g[r * w + i];
                            }
                          }
                        });
}

#define PLANTXVIT_INSTANTIATE_OPS(T)                                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                     \
  template Tensor<T> add_trailing(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> sum(const Tensor<T>&);                                          \
  template Tensor<T> mean(const Tensor<T>&);                                         \
  template Tensor<T> mean_axis(const Tensor<T>&, std::size_t);                       \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> batch_matmul(const Tensor<T>&, const Tensor<T>&, bool);         \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                         \
  template Tensor<T> log(const Tensor<T>&);                                          \
  template Tensor<T> clip(const Tensor<T>&, T, T);                                   \
  template Tensor<T> relu(const Tensor<T>&);                                         \
  template Tensor<T> gelu(const Tensor<T>&);                                         \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> concat_last(const std::vector<Tensor<T>>&);                     \
  template Tensor<T> slice_last(const Tensor<T>&, std::size_t, std::size_t);

PLANTXVIT_INSTANTIATE_OPS(float)
PLANTXVIT_INSTANTIATE_OPS(double)

}  // namespace plantxvit
