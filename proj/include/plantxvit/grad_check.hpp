#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "plantxvit/ops.hpp"
#include "plantxvit/random.hpp"
#include "plantxvit/tensor.hpp"

namespace plantxvit {

enum class Precision { kFloat32, kFloat64 };

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
};

inline constexpr double kGradCheckStep = 1e-4;

// Compares tape gradients of `op` against five-point central differences
// computed in 64-bit arithmetic. `op` must be callable with both std::vector<Tensor<float>>
// and std::vector<Tensor<double>> (a generic lambda), returning a tensor of
// any shape; the output is reduced to a scalar through a fixed random
// projection. The error per element is |a - n| / max(|a|, |n|, 1e-8).
template <typename Op>
GradCheckReport grad_check(Op&& op, const std::vector<Tensor<double>>& inputs, double eps = kGradCheckStep,
                           Precision analytic = Precision::kFloat64,
                           std::uint64_t projection_seed = 0x5eed) {
  const Tensor<double> reference = op(inputs);
  const Tensor<double> weights(reference.shape(),
                               Fill::uniform(-1.0, 1.0, projection_seed));
  auto projected = [&](const Tensor<double>& out) {
    double total = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) total += out[i] * weights[i];
    return total;
  };

  std::vector<std::vector<double>> analytic_grads;
  auto run_tape = [&]<typename T>(T) {
    Tape<T> tape;
    std::vector<Tensor<T>> tracked;
    for (const auto& in : inputs) tracked.push_back(tape.watch(in.template cast<T>()));
    const Tensor<T> out = op(tracked);
    Tensor<T> root;
    {
      // sum(out * w) via the tape's own ops keeps this independent of op internals.
      std::vector<T> w(weights.numel());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(weights[i]);
      const Tensor<T> wt(out.shape(), std::move(w));
      root = sum(mul(out, wt));
    }
    const Gradients<T> grads = tape.backward(root);
    for (const auto& t : tracked) {
      const Tensor<T> g = grads.of(t);
      analytic_grads.emplace_back(g.data().begin(), g.data().end());
    }
  };
  if (analytic == Precision::kFloat32) {
    run_tape(float{});
  } else {
    run_tape(double{});
  }

  GradCheckReport report;
  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> values(inputs[k].data().begin(), inputs[k].data().end());
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double original = values[j];
      auto at = [&](double offset) {
        values[j] = original + offset;
        probe[k] = Tensor<double>(inputs[k].shape(), values);
        return projected(op(probe));
      };
      double numeric =
          (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
      // A kink (ReLU, max) inside the wide stencil shows up as disagreement
      // with a narrow central difference; the narrow one is then used.
      const double narrow = (at(eps * 1e-2) - at(-eps * 1e-2)) / (2e-2 * eps);
      if (std::abs(numeric - narrow) > 1e-4 * std::max({std::abs(numeric), std::abs(narrow), 1e-6})) {
        numeric = narrow;
      }
      values[j] = original;
      const double a = analytic_grads[k][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_input = k;
        report.worst_element = j;
      }
    }
    probe[k] = inputs[k];
  }
  return report;
}

}  // namespace plantxvit
