#pragma once

// Oracles and surrogate models shared by the unit tests and the acceptance run.

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "plantxvit/explain.hpp"
#include "plantxvit/metrics.hpp"
#include "plantxvit/layers.hpp"
#include "plantxvit/model.hpp"

namespace plantxvit::testing {

struct MetricOracle {
  double accuracy, precision, recall, f1, f1_mean, kappa;
};

// Counts each quantity straight from the label lists, macro averaged.
inline MetricOracle brute_force_metrics(const std::vector<std::size_t>& truth,
                                        const std::vector<std::size_t>& pred,
                                        std::size_t classes) {
  const double n = static_cast<double>(truth.size());
  double correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  double p_sum = 0, r_sum = 0, f_sum = 0, chance = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    double tp = 0, fp = 0, fn = 0, t = 0, p = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      fp += truth[i] != c && pred[i] == c;
      fn += truth[i] == c && pred[i] != c;
      t += truth[i] == c;
      p += pred[i] == c;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0;
    p_sum += prec;
    r_sum += rec;
    f_sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
    chance += (t / n) * (p / n);
  }
  const double k = static_cast<double>(classes);
  MetricOracle o{correct / n, p_sum / k, r_sum / k, 0, f_sum / k, 0};
  o.f1 = o.precision + o.recall > 0 ? 2 * o.precision * o.recall / (o.precision + o.recall) : 0;
  o.kappa = chance < 1 ? (o.accuracy - chance) / (1 - chance) : 0;
  return o;
}

// Fraction of positive/negative pairs ordered correctly, ties counting one half.
inline double mann_whitney(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (!positive[i] || positive[j]) continue;
      pairs += 1;
      wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

inline RocCurve binary_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::unique_ptr<bool[]> flags(new bool[labels.size()]);
  for (std::size_t i = 0; i < labels.size(); ++i) flags[i] = labels[i];
  return roc_curve(scores, std::span<const bool>(flags.get(), labels.size()));
}

// 1x1 convolution with ReLU followed by 2x2 pooling.
class FeatureLayer final : public Layer {
 public:
  explicit FeatureLayer(std::size_t channels) : Layer("features"), channels_(channels) {}
  std::string kind() const override { return "Features"; }
  Shape output_shape(const Shape& in) const override { return {in[0] / 2, in[1] / 2, channels_}; }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    return {{"kernel", {1, 1, in[2], channels_}, Init::kHeUniform, in[2]},
            {"bias", {channels_}, Init::kZeros, 0}};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    return maxpool2d(relu(conv2d(x, Conv2DParams<float>{param(p, "kernel"), param(p, "bias")})));
  }

 private:
  std::size_t channels_;
};

// Logit 0 is the spatial mean of channel 0 and logit 1 its negation.
class ChannelScoreLayer final : public Layer {
 public:
  ChannelScoreLayer() : Layer("score") {}
  std::string kind() const override { return "ChannelScore"; }
  Shape output_shape(const Shape&) const override { return {2}; }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore&) const override {
    const Shape& s = x.shape();
    const auto channel = reshape(slice_last(x, 0, 1), {s[0], s[1] * s[2]});
    const auto m = reshape(mean_axis(channel, 1), {s[0], 1});
    return concat_last(std::vector{m, scale(m, -1.0f)});
  }
};

inline ModelGraph channel_surrogate(std::size_t size, std::uint64_t seed) {
  return ModelGraph({size, size, 3},
                    {std::make_shared<FeatureLayer>(6), std::make_shared<ChannelScoreLayer>()},
                    seed);
}

inline double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  return dot / std::sqrt(na * nb);
}

// Probability 1 for class 0 exactly when the pixel probed inside `segment`
// still holds its original value.
inline PredictFn planted_segment_oracle(const Tensor<float>& image, std::size_t rows,
                                        std::size_t cols, std::size_t segment) {
  const std::size_t h = image.dim(0), w = image.dim(1);
  const auto b = segment_bounds(h, w, rows, cols, segment);
  const std::size_t probe = (b.y0 * w + b.x0) * 3;
  const float original = image[probe];
  return [=](const Tensor<float>& batch) {
    const std::size_t n = batch.dim(0);
    std::vector<float> out(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      const float on = batch[i * h * w * 3 + probe] == original ? 1.0f : 0.0f;
      out[i * 2] = on;
      out[i * 2 + 1] = 1.0f - on;
    }
    return Tensor<float>({n, 2}, std::move(out));
  };
}

}  // namespace plantxvit::testing
