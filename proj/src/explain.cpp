#include "plantxvit/explain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "plantxvit/data.hpp"
#include "plantxvit/error.hpp"
#include "plantxvit/ops.hpp"
#include "plantxvit/random.hpp"

namespace plantxvit {

namespace {

Tensor<float> as_batch_of_one(const ModelGraph& model, const Tensor<float>& image) {
  Shape want{1};
  want.insert(want.end(), model.input_shape().begin(), model.input_shape().end());
  if (image.shape() == model.input_shape()) return reshape(image, want);
  if (image.shape() == want) return image;
  throw ShapeError("image " + to_string(image.shape()) + " does not match model input " +
                   to_string(model.input_shape()));
}

}  // namespace

Heatmap grad_cam(const ModelGraph& model, const Tensor<float>& image, std::size_t class_index,
                 std::string_view layer) {
  const std::size_t idx = model.layer_index(layer);
  const Shape& map_shape = model.layer_output_shape(idx);
  if (map_shape.size() != 3) {
    throw ShapeError("grad_cam: layer '" + std::string(layer) + "' output " +
                     to_string(map_shape) + " is not a 2-D feature map");
  }
  const std::size_t classes = model.output_shape().back();
  if (class_index >= classes) {
    throw Error("grad_cam: class " + std::to_string(class_index) + " out of range for " +
                std::to_string(classes) + " classes");
  }
  const Tensor<float> x = as_batch_of_one(model, image);
  const auto& params = model.params();

  const Tensor<float> features = model.forward(x, params, 0, idx + 1);
  Tape<float> tape;
  const Tensor<float> watched = tape.watch(features);
  const Tensor<float> logits = model.forward(watched, params, idx + 1);
  const Tensor<float> score = sum(slice_last(logits, class_index, class_index + 1));
  const Tensor<float> grad = tape.backward(score).of(watched);

  const std::size_t h = map_shape[0], w = map_shape[1], k = map_shape[2];
  const auto a = features.data();
  const auto g = grad.data();
  std::vector<double> channel_weight(k, 0.0);
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t c = 0; c < k; ++c) channel_weight[c] += g[p * k + c];
  }
  for (double& v : channel_weight) v /= static_cast<double>(h * w);

  std::vector<float> cam(h * w);
  double max_raw = 0;
  for (std::size_t p = 0; p < h * w; ++p) {
    double v = 0;
    for (std::size_t c = 0; c < k; ++c) v += channel_weight[c] * a[p * k + c];
    v = std::max(v, 0.0);
    max_raw = std::max(max_raw, v);
    cam[p] = static_cast<float>(v);
  }

  const std::size_t out_h = model.input_shape()[0], out_w = model.input_shape()[1];
  const Tensor<float> upsampled = resize_bilinear(Tensor<float>({h, w, 1}, cam), out_h, out_w);
  Heatmap heat{out_h, out_w, std::vector<float>(upsampled.data().begin(), upsampled.data().end()),
               std::string(layer), class_index, max_raw};
  const float peak = *std::max_element(heat.values.begin(), heat.values.end());
  if (peak > 0) {
    for (float& v : heat.values) v = std::clamp(v / peak, 0.0f, 1.0f);
  } else {
    std::fill(heat.values.begin(), heat.values.end(), 0.0f);
  }
  return heat;
}

std::string heatmap_to_pgm(const Heatmap& heatmap) {
  Tensor<float> gray({heatmap.height, heatmap.width}, heatmap.values);
  return encode_pgm(gray);
}

std::string heatmap_sidecar_json(const Heatmap& heatmap) {
  nlohmann::ordered_json j;
  j["layer"] = heatmap.layer;
  j["class"] = heatmap.class_index;
  j["height"] = heatmap.height;
  j["width"] = heatmap.width;
  j["max_raw"] = heatmap.max_raw;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// LIME

std::string LimeExplanation::to_json() const {
  nlohmann::ordered_json j;
  j["grid"] = {{"rows", rows}, {"cols", cols}};
  j["class"] = class_index;
  j["weights"] = weights;
  j["intercept"] = intercept;
  j["top_k"] = top_k;
  j["r2"] = r2;
  return j.dump(2);
}

SurrogateFit fit_lime_surrogate(const std::vector<std::vector<std::uint8_t>>& masks,
                                const std::vector<double>& targets, double kernel_width,
                                double ridge) {
  if (masks.empty() || masks.size() != targets.size()) {
    throw Error("fit_lime_surrogate: need one target per mask");
  }
  if (!(kernel_width > 0) || ridge < 0) {
    throw ConfigError("fit_lime_surrogate: kernel width must be positive and ridge non-negative");
  }
  const std::size_t n = masks.size(), d = masks[0].size();
  Eigen::MatrixXd x(n, d + 1);
  Eigen::VectorXd y(n), sw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (masks[i].size() != d) throw Error("fit_lime_surrogate: masks differ in length");
    std::size_t off = 0;
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j + 1) = masks[i][j] ? 1.0 : 0.0;
      off += masks[i][j] ? 0 : 1;
    }
    const double dist = d ? static_cast<double>(off) / static_cast<double>(d) : 0.0;
    sw(i) = std::exp(-dist * dist / (kernel_width * kernel_width));
    y(i) = targets[i];
  }
  Eigen::MatrixXd a = x.transpose() * sw.asDiagonal() * x;
  a.diagonal().tail(d).array() += ridge;
  const Eigen::VectorXd b = x.transpose() * sw.asDiagonal() * y;
  const Eigen::VectorXd beta = a.ldlt().solve(b);

  const Eigen::VectorXd fitted = x * beta;
  const double mean = sw.dot(y) / sw.sum();
  const double ss_res = (sw.array() * (y - fitted).array().square()).sum();
  const double ss_tot = (sw.array() * (y.array() - mean).square()).sum();

  SurrogateFit fit;
  fit.intercept = beta(0);
  fit.weights.assign(beta.data() + 1, beta.data() + 1 + d);
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

SegmentBounds segment_bounds(std::size_t height, std::size_t width, std::size_t rows,
                             std::size_t cols, std::size_t segment) {
  const std::size_t r = segment / cols, c = segment % cols;
  return {r * height / rows, (r + 1) * height / rows, c * width / cols, (c + 1) * width / cols};
}

LimeExplanation lime_explain(const PredictFn& predict_fn, const Tensor<float>& image,
                             std::size_t class_index, const LimeOptions& options) {
  const Shape& s = image.shape();
  if (s.size() != 3 || s[2] != 3) {
    throw ShapeError("lime_explain: expected an [H,W,3] image, got " + to_string(s));
  }
  const std::size_t height = s[0], width = s[1];
  const std::size_t rows = options.rows, cols = options.cols;
  if (rows == 0 || cols == 0 || rows > height || cols > width) {
    throw ConfigError("lime_explain: grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " does not fit a " + std::to_string(height) + "x" +
                      std::to_string(width) + " image");
  }
  const std::size_t segments = rows * cols;
  if (options.n_samples < segments + 1) {
    throw ConfigError("lime_explain: n_samples must be at least " +
                      std::to_string(segments + 1) + " for " + std::to_string(segments) +
                      " segments");
  }
  if (options.batch_size == 0) throw ConfigError("lime_explain: batch_size must be positive");

  std::vector<std::vector<std::uint8_t>> masks(options.n_samples,
                                               std::vector<std::uint8_t>(segments, 1));
  Rng rng(derive_seed(options.seed, "lime"));
  for (std::size_t i = 1; i < masks.size(); ++i) {
    for (auto& m : masks[i]) m = rng.coin() ? 1 : 0;
  }

  const auto pixels = image.data();
  float fill[3] = {0, 0, 0};
  {
    double acc[3] = {0, 0, 0};
    for (std::size_t p = 0; p < height * width; ++p) {
      for (std::size_t ch = 0; ch < 3; ++ch) acc[ch] += pixels[p * 3 + ch];
    }
    for (std::size_t ch = 0; ch < 3; ++ch) {
      fill[ch] = static_cast<float>(acc[ch] / static_cast<double>(height * width));
    }
  }
  std::vector<std::size_t> segment_of(height * width);
  for (std::size_t id = 0; id < segments; ++id) {
    const auto b = segment_bounds(height, width, rows, cols, id);
    for (std::size_t y = b.y0; y < b.y1; ++y) {
      for (std::size_t x = b.x0; x < b.x1; ++x) segment_of[y * width + x] = id;
    }
  }

  std::vector<double> targets(options.n_samples);
  const std::size_t image_size = height * width * 3;
  for (std::size_t start = 0; start < options.n_samples; start += options.batch_size) {
    const std::size_t count = std::min(options.batch_size, options.n_samples - start);
    std::vector<float> batch(count * image_size);
    for (std::size_t b = 0; b < count; ++b) {
      const auto& mask = masks[start + b];
      float* out = batch.data() + b * image_size;
      for (std::size_t p = 0; p < height * width; ++p) {
        const bool keep = mask[segment_of[p]] != 0;
        for (std::size_t ch = 0; ch < 3; ++ch) out[p * 3 + ch] = keep ? pixels[p * 3 + ch] : fill[ch];
      }
    }
    const Tensor<float> probs = predict_fn(Tensor<float>({count, height, width, 3}, std::move(batch)));
    if (probs.shape().size() != 2 || probs.shape()[0] != count ||
        probs.shape()[1] <= class_index) {
      throw ShapeError("lime_explain: classifier returned " + to_string(probs.shape()) +
                       " for a batch of " + std::to_string(count) + " (class " +
                       std::to_string(class_index) + ")");
    }
    const std::size_t classes = probs.shape()[1];
    for (std::size_t b = 0; b < count; ++b) {
      targets[start + b] = probs[b * classes + class_index];
    }
  }

  const SurrogateFit fit =
      fit_lime_surrogate(masks, targets, options.kernel_width, options.ridge);
  LimeExplanation out{rows, cols, class_index, fit.weights, fit.intercept, {}, fit.r2};
  std::vector<std::size_t> order(segments);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.weights[a] > out.weights[b]; });
  order.resize(std::min(options.top_k, segments));
  out.top_k = std::move(order);
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

Tensor<float> extract_embeddings(const ModelGraph& model, const Tensor<float>& images,
                                 std::size_t batch_size) {
  const Shape& s = images.shape();
  const Shape& in = model.input_shape();
  if (s.size() != in.size() + 1 || !std::equal(in.begin(), in.end(), s.begin() + 1)) {
    throw ShapeError("extract_embeddings: images " + to_string(s) + " do not match model input " +
                     to_string(in));
  }
  if (batch_size == 0) throw ConfigError("extract_embeddings: batch_size must be positive");
  const std::size_t end = model.layer_index(kPoolingLayer) + 1;
  const std::size_t width = model.layer_output_shape(end - 1).back();
  const std::size_t n = s[0], per_image = images.numel() / std::max<std::size_t>(n, 1);

  std::vector<float> rows;
  rows.reserve(n * width);
  const auto all = images.data();
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t count = std::min(batch_size, n - start);
    Shape shape = s;
    shape[0] = count;
    Tensor<float> chunk(shape, std::vector<float>(all.begin() + start * per_image,
                                                  all.begin() + (start + count) * per_image));
    const Tensor<float> pooled = model.forward(chunk, model.params(), 0, end);
    rows.insert(rows.end(), pooled.data().begin(), pooled.data().end());
  }
  return Tensor<float>({n, width}, std::move(rows));
}

}  // namespace plantxvit
