#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "plantxvit/model.hpp"

namespace plantxvit {

struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;  // row-major, in [0, 1]
  std::string layer;
  std::size_t class_index = 0;
  double max_raw = 0;  // peak of the map before normalization

  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

// `image` is [H,W,3] or a batch of one. The class score is the pre-softmax
// logit. Throws Error for an unknown layer or class and ShapeError when the
// layer output is not a feature map.
Heatmap grad_cam(const ModelGraph& model, const Tensor<float>& image, std::size_t class_index,
                 std::string_view layer = kInceptionLayer);

std::string heatmap_to_pgm(const Heatmap& heatmap);  // P5, 8-bit
std::string heatmap_sidecar_json(const Heatmap& heatmap);

// Black-box classifier: [B,H,W,3] images to [B,C] probabilities.
using PredictFn = std::function<Tensor<float>(const Tensor<float>&)>;

struct LimeOptions {
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t n_samples = 512;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  double kernel_width = 0.25;
  double ridge = 1e-3;
  std::size_t batch_size = 64;
};

struct LimeExplanation {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t class_index = 0;
  std::vector<double> weights;  // segment id = row * cols + col
  double intercept = 0;
  std::vector<std::size_t> top_k;  // by descending weight
  double r2 = 0;

  std::string to_json() const;
};

struct SurrogateFit {
  std::vector<double> weights;
  double intercept = 0;
  double r2 = 0;  // weighted
};

// Ridge regression of `targets` on binary masks with locality weights
// exp(-D^2 / width^2), D being the fraction of switched-off segments. The
// intercept is not penalized.
SurrogateFit fit_lime_surrogate(const std::vector<std::vector<std::uint8_t>>& masks,
                                const std::vector<double>& targets, double kernel_width,
                                double ridge);

// Sample 0 keeps every segment; the rest switch each segment on with
// probability one half. Switched-off segments take the image's mean colour.
LimeExplanation lime_explain(const PredictFn& predict_fn, const Tensor<float>& image,
                             std::size_t class_index, const LimeOptions& options = {});

// Pixel rectangle [y0,y1) x [x0,x1) of one grid segment.
struct SegmentBounds {
  std::size_t y0, y1, x0, x1;
};
SegmentBounds segment_bounds(std::size_t height, std::size_t width, std::size_t rows,
                             std::size_t cols, std::size_t segment);

// Global-average-pool output for each image of an [N,H,W,3] batch.
Tensor<float> extract_embeddings(const ModelGraph& model, const Tensor<float>& images,
                                 std::size_t batch_size = 32);

}  // namespace plantxvit
