#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plantxvit/tensor.hpp"

namespace plantxvit {

// Disc painted into a synthetic image, in pixel units (pixel centres sit at
// integer + 0.5).
struct BlobRegion {
  double center_y = 0, center_x = 0, radius = 0;

  bool contains(std::size_t y, std::size_t x) const;
  std::vector<bool> mask(std::size_t height, std::size_t width) const;
};

struct ImageSample {
  Tensor<float> pixels;  // [H,W,3] in [0,1]
  std::size_t label = 0;
  std::string source;  // file path or synthetic id
  std::optional<BlobRegion> blob;
};

struct DatasetManifest {
  std::vector<ImageSample> samples;
  std::vector<std::string> classes;
  std::vector<std::string> warnings;  // files skipped while loading

  std::size_t size() const { return samples.size(); }
  std::vector<std::size_t> class_counts() const;
  // Throws DataError on labels outside the class table or mixed image shapes.
  void validate() const;
  std::string to_json() const;
};

std::string read_file(const std::filesystem::path& path);  // throws DataError
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Binary PPM (P6, maxval 255) to [H,W,3] / 255.
Tensor<float> decode_ppm(std::string_view bytes);
// Values are clamped to [0,1] and rounded to 8 bits.
std::string encode_ppm(const Tensor<float>& image);

// Binary PGM (P5, maxval 255) to [H,W] / 255.
Tensor<float> decode_pgm(std::string_view bytes);
std::string encode_pgm(const Tensor<float>& image);  // [H,W], clamped to [0,1]

// Corner-aligned bilinear interpolation; same-size requests return a copy.
Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t height, std::size_t width);

struct LoadOptions {
  bool skip_corrupt = false;
};

// root/<class>/*.ppm, classes and files in lexicographic order, every image
// resized to image_size x image_size.
DatasetManifest load_dataset(const std::filesystem::path& root, std::size_t image_size,
                             const LoadOptions& options = {});

struct SynthSpec {
  std::size_t classes = 4;
  std::size_t per_class = 16;
  std::size_t image_size = 64;
  std::uint64_t seed = 7;
};

// Each class is a coloured disc at a class-specific position on a noisy
// background; positions are jittered per image. Samples are ordered by class.
DatasetManifest synth_dataset(const SynthSpec& spec);

// [B,H,W,3] batch of the selected samples.
Tensor<float> stack_images(const DatasetManifest& data, std::span<const std::size_t> indices);
Tensor<float> one_hot(std::span<const std::size_t> labels, std::size_t classes);

}  // namespace plantxvit
