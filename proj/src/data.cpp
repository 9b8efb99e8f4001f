#include "plantxvit/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "plantxvit/error.hpp"
#include "plantxvit/random.hpp"

namespace plantxvit {

bool BlobRegion::contains(std::size_t y, std::size_t x) const {
  const double dy = static_cast<double>(y) + 0.5 - center_y;
  const double dx = static_cast<double>(x) + 0.5 - center_x;
  return dy * dy + dx * dx <= radius * radius;
}

std::vector<bool> BlobRegion::mask(std::size_t height, std::size_t width) const {
  std::vector<bool> m(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) m[y * width + x] = contains(y, x);
  }
  return m;
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
  std::vector<std::size_t> counts(classes.size());
  for (const auto& s : samples) {
    if (s.label < counts.size()) ++counts[s.label];
  }
  return counts;
}

void DatasetManifest::validate() const {
  for (const auto& s : samples) {
    if (s.label >= classes.size()) {
      throw DataError(s.source + ": label " + std::to_string(s.label) + " outside " +
                      std::to_string(classes.size()) + " classes");
    }
    if (s.pixels.shape() != samples.front().pixels.shape()) {
      throw DataError(s.source + ": image shape " + to_string(s.pixels.shape()) +
                      " differs from " + to_string(samples.front().pixels.shape()));
    }
  }
}

std::string DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["classes"] = classes;
  j["counts"] = class_counts();
  auto files = nlohmann::ordered_json::array();
  for (const auto& s : samples) files.push_back({{"source", s.source}, {"label", s.label}});
  j["samples"] = std::move(files);
  if (!warnings.empty()) j["warnings"] = warnings;
  return j.dump(2);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Netpbm

namespace {

struct NetpbmHeader {
  std::size_t width = 0, height = 0;
  std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != magic) {
    throw DataError("unsupported format: expected " + std::string(magic) + " magic");
  }
  std::size_t pos = 2;
  auto next_number = [&](const char* what) {
    while (pos < bytes.size()) {
      const unsigned char c = static_cast<unsigned char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(c)) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw DataError(std::string("malformed header: missing ") + what);
    }
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (value > (1u << 24)) throw DataError(std::string("malformed header: ") + what + " too large");
      ++pos;
    }
    return value;
  };
  NetpbmHeader h;
  h.width = next_number("width");
  h.height = next_number("height");
  const std::size_t maxval = next_number("maxval");
  if (h.width == 0 || h.height == 0) throw DataError("malformed header: zero image side");
  if (maxval != 255) throw DataError("unsupported maxval " + std::to_string(maxval) + " (need 255)");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DataError("malformed header: missing separator before pixel data");
  }
  h.data_offset = pos + 1;
  return h;
}

std::vector<float> unpack(std::string_view bytes, const NetpbmHeader& h, std::size_t channels) {
  const std::size_t n = h.width * h.height * channels;
  if (bytes.size() - h.data_offset < n) {
    throw DataError("truncated pixel data: need " + std::to_string(n) + " bytes, have " +
                    std::to_string(bytes.size() - h.data_offset));
  }
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = static_cast<float>(static_cast<unsigned char>(bytes[h.data_offset + i])) / 255.0f;
  }
  return v;
}

std::string pack(const Tensor<float>& image, std::string_view magic, std::size_t width,
                 std::size_t height) {
  std::string out = std::string(magic) + "\n" + std::to_string(width) + " " +
                    std::to_string(height) + "\n255\n";
  out.reserve(out.size() + image.numel());
  for (float v : image.data()) {
    const float c = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0f))));
  }
  return out;
}

}  // namespace

Tensor<float> decode_ppm(std::string_view bytes) {
  const NetpbmHeader h = parse_netpbm(bytes, "P6");
  return Tensor<float>({h.height, h.width, 3}, unpack(bytes, h, 3));
}

std::string encode_ppm(const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ShapeError("encode_ppm: expected [H,W,3], got " + to_string(image.shape()));
  }
  return pack(image, "P6", image.dim(1), image.dim(0));
}

Tensor<float> decode_pgm(std::string_view bytes) {
  const NetpbmHeader h = parse_netpbm(bytes, "P5");
  return Tensor<float>({h.height, h.width}, unpack(bytes, h, 1));
}

std::string encode_pgm(const Tensor<float>& image) {
  if (image.rank() != 2) throw ShapeError("encode_pgm: expected [H,W], got " + to_string(image.shape()));
  return pack(image, "P5", image.dim(1), image.dim(0));
}

// ---------------------------------------------------------------------------
// Resizing

Tensor<float> resize_bilinear(const Tensor<float>& image, std::size_t height, std::size_t width) {
  if (image.rank() != 3) {
    throw ShapeError("resize_bilinear: expected [H,W,C], got " + to_string(image.shape()));
  }
  if (height == 0 || width == 0) throw ShapeError("resize_bilinear: zero target size");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  if (h == height && w == width) return image.detach();

  auto source = [](std::size_t i, std::size_t out, std::size_t in) {
    if (out == 1 || in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
  };
  std::vector<float> out(height * width * c);
  const auto src = image.data();
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = source(y, height, h);
    const std::size_t y0 = std::min(static_cast<std::size_t>(sy), h - 1);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = source(x, width, w);
      const std::size_t x0 = std::min(static_cast<std::size_t>(sx), w - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t k = 0; k < c; ++k) {
        const double top = (1 - fx) * src[(y0 * w + x0) * c + k] + fx * src[(y0 * w + x1) * c + k];
        const double bottom =
            (1 - fx) * src[(y1 * w + x0) * c + k] + fx * src[(y1 * w + x1) * c + k];
        out[(y * width + x) * c + k] = static_cast<float>((1 - fy) * top + fy * bottom);
      }
    }
  }
  return Tensor<float>({height, width, c}, std::move(out));
}

// ---------------------------------------------------------------------------
// Datasets

DatasetManifest load_dataset(const std::filesystem::path& root, std::size_t image_size,
                             const LoadOptions& options) {
  namespace fs = std::filesystem;
  if (image_size == 0) throw ConfigError("image size must be positive");
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw DataError("dataset root " + root.string() + " is not a directory");

  DatasetManifest data;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (class_dirs.empty()) throw DataError("dataset root " + root.string() + " has no class directories");

  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    data.classes.push_back(class_dirs[label].filename().string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        Tensor<float> pixels = resize_bilinear(decode_ppm(read_file(file)), image_size, image_size);
        data.samples.push_back({std::move(pixels), label, file.string(), std::nullopt});
      } catch (const Error& e) {
        const std::string message = file.string() + ": " + e.what();
        if (!options.skip_corrupt) throw DataError(message);
        data.warnings.push_back(message);
      }
    }
  }
  if (data.samples.empty()) throw DataError("dataset root " + root.string() + " contains no images");
  return data;
}

DatasetManifest synth_dataset(const SynthSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
  if (spec.per_class == 0 || spec.image_size < 8) {
    throw ConfigError("synthetic dataset needs samples and images of at least 8x8");
  }
  static constexpr std::array<std::array<float, 3>, 8> kPalette{{{0.90f, 0.15f, 0.15f},
                                                                 {0.15f, 0.80f, 0.20f},
                                                                 {0.20f, 0.30f, 0.90f},
                                                                 {0.90f, 0.85f, 0.10f},
                                                                 {0.85f, 0.20f, 0.85f},
                                                                 {0.10f, 0.85f, 0.85f},
                                                                 {1.00f, 0.55f, 0.10f},
                                                                 {0.55f, 0.35f, 0.15f}}};
  const double size = static_cast<double>(spec.image_size);
  const std::size_t grid = static_cast<std::size_t>(std::ceil(std::sqrt(double(spec.classes))));
  const double radius = size / 6.4;
  const double jitter = size / 16.0;

  DatasetManifest data;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    data.classes.push_back("class_" + std::to_string(c));
    std::array<float, 3> color{};
    if (c < kPalette.size()) {
      color = kPalette[c];
    } else {
      Rng pick(derive_seed(spec.seed, "synth/color/" + std::to_string(c)));
      for (auto& v : color) v = static_cast<float>(pick.uniform(0.1, 1.0));
    }
    const double cell = size / static_cast<double>(grid);
    const double base_y = (static_cast<double>(c / grid) + 0.5) * cell;
    const double base_x = (static_cast<double>(c % grid) + 0.5) * cell;
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const std::string id = "synth/" + std::to_string(c) + "/" + std::to_string(i);
      Rng rng(derive_seed(spec.seed, id));
      const BlobRegion blob{base_y + rng.uniform(-jitter, jitter),
                            base_x + rng.uniform(-jitter, jitter), radius};
      std::vector<float> px(spec.image_size * spec.image_size * 3);
      for (std::size_t y = 0; y < spec.image_size; ++y) {
        for (std::size_t x = 0; x < spec.image_size; ++x) {
          const bool inside = blob.contains(y, x);
          for (std::size_t k = 0; k < 3; ++k) {
            const double noise = rng.uniform();
            const double v = inside ? color[k] + 0.1 * (noise - 0.5) : 0.3 + 0.3 * noise;
            px[(y * spec.image_size + x) * 3 + k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      }
      data.samples.push_back(
          {Tensor<float>({spec.image_size, spec.image_size, 3}, std::move(px)), c, id, blob});
    }
  }
  return data;
}

Tensor<float> stack_images(const DatasetManifest& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("empty batch");
  const Shape& shape = data.samples.at(indices[0]).pixels.shape();
  std::vector<float> out;
  out.reserve(indices.size() * checked_numel(shape));
  for (std::size_t i : indices) {
    const auto& px = data.samples.at(i).pixels;
    if (px.shape() != shape) throw DataError("mixed image shapes in batch");
    out.insert(out.end(), px.data().begin(), px.data().end());
  }
  Shape batch{indices.size()};
  batch.insert(batch.end(), shape.begin(), shape.end());
  return Tensor<float>(std::move(batch), std::move(out));
}

Tensor<float> one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  std::vector<float> out(labels.size() * classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw DataError("label " + std::to_string(labels[i]) + " out of range");
    out[i * classes + labels[i]] = 1.0f;
  }
  return Tensor<float>({labels.size(), classes}, std::move(out));
}

}  // namespace plantxvit
