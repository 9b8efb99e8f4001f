#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>

#include "plantxvit/data.hpp"
#include "plantxvit/error.hpp"
#include "test_util.hpp"

using namespace plantxvit;
using plantxvit::testing::values;
namespace fs = std::filesystem;

namespace {

std::string ppm_bytes(std::size_t w, std::size_t h, const std::vector<unsigned char>& rgb) {
  std::string s = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  s.append(rgb.begin(), rgb.end());
  return s;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("plantxvit_test_data_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("decode_ppm") {
  CHECK(values(decode_ppm(ppm_bytes(1, 1, {255, 0, 0}))) == std::vector<float>{1, 0, 0});
  const auto two = decode_ppm(ppm_bytes(2, 1, {0, 0, 0, 255, 255, 255}));
  CHECK(two.shape() == Shape{1, 2, 3});
  CHECK(values(two) == std::vector<float>{0, 0, 0, 1, 1, 1});

  const auto commented = decode_ppm("P6\n# made by hand\n1 1\n# depth\n255\n\x80\x40\x20");
  CHECK(commented[0] == 128.0f / 255.0f);
  CHECK(commented[2] == 32.0f / 255.0f);

  try {
    decode_ppm("P5\n1 1\n255\n\x01");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("unsupported format") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_ppm(ppm_bytes(2, 2, {1, 2, 3})), DataError);
  CHECK_THROWS_AS(decode_ppm("P6\n1 1\n65535\n\x01\x02\x03\x04\x05\x06"), DataError);
  CHECK_THROWS_AS(decode_ppm("P6\n1\n"), DataError);
  CHECK_THROWS_AS(decode_ppm(""), DataError);
}

TEST_CASE("ppm and pgm round trip bitwise") {
  std::vector<unsigned char> rgb(5 * 3 * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<unsigned char>(i * 37 + 11);
  const std::string bytes = ppm_bytes(5, 3, rgb);
  CHECK(encode_ppm(decode_ppm(bytes)) == bytes);

  std::string gray = "P5\n3 2\n255\n";
  for (unsigned char c : {0, 17, 128, 200, 254, 255}) gray.push_back(static_cast<char>(c));
  CHECK(encode_pgm(decode_pgm(gray)) == gray);
  CHECK(decode_pgm(gray).shape() == Shape{2, 3});
}

TEST_CASE("resize_bilinear") {
  const auto img = testing::random_tensor<float>({5, 7, 3}, 1, 0.0, 1.0);
  const auto same = resize_bilinear(img, 5, 7);
  CHECK(std::memcmp(same.data().data(), img.data().data(), img.numel() * sizeof(float)) == 0);

  const Tensor<float> small({2, 2, 1}, {0.1f, 0.7f, 0.4f, 0.9f});
  const auto big = resize_bilinear(small, 4, 4);
  CHECK(big[0] == 0.1f);
  CHECK(big[3] == 0.7f);
  CHECK(big[12] == 0.4f);
  CHECK(big[15] == 0.9f);
  // Corner-aligned: row 0, column 1 lies a third of the way from 0.1 to 0.7.
  CHECK(big[1] == doctest::Approx(0.3).epsilon(1e-6));

  const auto flat = resize_bilinear(Tensor<float>({3, 4, 3}, Fill::constant(0.25)), 9, 2);
  for (float v : flat.data()) CHECK(v == doctest::Approx(0.25f));
  const auto out = resize_bilinear(img, 11, 4);
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  for (float v : out.data()) {
    CHECK(v >= *lo);
    CHECK(v <= *hi);
  }
  CHECK(resize_bilinear(img, 1, 1).shape() == Shape{1, 1, 3});
  CHECK_THROWS_AS(resize_bilinear(img, 0, 3), ShapeError);
}

TEST_CASE("load_dataset") {
  TempDir dir("tree");
  for (const char* cls : {"scab", "healthy", "rust", "multiple"}) {
    fs::create_directory(dir.path / cls);
    for (int i = 0; i < 3; ++i) {
      std::vector<unsigned char> rgb(4 * 4 * 3, static_cast<unsigned char>(40 * i));
      write_file(dir.path / cls / ("img" + std::to_string(i) + ".ppm"), ppm_bytes(4, 4, rgb));
    }
  }
  write_file(dir.path / "healthy" / "notes.txt", "ignored");

  const auto data = load_dataset(dir.path, 8);
  CHECK(data.size() == 12);
  CHECK(data.classes == std::vector<std::string>{"healthy", "multiple", "rust", "scab"});
  CHECK(data.class_counts() == std::vector<std::size_t>{3, 3, 3, 3});
  CHECK(data.samples.front().label == 0);
  CHECK(data.samples.front().pixels.shape() == Shape{8, 8, 3});
  CHECK(fs::path(data.samples[1].source).filename() == "img1.ppm");
  CHECK(load_dataset(dir.path, 8).to_json() == data.to_json());

  write_file(dir.path / "rust" / "img1.ppm", "P6\n4 4\n255\nshort");
  CHECK_THROWS_AS(load_dataset(dir.path, 8), DataError);
  const auto skipped = load_dataset(dir.path, 8, {.skip_corrupt = true});
  CHECK(skipped.size() == 11);
  REQUIRE(skipped.warnings.size() == 1);
  CHECK(skipped.warnings[0].find("img1.ppm") != std::string::npos);

  TempDir empty("empty");
  CHECK_THROWS_AS(load_dataset(empty.path, 8), DataError);
  CHECK_THROWS_AS(load_dataset(empty.path / "absent", 8), DataError);
}

TEST_CASE("synth_dataset") {
  const auto data = synth_dataset({4, 16, 64, 7});
  CHECK(data.size() == 64);
  CHECK(data.class_counts() == std::vector<std::size_t>{16, 16, 16, 16});
  data.validate();
  for (const auto& s : data.samples) {
    REQUIRE(s.blob.has_value());
    CHECK(s.pixels.shape() == Shape{64, 64, 3});
    CHECK(std::all_of(s.pixels.data().begin(), s.pixels.data().end(),
                      [](float v) { return v >= 0.0f && v <= 1.0f; }));
    const auto mask = s.blob->mask(64, 64);
    CHECK(std::count(mask.begin(), mask.end(), true) > 200);
  }

  const auto again = synth_dataset({4, 16, 64, 7});
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(std::memcmp(data.samples[i].pixels.data().data(), again.samples[i].pixels.data().data(),
                      64 * 64 * 3 * sizeof(float)) == 0);
  }
  const auto other = synth_dataset({4, 16, 64, 8});
  CHECK(values(other.samples[0].pixels) != values(data.samples[0].pixels));

  // Class blobs sit in distinct quadrants.
  CHECK(data.samples[0].blob->center_y < 32);
  CHECK(data.samples[0].blob->center_x < 32);
  CHECK(data.samples[63].blob->center_y > 32);
  CHECK(data.samples[63].blob->center_x > 32);

  CHECK(synth_dataset({9, 2, 32, 1}).classes.size() == 9);
  CHECK_THROWS_AS(synth_dataset({1, 4, 32, 1}), ConfigError);
}

TEST_CASE("batches") {
  const auto data = synth_dataset({3, 2, 16, 1});
  const std::vector<std::size_t> idx{4, 1};
  const auto batch = stack_images(data, idx);
  CHECK(batch.shape() == Shape{2, 16, 16, 3});
  CHECK(batch[0] == data.samples[4].pixels[0]);
  CHECK(batch[16 * 16 * 3] == data.samples[1].pixels[0]);

  const std::vector<std::size_t> labels{2, 0};
  CHECK(values(one_hot(labels, 3)) == std::vector<float>{0, 0, 1, 1, 0, 0});
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(one_hot(bad, 3), DataError);
}
