#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "plantxvit/error.hpp"
#include "plantxvit/model.hpp"
#include "test_util.hpp"

using namespace plantxvit;
using plantxvit::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

PlantXViTConfig small_config(std::size_t classes = 3) {
  PlantXViTConfig c;
  c.input_size = 32;
  c.num_classes = classes;
  c.patch_size = 3;
  c.seed = 11;
  return c;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("plantxvit_test_model_" + name);
}

bool bit_equal(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("canonical parameter table") {
  const ModelGraph model = build_model(PlantXViTConfig{});
  const ParamTable table = count_params(model);

  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"block1_conv1", 1792},   {"block1_conv2", 36928},  {"block2_conv1", 73856},
      {"block2_conv2", 147584}, {"patch_encoder", 206752}, {"transformer_1", 5440},
      {"transformer_2", 5440},  {"transformer_3", 5440},  {"transformer_4", 5440},
      {"final_norm", 32},       {"output", 68}};
  for (const auto& [layer, count] : expected) {
    const auto row = std::find_if(table.rows.begin(), table.rows.end(),
                                  [&](const ParamRow& r) { return r.layer == layer; });
    REQUIRE(row != table.rows.end());
    CHECK(row->params == count);
    CHECK(row->reference == count);
  }
  CHECK(table.fixed_total == 488772);
  CHECK(table.total == 488772 + 176864);
  CHECK(table.total == model.params().total_elements());
  CHECK(table.reference_total == std::optional<std::size_t>(850500));

  std::size_t summed = 0;
  for (const auto& r : table.rows) summed += r.params;
  CHECK(summed == table.total);

  const auto shape_of = [&](const char* name) {
    return model.layer_output_shape(model.layer_index(name));
  };
  CHECK(shape_of("block1_conv1") == Shape{224, 224, 64});
  CHECK(shape_of("block1_pool") == Shape{112, 112, 64});
  CHECK(shape_of("block2_conv2") == Shape{112, 112, 128});
  CHECK(shape_of("block2_pool") == Shape{56, 56, 128});
  CHECK(shape_of("inception") == Shape{56, 56, 512});
  CHECK(shape_of("patch_encoder") == Shape{121, 16});
  CHECK(shape_of("transformer_4") == Shape{121, 16});
  CHECK(shape_of("gap") == Shape{16});
  CHECK(model.output_shape() == Shape{4});
}

TEST_CASE("matched inception widths reach the reference total") {
  PlantXViTConfig cfg;
  cfg.inception = InceptionConfig::reference_matched();
  const ParamTable table = count_params(build_model(cfg));
  CHECK(table.total == 850500);
  CHECK(table.fixed_total == 488772);
}

TEST_CASE("other geometries") {
  PlantXViTConfig cfg;
  cfg.input_size = 64;
  cfg.num_classes = 3;
  const ModelGraph model = build_model(cfg);
  CHECK(model.layer_output_shape(model.layer_index("block2_pool")) == Shape{16, 16, 128});
  CHECK(model.layer_output_shape(model.layer_index("patch_encoder")) == Shape{9, 16});
  CHECK(model.output_shape() == Shape{3});
  CHECK_FALSE(count_params(model).reference_total.has_value());

  cfg.input_size = 224;
  cfg.num_classes = 38;
  const ParamTable wide = count_params(build_model(cfg));
  CHECK(wide.rows.back().params == 646);

  PlantXViTConfig bad;
  bad.input_size = 225;
  CHECK_THROWS_AS(build_model(bad), ConfigError);
  bad = PlantXViTConfig{};
  bad.patch_size = 4;
  CHECK_THROWS_AS(build_model(bad), ConfigError);
  bad = PlantXViTConfig{};
  bad.input_size = 8;
  bad.patch_size = 3;
  CHECK_THROWS_AS(build_model(bad), ConfigError);
  bad = PlantXViTConfig{};
  bad.inception.pool_proj = 1;
  CHECK_THROWS_AS(build_model(bad), ConfigError);
}

TEST_CASE("build_model is deterministic and seed dependent") {
  auto a = build_model(small_config());
  auto b = build_model(small_config());
  CHECK(a.params() == b.params());
  auto other = small_config();
  other.seed = 12;
  CHECK_FALSE(a.params() == build_model(other).params());

  const auto& pos = a.params().at("patch_encoder/position_embedding");
  double sq = 0;
  for (float v : pos.data()) sq += double(v) * v;
  CHECK(std::sqrt(sq / pos.numel()) < 0.05);
  for (float v : a.params().at("transformer_1/norm1/gamma").data()) CHECK(v == 1.0f);
  for (float v : a.params().at("block1_conv1/bias").data()) CHECK(v == 0.0f);
  const float bound = std::sqrt(6.0f / 27.0f);
  for (float v : a.params().at("block1_conv1/kernel").data()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("predict") {
  const ModelGraph model = build_model(small_config());
  const auto one = random_tensor<float>({1, 32, 32, 3}, 3, 0.0, 1.0);
  std::vector<float> two = testing::values(one);
  two.insert(two.end(), one.data().begin(), one.data().end());
  const auto probs = predict(model, Tensor<float>({2, 32, 32, 3}, two));
  REQUIRE(probs.shape() == Shape{2, 3});
  for (std::size_t r = 0; r < 2; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(probs[r * 3 + c] >= 0.0f);
      total += probs[r * 3 + c];
    }
    CHECK(std::abs(total - 1.0) < 1e-5);
  }
  for (std::size_t c = 0; c < 3; ++c) CHECK(probs[c] == probs[3 + c]);

  CHECK_THROWS_AS(predict(model, Tensor<float>({1, 16, 16, 3})), ShapeError);
  CHECK_THROWS_AS(predict(model, Tensor<float>({32, 32, 3})), ShapeError);
}

TEST_CASE("count_flops") {
  const ModelGraph model = build_model(PlantXViTConfig{});
  const auto first = model.layer_index("block1_conv1");
  CHECK(model.layer(first).flops(model.layer_input_shape(first)) == 173408256.0);
  const auto out = model.layer_index("output");
  CHECK(model.layer(out).flops(model.layer_input_shape(out)) == 128.0);
  const double total = count_flops(model);
  CHECK(total > 5e9);
  CHECK(total < 2e10);
}

TEST_CASE("checkpoint round trip") {
  const auto cfg = small_config();
  const ModelGraph model = build_model(cfg);
  const auto path = temp_path("roundtrip.pxvt");
  save_checkpoint(model, path);
  CHECK(fs::file_size(path) == checkpoint_size(model.params()));

  std::size_t header = 12;
  for (const auto& [name, t] : model.params().entries()) header += 2 + name.size() + 2 + 8 * t.rank();
  CHECK(fs::file_size(path) == model.params().total_elements() * 4 + header);

  const ModelGraph loaded = load_checkpoint(path, cfg);
  CHECK(loaded.params() == model.params());
  const auto x = random_tensor<float>({2, 32, 32, 3}, 5, 0.0, 1.0);
  CHECK(bit_equal(predict(loaded, x), predict(model, x)));

  auto wrong = cfg;
  wrong.num_classes = 5;
  CHECK_THROWS_AS(load_checkpoint(path, wrong), ShapeError);
  auto deeper = cfg;
  deeper.transformer_depth = 5;
  CHECK_THROWS_AS(load_checkpoint(path, deeper), DataError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.pxvt"), cfg), DataError);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto truncated = temp_path("truncated.pxvt");
  std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  CHECK_THROWS_AS(load_checkpoint(truncated, cfg), DataError);
  const auto bad_magic = temp_path("magic.pxvt");
  std::ofstream(bad_magic, std::ios::binary) << "PXVX" + bytes.substr(4);
  CHECK_THROWS_AS(load_checkpoint(bad_magic, cfg), DataError);
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  const auto versioned = temp_path("version.pxvt");
  std::ofstream(versioned, std::ios::binary) << wrong_version;
  CHECK_THROWS_AS(load_checkpoint(versioned, cfg), DataError);

  for (const auto& p : {path, truncated, bad_magic, versioned}) fs::remove(p);
}

TEST_CASE("partial checkpoint load by prefix") {
  auto donor_cfg = small_config();
  donor_cfg.seed = 99;
  const ModelGraph donor = build_model(donor_cfg);
  const auto path = temp_path("donor.pxvt");
  save_checkpoint(donor, path);

  ModelGraph fresh = build_model(small_config());
  CHECK(load_checkpoint_prefix(fresh, path, "block") == 8);
  for (const auto& [name, t] : fresh.params().entries()) {
    if (name.rfind("block", 0) == 0) {
      CHECK(bit_equal(t, donor.params().at(name)));
    } else {
      CHECK(bit_equal(t, fresh.initial_value(name)));
    }
  }

  // A failed partial load leaves the model untouched.
  auto other_cfg = small_config(5);
  ModelGraph other = build_model(other_cfg);
  const ParamStore before = other.params();
  CHECK_THROWS_AS(load_checkpoint_prefix(other, path, ""), ShapeError);
  CHECK(other.params() == before);
  fs::remove(path);
}
