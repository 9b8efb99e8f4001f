#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "plantxvit/layers.hpp"
#include "plantxvit/tensor.hpp"

namespace plantxvit {

struct PlantXViTConfig {
  std::size_t input_size = 224;
  std::size_t num_classes = 4;
  std::size_t patch_size = 5;
  InceptionConfig inception;
  std::size_t transformer_depth = 4;
  std::size_t embed_dim = 16;
  std::size_t heads = 4;
  std::size_t key_dim = 16;
  std::size_t mlp_hidden = 32;
  std::uint64_t seed = 0;

  // Side of the feature map entering the patch stage (two 2x2 pools).
  std::size_t feature_size() const { return input_size / 4; }
  std::size_t patch_grid() const { return patch_size ? feature_size() / patch_size : 0; }
  std::size_t num_patches() const { return patch_grid() * patch_grid(); }

  // 224x224x3 input, four classes, 5x5 patches, four blocks of width 16.
  bool is_canonical_geometry() const;

  // Throws ConfigError.
  void validate() const;

  bool operator==(const PlantXViTConfig&) const = default;
};

// Name -> tensor map that remembers insertion order.
class ParamStore {
 public:
  void add(std::string name, Tensor<float> value);  // throws Error on duplicates
  // Replaces an existing entry; the shape must match.
  void set(std::string_view name, Tensor<float> value);
  const Tensor<float>& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;
  const std::vector<std::pair<std::string, Tensor<float>>>& entries() const { return entries_; }

  // Copy in which every tensor is registered on `tape`.
  ParamStore watched(Tape<float>& tape) const;

  bool operator==(const ParamStore& other) const;  // names, order, shapes and bits

 private:
  std::vector<std::pair<std::string, Tensor<float>>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Init { kHeUniform, kZeros, kOnes, kPositional };

inline constexpr double kPositionalInitStd = 0.02;

struct ParamSpec {
  std::string name;  // relative to the owning layer
  Shape shape;
  Init init = Init::kZeros;
  std::size_t fan_in = 0;
};

// A named stage of the network. Shapes exclude the batch axis; forward
// receives and returns batched tensors. Parameters live in a ParamStore under
// "<layer name>/<param name>".
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  std::string param_name(std::string_view local) const;

  virtual std::string kind() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual std::vector<ParamSpec> param_specs(const Shape& /*input*/) const { return {}; }
  virtual Tensor<float> forward(const Tensor<float>& x, const ParamStore& params) const = 0;
  virtual double flops(const Shape& /*input*/) const { return 0.0; }

 protected:
  const Tensor<float>& param(const ParamStore& params, std::string_view local) const {
    return params.at(param_name(local));
  }

 private:
  std::string name_;
};

class ModelGraph {
 public:
  // Parameters are created from the layers' specs and seeded initializers.
  ModelGraph(Shape input_shape, std::vector<std::shared_ptr<const Layer>> layers,
             std::uint64_t seed, std::optional<PlantXViTConfig> config = std::nullopt);

  const Shape& input_shape() const { return input_shape_; }
  const std::optional<PlantXViTConfig>& config() const { return config_; }
  std::size_t num_layers() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  std::size_t layer_index(std::string_view name) const;  // throws Error
  // Per-sample shape entering / leaving layer i.
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }
  const Shape& layer_output_shape(std::size_t i) const { return shapes_.at(i + 1); }
  const Shape& output_shape() const { return shapes_.back(); }

  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  // Runs layers [begin, end) on a batch using `params`.
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& params, std::size_t begin = 0,
                        std::size_t end = static_cast<std::size_t>(-1)) const;
  // Pre-softmax scores [B, classes] for a batch [B, input_shape...].
  Tensor<float> logits(const Tensor<float>& batch) const;
  Tensor<float> logits(const Tensor<float>& batch, const ParamStore& params) const;

  // Seeded initial value of one parameter by full name.
  Tensor<float> initial_value(std::string_view full_name) const;

 private:
  void check_batch(const Tensor<float>& batch) const;

  Shape input_shape_;
  std::vector<std::shared_ptr<const Layer>> layers_;
  std::vector<Shape> shapes_;
  std::vector<ParamSpec> specs_;  // full names
  ParamStore params_;
  std::uint64_t seed_;
  std::optional<PlantXViTConfig> config_;
};

// Layer names of the assembled network.
inline constexpr std::string_view kInceptionLayer = "inception";
inline constexpr std::string_view kPoolingLayer = "gap";
inline constexpr std::string_view kOutputLayer = "output";

ModelGraph build_model(const PlantXViTConfig& config);

// Class probabilities [B, classes].
Tensor<float> predict(const ModelGraph& model, const Tensor<float>& batch);

struct ParamRow {
  std::string layer;
  std::string kind;
  Shape output_shape;
  std::size_t params = 0;
  std::optional<std::size_t> reference;  // reference count, canonical geometry only
};

struct ParamTable {
  std::vector<ParamRow> rows;  // first row is the input
  std::size_t total = 0;
  std::size_t fixed_total = 0;  // every row except the inception block
  std::optional<std::size_t> reference_total;
};

inline constexpr std::size_t kReferenceTotalParams = 850500;
inline constexpr std::size_t kReferenceInceptionParams = 361728;
inline constexpr std::size_t kReferenceFixedParams = 488772;
inline constexpr double kReferenceGflops = 11.8;
inline constexpr double kReferenceCheckpointMegabytes = 3.4;

ParamTable count_params(const ModelGraph& model);

// One forward pass of a single image; a multiply-accumulate is two FLOPs.
// Counts convolutions, dense maps, patch projection and attention products;
// element-wise work (activations, pooling, normalization) is not counted.
double count_flops(const ModelGraph& model);

// Checkpoints. Little-endian: "PXVT", u32 version, u32 count, then per tensor
// u16 name length, name, u8 dtype (0 = f32), u8 rank, u64 dims, raw values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t checkpoint_size(const ParamStore& params);
void save_checkpoint(const ModelGraph& model, const std::filesystem::path& path);
// Every parameter of the model built from `config` must be present.
ModelGraph load_checkpoint(const std::filesystem::path& path, const PlantXViTConfig& config);
// Overwrites parameters whose names start with `prefix`; others keep their
// values. Returns the number of tensors loaded.
std::size_t load_checkpoint_prefix(ModelGraph& model, const std::filesystem::path& path,
                                   std::string_view prefix);

}  // namespace plantxvit
