#include "plantxvit/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "plantxvit/error.hpp"
#include "plantxvit/ops.hpp"
#include "plantxvit/random.hpp"

namespace plantxvit {

bool PlantXViTConfig::is_canonical_geometry() const {
  return input_size == 224 && num_classes == 4 && patch_size == 5 && transformer_depth == 4 &&
         embed_dim == 16 && heads == 4 && key_dim == 16 && mlp_hidden == 32;
}

void PlantXViTConfig::validate() const {
  if (input_size < 4 || input_size % 4 != 0) {
    throw ConfigError("input_size must be a positive multiple of 4, got " +
                      std::to_string(input_size));
  }
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  constexpr std::array kPatchSizes{1, 3, 5, 7, 9};
  if (std::find(kPatchSizes.begin(), kPatchSizes.end(), static_cast<int>(patch_size)) ==
      kPatchSizes.end()) {
    throw ConfigError("patch_size must be one of 1, 3, 5, 7, 9, got " +
                      std::to_string(patch_size));
  }
  if (patch_size > feature_size()) {
    throw ConfigError("patch_size " + std::to_string(patch_size) +
                      " exceeds the feature map side " + std::to_string(feature_size()));
  }
  if (transformer_depth == 0 || embed_dim == 0 || heads == 0 || key_dim == 0 || mlp_hidden == 0) {
    throw ConfigError("transformer widths and depth must be positive");
  }
  inception.validate();
}

// ---------------------------------------------------------------------------
// ParamStore

void ParamStore::add(std::string name, Tensor<float> value) {
  if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

void ParamStore::set(std::string_view name, Tensor<float> value) {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  auto& slot = entries_[it->second].second;
  if (slot.shape() != value.shape()) {
    throw ShapeError("parameter '" + std::string(name) + "' has shape " + to_string(slot.shape()) +
                     ", got " + to_string(value.shape()));
  }
  slot = std::move(value);
}

const Tensor<float>& ParamStore::at(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].second;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

ParamStore ParamStore::watched(Tape<float>& tape) const {
  ParamStore out;
  for (const auto& [name, t] : entries_) out.add(name, tape.watch(t));
  return out;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [na, a] = entries_[i];
    const auto& [nb, b] = other.entries_[i];
    if (na != nb || a.shape() != b.shape()) return false;
    if (std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Layers of the assembled network

std::string Layer::param_name(std::string_view local) const {
  return name_ + "/" + std::string(local);
}

namespace {

std::size_t product(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

void expect_rank(const Layer& layer, const Shape& in, std::size_t rank) {
  if (in.size() != rank) {
    throw ShapeError(layer.name() + ": expected rank " + std::to_string(rank) + " input, got " +
                     to_string(in));
  }
}

class ConvLayer final : public Layer {
 public:
  ConvLayer(std::string name, std::size_t kernel, std::size_t filters)
      : Layer(std::move(name)), kernel_(kernel), filters_(filters) {}

  std::string kind() const override { return "Conv2D"; }
  Shape output_shape(const Shape& in) const override {
    expect_rank(*this, in, 3);
    return {in[0], in[1], filters_};
  }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    const std::size_t fan_in = kernel_ * kernel_ * in[2];
    return {{"kernel", {kernel_, kernel_, in[2], filters_}, Init::kHeUniform, fan_in},
            {"bias", {filters_}, Init::kZeros, 0}};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    return relu(conv2d(x, Conv2DParams<float>{param(p, "kernel"), param(p, "bias")}));
  }
  double flops(const Shape& in) const override {
    return 2.0 * kernel_ * kernel_ * in[2] * in[0] * in[1] * filters_;
  }

 private:
  std::size_t kernel_, filters_;
};

class PoolLayer final : public Layer {
 public:
  using Layer::Layer;
  std::string kind() const override { return "MaxPooling2D"; }
  Shape output_shape(const Shape& in) const override {
    expect_rank(*this, in, 3);
    if (in[0] % 2 || in[1] % 2) {
      throw ShapeError(name() + ": 2x2 pooling needs even sides, got " + to_string(in));
    }
    return {in[0] / 2, in[1] / 2, in[2]};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore&) const override {
    return maxpool2d(x);
  }
};

class InceptionLayer final : public Layer {
 public:
  InceptionLayer(std::string name, InceptionConfig config)
      : Layer(std::move(name)), config_(config) {}

  std::string kind() const override { return "Inception"; }
  Shape output_shape(const Shape& in) const override {
    expect_rank(*this, in, 3);
    return {in[0], in[1], config_.output_channels()};
  }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    std::vector<ParamSpec> specs;
    for (const auto& c : inception_layout(config_, in[2])) {
      specs.push_back({c.name + "/kernel",
                       {c.kernel_h, c.kernel_w, c.in_channels, c.out_channels},
                       Init::kHeUniform,
                       c.kernel_h * c.kernel_w * c.in_channels});
      specs.push_back({c.name + "/bias", {c.out_channels}, Init::kZeros, 0});
    }
    return specs;
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    const auto params = make_inception_params<float>(
        config_, x.shape().back(), [&](const InceptionConvSpec& c) {
          return Conv2DParams<float>{param(p, c.name + "/kernel"), param(p, c.name + "/bias")};
        });
    return inception_forward(x, params, config_);
  }
  double flops(const Shape& in) const override {
    double total = 0;
    for (const auto& c : inception_layout(config_, in[2])) {
      total += 2.0 * c.kernel_h * c.kernel_w * c.in_channels * c.out_channels * in[0] * in[1];
    }
    return total;
  }

 private:
  InceptionConfig config_;
};

// Patch extraction followed by projection and positional embedding.
class PatchEncoderLayer final : public Layer {
 public:
  PatchEncoderLayer(std::string name, std::size_t patch, std::size_t width)
      : Layer(std::move(name)), patch_(patch), width_(width) {}

  std::string kind() const override { return "PatchEncoder"; }
  Shape output_shape(const Shape& in) const override {
    expect_rank(*this, in, 3);
    if (patch_ > in[0] || patch_ > in[1]) {
      throw ShapeError(name() + ": patch " + std::to_string(patch_) + " exceeds feature map " +
                       to_string(in));
    }
    return {(in[0] / patch_) * (in[1] / patch_), width_};
  }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    const std::size_t flat = patch_ * patch_ * in[2];
    return {{"projection", {flat, width_}, Init::kHeUniform, flat},
            {"bias", {width_}, Init::kZeros, 0},
            {"position_embedding", {output_shape(in)[0], width_}, Init::kPositional, 0}};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    return patch_encode(extract_patches(x, patch_),
                        PatchEncoderParams<float>{param(p, "projection"), param(p, "bias"),
                                                  param(p, "position_embedding")});
  }
  double flops(const Shape& in) const override {
    return 2.0 * output_shape(in)[0] * patch_ * patch_ * in[2] * width_;
  }

 private:
  std::size_t patch_, width_;
};

class TransformerLayer final : public Layer {
 public:
  TransformerLayer(std::string name, std::size_t heads, std::size_t key_dim, std::size_t hidden)
      : Layer(std::move(name)), heads_(heads), key_dim_(key_dim), hidden_(hidden) {}

  std::string kind() const override { return "TransformerBlock"; }
  Shape output_shape(const Shape& in) const override {
    expect_rank(*this, in, 2);
    return in;
  }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    const std::size_t d = in[1];
    std::vector<ParamSpec> s{{"norm1/gamma", {d}, Init::kOnes, 0},
                             {"norm1/beta", {d}, Init::kZeros, 0}};
    for (std::size_t h = 0; h < heads_; ++h) {
      const std::string head = "attention/head" + std::to_string(h) + "/";
      for (const char* proj : {"query", "key", "value"}) {
        s.push_back({head + proj, {d, key_dim_}, Init::kHeUniform, d});
        s.push_back({head + proj + "_bias", {key_dim_}, Init::kZeros, 0});
      }
    }
    s.push_back({"attention/output", {heads_ * key_dim_, d}, Init::kHeUniform, heads_ * key_dim_});
    s.push_back({"attention/output_bias", {d}, Init::kZeros, 0});
    s.push_back({"norm2/gamma", {d}, Init::kOnes, 0});
    s.push_back({"norm2/beta", {d}, Init::kZeros, 0});
    s.push_back({"mlp/hidden", {d, hidden_}, Init::kHeUniform, d});
    s.push_back({"mlp/hidden_bias", {hidden_}, Init::kZeros, 0});
    s.push_back({"mlp/out", {hidden_, d}, Init::kHeUniform, hidden_});
    s.push_back({"mlp/out_bias", {d}, Init::kZeros, 0});
    return s;
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    TransformerBlockParams<float> b;
    b.norm1_gamma = param(p, "norm1/gamma");
    b.norm1_beta = param(p, "norm1/beta");
    for (std::size_t h = 0; h < heads_; ++h) {
      const std::string head = "attention/head" + std::to_string(h) + "/";
      b.attention.heads.push_back(
          {param(p, head + "query"), param(p, head + "query_bias"), param(p, head + "key"),
           param(p, head + "key_bias"), param(p, head + "value"), param(p, head + "value_bias")});
    }
    b.attention.output = param(p, "attention/output");
    b.attention.output_bias = param(p, "attention/output_bias");
    b.norm2_gamma = param(p, "norm2/gamma");
    b.norm2_beta = param(p, "norm2/beta");
    b.mlp_hidden = param(p, "mlp/hidden");
    b.mlp_hidden_bias = param(p, "mlp/hidden_bias");
    b.mlp_out = param(p, "mlp/out");
    b.mlp_out_bias = param(p, "mlp/out_bias");
    return transformer_block(x, b);
  }
  double flops(const Shape& in) const override {
    const double n = static_cast<double>(in[0]), d = static_cast<double>(in[1]);
    const double h = static_cast<double>(heads_), k = static_cast<double>(key_dim_);
    const double projections = 3.0 * h * 2.0 * n * d * k;
    const double scores_and_mix = h * 2.0 * (2.0 * n * n * k);
    const double output = 2.0 * n * h * k * d;
    const double mlp = 2.0 * 2.0 * n * d * static_cast<double>(hidden_);
    return projections + scores_and_mix + output + mlp;
  }

 private:
  std::size_t heads_, key_dim_, hidden_;
};

class LayerNormLayer final : public Layer {
 public:
  using Layer::Layer;
  std::string kind() const override { return "LayerNormalization"; }
  Shape output_shape(const Shape& in) const override { return in; }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    return {{"gamma", {in.back()}, Init::kOnes, 0}, {"beta", {in.back()}, Init::kZeros, 0}};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    return layer_norm(x, param(p, "gamma"), param(p, "beta"));
  }
};

class GapLayer final : public Layer {
 public:
  using Layer::Layer;
  std::string kind() const override { return "GlobalAveragePooling1D"; }
  Shape output_shape(const Shape& in) const override {
    expect_rank(*this, in, 2);
    return {in[1]};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore&) const override {
    return global_avg_pool_1d(x);
  }
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(std::string name, std::size_t units) : Layer(std::move(name)), units_(units) {}
  std::string kind() const override { return "Dense"; }
  Shape output_shape(const Shape& in) const override {
    Shape out = in;
    out.back() = units_;
    return out;
  }
  std::vector<ParamSpec> param_specs(const Shape& in) const override {
    return {{"kernel", {in.back(), units_}, Init::kHeUniform, in.back()},
            {"bias", {units_}, Init::kZeros, 0}};
  }
  Tensor<float> forward(const Tensor<float>& x, const ParamStore& p) const override {
    return dense(x, param(p, "kernel"), param(p, "bias"));
  }
  double flops(const Shape& in) const override {
    return 2.0 * static_cast<double>(product(in)) * static_cast<double>(units_);
  }

 private:
  std::size_t units_;
};

}  // namespace

// ---------------------------------------------------------------------------
// ModelGraph

ModelGraph::ModelGraph(Shape input_shape, std::vector<std::shared_ptr<const Layer>> layers,
                       std::uint64_t seed, std::optional<PlantXViTConfig> config)
    : input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      seed_(seed),
      config_(std::move(config)) {
  if (layers_.empty()) throw Error("model has no layers");
  checked_numel(input_shape_);
  shapes_.push_back(input_shape_);
  std::map<std::string, bool, std::less<>> names;
  for (const auto& layer : layers_) {
    if (!layer) throw Error("null layer");
    if (names[layer->name()]) throw Error("duplicate layer name '" + layer->name() + "'");
    names[layer->name()] = true;
    for (auto spec : layer->param_specs(shapes_.back())) {
      spec.name = layer->param_name(spec.name);
      specs_.push_back(spec);
    }
    shapes_.push_back(layer->output_shape(shapes_.back()));
  }
  for (const auto& spec : specs_) params_.add(spec.name, initial_value(spec.name));
}

std::size_t ModelGraph::layer_index(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->name() == name) return i;
  }
  throw Error("unknown layer '" + std::string(name) + "'");
}

Tensor<float> ModelGraph::initial_value(std::string_view full_name) const {
  const auto it = std::find_if(specs_.begin(), specs_.end(),
                               [&](const ParamSpec& s) { return s.name == full_name; });
  if (it == specs_.end()) throw Error("unknown parameter '" + std::string(full_name) + "'");
  const std::uint64_t seed = derive_seed(seed_, it->name);
  switch (it->init) {
    case Init::kHeUniform:
      return Tensor<float>(it->shape, Fill::he_uniform(it->fan_in, seed));
    case Init::kOnes:
      return Tensor<float>(it->shape, Fill::constant(1.0));
    case Init::kPositional:
      return Tensor<float>(it->shape, Fill::normal(0.0, kPositionalInitStd, seed));
    case Init::kZeros:
      break;
  }
  return Tensor<float>(it->shape);
}

void ModelGraph::check_batch(const Tensor<float>& batch) const {
  const Shape& s = batch.shape();
  if (s.size() != input_shape_.size() + 1 || !std::equal(input_shape_.begin(), input_shape_.end(),
                                                         s.begin() + 1)) {
    throw ShapeError("model expects a batch of " + to_string(input_shape_) + ", got " +
                     to_string(s));
  }
}

Tensor<float> ModelGraph::forward(const Tensor<float>& x, const ParamStore& params,
                                  std::size_t begin, std::size_t end) const {
  end = std::min(end, layers_.size());
  if (begin > end) throw Error("forward: empty layer range");
  Tensor<float> h = x;
  for (std::size_t i = begin; i < end; ++i) {
    h = layers_[i]->forward(h, params);
  }
  return h;
}

Tensor<float> ModelGraph::logits(const Tensor<float>& batch) const {
  return logits(batch, params_);
}

Tensor<float> ModelGraph::logits(const Tensor<float>& batch, const ParamStore& params) const {
  check_batch(batch);
  return forward(batch, params);
}

ModelGraph build_model(const PlantXViTConfig& c) {
  c.validate();
  std::vector<std::shared_ptr<const Layer>> layers{
      std::make_shared<ConvLayer>("block1_conv1", 3, 64),
      std::make_shared<ConvLayer>("block1_conv2", 3, 64),
      std::make_shared<PoolLayer>("block1_pool"),
      std::make_shared<ConvLayer>("block2_conv1", 3, 128),
      std::make_shared<ConvLayer>("block2_conv2", 3, 128),
      std::make_shared<PoolLayer>("block2_pool"),
      std::make_shared<InceptionLayer>(std::string(kInceptionLayer), c.inception),
      std::make_shared<PatchEncoderLayer>("patch_encoder", c.patch_size, c.embed_dim)};
  for (std::size_t i = 1; i <= c.transformer_depth; ++i) {
    layers.push_back(std::make_shared<TransformerLayer>("transformer_" + std::to_string(i),
                                                        c.heads, c.key_dim, c.mlp_hidden));
  }
  layers.push_back(std::make_shared<LayerNormLayer>("final_norm"));
  layers.push_back(std::make_shared<GapLayer>(std::string(kPoolingLayer)));
  layers.push_back(std::make_shared<DenseLayer>(std::string(kOutputLayer), c.num_classes));
  return ModelGraph({c.input_size, c.input_size, 3}, std::move(layers), c.seed, c);
}

Tensor<float> predict(const ModelGraph& model, const Tensor<float>& batch) {
  const Tensor<float> z = model.logits(batch);
  return softmax(z, z.rank() - 1);
}

// ---------------------------------------------------------------------------
// Accounting

namespace {

std::optional<std::size_t> reference_count(std::string_view layer) {
  static const std::map<std::string, std::size_t, std::less<>> kRows{
      {"block1_conv1", 1792},     {"block1_conv2", 36928},   {"block1_pool", 0},
      {"block2_conv1", 73856},    {"block2_conv2", 147584},  {"block2_pool", 0},
      {"inception", kReferenceInceptionParams},             {"patch_encoder", 206752},
      {"transformer_1", 5440},    {"transformer_2", 5440},   {"transformer_3", 5440},
      {"transformer_4", 5440},    {"final_norm", 32},        {"gap", 0},
      {"output", 68}};
  const auto it = kRows.find(layer);
  if (it == kRows.end()) return std::nullopt;
  return it->second;
}

}  // namespace

ParamTable count_params(const ModelGraph& model) {
  const bool canonical = model.config() && model.config()->is_canonical_geometry();
  ParamTable table;
  table.rows.push_back({"input", "InputLayer", model.input_shape(), 0,
                        canonical ? std::optional<std::size_t>(0) : std::nullopt});
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    const Layer& layer = model.layer(i);
    ParamRow row{layer.name(), layer.kind(), model.layer_output_shape(i), 0, std::nullopt};
    for (const auto& spec : layer.param_specs(model.layer_input_shape(i))) {
      row.params += product(spec.shape);
    }
    if (canonical) row.reference = reference_count(layer.name());
    table.total += row.params;
    if (layer.name() != kInceptionLayer) table.fixed_total += row.params;
    table.rows.push_back(std::move(row));
  }
  if (canonical) table.reference_total = kReferenceTotalParams;
  return table;
}

double count_flops(const ModelGraph& model) {
  double total = 0;
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    total += model.layer(i).flops(model.layer_input_shape(i));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'P', 'X', 'V', 'T'};
constexpr std::uint8_t kDtypeF32 = 0;

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(std::string bytes, std::string source) : bytes_(std::move(bytes)), source_(std::move(source)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(source_ + ": truncated checkpoint");
  }

  std::string bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, Tensor<float>>> read_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path.string());
  if (r.text(4) != std::string(kMagic, 4)) throw DataError(path.string() + ": bad checkpoint magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = r.text(r.get<std::uint16_t>());
    if (r.get<std::uint8_t>() != kDtypeF32) {
      throw DataError(path.string() + ": tensor '" + name + "' has an unsupported dtype");
    }
    Shape shape(r.get<std::uint8_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    std::vector<float> data(checked_numel(shape));
    for (auto& v : data) v = std::bit_cast<float>(r.get<std::uint32_t>());
    tensors.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw DataError(path.string() + ": trailing bytes after last tensor");
  return tensors;
}

void assign(ModelGraph& model, const std::string& name, Tensor<float> value,
            const std::filesystem::path& path) {
  if (!model.params().contains(name)) {
    throw ShapeError(path.string() + ": tensor '" + name + "' is not a parameter of this model");
  }
  try {
    model.params().set(name, std::move(value));
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::size_t checkpoint_size(const ParamStore& params) {
  std::size_t n = 4 + 4 + 4;
  for (const auto& [name, t] : params.entries()) {
    n += 2 + name.size() + 1 + 1 + 8 * t.rank() + 4 * t.numel();
  }
  return n;
}

void save_checkpoint(const ModelGraph& model, const std::filesystem::path& path) {
  const ParamStore& params = model.params();
  std::string out;
  out.reserve(checkpoint_size(params));
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params.entries()) {
    if (name.size() > 0xffff) throw Error("parameter name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, kDtypeF32);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    for (float v : t.data()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write checkpoint " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("failed writing checkpoint " + path.string());
}

ModelGraph load_checkpoint(const std::filesystem::path& path, const PlantXViTConfig& config) {
  ModelGraph model = build_model(config);
  auto tensors = read_checkpoint(path);
  std::map<std::string, bool> seen;
  for (auto& [name, t] : tensors) {
    if (seen[name]) throw DataError(path.string() + ": duplicate tensor '" + name + "'");
    seen[name] = true;
    assign(model, name, std::move(t), path);
  }
  for (const auto& [name, t] : model.params().entries()) {
    if (!seen.count(name)) {
      throw DataError(path.string() + ": missing parameter '" + name + "'");
    }
  }
  return model;
}

std::size_t load_checkpoint_prefix(ModelGraph& model, const std::filesystem::path& path,
                                   std::string_view prefix) {
  ModelGraph staged = model;
  std::size_t loaded = 0;
  for (auto& [name, t] : read_checkpoint(path)) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    assign(staged, name, std::move(t), path);
    ++loaded;
  }
  model = std::move(staged);
  return loaded;
}

}  // namespace plantxvit
