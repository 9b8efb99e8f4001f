#include "plantxvit/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "plantxvit/error.hpp"
#include "plantxvit/ops.hpp"
#include "plantxvit/random.hpp"

namespace plantxvit {

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& y_true, const Tensor<T>& y_pred) {
  if (y_true.shape() != y_pred.shape() || y_true.rank() != 2) {
    throw ShapeError("cross_entropy: labels " + to_string(y_true.shape()) + " and predictions " +
                     to_string(y_pred.shape()) + " must both be [B,C]");
  }
  const T lo = static_cast<T>(kProbabilityClip);
  const T hi = static_cast<T>(1.0 - kProbabilityClip);
  const Tensor<T> picked = sum(mul(y_true, log(clip(y_pred, lo, hi))));
  return scale(picked, static_cast<T>(-1.0 / static_cast<double>(y_true.dim(0))));
}

template Tensor<float> cross_entropy(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> cross_entropy(const Tensor<double>&, const Tensor<double>&);

// ---------------------------------------------------------------------------
// Optimizers

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kRmsProp:
      return "rmsprop";
    case OptimizerKind::kAdamax:
      return "adamax";
    case OptimizerKind::kAdam:
      return "adam";
    case OptimizerKind::kNadam:
      return "nadam";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto kind : kAllOptimizers) {
    if (to_string(kind) == lower) return kind;
  }
  throw ConfigError("unknown optimizer '" + std::string(name) +
                    "' (expected sgd, rmsprop, adamax, adam or nadam)");
}

OptimizerState::OptimizerState(OptimizerSettings settings) : settings_(settings) {
  if (!(settings_.learning_rate >= 0) || !std::isfinite(settings_.learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative number");
  }
  if (!(settings_.epsilon > 0)) throw ConfigError("epsilon must be positive");
  for (double b : {settings_.beta1, settings_.beta2, settings_.rho, settings_.momentum}) {
    if (!(b >= 0 && b < 1)) throw ConfigError("decay rates and momentum must lie in [0, 1)");
  }
}

std::vector<Tensor<float>> OptimizerState::step(const std::vector<Tensor<float>>& params,
                                                const std::vector<Tensor<float>>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (slots_.empty()) {
    slots_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots_[i].first.assign(params[i].numel(), 0.0);
      slots_[i].second.assign(params[i].numel(), 0.0);
    }
  }
  if (slots_.size() != params.size()) throw ShapeError("optimizer: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() || slots_[i].first.size() != params[i].numel()) {
      throw ShapeError("optimizer: gradient " + to_string(grads[i].shape()) +
                       " does not match parameter " + to_string(params[i].shape()));
    }
  }

  ++step_;
  const auto& s = settings_;
  const double t = static_cast<double>(step_);
  const double lr = s.learning_rate;
  const double bias1 = 1.0 - std::pow(s.beta1, t);
  const double bias2 = 1.0 - std::pow(s.beta2, t);
  const double bias1_next = 1.0 - std::pow(s.beta1, t + 1);

  std::vector<Tensor<float>> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto p = params[i].data();
    const auto g = grads[i].data();
    auto& m = slots_[i].first;
    auto& v = slots_[i].second;
    std::vector<float> next(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      double delta = 0.0;
      switch (s.kind) {
        case OptimizerKind::kSgd:
          m[j] = s.momentum * m[j] - lr * gj;
          delta = m[j];
          break;
        case OptimizerKind::kRmsProp:
          v[j] = s.rho * v[j] + (1 - s.rho) * gj * gj;
          delta = -lr * gj / (std::sqrt(v[j]) + s.epsilon);
          break;
        case OptimizerKind::kAdam:
          m[j] = s.beta1 * m[j] + (1 - s.beta1) * gj;
          v[j] = s.beta2 * v[j] + (1 - s.beta2) * gj * gj;
          delta = -lr * (m[j] / bias1) / (std::sqrt(v[j] / bias2) + s.epsilon);
          break;
        case OptimizerKind::kAdamax:
          m[j] = s.beta1 * m[j] + (1 - s.beta1) * gj;
          v[j] = std::max(s.beta2 * v[j], std::abs(gj));
          delta = -(lr / bias1) * m[j] / (v[j] + s.epsilon);
          break;
        case OptimizerKind::kNadam: {
          m[j] = s.beta1 * m[j] + (1 - s.beta1) * gj;
          v[j] = s.beta2 * v[j] + (1 - s.beta2) * gj * gj;
          const double nesterov = s.beta1 * m[j] / bias1_next + (1 - s.beta1) * gj / bias1;
          delta = -lr * nesterov / (std::sqrt(v[j] / bias2) + s.epsilon);
          break;
        }
      }
      next[j] = static_cast<float>(static_cast<double>(p[j]) + delta);
    }
    out.emplace_back(params[i].shape(), std::move(next));
  }
  return out;
}

void optimizer_step(OptimizerState& state, ParamStore& params,
                    const std::vector<Tensor<float>>& grads) {
  std::vector<Tensor<float>> current;
  current.reserve(params.size());
  for (const auto& [name, t] : params.entries()) current.push_back(t.detach());
  auto updated = state.step(current, grads);
  for (std::size_t i = 0; i < updated.size(); ++i) {
    params.set(params.entries()[i].first, std::move(updated[i]));
  }
}

// ---------------------------------------------------------------------------
// Splitting

void SplitFractions::validate() const {
  for (double f : {train, validation, test}) {
    if (!(f >= 0 && f <= 1)) throw ConfigError("split fractions must lie in [0, 1]");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

DatasetSplit split_dataset(const DatasetManifest& data, const SplitFractions& fractions,
                           std::uint64_t seed) {
  fractions.validate();
  data.validate();
  std::vector<std::vector<std::size_t>> by_class(data.classes.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) by_class[data.samples[i].label].push_back(i);

  DatasetSplit split;
  for (auto* part : {&split.train, &split.validation, &split.test}) part->classes = data.classes;
  // A small tolerance keeps exact products such as 100 * 0.1 from rounding down.
  auto portion = [](std::size_t n, double f) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    Rng rng(derive_seed(seed, "split/" + data.classes[c]));
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t n_val = portion(members.size(), fractions.validation);
    const std::size_t n_test = portion(members.size(), fractions.test);
    for (std::size_t k = 0; k < members.size(); ++k) {
      DatasetManifest& target = k < n_val            ? split.validation
                                : k < n_val + n_test ? split.test
                                                     : split.train;
      target.samples.push_back(data.samples[members[k]]);
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Training loop

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (clip_norm < 0) throw ConfigError("clip norm must be non-negative");
  splits.validate();
  OptimizerState check(optimizer);
}

std::string EpochRecord::to_json(bool with_timing) const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["train_acc"] = train_accuracy;
  if (has_validation) {
    j["val_loss"] = val_loss;
    j["val_acc"] = val_accuracy;
  } else {
    j["val_loss"] = nullptr;
    j["val_acc"] = nullptr;
  }
  if (with_timing) j["seconds"] = seconds;
  return j.dump();
}

double EvaluationResult::accuracy() const {
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predictions[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

std::size_t argmax_row(const Tensor<float>& probs, std::size_t row) {
  const std::size_t c = probs.dim(1);
  std::size_t best = 0;
  for (std::size_t k = 1; k < c; ++k) {
    if (probs[row * c + k] > probs[row * c + best]) best = k;
  }
  return best;
}

void check_model_matches(const ModelGraph& model, const DatasetManifest& data) {
  if (data.samples.empty()) return;
  if (data.samples.front().pixels.shape() != model.input_shape()) {
    throw ShapeError("images of shape " + to_string(data.samples.front().pixels.shape()) +
                     " do not match model input " + to_string(model.input_shape()));
  }
  if (data.classes.size() != model.output_shape().back()) {
    throw ShapeError("dataset has " + std::to_string(data.classes.size()) +
                     " classes but the model outputs " +
                     std::to_string(model.output_shape().back()));
  }
}

}  // namespace

EvaluationResult evaluate(const ModelGraph& model, const DatasetManifest& data,
                          std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  check_model_matches(model, data);
  EvaluationResult result;
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, data.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    std::vector<std::size_t> labels;
    for (auto i : idx) labels.push_back(data.samples[i].label);
    const Tensor<float> probs = predict(model, stack_images(data, idx));
    const Tensor<float> loss = cross_entropy(one_hot(labels, probs.dim(1)), probs);
    loss_sum += static_cast<double>(loss.item()) * static_cast<double>(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      result.labels.push_back(labels[r]);
      result.predictions.push_back(argmax_row(probs, r));
      std::vector<double> row(probs.dim(1));
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = probs[r * row.size() + k];
      result.probabilities.push_back(std::move(row));
    }
  }
  if (!data.samples.empty()) result.loss = loss_sum / static_cast<double>(data.size());
  return result;
}

std::vector<EpochRecord> fit(ModelGraph& model, const DatasetManifest& train,
                             const DatasetManifest& validation, const TrainConfig& config,
                             const EpochCallback& on_epoch) {
  config.validate();
  if (train.samples.empty()) throw DataError("training set is empty");
  check_model_matches(model, train);
  check_model_matches(model, validation);
  const std::size_t classes = model.output_shape().back();

  OptimizerState optimizer(config.optimizer);
  std::vector<EpochRecord> records;
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, "epoch/" + std::to_string(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<std::size_t> labels;
      for (auto i : idx) labels.push_back(train.samples[i].label);

      Tape<float> tape;
      const ParamStore watched = model.params().watched(tape);
      const Tensor<float> logits = model.logits(stack_images(train, idx), watched);
      const Tensor<float> probs = softmax(logits, 1);
      const Tensor<float> loss = cross_entropy(one_hot(labels, classes), probs);
      const double batch_loss = loss.item();
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
      }
      const Gradients<float> grads = tape.backward(loss);

      std::vector<Tensor<float>> g;
      g.reserve(watched.size());
      double norm_sq = 0.0;
      for (const auto& [name, t] : watched.entries()) {
        g.push_back(grads.of(t));
        for (float v : g.back().data()) norm_sq += static_cast<double>(v) * v;
      }
      if (!std::isfinite(norm_sq)) {
        throw NumericError("non-finite gradient in epoch " + std::to_string(epoch));
      }
      if (config.clip_norm > 0 && std::sqrt(norm_sq) > config.clip_norm) {
        const float factor = static_cast<float>(config.clip_norm / std::sqrt(norm_sq));
        for (auto& t : g) t = scale(t, factor);
      }
      optimizer_step(optimizer, model.params(), g);

      loss_sum += batch_loss * static_cast<double>(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) hits += argmax_row(probs, r) == labels[r];
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train.size());
    record.train_accuracy = static_cast<double>(hits) / static_cast<double>(train.size());
    if (!validation.samples.empty()) {
      const EvaluationResult val = evaluate(model, validation, config.batch_size);
      record.has_validation = true;
      record.val_loss = val.loss;
      record.val_accuracy = val.accuracy();
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    records.push_back(record);
    if (on_epoch && !on_epoch(record)) break;
  }
  return records;
}

std::vector<EpochRecord> fit(ModelGraph& model, const DatasetManifest& data,
                             const TrainConfig& config, const EpochCallback& on_epoch) {
  const DatasetSplit split = split_dataset(data, config.splits, config.seed);
  return fit(model, split.train, split.validation, config, on_epoch);
}

}  // namespace plantxvit
