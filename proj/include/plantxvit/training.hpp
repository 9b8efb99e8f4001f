#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "plantxvit/data.hpp"
#include "plantxvit/model.hpp"
#include "plantxvit/tensor.hpp"

namespace plantxvit {

inline constexpr double kProbabilityClip = 1e-7;

// Mean over the batch of -sum(y log clip(p)). y_true one-hot [B,C], y_pred
// probabilities [B,C]; returns shape [1].
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& y_true, const Tensor<T>& y_pred);

enum class OptimizerKind { kSgd, kRmsProp, kAdamax, kAdam, kNadam };

inline constexpr std::array kAllOptimizers{OptimizerKind::kSgd, OptimizerKind::kRmsProp,
                                           OptimizerKind::kAdamax, OptimizerKind::kAdam,
                                           OptimizerKind::kNadam};

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);  // throws ConfigError

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double epsilon = 1e-7;
  double momentum = 0.0;
};

class OptimizerState {
 public:
  explicit OptimizerState(OptimizerSettings settings = {});

  const OptimizerSettings& settings() const { return settings_; }
  std::uint64_t step_count() const { return step_; }

  // Updated copies of `params` given the aligned `grads`. The first call fixes
  // the number and sizes of the tensors.
  std::vector<Tensor<float>> step(const std::vector<Tensor<float>>& params,
                                  const std::vector<Tensor<float>>& grads);

 private:
  struct Slot {
    std::vector<double> first, second;
  };

  OptimizerSettings settings_;
  std::uint64_t step_ = 0;
  std::vector<Slot> slots_;
};

// Applies one update to a whole parameter store; grads follow store order.
void optimizer_step(OptimizerState& state, ParamStore& params,
                    const std::vector<Tensor<float>>& grads);

struct SplitFractions {
  double train = 0.8, validation = 0.1, test = 0.1;
  void validate() const;  // throws ConfigError
};

struct DatasetSplit {
  DatasetManifest train, validation, test;
};

// Per class: seeded shuffle, then floor(n * validation) and floor(n * test)
// samples go to those splits and the remainder to training.
DatasetSplit split_dataset(const DatasetManifest& data, const SplitFractions& fractions,
                           std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  OptimizerSettings optimizer;
  std::uint64_t seed = 0;
  SplitFractions splits;
  double clip_norm = 0.0;  // global gradient norm limit; 0 disables

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0, train_accuracy = 0;
  double val_loss = 0, val_accuracy = 0;
  bool has_validation = false;
  double seconds = 0;

  // One JSON-lines object. Without timing the line depends only on the seed.
  std::string to_json(bool with_timing = true) const;
};

struct EvaluationResult {
  double loss = 0;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> predictions;
  std::vector<std::vector<double>> probabilities;
  double accuracy() const;
};

// Forward passes in chunks of `batch_size`.
EvaluationResult evaluate(const ModelGraph& model, const DatasetManifest& data,
                          std::size_t batch_size = 16);

// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Trains in place. Training loss/accuracy are averages over the epoch's
// batches as they were seen; validation uses the end-of-epoch parameters.
std::vector<EpochRecord> fit(ModelGraph& model, const DatasetManifest& train,
                             const DatasetManifest& validation, const TrainConfig& config,
                             const EpochCallback& on_epoch = {});

// Splits `data` with config.splits and config.seed, trains on the training
// part and validates on the validation part.
std::vector<EpochRecord> fit(ModelGraph& model, const DatasetManifest& data,
                             const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace plantxvit
