#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plantxvit {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix(std::size_t classes, std::vector<std::string> names = {});

  std::size_t classes() const { return classes_; }
  const std::vector<std::string>& names() const { return names_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t i) const;
  std::uint64_t column_sum(std::size_t j) const;
  std::uint64_t trace() const;

  // Each row divided by its sum (zero rows stay zero). Throws Error when empty.
  std::vector<std::vector<double>> normalized() const;
  std::string to_csv() const;  // header row of class names

 private:
  std::size_t classes_;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> y_true,
                                 std::span<const std::size_t> y_pred, std::size_t classes,
                                 std::vector<std::string> names = {});

enum class Averaging { kMacro, kMicro, kWeighted };

std::string to_string(Averaging mode);
Averaging parse_averaging(const std::string& name);  // throws ConfigError

struct ClassStats {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0;
  bool precision_defined = true, recall_defined = true, f1_defined = true;
};

struct Kappa {
  double value = 0;
  bool defined = true;  // false when chance agreement is 1
};

Kappa cohen_kappa(const ConfusionMatrix& cm);

struct RocCurve {
  std::size_t positive_class = 0;
  // Points from (0,0) to (1,1); thresholds[0] is +infinity.
  std::vector<double> fpr, tpr, thresholds;
  double auc = 0;
  bool defined = true;  // false when the class has no positives or no negatives
};

struct RocReport {
  std::vector<RocCurve> curves;
  double auc = 0;  // averaged over defined curves
  bool defined = false;
  std::vector<std::string> flags;

  std::string to_csv() const;  // class,threshold,fpr,tpr
};

// One-vs-rest curves over every distinct score; tied scores move both rates
// together so the trapezoidal area counts ties as one half.
RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive);

RocReport roc_auc(const std::vector<std::vector<double>>& scores,
                  std::span<const std::size_t> y_true, std::size_t classes,
                  Averaging mode = Averaging::kMacro);

struct MetricsReport {
  Averaging averaging = Averaging::kMacro;
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;                 // harmonic mean of the averaged precision and recall
  double f1_per_class_mean = 0;  // average of per-class F1 scores
  double kappa = 0;
  std::optional<double> auc;
  std::optional<double> loss;
  std::vector<ClassStats> per_class;
  std::vector<std::string> flags;

  std::string to_json() const;
};

// Throws Error on an empty matrix.
MetricsReport classification_metrics(const ConfusionMatrix& cm,
                                     Averaging mode = Averaging::kMacro);

// Confusion counts, the scalar suite and AUC in one report.
MetricsReport full_report(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                          const std::vector<std::vector<double>>& scores, std::size_t classes,
                          std::optional<double> loss, Averaging mode = Averaging::kMacro);

}  // namespace plantxvit
