#include "plantxvit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <json.hpp>

#include "plantxvit/error.hpp"

namespace plantxvit {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::string> names)
    : classes_(classes), names_(std::move(names)), counts_(classes * classes, 0) {
  if (classes == 0) throw Error("confusion matrix needs at least one class");
  if (names_.empty()) {
    for (std::size_t i = 0; i < classes; ++i) names_.push_back(std::to_string(i));
  }
  if (names_.size() != classes) throw Error("class name table does not match class count");
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  if (truth >= classes_ || predicted >= classes_) throw Error("confusion index out of range");
  return counts_[truth * classes_ + predicted];
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= classes_ || predicted >= classes_) {
    throw Error("label out of range: (" + std::to_string(truth) + ", " +
                std::to_string(predicted) + ") with " + std::to_string(classes_) + " classes");
  }
  counts_[truth * classes_ + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < classes_; ++j) s += at(i, j);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t j) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < classes_; ++i) s += at(i, j);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < classes_; ++i) s += at(i, i);
  return s;
}

std::vector<std::vector<double>> ConfusionMatrix::normalized() const {
  if (total() == 0) throw Error("cannot normalize an empty confusion matrix");
  std::vector<std::vector<double>> out(classes_, std::vector<double>(classes_, 0.0));
  for (std::size_t i = 0; i < classes_; ++i) {
    const std::uint64_t row = row_sum(i);
    if (row == 0) continue;
    for (std::size_t j = 0; j < classes_; ++j) {
      out[i][j] = static_cast<double>(at(i, j)) / static_cast<double>(row);
    }
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string ConfusionMatrix::to_csv() const {
  std::string out = "true\\predicted";
  for (const auto& n : names_) out += "," + csv_field(n);
  out += "\n";
  for (std::size_t i = 0; i < classes_; ++i) {
    out += csv_field(names_[i]);
    for (std::size_t j = 0; j < classes_; ++j) out += "," + std::to_string(at(i, j));
    out += "\n";
  }
  return out;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> y_true,
                                 std::span<const std::size_t> y_pred, std::size_t classes,
                                 std::vector<std::string> names) {
  if (y_true.size() != y_pred.size()) {
    throw Error("confusion_matrix: " + std::to_string(y_true.size()) + " labels but " +
                std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm(classes, std::move(names));
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_true[i], y_pred[i]);
  return cm;
}

std::string to_string(Averaging mode) {
  switch (mode) {
    case Averaging::kMacro:
      return "macro";
    case Averaging::kMicro:
      return "micro";
    case Averaging::kWeighted:
      return "weighted";
  }
  return "unknown";
}

Averaging parse_averaging(const std::string& name) {
  for (auto mode : {Averaging::kMacro, Averaging::kMicro, Averaging::kWeighted}) {
    if (to_string(mode) == name) return mode;
  }
  throw ConfigError("unknown averaging mode '" + name + "' (expected macro, micro or weighted)");
}

// ---------------------------------------------------------------------------
// Scalar metrics

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& defined) {
  defined = den != 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

double harmonic(double p, double r, bool& defined) {
  defined = p + r > 0;
  return defined ? 2 * p * r / (p + r) : 0.0;
}

// Mean of per-class values under the averaging mode; micro is handled by the
// caller because it pools counts rather than values.
double average(const std::vector<double>& values, const std::vector<double>& support,
               Averaging mode) {
  double total = 0, weight = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = mode == Averaging::kWeighted ? support[i] : 1.0;
    total += w * values[i];
    weight += w;
  }
  return weight > 0 ? total / weight : 0.0;
}

}  // namespace

Kappa cohen_kappa(const ConfusionMatrix& cm) {
  const std::uint64_t n = cm.total();
  if (n == 0) throw Error("cohen_kappa: empty confusion matrix");
  const double total = static_cast<double>(n);
  const double observed = static_cast<double>(cm.trace()) / total;
  double chance = 0;
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    chance += static_cast<double>(cm.row_sum(i)) * static_cast<double>(cm.column_sum(i));
  }
  chance /= total * total;
  if (chance >= 1.0) return {0.0, false};
  return {(observed - chance) / (1.0 - chance), true};
}

MetricsReport classification_metrics(const ConfusionMatrix& cm, Averaging mode) {
  const std::uint64_t n = cm.total();
  if (n == 0) throw Error("classification_metrics: empty confusion matrix");
  MetricsReport r;
  r.averaging = mode;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(n);

  std::vector<double> precision, recall, f1, support;
  std::uint64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    ClassStats s;
    s.tp = cm.at(c, c);
    s.fp = cm.column_sum(c) - s.tp;
    s.fn = cm.row_sum(c) - s.tp;
    s.tn = n - s.tp - s.fp - s.fn;
    s.precision = ratio(s.tp, s.tp + s.fp, s.precision_defined);
    s.recall = ratio(s.tp, s.tp + s.fn, s.recall_defined);
    s.f1 = harmonic(s.precision, s.recall, s.f1_defined);
    const std::string& name = cm.names()[c];
    if (!s.precision_defined) r.flags.push_back("precision_undefined:" + name);
    if (!s.recall_defined) r.flags.push_back("recall_undefined:" + name);
    precision.push_back(s.precision);
    recall.push_back(s.recall);
    f1.push_back(s.f1);
    support.push_back(static_cast<double>(s.tp + s.fn));
    tp_sum += s.tp;
    fp_sum += s.fp;
    fn_sum += s.fn;
    r.per_class.push_back(s);
  }

  bool defined = true;
  if (mode == Averaging::kMicro) {
    r.precision = ratio(tp_sum, tp_sum + fp_sum, defined);
    r.recall = ratio(tp_sum, tp_sum + fn_sum, defined);
  } else {
    r.precision = average(precision, support, mode);
    r.recall = average(recall, support, mode);
  }
  r.f1 = harmonic(r.precision, r.recall, defined);
  if (!defined) r.flags.push_back("f1_undefined");
  r.f1_per_class_mean = mode == Averaging::kMicro ? r.f1 : average(f1, support, mode);

  const Kappa k = cohen_kappa(cm);
  r.kappa = k.value;
  if (!k.defined) r.flags.push_back("kappa_undefined");
  return r;
}

// ---------------------------------------------------------------------------
// ROC

RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw Error("roc_curve: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t neg = positive.size() - pos;

  RocCurve curve;
  curve.defined = pos > 0 && neg > 0;
  curve.fpr.push_back(0);
  curve.tpr.push_back(0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      (positive[order[k]] ? tp : fp) += 1;
      ++k;
    }
    curve.thresholds.push_back(threshold);
    curve.fpr.push_back(neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0);
    curve.tpr.push_back(pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0);
  }
  if (curve.defined) {
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
      curve.auc += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) / 2.0;
    }
  }
  return curve;
}

RocReport roc_auc(const std::vector<std::vector<double>>& scores,
                  std::span<const std::size_t> y_true, std::size_t classes, Averaging mode) {
  if (scores.size() != y_true.size()) throw Error("roc_auc: scores and labels differ in length");
  for (const auto& row : scores) {
    if (row.size() != classes) throw Error("roc_auc: score row width differs from class count");
  }
  for (auto y : y_true) {
    if (y >= classes) throw Error("roc_auc: label out of range");
  }
  RocReport report;
  std::vector<double> aucs, support;
  std::vector<double> column(scores.size());
  for (std::size_t c = 0; c < classes; ++c) {
    std::unique_ptr<bool[]> positive(new bool[scores.size()]);
    std::size_t count = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      column[i] = scores[i][c];
      positive[i] = y_true[i] == c;
      count += positive[i];
    }
    RocCurve curve = roc_curve(column, std::span<const bool>(positive.get(), scores.size()));
    curve.positive_class = c;
    if (curve.defined) {
      aucs.push_back(curve.auc);
      support.push_back(static_cast<double>(count));
    } else {
      report.flags.push_back("auc_undefined:" + std::to_string(c));
    }
    report.curves.push_back(std::move(curve));
  }

  if (mode == Averaging::kMicro) {
    std::vector<double> pooled;
    std::unique_ptr<bool[]> positive(new bool[scores.size() * classes]);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      for (std::size_t c = 0; c < classes; ++c) {
        pooled.push_back(scores[i][c]);
        positive[i * classes + c] = y_true[i] == c;
      }
    }
    const RocCurve micro = roc_curve(pooled, std::span<const bool>(positive.get(), pooled.size()));
    report.defined = micro.defined;
    report.auc = micro.auc;
  } else {
    report.defined = !aucs.empty();
    report.auc = average(aucs, support, mode);
  }
  return report;
}

std::string RocReport::to_csv() const {
  std::string out = "class,threshold,fpr,tpr\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.fpr.size(); ++i) {
      out += std::to_string(c.positive_class) + "," +
             (std::isinf(c.thresholds[i]) ? std::string("inf") : number(c.thresholds[i])) + "," +
             number(c.fpr[i]) + "," + number(c.tpr[i]) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["averaging"] = to_string(averaging);
  j["loss"] = loss ? nlohmann::ordered_json(*loss) : nlohmann::ordered_json(nullptr);
  j["accuracy"] = accuracy;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["f1_per_class_mean"] = f1_per_class_mean;
  j["auc"] = auc ? nlohmann::ordered_json(*auc) : nlohmann::ordered_json(nullptr);
  j["kappa"] = kappa;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& s : per_class) {
    classes.push_back({{"tp", s.tp},
                       {"fp", s.fp},
                       {"fn", s.fn},
                       {"tn", s.tn},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1}});
  }
  j["per_class"] = std::move(classes);
  j["flags"] = flags;
  return j.dump(2);
}

MetricsReport full_report(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                          const std::vector<std::vector<double>>& scores, std::size_t classes,
                          std::optional<double> loss, Averaging mode) {
  MetricsReport r = classification_metrics(confusion_matrix(y_true, y_pred, classes), mode);
  r.loss = loss;
  if (!scores.empty()) {
    RocReport roc = roc_auc(scores, y_true, classes, mode);
    if (roc.defined) r.auc = roc.auc;
    r.flags.insert(r.flags.end(), roc.flags.begin(), roc.flags.end());
  }
  return r;
}

}  // namespace plantxvit
