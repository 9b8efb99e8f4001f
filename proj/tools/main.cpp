// plantxvit: train, eval, explain and inspect commands.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 data error,
// 3 numeric failure during training, 4 anything unexpected.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plantxvit/data.hpp"
#include "plantxvit/error.hpp"
#include "plantxvit/explain.hpp"
#include "plantxvit/metrics.hpp"
#include "plantxvit/model.hpp"
#include "plantxvit/run_config.hpp"
#include "plantxvit/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace plantxvit;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInternal = 4;

constexpr const char* kResolvedConfig = "config.ini";
constexpr const char* kCheckpointFile = "model.pxvt";

// Flags shared by every command. Empty strings and unset optionals mean the
// config file (or the default) decides.
struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  bool json = false;

  std::optional<std::size_t> input_size, num_classes, depth;
  std::string patch_size;
  std::string inception;
  std::string averaging;
  bool skip_corrupt = false;

  // train
  std::optional<std::size_t> epochs, batch;
  std::optional<double> lr, clip_norm;
  std::string optimizer;
  std::string init_checkpoint;
  std::string init_prefix;

  // eval
  std::string split = "test";

  // explain
  std::string method;
  std::string image;
  std::optional<std::size_t> index, class_index;
  std::string layer = std::string(kInceptionLayer);
  std::string grid = "8x8";
  std::size_t samples = 512;
  std::size_t top_k = 5;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--data", f.data, "dataset directory, or synth[:per_class[,seed]]");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "seed for every random choice");
  cmd->add_flag("--json", f.json, "print machine-readable JSON on stdout");
  cmd->add_option("--input-size", f.input_size, "square input side in pixels");
  cmd->add_option("--num-classes", f.num_classes, "number of classes");
  cmd->add_option("--depth", f.depth, "number of transformer blocks");
  cmd->add_option("--patch-size", f.patch_size, "patch size, or a comma list to sweep");
  cmd->add_option("--inception", f.inception, "inception widths: default or matched");
  cmd->add_option("--averaging", f.averaging, "macro, micro or weighted");
  cmd->add_flag("--skip-corrupt", f.skip_corrupt, "skip unreadable images with a warning");
}

void add_checkpoint(CLI::App* cmd, Flags& f) {
  cmd->add_option("--checkpoint", f.checkpoint, "model checkpoint (.pxvt)");
}

// Config file first, flags on top.
RunConfig resolve(const Flags& f, const fs::path& fallback_config = {}) {
  RunConfig cfg;
  if (!f.config.empty()) {
    cfg = load_run_config(f.config);
  } else if (!fallback_config.empty() && fs::exists(fallback_config)) {
    cfg = load_run_config(fallback_config);
  }
  if (!f.data.empty()) cfg.data = f.data;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.checkpoint.empty()) cfg.checkpoint = f.checkpoint;
  if (f.seed) {
    cfg.train.seed = *f.seed;
    cfg.model.seed = *f.seed;
  }
  if (f.input_size) cfg.model.input_size = *f.input_size;
  if (f.num_classes) {
    cfg.model.num_classes = *f.num_classes;
    cfg.explicit_keys.insert("model.num_classes");
  }
  if (f.depth) cfg.model.transformer_depth = *f.depth;
  if (!f.patch_size.empty()) cfg.patch_sizes = parse_size_list(f.patch_size);
  if (f.inception == "matched") {
    cfg.model.inception = InceptionConfig::reference_matched();
  } else if (f.inception == "default") {
    cfg.model.inception = InceptionConfig{};
  } else if (!f.inception.empty()) {
    throw ConfigError("--inception: expected default or matched, got '" + f.inception + "'");
  }
  if (!f.averaging.empty()) cfg.averaging = parse_averaging(f.averaging);
  if (f.skip_corrupt) cfg.skip_corrupt = true;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.batch) cfg.train.batch_size = *f.batch;
  if (f.lr) cfg.train.optimizer.learning_rate = *f.lr;
  if (f.clip_norm) cfg.train.clip_norm = *f.clip_norm;
  if (!f.optimizer.empty()) cfg.optimizers = parse_optimizer_list(f.optimizer);
  if (!f.init_checkpoint.empty()) cfg.init_checkpoint = f.init_checkpoint;
  if (!f.init_prefix.empty()) cfg.init_prefix = f.init_prefix;
  cfg.model.patch_size = cfg.patch_sizes.front();
  cfg.train.optimizer.kind = cfg.optimizers.front();
  return cfg;
}

// Takes the class count from the data unless it was set explicitly.
DatasetManifest load_data(RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("no dataset given (use --data or paths.data)");
  const bool synthetic = cfg.data.rfind("synth", 0) == 0;
  DatasetManifest data = load_run_data(cfg);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  if (!synthetic) {
    if (!cfg.explicit_keys.contains("model.num_classes")) {
      cfg.model.num_classes = data.classes.size();
    } else if (cfg.model.num_classes != data.classes.size()) {
      throw ConfigError("num_classes is " + std::to_string(cfg.model.num_classes) + " but " +
                        cfg.data + " has " + std::to_string(data.classes.size()) + " classes");
    }
  }
  return data;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, text);
}

std::string grouped(std::size_t n) {
  std::string digits = std::to_string(n), out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

MetricsReport report_for(const ModelGraph& model, const DatasetManifest& data,
                         const RunConfig& cfg) {
  const EvaluationResult r = evaluate(model, data, cfg.train.batch_size);
  return full_report(r.labels, r.predictions, r.probabilities, model.output_shape().back(), r.loss,
                     cfg.averaging);
}

std::string metrics_row(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setw(8) << fixed(r.loss.value_or(0), 4) << std::setw(9) << fixed(r.accuracy, 4)
     << std::setw(10) << fixed(r.precision, 4) << std::setw(8) << fixed(r.recall, 4)
     << std::setw(8) << fixed(r.f1, 4) << std::setw(8)
     << (r.auc ? fixed(*r.auc, 4) : std::string("n/a")) << std::setw(8) << fixed(r.kappa, 4);
  return os.str();
}

constexpr const char* kMetricsHeader = "    Loss Accuracy Precision  Recall      F1     AUC   Kappa";

// ---------------------------------------------------------------------------
// train

struct RunResult {
  std::size_t patch_size;
  OptimizerKind optimizer;
  fs::path dir;
  std::size_t epochs_run;
  MetricsReport report;
};

RunResult train_one(RunConfig cfg, const DatasetManifest& data, std::size_t patch,
                    OptimizerKind kind, const fs::path& dir, bool quiet) {
  cfg.model.patch_size = patch;
  cfg.patch_sizes = {patch};
  cfg.train.optimizer.kind = kind;
  cfg.optimizers = {kind};
  cfg.out = dir;
  fs::create_directories(dir);

  const DatasetSplit split = split_dataset(data, cfg.train.splits, cfg.train.seed);
  if (split.train.size() == 0) throw DataError("training split is empty");
  ModelGraph model = build_model(cfg.model);
  if (!cfg.init_checkpoint.empty()) {
    const std::size_t n = load_checkpoint_prefix(model, cfg.init_checkpoint, cfg.init_prefix);
    if (!quiet) {
      std::cerr << "loaded " << n << " tensors with prefix '" << cfg.init_prefix << "' from "
                << cfg.init_checkpoint.string() << "\n";
    }
  }
  write_text(dir / kResolvedConfig, cfg.to_text());

  std::ofstream log(dir / "epochs.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw DataError("cannot write " + (dir / "epochs.jsonl").string());
  const auto records = fit(model, split.train, split.validation, cfg.train, [&](const EpochRecord& r) {
    log << r.to_json(false) << "\n";
    log.flush();
    if (!quiet) {
      std::cerr << "[p=" << patch << " " << to_string(kind) << "] epoch " << r.epoch << "/"
                << cfg.train.epochs << "  loss " << fixed(r.train_loss, 4) << "  acc "
                << fixed(r.train_accuracy, 4);
      if (r.has_validation) {
        std::cerr << "  val_loss " << fixed(r.val_loss, 4) << "  val_acc " << fixed(r.val_accuracy, 4);
      }
      std::cerr << "  (" << fixed(r.seconds, 1) << " s)\n";
    }
    return true;
  });
  save_checkpoint(model, dir / kCheckpointFile);

  const bool has_val = split.validation.size() > 0;
  MetricsReport report = report_for(model, has_val ? split.validation : split.train, cfg);
  if (!has_val) report.flags.push_back("validation_split_empty:reported_on_training_split");
  write_text(dir / "val_metrics.json", report.to_json() + "\n");
  return {patch, kind, dir, records.size(), std::move(report)};
}

int cmd_train(const Flags& f) {
  RunConfig cfg = resolve(f);
  DatasetManifest data = load_data(cfg);
  cfg.validate();

  const bool sweep = cfg.patch_sizes.size() * cfg.optimizers.size() > 1;
  std::vector<RunResult> runs;
  for (std::size_t p : cfg.patch_sizes) {
    for (OptimizerKind k : cfg.optimizers) {
      const fs::path dir =
          sweep ? cfg.out / ("p" + std::to_string(p) + "_" + std::string(to_string(k))) : cfg.out;
      runs.push_back(train_one(cfg, data, p, k, dir, f.json));
    }
  }

  json summary = json::array();
  for (const auto& r : runs) {
    summary.push_back({{"patch_size", r.patch_size},
                       {"optimizer", to_string(r.optimizer)},
                       {"dir", r.dir.string()},
                       {"epochs", r.epochs_run},
                       {"report", json::parse(r.report.to_json())}});
  }
  if (sweep) write_text(cfg.out / "sweep.json", summary.dump(2) + "\n");

  if (f.json) {
    std::cout << (sweep ? summary : summary[0]).dump(2) << "\n";
    return 0;
  }
  std::cout << "Patch  Optimizer" << kMetricsHeader << "\n";
  for (const auto& r : runs) {
    std::cout << std::setw(5) << r.patch_size << "  " << std::left << std::setw(9)
              << to_string(r.optimizer) << std::right << metrics_row(r.report) << "\n";
  }
  std::cout << "outputs in " << cfg.out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval, explain: both start from a checkpoint

fs::path checkpoint_path(const Flags& f) {
  if (!f.checkpoint.empty()) return f.checkpoint;
  if (!f.config.empty()) {
    const RunConfig cfg = load_run_config(f.config);
    if (!cfg.checkpoint.empty()) return cfg.checkpoint;
    return cfg.out / kCheckpointFile;
  }
  return fs::path(f.out.empty() ? "run" : f.out) / kCheckpointFile;
}

// The config written next to a checkpoint by `train` is used when no
// --config is given.
struct Loaded {
  RunConfig cfg;
  ModelGraph model;
};

Loaded load_trained(const Flags& f, std::optional<DatasetManifest>* data) {
  const fs::path ckpt = checkpoint_path(f);
  if (!fs::exists(ckpt)) throw DataError("checkpoint not found: " + ckpt.string());
  RunConfig cfg = resolve(f, ckpt.parent_path() / kResolvedConfig);
  if (data) {
    if (!cfg.data.empty()) *data = load_data(cfg);
  }
  cfg.validate();
  ModelGraph model = load_checkpoint(ckpt, cfg.model);
  if (f.out.empty()) cfg.out = ckpt.parent_path();
  return {std::move(cfg), std::move(model)};
}

int cmd_eval(const Flags& f) {
  std::optional<DatasetManifest> data;
  auto [cfg, model] = load_trained(f, &data);
  if (!data) throw ConfigError("eval needs a dataset (use --data or paths.data)");

  DatasetManifest subset;
  if (f.split == "all") {
    subset = *data;
  } else {
    DatasetSplit split = split_dataset(*data, cfg.train.splits, cfg.train.seed);
    if (f.split == "test") {
      subset = std::move(split.test);
    } else if (f.split == "validation") {
      subset = std::move(split.validation);
    } else if (f.split == "train") {
      subset = std::move(split.train);
    } else {
      throw ConfigError("--split: expected test, validation, train or all, got '" + f.split + "'");
    }
  }
  if (subset.size() == 0) throw DataError("the " + f.split + " split is empty");

  const EvaluationResult r = evaluate(model, subset, cfg.train.batch_size);
  const std::size_t classes = model.output_shape().back();
  const MetricsReport report =
      full_report(r.labels, r.predictions, r.probabilities, classes, r.loss, cfg.averaging);
  const ConfusionMatrix cm = confusion_matrix(r.labels, r.predictions, classes, data->classes);
  const RocReport roc = roc_auc(r.probabilities, r.labels, classes, cfg.averaging);

  write_text(cfg.out / "metrics.json", report.to_json() + "\n");
  write_text(cfg.out / "confusion.csv", cm.to_csv());
  write_text(cfg.out / "roc.csv", roc.to_csv());

  if (f.json) {
    std::cout << report.to_json() << "\n";
  } else {
    std::cout << "split " << f.split << " (" << subset.size() << " images)\n"
              << kMetricsHeader << "\n"
              << metrics_row(report) << "\n";
    for (const auto& flag : report.flags) std::cout << "flag: " << flag << "\n";
    std::cout << "outputs in " << cfg.out.string() << "\n";
  }
  return 0;
}

int cmd_explain(const Flags& f) {
  if (f.method != "gradcam" && f.method != "lime") {
    throw ConfigError("unknown method '" + f.method + "' (expected gradcam or lime)");
  }
  std::optional<DatasetManifest> data;
  auto [cfg, model] = load_trained(f, f.image.empty() ? &data : nullptr);
  const std::size_t size = cfg.model.input_size;

  Tensor<float> image;
  std::string source;
  if (!f.image.empty()) {
    image = resize_bilinear(decode_ppm(read_file(f.image)), size, size);
    source = f.image;
  } else {
    if (!data) throw ConfigError("explain needs --image or a dataset with --index");
    const std::size_t i = f.index.value_or(0);
    if (i >= data->size()) {
      throw ConfigError("--index " + std::to_string(i) + " out of range for " +
                        std::to_string(data->size()) + " images");
    }
    image = data->samples[i].pixels;
    source = data->samples[i].source;
  }

  const Tensor<float> probs = predict(model, reshape(image, {1, size, size, 3}));
  const std::size_t classes = probs.dim(1);
  std::size_t cls = 0;
  if (f.class_index) {
    cls = *f.class_index;
    if (cls >= classes) {
      throw ConfigError("--class " + std::to_string(cls) + " out of range for " +
                        std::to_string(classes) + " classes");
    }
  } else {
    for (std::size_t c = 1; c < classes; ++c) {
      if (probs[c] > probs[cls]) cls = c;
    }
  }

  if (f.method == "gradcam") {
    const Heatmap heat = grad_cam(model, image, cls, f.layer);
    const auto peak = std::max_element(heat.values.begin(), heat.values.end()) - heat.values.begin();
    const std::size_t py = static_cast<std::size_t>(peak) / heat.width;
    const std::size_t px = static_cast<std::size_t>(peak) % heat.width;
    json side = json::parse(heatmap_sidecar_json(heat));
    side["image"] = source;
    side["peak"] = {{"y", py}, {"x", px}};
    write_text(cfg.out / "heatmap.pgm", heatmap_to_pgm(heat));
    write_text(cfg.out / "heatmap.json", side.dump(2) + "\n");
    if (f.json) {
      std::cout << side.dump(2) << "\n";
    } else {
      std::cout << "grad-cam for class " << cls << " at layer " << heat.layer << ": peak at (y="
                << py << ", x=" << px << ")\n"
                << "outputs in " << cfg.out.string() << "\n";
    }
    return 0;
  }

  LimeOptions opts;
  const auto x = f.grid.find('x');
  if (x == std::string::npos) throw ConfigError("--grid: expected ROWSxCOLS, got '" + f.grid + "'");
  opts.rows = parse_size_list(f.grid.substr(0, x)).front();
  opts.cols = parse_size_list(f.grid.substr(x + 1)).front();
  opts.n_samples = f.samples;
  opts.top_k = f.top_k;
  opts.seed = cfg.train.seed;
  const ModelGraph& m = model;
  const auto e = lime_explain([&m](const Tensor<float>& batch) { return predict(m, batch); },
                              image, cls, opts);
  json out = json::parse(e.to_json());
  out["image"] = source;
  write_text(cfg.out / "lime.json", out.dump(2) + "\n");
  if (f.json) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "lime for class " << cls << " (" << opts.rows << "x" << opts.cols << " grid, r2 "
              << fixed(e.r2, 3) << ")\n";
    for (std::size_t id : e.top_k) {
      std::cout << "  segment " << id << " (row " << id / opts.cols << ", col " << id % opts.cols
                << ")  weight " << fixed(e.weights[id], 5) << "\n";
    }
    std::cout << "outputs in " << cfg.out.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// inspect

json inspect_json(const ModelGraph& model, const ParamTable& table, double flops,
                  std::size_t ckpt_bytes) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json row{{"layer", r.layer}, {"type", r.kind}, {"output_shape", r.output_shape},
             {"params", r.params}};
    row["target"] = r.reference ? json(*r.reference) : json(nullptr);
    rows.push_back(std::move(row));
  }
  const auto& c = *model.config();
  return json{{"input_size", c.input_size},
              {"num_classes", c.num_classes},
              {"patch_size", c.patch_size},
              {"depth", c.transformer_depth},
              {"rows", rows},
              {"total", table.total},
              {"fixed_total", table.fixed_total},
              {"inception_params", table.total - table.fixed_total},
              {"target_total", table.reference_total ? json(*table.reference_total) : json(nullptr)},
              {"target_fixed_total", c.is_canonical_geometry() ? json(kReferenceFixedParams) : json(nullptr)},
              {"flops", flops},
              {"gflops", flops / 1e9},
              {"reference_gflops", kReferenceGflops},
              {"checkpoint_bytes", ckpt_bytes},
              {"checkpoint_megabytes", static_cast<double>(ckpt_bytes) / 1e6},
              {"reference_checkpoint_megabytes", kReferenceCheckpointMegabytes}};
}

void print_inspect(const ModelGraph& model, const ParamTable& table, double flops,
                   std::size_t ckpt_bytes) {
  const auto& c = *model.config();
  std::cout << "PlantXViT " << c.input_size << "x" << c.input_size << "x3, " << c.num_classes
            << " classes, patch " << c.patch_size << ", depth " << c.transformer_depth << "\n\n";
  std::cout << std::left << std::setw(16) << "Layer" << std::setw(24) << "Type" << std::setw(16)
            << "Output shape" << std::right << std::setw(10) << "Params" << std::setw(10)
            << "Target" << "\n";
  for (const auto& r : table.rows) {
    std::cout << std::left << std::setw(16) << r.layer << std::setw(24) << r.kind << std::setw(16)
              << to_string(r.output_shape) << std::right << std::setw(10) << grouped(r.params)
              << std::setw(10) << (r.reference ? grouped(*r.reference) : std::string("-"));
    if (r.reference) std::cout << (*r.reference == r.params ? "  ok" : "  differs");
    std::cout << "\n";
  }
  std::cout << "\nFixed part (all but inception): " << grouped(table.fixed_total);
  if (c.is_canonical_geometry()) std::cout << "   target " << grouped(kReferenceFixedParams);
  std::cout << "\nInception block:                " << grouped(table.total - table.fixed_total);
  if (c.is_canonical_geometry()) std::cout << "   target " << grouped(kReferenceInceptionParams);
  std::cout << "\nTotal parameters:               " << grouped(table.total);
  if (table.reference_total) std::cout << "   target " << grouped(*table.reference_total);
  std::cout << "\nFLOPs per image (MAC = 2):      " << fixed(flops / 1e9, 3) << " G   reference "
            << kReferenceGflops << " G (counting convention unstated)"
            << "\nCheckpoint size:                " << grouped(ckpt_bytes) << " bytes ("
            << fixed(static_cast<double>(ckpt_bytes) / 1e6, 3) << " MB)   reference "
            << kReferenceCheckpointMegabytes << " MB\n";
}

int cmd_inspect(const Flags& f) {
  RunConfig cfg = resolve(f);
  cfg.validate();
  json all = json::array();
  for (std::size_t p : cfg.patch_sizes) {
    PlantXViTConfig mc = cfg.model;
    mc.patch_size = p;
    const ModelGraph model = f.checkpoint.empty() ? build_model(mc) : load_checkpoint(f.checkpoint, mc);
    const ParamTable table = count_params(model);
    const double flops = count_flops(model);
    const std::size_t bytes = checkpoint_size(model.params());
    if (f.json) {
      all.push_back(inspect_json(model, table, flops, bytes));
    } else {
      if (p != cfg.patch_sizes.front()) std::cout << "\n";
      print_inspect(model, table, flops, bytes);
    }
  }
  if (f.json) std::cout << (all.size() == 1 ? all[0] : all).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PlantXViT hybrid CNN and vision-transformer classifier"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "train a model, or sweep patch sizes and optimizers");
  add_common(train, f);
  train->add_option("--epochs", f.epochs, "training epochs");
  train->add_option("--batch", f.batch, "batch size");
  train->add_option("--lr", f.lr, "learning rate");
  train->add_option("--clip-norm", f.clip_norm, "global gradient norm limit (0 disables)");
  train->add_option("--optimizer", f.optimizer, "sgd, rmsprop, adamax, adam or nadam; comma list sweeps");
  train->add_option("--init-checkpoint", f.init_checkpoint, "checkpoint to load before training");
  train->add_option("--init-prefix", f.init_prefix, "only load tensors whose name has this prefix");

  auto* eval = app.add_subcommand("eval", "metrics, confusion matrix and ROC for a checkpoint");
  add_common(eval, f);
  add_checkpoint(eval, f);
  eval->add_option("--split", f.split, "test, validation, train or all");

  auto* explain = app.add_subcommand("explain", "Grad-CAM heatmap or LIME segment weights");
  add_common(explain, f);
  add_checkpoint(explain, f);
  explain->add_option("--method", f.method, "gradcam or lime")->required();
  explain->add_option("--image", f.image, "P6 image to explain");
  explain->add_option("--index", f.index, "dataset image to explain when --image is absent");
  explain->add_option("--class", f.class_index, "class to explain (default: predicted)");
  explain->add_option("--layer", f.layer, "Grad-CAM feature layer");
  explain->add_option("--grid", f.grid, "LIME segment grid, ROWSxCOLS");
  explain->add_option("--samples", f.samples, "LIME perturbation count");
  explain->add_option("--top-k", f.top_k, "LIME segments to report");

  auto* inspect = app.add_subcommand("inspect", "parameter table, FLOPs and checkpoint size");
  add_common(inspect, f);
  add_checkpoint(inspect, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(f);
    if (*eval) return cmd_eval(f);
    if (*explain) return cmd_explain(f);
    return cmd_inspect(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ShapeError& e) {
    std::cerr << "shape mismatch: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
