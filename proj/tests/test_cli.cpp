#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <algorithm>
#include <filesystem>
#include <json.hpp>

#include "plantxvit/error.hpp"
#include "plantxvit/run_config.hpp"

using namespace plantxvit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("plantxvit_test_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(const TempDir& dir, const std::string& args) {
  const fs::path out = dir.path / "stdout.txt", err = dir.path / "stderr.txt";
  const std::string cmd = "cd '" + dir.path.string() + "' && '" + PLANTXVIT_CLI + "' " + args +
                          " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
  return r;
}

const std::string kTiny = "--data synth:6 --input-size 16 --num-classes 2";

}  // namespace

TEST_CASE("parse_config_text") {
  const auto s = parse_config_text(
      "# comment\n[model]\ninput_size = 64\n; another\n\n[train]\n lr = 0.001 \nname = \"a b\"\n");
  CHECK(s.at("model").at("input_size").value == "64");
  CHECK(s.at("model").at("input_size").line == 3);
  CHECK(s.at("train").at("lr").value == "0.001");
  CHECK(s.at("train").at("name").value == "a b");

  CHECK_THROWS_AS(parse_config_text("epochs = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[train\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[train]\nepochs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[train]\nepochs = 1\nepochs = 2\n"), ConfigError);
}

TEST_CASE("RunConfig schema") {
  RunConfig cfg;
  cfg.apply(parse_config_text(
      "[model]\ninput_size = 64\npatch_size = 1,3,5\ninception_pool_proj = 64\n"
      "inception = matched\n[train]\nlr = 0.001\nseed = 9\noptimizer = adam,nadam\n"
      "splits = 0.6,0.2,0.2\n[paths]\ndata = synth:4\n"));
  CHECK(cfg.model.input_size == 64);
  CHECK(cfg.patch_sizes == std::vector<std::size_t>{1, 3, 5});
  // The preset applies before explicit widths.
  auto expected = InceptionConfig::reference_matched();
  expected.pool_proj = 64;
  CHECK(cfg.model.inception == expected);
  CHECK(cfg.train.optimizer.learning_rate == 0.001);
  CHECK(cfg.train.seed == 9);
  CHECK(cfg.model.seed == 9);
  CHECK(cfg.optimizers == std::vector{OptimizerKind::kAdam, OptimizerKind::kNadam});
  CHECK(cfg.train.splits.validation == 0.2);
  CHECK(cfg.data == "synth:4");
  CHECK(cfg.explicit_keys.contains("model.input_size"));
  CHECK_FALSE(cfg.explicit_keys.contains("model.num_classes"));

  RunConfig again;
  again.apply(parse_config_text(cfg.to_text()));
  CHECK(again.to_text() == cfg.to_text());

  auto fails = [](const std::string& text) {
    RunConfig c;
    CHECK_THROWS_AS(c.apply(parse_config_text(text)), ConfigError);
  };
  fails("[model]\ncolour = red\n");
  fails("[extras]\nx = 1\n");
  fails("[model]\ninput_size = -4\n");
  fails("[model]\ninput_size = 12abc\n");
  fails("[train]\nlr = fast\n");
  fails("[train]\noptimizer = adagrad\n");
  fails("[train]\nsplits = 0.5,0.5\n");
  fails("[train]\naveraging = samples\n");
  fails("[model]\ninception = huge\n");

  RunConfig bad;
  bad.patch_sizes = {4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.patch_sizes = {5};
  bad.train.optimizer.learning_rate = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("load_run_data") {
  RunConfig cfg;
  cfg.model.input_size = 16;
  cfg.model.num_classes = 3;
  cfg.data = "synth:5,11";
  const auto data = load_run_data(cfg);
  CHECK(data.size() == 15);
  CHECK(data.samples[0].pixels.shape() == Shape{16, 16, 3});
  cfg.data = "synth";
  CHECK(load_run_data(cfg).size() == 48);
  cfg.data = "synth:x";
  CHECK_THROWS_AS(load_run_data(cfg), ConfigError);
  cfg.data = "";
  CHECK_THROWS_AS(load_run_data(cfg), ConfigError);
  cfg.data = "/nonexistent/plantxvit";
  CHECK_THROWS_AS(load_run_data(cfg), DataError);
}

TEST_CASE("cli inspect") {
  TempDir dir("inspect");
  const auto r = run_cli(dir, "inspect --json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["total"] == 665636);
  CHECK(j["fixed_total"] == 488772);
  CHECK(j["target_total"] == 850500);
  std::size_t sum = 0;
  for (const auto& row : j["rows"]) sum += row["params"].get<std::size_t>();
  CHECK(sum == j["total"]);

  const auto text = run_cli(dir, "inspect --inception matched");
  CHECK(text.code == 0);
  CHECK(text.out.find("850,500   target 850,500") != std::string::npos);
  CHECK(run_cli(dir, "inspect --patch-size 4").code == 1);
  CHECK(run_cli(dir, "inspect --bogus").code == 1);
  CHECK(run_cli(dir, "").code == 1);
}

TEST_CASE("cli train, eval and explain") {
  TempDir dir("train");
  write_file(dir.path / "cfg.ini",
             "[model]\ninput_size = 16\nnum_classes = 2\npatch_size = 3\n"
             "[train]\nepochs = 5\nbatch = 4\nlr = 0.001\nseed = 5\nsplits = 0.5,0.25,0.25\n"
             "[paths]\ndata = synth:8\n");
  auto r = run_cli(dir, "train --config cfg.ini --epochs 2 --out a");
  REQUIRE(r.code == 0);
  for (const char* f : {"model.pxvt", "epochs.jsonl", "val_metrics.json", "config.ini"}) {
    CHECK(fs::exists(dir.path / "a" / f));
  }
  const std::string epochs = read_file(dir.path / "a" / "epochs.jsonl");
  CHECK(std::count(epochs.begin(), epochs.end(), '\n') == 2);
  const auto val = nlohmann::json::parse(read_file(dir.path / "a" / "val_metrics.json"));
  for (const char* key : {"loss", "accuracy", "precision", "recall", "f1", "auc", "kappa"}) {
    CHECK(val.contains(key));
  }

  // Same seed, same bytes.
  REQUIRE(run_cli(dir, "train --config cfg.ini --epochs 2 --out b").code == 0);
  for (const char* f : {"model.pxvt", "epochs.jsonl", "val_metrics.json"}) {
    CHECK(read_file(dir.path / "a" / f) == read_file(dir.path / "b" / f));
  }
  REQUIRE(run_cli(dir, "train --config cfg.ini --epochs 2 --seed 6 --out c").code == 0);
  CHECK(read_file(dir.path / "a" / "model.pxvt") != read_file(dir.path / "c" / "model.pxvt"));

  r = run_cli(dir, "eval --checkpoint a/model.pxvt --json");
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(r.out);
  CHECK(report["accuracy"].get<double>() >= 0.0);
  CHECK(read_file(dir.path / "a" / "confusion.csv").rfind("true\\predicted,class_0,class_1\n", 0) == 0);
  CHECK(read_file(dir.path / "a" / "roc.csv").rfind("class,threshold,fpr,tpr\n", 0) == 0);

  r = run_cli(dir, "eval --checkpoint missing/model.pxvt --data synth:4");
  CHECK(r.code == 2);
  CHECK(r.err.find("missing/model.pxvt") != std::string::npos);

  r = run_cli(dir, "explain --method gradcam --checkpoint a/model.pxvt --index 1 --out g");
  REQUIRE(r.code == 0);
  CHECK(read_file(dir.path / "g" / "heatmap.pgm").rfind("P5\n16 16\n255\n", 0) == 0);
  const auto side = nlohmann::json::parse(read_file(dir.path / "g" / "heatmap.json"));
  CHECK(side["layer"] == "inception");

  const std::string lime = "explain --method lime --checkpoint a/model.pxvt --grid 4x4 --samples 40";
  REQUIRE(run_cli(dir, lime + " --out l1").code == 0);
  REQUIRE(run_cli(dir, lime + " --out l2").code == 0);
  CHECK(read_file(dir.path / "l1" / "lime.json") == read_file(dir.path / "l2" / "lime.json"));

  r = run_cli(dir, "explain --method shap --checkpoint a/model.pxvt");
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown method") != std::string::npos);
}

TEST_CASE("cli sweeps") {
  TempDir dir("sweep");
  const auto r = run_cli(dir, "train " + kTiny + " --patch-size 1,3 --optimizer sgd,adam --epochs 1 "
                                                 "--lr 0.001 --out s --json");
  REQUIRE(r.code == 0);
  const auto runs = nlohmann::json::parse(r.out);
  REQUIRE(runs.size() == 4);
  CHECK(runs[0]["patch_size"] == 1);
  CHECK(runs[3]["optimizer"] == "adam");
  for (const char* sub : {"p1_sgd", "p1_adam", "p3_sgd", "p3_adam"}) {
    CHECK(fs::exists(dir.path / "s" / sub / "val_metrics.json"));
  }
  CHECK(nlohmann::json::parse(read_file(dir.path / "s" / "sweep.json")).size() == 4);
}

TEST_CASE("cli error exit codes") {
  TempDir dir("errors");
  write_file(dir.path / "bad.ini", "[train]\nwarmup = 3\n");
  auto r = run_cli(dir, "train --config bad.ini " + kTiny + " --patch-size 3");
  CHECK(r.code == 1);
  CHECK(r.err.find("warmup") != std::string::npos);
  CHECK(run_cli(dir, "train --config absent.ini " + kTiny + " --patch-size 3").code == 1);
  CHECK(run_cli(dir, "train " + kTiny + " --patch-size 3 --optimizer adagrad").code == 1);

  fs::create_directories(dir.path / "ds" / "a");
  fs::create_directories(dir.path / "ds" / "b");
  write_file(dir.path / "ds" / "a" / "x.ppm", "P6\n2 2\n255\nxx");
  write_file(dir.path / "ds" / "b" / "y.ppm", "P3\n1 1\n255\n0 0 0\n");
  r = run_cli(dir, "train --data ds --input-size 16 --patch-size 3 --epochs 1");
  CHECK(r.code == 2);
  CHECK(r.err.find("x.ppm") != std::string::npos);

  r = run_cli(dir, "train " + kTiny + " --patch-size 3 --optimizer sgd --lr 1e30 --epochs 2 --out nan");
  CHECK(r.code == 3);
}
