#include "plantxvit/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>

#include "plantxvit/error.hpp"

namespace plantxvit {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

std::size_t to_size(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double to_double(const std::string& text, const std::string& what) {
  double v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(what + ": expected true or false, got '" + text + "'");
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += format(items[i]);
  }
  return out;
}

}  // namespace

ConfigSections parse_config_text(const std::string& text) {
  ConfigSections sections;
  std::string section;
  std::stringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a [section]");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto [it, inserted] = sections[section].try_emplace(key, ConfigEntry{value, line_no});
    if (!inserted) {
      throw ConfigError(where + ": duplicate key '" + key + "' in [" + section + "] (first at line " +
                        std::to_string(it->second.line) + ")");
    }
  }
  return sections;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split_commas(text)) out.push_back(to_size(part, "list"));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<OptimizerKind> parse_optimizer_list(const std::string& text) {
  std::vector<OptimizerKind> out;
  for (const auto& part : split_commas(text)) out.push_back(parse_optimizer(part));
  if (out.empty()) throw ConfigError("empty optimizer list");
  return out;
}

void RunConfig::apply(const ConfigSections& sections) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size_field = [](std::size_t& field) {
    return Setter([&field](const std::string& v, const std::string& what) { field = to_size(v, what); });
  };
  auto double_field = [](double& field) {
    return Setter([&field](const std::string& v, const std::string& what) { field = to_double(v, what); });
  };
  auto path_field = [](std::filesystem::path& field) {
    return Setter([&field](const std::string& v, const std::string&) { field = v; });
  };
  InceptionConfig& inc = model.inception;

  const std::map<std::string, std::map<std::string, Setter>> schema{
      {"model",
       {{"input_size", size_field(model.input_size)},
        {"num_classes", size_field(model.num_classes)},
        {"patch_size",
         [this](const std::string& v, const std::string&) { patch_sizes = parse_size_list(v); }},
        {"depth", size_field(model.transformer_depth)},
        {"embed_dim", size_field(model.embed_dim)},
        {"heads", size_field(model.heads)},
        {"key_dim", size_field(model.key_dim)},
        {"mlp_hidden", size_field(model.mlp_hidden)},
        {"inception",
         [&inc](const std::string& v, const std::string& what) {
           if (v == "default") {
             inc = InceptionConfig{};
           } else if (v == "matched") {
             inc = InceptionConfig::reference_matched();
           } else {
             throw ConfigError(what + ": expected default or matched, got '" + v + "'");
           }
         }},
        {"inception_branch1", size_field(inc.branch1)},
        {"inception_branch2_reduce", size_field(inc.branch2_reduce)},
        {"inception_branch2_out", size_field(inc.branch2_out)},
        {"inception_branch3_reduce", size_field(inc.branch3_reduce)},
        {"inception_branch3_mid", size_field(inc.branch3_mid)},
        {"inception_branch3_out", size_field(inc.branch3_out)},
        {"inception_pool_proj", size_field(inc.pool_proj)}}},
      {"train",
       {{"epochs", size_field(train.epochs)},
        {"batch", size_field(train.batch_size)},
        {"optimizer",
         [this](const std::string& v, const std::string&) { optimizers = parse_optimizer_list(v); }},
        {"lr", double_field(train.optimizer.learning_rate)},
        {"beta1", double_field(train.optimizer.beta1)},
        {"beta2", double_field(train.optimizer.beta2)},
        {"rho", double_field(train.optimizer.rho)},
        {"epsilon", double_field(train.optimizer.epsilon)},
        {"momentum", double_field(train.optimizer.momentum)},
        {"clip_norm", double_field(train.clip_norm)},
        {"seed",
         [this](const std::string& v, const std::string& what) {
           train.seed = to_size(v, what);
           model.seed = train.seed;
         }},
        {"splits",
         [this](const std::string& v, const std::string& what) {
           const auto parts = split_commas(v);
           if (parts.size() != 3) throw ConfigError(what + ": expected train,validation,test");
           train.splits = {to_double(parts[0], what), to_double(parts[1], what),
                           to_double(parts[2], what)};
         }},
        {"averaging",
         [this](const std::string& v, const std::string&) { averaging = parse_averaging(v); }},
        {"skip_corrupt",
         [this](const std::string& v, const std::string& what) { skip_corrupt = to_bool(v, what); }}}},
      {"paths",
       {{"data", [this](const std::string& v, const std::string&) { data = v; }},
        {"out", path_field(out)},
        {"checkpoint", path_field(checkpoint)},
        {"init_checkpoint", path_field(init_checkpoint)},
        {"init_prefix", [this](const std::string& v, const std::string&) { init_prefix = v; }}}}};

  for (const auto& [section, keys] : sections) {
    const auto known = schema.find(section);
    if (known == schema.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, entry] : keys) {
      if (!known->second.contains(key)) {
        throw ConfigError("line " + std::to_string(entry.line) + ": unknown key '" + key + "' in [" +
                          section + "]");
      }
    }
    // A preset goes first so explicit branch widths refine it.
    if (const auto preset = keys.find("inception"); section == "model" && preset != keys.end()) {
      known->second.at("inception")(preset->second.value,
                                    "line " + std::to_string(preset->second.line) + ": model.inception");
    }
    for (const auto& [key, entry] : keys) {
      if (section == "model" && key == "inception") continue;
      known->second.at(key)(entry.value,
                            "line " + std::to_string(entry.line) + ": " + section + "." + key);
      explicit_keys.insert(section + "." + key);
    }
  }
}

void RunConfig::validate() const {
  if (patch_sizes.empty()) throw ConfigError("at least one patch size is required");
  if (optimizers.empty()) throw ConfigError("at least one optimizer is required");
  for (std::size_t p : patch_sizes) {
    PlantXViTConfig c = model;
    c.patch_size = p;
    c.validate();
  }
  train.validate();
  for (auto kind : optimizers) {
    OptimizerSettings s = train.optimizer;
    s.kind = kind;
    OptimizerState probe(s);
  }
}

std::string RunConfig::to_text() const {
  const auto& inc = model.inception;
  const auto& opt = train.optimizer;
  std::ostringstream os;
  os << "[model]\n"
     << "input_size = " << model.input_size << "\n"
     << "num_classes = " << model.num_classes << "\n"
     << "patch_size = " << join(patch_sizes, [](std::size_t p) { return std::to_string(p); }) << "\n"
     << "depth = " << model.transformer_depth << "\n"
     << "embed_dim = " << model.embed_dim << "\n"
     << "heads = " << model.heads << "\n"
     << "key_dim = " << model.key_dim << "\n"
     << "mlp_hidden = " << model.mlp_hidden << "\n"
     << "inception_branch1 = " << inc.branch1 << "\n"
     << "inception_branch2_reduce = " << inc.branch2_reduce << "\n"
     << "inception_branch2_out = " << inc.branch2_out << "\n"
     << "inception_branch3_reduce = " << inc.branch3_reduce << "\n"
     << "inception_branch3_mid = " << inc.branch3_mid << "\n"
     << "inception_branch3_out = " << inc.branch3_out << "\n"
     << "inception_pool_proj = " << inc.pool_proj << "\n"
     << "\n[train]\n"
     << "epochs = " << train.epochs << "\n"
     << "batch = " << train.batch_size << "\n"
     << "optimizer = "
     << join(optimizers, [](OptimizerKind k) { return std::string(to_string(k)); }) << "\n"
     << "lr = " << shortest(opt.learning_rate) << "\n"
     << "beta1 = " << shortest(opt.beta1) << "\n"
     << "beta2 = " << shortest(opt.beta2) << "\n"
     << "rho = " << shortest(opt.rho) << "\n"
     << "epsilon = " << shortest(opt.epsilon) << "\n"
     << "momentum = " << shortest(opt.momentum) << "\n"
     << "clip_norm = " << shortest(train.clip_norm) << "\n"
     << "seed = " << train.seed << "\n"
     << "splits = " << shortest(train.splits.train) << "," << shortest(train.splits.validation)
     << "," << shortest(train.splits.test) << "\n"
     << "averaging = " << to_string(averaging) << "\n"
     << "skip_corrupt = " << (skip_corrupt ? "true" : "false") << "\n"
     << "\n[paths]\n"
     << "data = " << data << "\n"
     << "out = " << out.string() << "\n";
  if (!checkpoint.empty()) os << "checkpoint = " << checkpoint.string() << "\n";
  if (!init_checkpoint.empty()) os << "init_checkpoint = " << init_checkpoint.string() << "\n";
  os << "init_prefix = " << init_prefix << "\n";
  return os.str();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  RunConfig cfg;
  try {
    cfg.apply(parse_config_text(text));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cfg;
}

DatasetManifest load_run_data(const RunConfig& config) {
  const std::string& spec = config.data;
  if (spec.empty()) throw ConfigError("no dataset given (set paths.data or --data)");
  if (spec == "synth" || spec.rfind("synth:", 0) == 0) {
    SynthSpec s;
    s.classes = config.model.num_classes;
    s.image_size = config.model.input_size;
    if (spec.size() > 6) {
      const auto parts = split_commas(spec.substr(6));
      s.per_class = to_size(parts[0], "synthetic samples per class");
      if (parts.size() > 1) s.seed = to_size(parts[1], "synthetic data seed");
      if (parts.size() > 2) throw ConfigError("synthetic data spec is synth:<per_class>[,<seed>]");
    }
    return synth_dataset(s);
  }
  return load_dataset(spec, config.model.input_size, {.skip_corrupt = config.skip_corrupt});
}

}  // namespace plantxvit
