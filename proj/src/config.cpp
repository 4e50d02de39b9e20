#include "bfamr/config.hpp"

#include <algorithm>
#include <cctype>
#include <system_error>

#include "bfamr/error.hpp"

extern char** environ;

namespace bfamr {

namespace {

bool is_model_key(const std::string& key) {
  const auto keys = ModelConfig{}.to_map();
  return keys.count(key) > 0;
}

}  // namespace

void RunConfig::apply(const KeyValues& kv) {
  KeyValues model_kv = model.to_map();
  for (const auto& [k, v] : kv) {
    if (is_model_key(k)) model_kv[k] = v;
    else if (k == "batch_size") train.batch_size = parse_int(k, v);
    else if (k == "epochs") train.epochs = parse_int(k, v);
    else if (k == "warmup") train.warmup = parse_int(k, v);
    else if (k == "lr_scale") train.lr_scale = parse_double(k, v);
    else if (k == "seed") train.seed = parse_uint64(k, v);
    else if (k == "deterministic_prob") train.deterministic_prob = parse_double(k, v);
    else if (k == "clip_norm") train.clip_norm = parse_double(k, v);
    else if (k == "eval_every") train.eval_every = parse_int(k, v);
    else if (k == "dev_beam") train.dev_beam = parse_int(k, v);
    else if (k == "smatch_restarts") train.smatch_restarts = parse_int(k, v);
    else if (k == "train_corpus") train_corpus = v;
    else if (k == "dev_corpus") dev_corpus = v;
    else if (k == "vocab") vocab = v;
    else if (k == "out_dir") out_dir = v;
    else if (k == "min_freq") min_freq = parse_int(k, v);
    else throw UserError("unknown config key '" + k + "'");
  }
  model = ModelConfig::from_map(model_kv);
}

KeyValues RunConfig::to_kv() const {
  KeyValues kv = model.to_map();
  kv["batch_size"] = std::to_string(train.batch_size);
  kv["epochs"] = std::to_string(train.epochs);
  kv["warmup"] = std::to_string(train.warmup);
  kv["lr_scale"] = std::to_string(train.lr_scale);
  kv["seed"] = std::to_string(train.seed);
  kv["deterministic_prob"] = std::to_string(train.deterministic_prob);
  kv["clip_norm"] = std::to_string(train.clip_norm);
  kv["eval_every"] = std::to_string(train.eval_every);
  kv["dev_beam"] = std::to_string(train.dev_beam);
  kv["smatch_restarts"] = std::to_string(train.smatch_restarts);
  kv["train_corpus"] = train_corpus.string();
  kv["dev_corpus"] = dev_corpus.string();
  kv["vocab"] = vocab.string();
  kv["out_dir"] = out_dir.string();
  kv["min_freq"] = std::to_string(min_freq);
  return kv;
}

void RunConfig::resolve_paths(const std::filesystem::path& base) {
  for (auto* p : {&train_corpus, &dev_corpus, &vocab, &out_dir})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  if (!model.embedder_path.empty() && std::filesystem::path(model.embedder_path).is_relative())
    model.embedder_path = (base / model.embedder_path).string();
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (min_freq < 1) throw UserError("min_freq must be at least 1");
  if (train_corpus.empty()) throw UserError("train_corpus is required");
  if (out_dir.empty()) throw UserError("out_dir is required");
}

void RunConfig::validate_paths() const {
  auto require_file = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::is_regular_file(p))
      throw IoError(std::string(what) + " not found: " + p.string());
  };
  require_file(train_corpus, "train corpus");
  if (!dev_corpus.empty()) require_file(dev_corpus, "dev corpus");
  if (!vocab.empty()) require_file(vocab, "vocabulary");
  if (model.embedder == "file") require_file(model.embedder_path, "embedding file");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());
}

KeyValues env_overrides(const std::map<std::string, std::string>& environment) {
  const std::string prefix = kEnvPrefix;
  KeyValues kv;
  for (const auto& [name, value] : environment) {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) continue;
    std::string key = name.substr(prefix.size());
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    kv[key] = value;
  }
  return kv;
}

KeyValues process_env_overrides() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry = *e;
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env_overrides(env);
}

RunConfig load_run_config(const std::filesystem::path& path, const KeyValues& overrides) {
  RunConfig config;
  config.apply(read_kv_file(path));
  config.apply(overrides);
  config.resolve_paths(path.parent_path());
  return config;
}

}  // namespace bfamr
