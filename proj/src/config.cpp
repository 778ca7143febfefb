#include "jket/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "jket/error.hpp"

namespace jket {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where,
                    const std::string& origin) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("config", origin + ": unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config", origin + ": not a JSON object");
  reject_unknown(j, {"task", "seed", "out_dir", "data", "embeddings", "model", "train", "joint"}, "config", origin);

  RunConfig cfg;
  if (!j.contains("task")) throw ConfigError("config", origin + ": missing task");
  cfg.task = j["task"].get<std::string>();
  if (!j.contains("seed")) throw ConfigError("config", origin + ": seed is mandatory");
  cfg.seed = j["seed"].get<std::uint64_t>();
  if (!j.contains("out_dir")) throw ConfigError("config", origin + ": missing out_dir");
  cfg.out_dir = j["out_dir"].get<std::string>();

  if (j.contains("data")) {
    if (!j["data"].is_object()) throw ConfigError("config", origin + ": data must be an object");
    for (auto it = j["data"].begin(); it != j["data"].end(); ++it) {
      cfg.data[it.key()] = it.value().get<std::string>();
    }
  }

  if (j.contains("embeddings")) {
    const json& e = j["embeddings"];
    reject_unknown(e, {"path", "dim", "trainable", "vocab_max_size"}, "embeddings", origin);
    cfg.embeddings_path = e.value("path", cfg.embeddings_path);
    cfg.embed_dim = e.value("dim", cfg.embed_dim);
    cfg.embeddings_trainable = e.value("trainable", cfg.embeddings_trainable);
    cfg.vocab_max_size = e.value("vocab_max_size", cfg.vocab_max_size);
  }

  if (j.contains("model")) {
    const json& m = j["model"];
    reject_unknown(m,
                   {"hidden", "attention", "kge_head", "typer_head", "final_state", "cell", "kge_encoder",
                    "tie_lm_output", "tau", "typer_sigmoid_threshold", "context_cap"},
                   "model", origin);
    cfg.hidden = m.value("hidden", cfg.hidden);
    cfg.attention = m.value("attention", cfg.attention);
    if (m.contains("kge_head")) cfg.kge_head = m["kge_head"].get<std::vector<int>>();
    if (m.contains("typer_head")) cfg.typer_head = m["typer_head"].get<std::vector<int>>();
    cfg.final_state = m.value("final_state", cfg.final_state);
    cfg.cell = m.value("cell", cfg.cell);
    cfg.kge_encoder = m.value("kge_encoder", cfg.kge_encoder);
    cfg.tie_lm_output = m.value("tie_lm_output", cfg.tie_lm_output);
    cfg.tau = m.value("tau", cfg.tau);
    cfg.typer_sigmoid_threshold = m.value("typer_sigmoid_threshold", cfg.typer_sigmoid_threshold);
    cfg.context_cap = m.value("context_cap", cfg.context_cap);
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t,
                   {"optimizer", "learning_rate", "kge_learning_rate", "lm_learning_rate", "et_learning_rate",
                    "kge_optimizer", "lm_optimizer", "et_optimizer", "batch_size", "epochs", "weight_decay",
                    "positive_weight", "negative_ratio"},
                   "train", origin);
    cfg.optimizer = t.value("optimizer", cfg.optimizer);
    cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
    cfg.kge_learning_rate = t.value("kge_learning_rate", cfg.kge_learning_rate);
    cfg.lm_learning_rate = t.value("lm_learning_rate", cfg.lm_learning_rate);
    cfg.et_learning_rate = t.value("et_learning_rate", cfg.et_learning_rate);
    cfg.kge_optimizer = t.value("kge_optimizer", cfg.kge_optimizer);
    cfg.lm_optimizer = t.value("lm_optimizer", cfg.lm_optimizer);
    cfg.et_optimizer = t.value("et_optimizer", cfg.et_optimizer);
    cfg.batch_size = t.value("batch_size", cfg.batch_size);
    cfg.epochs = t.value("epochs", cfg.epochs);
    cfg.weight_decay = t.value("weight_decay", cfg.weight_decay);
    cfg.positive_weight = t.value("positive_weight", cfg.positive_weight);
    cfg.negative_ratio = t.value("negative_ratio", cfg.negative_ratio);
  }

  if (j.contains("joint")) {
    const json& jo = j["joint"];
    reject_unknown(jo, {"plan", "unit", "steps_per_interval", "order", "cycles", "split"}, "joint", origin);
    cfg.plan = jo.value("plan", cfg.plan);
    cfg.unit = jo.value("unit", cfg.unit);
    cfg.steps_per_interval = jo.value("steps_per_interval", cfg.steps_per_interval);
    if (jo.contains("order")) cfg.order = jo["order"].get<std::vector<std::string>>();
    cfg.cycles = jo.value("cycles", cfg.cycles);
    if (jo.contains("split")) {
      const auto split = jo["split"].get<std::vector<double>>();
      if (split.size() != 3) throw ConfigError("config", origin + ": split must have three fractions");
      cfg.split_train = split[0];
      cfg.split_dev = split[1];
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config", "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text, path);
}

std::string RunConfig::to_json() const {
  json j;
  j["task"] = task;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["data"] = json::object();
  for (const auto& [role, path] : data) j["data"][role] = path;
  j["embeddings"] = {{"path", embeddings_path},
                     {"dim", embed_dim},
                     {"trainable", embeddings_trainable},
                     {"vocab_max_size", vocab_max_size}};
  j["model"] = {{"hidden", hidden},
                {"attention", attention},
                {"kge_head", kge_head},
                {"typer_head", typer_head},
                {"final_state", final_state},
                {"cell", cell},
                {"kge_encoder", kge_encoder},
                {"tie_lm_output", tie_lm_output},
                {"tau", tau},
                {"typer_sigmoid_threshold", typer_sigmoid_threshold},
                {"context_cap", context_cap}};
  j["train"] = {{"optimizer", optimizer},
                {"learning_rate", learning_rate},
                {"kge_learning_rate", kge_learning_rate},
                {"lm_learning_rate", lm_learning_rate},
                {"et_learning_rate", et_learning_rate},
                {"kge_optimizer", kge_optimizer},
                {"lm_optimizer", lm_optimizer},
                {"et_optimizer", et_optimizer},
                {"batch_size", batch_size},
                {"epochs", epochs},
                {"weight_decay", weight_decay},
                {"positive_weight", positive_weight},
                {"negative_ratio", negative_ratio}};
  j["joint"] = {{"plan", plan},
                {"unit", unit},
                {"steps_per_interval", steps_per_interval},
                {"order", order},
                {"cycles", cycles},
                {"split", std::vector<double>{split_train, split_dev, 1.0 - split_train - split_dev}}};
  return j.dump(2);
}

void RunConfig::validate(bool check_paths) const {
  static const std::set<std::string> kTasks = {"kge", "et", "lm", "joint-kge-et", "joint-kge-lm"};
  if (!kTasks.count(task)) throw ConfigError("config", "unknown task: " + task);
  if (out_dir.empty()) throw ConfigError("config", "out_dir must not be empty");

  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw ConfigError("config", std::string(name) + " must be strictly positive");
  };
  positive(embed_dim, "embeddings.dim");
  positive(hidden, "model.hidden");
  positive(attention, "model.attention");
  positive(tau, "model.tau");
  positive(learning_rate, "train.learning_rate");
  if (kge_learning_rate < 0 || lm_learning_rate < 0 || et_learning_rate < 0) {
    throw ConfigError("config", "per-task learning rates must be non-negative");
  }
  positive(batch_size, "train.batch_size");
  positive(epochs, "train.epochs");
  positive(positive_weight, "train.positive_weight");
  positive(negative_ratio, "train.negative_ratio");
  positive(static_cast<double>(vocab_max_size), "embeddings.vocab_max_size");
  if (weight_decay < 0) throw ConfigError("config", "train.weight_decay must be non-negative");
  for (int w : kge_head) positive(w, "model.kge_head width");
  for (int w : typer_head) positive(w, "model.typer_head width");
  if (typer_head.size() != 3) throw ConfigError("config", "model.typer_head needs exactly three widths");
  if (context_cap < 0) throw ConfigError("config", "model.context_cap must be >= 0");

  // required data roles per task; enforced only when the config is about to
  // drive a run (an archive snapshot may be loaded without its data files)
  if (check_paths) {
    auto require_role = [this](const char* role) {
      if (!data.count(role)) throw ConfigError("config", "task " + task + " needs data." + role);
    };
    if ((task == "kge" || task == "lm") && !data.count("joint")) require_role("train");
    if (task == "et") require_role("train");
    if (task == "joint-kge-lm") require_role("joint");
    if (task == "joint-kge-et") {
      require_role("triples_train");
      require_role("typing_train");
    }
  }

  if (task == "joint-kge-lm" || task == "joint-kge-et") {
    if (cycles < 1) throw ConfigError("config", "joint.cycles must be >= 1");
    if (unit != "epoch" && unit != "steps") throw ConfigError("config", "joint.unit must be epoch or steps");
    if (unit == "steps" && steps_per_interval < 1) {
      throw ConfigError("config", "joint.steps_per_interval must be >= 1 for the steps unit");
    }
    if (order.empty()) throw ConfigError("config", "joint.order must not be empty");
    if (split_train <= 0 || split_dev < 0 || split_train + split_dev >= 1.0) {
      throw ConfigError("config", "joint.split fractions are invalid");
    }
  }

  if (check_paths) {
    for (const auto& [role, path] : data) {
      if (!std::filesystem::exists(path)) {
        throw ConfigError("config", "data." + role + " does not exist: " + path);
      }
    }
    if (!embeddings_path.empty() && !std::filesystem::exists(embeddings_path)) {
      throw ConfigError("config", "embeddings.path does not exist: " + embeddings_path);
    }
  }
}

const std::string& RunConfig::data_path(const std::string& role) const {
  auto it = data.find(role);
  if (it == data.end()) throw ConfigError("config", "missing data role: " + role);
  return it->second;
}

}  // namespace jket
