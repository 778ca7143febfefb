#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace jket {

// One training/evaluation run, parsed from strict JSON (unknown keys are
// rejected). Defaults below are the desk-scale choices; everything the models
// read at runtime lives here so a run is reproducible from the file + seed.
struct RunConfig {
  std::string task;  // kge | et | lm | joint-kge-et | joint-kge-lm
  std::uint64_t seed = 0;
  std::string out_dir;

  // role -> path; roles depend on the task (train/dev/test, joint, ...)
  std::map<std::string, std::string> data;

  // embeddings
  std::string embeddings_path;  // empty = random init
  int embed_dim = 32;
  bool embeddings_trainable = true;
  std::size_t vocab_max_size = 70000;

  // model
  int hidden = 32;
  int attention = 100;
  std::vector<int> kge_head = {64, 64};
  std::vector<int> typer_head = {128, 128, 128};
  std::string final_state = "last";
  std::string cell = "lstm";
  std::string kge_encoder = "bilstm";
  bool tie_lm_output = false;
  double tau = 0.5;
  bool typer_sigmoid_threshold = false;
  int context_cap = 0;

  // training
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  double kge_learning_rate = 0;  // 0 = inherit learning_rate
  double lm_learning_rate = 0;
  double et_learning_rate = 0;
  std::string kge_optimizer;  // empty = inherit optimizer
  std::string lm_optimizer;
  std::string et_optimizer;
  int batch_size = 32;
  int epochs = 50;
  double weight_decay = 1e-5;   // lambda of the regularized objective
  double positive_weight = 1.0; // k of the weighted cross-entropy
  int negative_ratio = 1;

  // joint training
  std::string plan = "none";
  std::string unit = "epoch";
  int steps_per_interval = 0;
  std::vector<std::string> order = {"kge", "lm"};
  int cycles = 10;
  double split_train = 0.8;
  double split_dev = 0.1;

  static RunConfig from_json(const std::string& text, const std::string& origin);
  static RunConfig from_file(const std::string& path);
  std::string to_json() const;

  // Structural checks plus (optionally) existence of every referenced path.
  void validate(bool check_paths = true) const;

  const std::string& data_path(const std::string& role) const;
  bool has_data(const std::string& role) const { return data.count(role) != 0; }
};

}  // namespace jket
