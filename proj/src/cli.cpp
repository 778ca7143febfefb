#include "jket/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "jket/gradcheck.hpp"
#include "jket/runner.hpp"

namespace jket {

namespace {

int do_train(const std::string& config_path, bool lenient, bool quiet) {
  RunConfig cfg = RunConfig::from_file(config_path);
  TrainArtifacts artifacts = run_train(cfg, lenient, quiet);
  std::cout << "model: " << artifacts.archive_path << "\n";
  for (const EvalReport& report : artifacts.reports) std::cout << report.to_json() << "\n";
  return 0;
}

int do_eval(const std::string& model_path, const std::string& data_path, const std::string& task,
            const std::string& out_dir, bool lenient) {
  LoadedModel model = load_model(model_path);
  EvalReport report = run_eval(model, task, data_path, lenient);
  std::cout << report.to_json() << "\n";
  if (!out_dir.empty()) append_report(out_dir, report);
  return 0;
}

int do_predict(const std::string& model_path, const std::string& data_path, const std::string& task,
               bool lenient) {
  LoadedModel model = load_model(model_path);
  if (task == "kge") {
    if (!model.kge) throw ConfigError("predict", "archive has no KGE model");
    const std::vector<Triple> triples = read_triples(data_path, lenient);
    const std::vector<double> scores = score_triples(*model.kge, triples);
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const Triple& t = triples[i];
      const bool positive = scores[i] > model.thresholds.threshold_for(t.relation);
      std::cout << t.head << "\t" << t.relation << "\t" << t.tail << "\t" << scores[i] << "\t"
                << (positive ? "true" : "false") << "\n";
    }
  } else if (task == "et") {
    if (!model.typer) throw ConfigError("predict", "archive has no typer model");
    const std::vector<TypingInstance> instances = read_typing(data_path, lenient);
    for (const TypingInstance& inst : instances) {
      const TypePrediction pred = predict_types(*model.typer, inst);
      bool first = true;
      for (int t : pred.predicted) {
        if (!first) std::cout << " ";
        std::cout << model.typer->types.name(t);
        first = false;
      }
      std::cout << "\n";
    }
  } else {
    throw ConfigError("predict", "predict supports tasks kge and et, got " + task);
  }
  return 0;
}

int do_generate(const std::string& model_path, const std::string& prompt, const std::string& mode,
                double temperature, int max_len, std::uint64_t seed) {
  LoadedModel model = load_model(model_path);
  if (!model.lm) throw ConfigError("generate", "archive has no language model");
  GenerateOptions options;
  options.max_len = max_len;
  options.temperature = temperature;
  options.seed = seed;
  if (mode == "greedy") {
    options.sample = false;
  } else if (mode == "sample") {
    options.sample = true;
  } else {
    throw ConfigError("generate", "mode must be greedy or sample, got " + mode);
  }
  const std::vector<std::string> continuation = generate(*model.lm, split_whitespace(prompt), options);
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    if (i) std::cout << " ";
    std::cout << continuation[i];
  }
  std::cout << "\n";
  return 0;
}

int do_gradcheck(std::uint64_t seed, int instances) {
  const GradCheckSummary summary = run_gradcheck_suite(seed, instances);
  for (const GradCheckCase& c : summary.cases) {
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  instances=" << c.instances
              << "  max_rel_err=" << c.max_rel_err << "\n";
  }
  std::cout << (summary.all_pass ? "gradcheck: all checks passed" : "gradcheck: FAILURES above") << "\n";
  return summary.all_pass ? 0 : 1;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"jket: joint KGE / entity-typing / language-model toolkit"};
  app.require_subcommand(1);

  std::string config_path, model_path, data_path, task, out_dir, prompt;
  std::string mode = "greedy";
  double temperature = 1.0;
  int max_len = 20;
  std::uint64_t seed = 1234;
  int instances = 50;
  bool lenient = false;
  bool quiet = false;

  const std::vector<std::string> train_commands = {"train-kge", "train-et", "train-lm",
                                                   "train-joint-kge-et", "train-joint-kge-lm"};
  for (const std::string& name : train_commands) {
    CLI::App* cmd = app.add_subcommand(name, "train from a JSON config");
    cmd->add_option("--config", config_path, "run configuration")->required();
    cmd->add_flag("--lenient", lenient, "skip malformed data lines instead of failing");
    cmd->add_flag("--quiet", quiet, "suppress per-epoch progress");
  }

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved model");
  eval_cmd->add_option("--model", model_path, "model archive")->required();
  eval_cmd->add_option("--data", data_path, "evaluation data")->required();
  eval_cmd->add_option("--task", task, "kge | et | lm")->required();
  eval_cmd->add_option("--out", out_dir, "directory for reports.jsonl");
  eval_cmd->add_flag("--lenient", lenient);

  CLI::App* predict_cmd = app.add_subcommand("predict", "label new records with a saved model");
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--data", data_path)->required();
  predict_cmd->add_option("--task", task, "kge | et")->required();
  predict_cmd->add_flag("--lenient", lenient);

  CLI::App* generate_cmd = app.add_subcommand("generate", "continue a prompt with a language model");
  generate_cmd->add_option("--model", model_path)->required();
  generate_cmd->add_option("--prompt", prompt, "whitespace-tokenized prompt");
  generate_cmd->add_option("--mode", mode, "greedy | sample");
  generate_cmd->add_option("--temperature", temperature);
  generate_cmd->add_option("--max-len", max_len);
  generate_cmd->add_option("--seed", seed);

  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck_cmd->add_option("--seed", seed);
  gradcheck_cmd->add_option("--instances", instances, "random instances per check");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help() << "\n";
      return 0;
    }
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    for (const std::string& name : train_commands) {
      if (app.get_subcommand(name)->parsed()) return do_train(config_path, lenient, quiet);
    }
    if (eval_cmd->parsed()) return do_eval(model_path, data_path, task, out_dir, lenient);
    if (predict_cmd->parsed()) return do_predict(model_path, data_path, task, lenient);
    if (generate_cmd->parsed()) return do_generate(model_path, prompt, mode, temperature, max_len, seed);
    if (gradcheck_cmd->parsed()) return do_gradcheck(seed, instances);
    std::cerr << "usage error: no subcommand\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Usage) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace jket
