// Command-line surface: dataset build, training, evaluation and derivation
// dumps. Exit codes: 0 success, 1 configuration error, 2 data error,
// 3 runtime abort.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lane/checkpoint.hpp"
#include "lane/config.hpp"
#include "lane/eval.hpp"
#include "lane/kernels.hpp"
#include "lane/scan.hpp"
#include "lane/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string data_root() {
  const char* env = std::getenv("LANE_DATA_ROOT");
  return env ? env : "data_out";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lane::scan::DataError("cannot write: " + path.string());
  out << text;
}

struct DataArgs {
  std::string task;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string mcd_train_index;
  std::string mcd_test_index;
  std::string miniscan_train;
  std::string miniscan_test;
};

lane::scan::DatasetSplit build_split(const DataArgs& a) {
  using namespace lane::scan;
  const std::string& t = a.task;
  if (t == "simple" || t == "add_jump" || t == "around_right" || t == "length") {
    return split(t, generate_scan(), a.seed);
  }
  if (t == "mcd1" || t == "mcd2" || t == "mcd3" || t == "mcd") {
    if (a.mcd_train_index.empty() || a.mcd_test_index.empty()) {
      throw DataError(
          "mcd tasks need --mcd-train-index and --mcd-test-index files");
    }
    DatasetSplit s =
        load_mcd(a.mcd_train_index, a.mcd_test_index, generate_scan(), a.seed);
    s.name = t;
    return s;
  }
  if (t == "scan_ext") return generate_scan_ext(a.seed);
  if (t == "miniscan") {
    std::string train = a.miniscan_train;
    std::string test = a.miniscan_test;
    if (train.empty()) train = "data/miniscan_limit_train.txt";
    if (test.empty()) test = "data/miniscan_limit_test.txt";
    std::string warning;
    DatasetSplit s = load_miniscan(train, test, &warning);
    if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
    return s;
  }
  throw lane::ConfigError("unknown task: " + t);
}

int cmd_data(const DataArgs& a) {
  lane::scan::DatasetSplit s = build_split(a);
  const std::size_t published_train = s.train.size();
  if (a.task != "miniscan") lane::scan::extract_dev(s);

  fs::path dir = a.out_dir.empty() ? fs::path(data_root()) / a.task
                                   : fs::path(a.out_dir);
  fs::create_directories(dir);
  lane::scan::save_examples((dir / "train.txt").string(), s.train);
  lane::scan::save_examples((dir / "dev.txt").string(), s.dev);
  lane::scan::save_examples((dir / "test.txt").string(), s.test);

  std::ostringstream sizes;
  sizes << "task " << a.task << "\n"
        << "seed " << a.seed << "\n"
        << "train " << s.train.size() << "\n"
        << "dev " << s.dev.size() << "\n"
        << "test " << s.test.size() << "\n"
        << "train_plus_dev " << published_train << "\n";
  write_text(dir / "sizes.txt", sizes.str());
  std::cout << sizes.str();
  std::cout << "wrote " << dir.string() << "\n";
  return 0;
}

lane::scan::DatasetSplit load_split_dir(const fs::path& dir) {
  lane::scan::DatasetSplit s;
  s.train = lane::scan::load_examples((dir / "train.txt").string());
  if (fs::exists(dir / "dev.txt")) {
    std::ifstream probe(dir / "dev.txt");
    if (probe.peek() != std::ifstream::traits_type::eof()) {
      s.dev = lane::scan::load_examples((dir / "dev.txt").string());
    }
  }
  if (fs::exists(dir / "test.txt")) {
    std::ifstream probe(dir / "test.txt");
    if (probe.peek() != std::ifstream::traits_type::eof()) {
      s.test = lane::scan::load_examples((dir / "test.txt").string());
    }
  }
  return s;
}

struct TrainOutcome {
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
};

TrainOutcome train_one(const lane::RunConfig& cfg, const fs::path& data_dir,
                       const fs::path& out_dir) {
  lane::scan::DatasetSplit split = load_split_dir(data_dir);
  split.seed = cfg.seed;
  fs::create_directories(out_dir);

  std::vector<lane::scan::Example> vocab_source = split.train;
  vocab_source.insert(vocab_source.end(), split.dev.begin(), split.dev.end());
  auto [src_vocab, dst_vocab] = lane::Vocab::build(vocab_source);

  lane::Model model(cfg.model_config(), src_vocab, dst_vocab);
  lane::Rng rng(cfg.seed);
  model.init_params(rng);
  lane::Trainer trainer(model, cfg);

  std::ofstream metrics(out_dir / "metrics.log", std::ios::binary);
  json lessons_json = json::array();
  lane::RunHooks hooks;
  hooks.metrics = &metrics;
  hooks.on_lesson_end = [&](int idx, const lane::LessonSummary& summary) {
    const std::string file = "lesson_" + std::to_string(idx) + ".ckpt";
    json manifest = lane::make_manifest(cfg, model, idx);
    lane::save_checkpoint((out_dir / file).string(), model, manifest);
    lessons_json.push_back({{"label", summary.label},
                            {"pool", summary.pool_size},
                            {"epochs", summary.epochs},
                            {"accuracy", summary.accuracy},
                            {"converged", summary.converged},
                            {"checkpoint", file}});
  };

  lane::CurriculumResult result = trainer.run_curriculum(split, rng, hooks);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  json manifest = lane::make_manifest(cfg, model, -1);
  lane::save_checkpoint((out_dir / "final.ckpt").string(), model, manifest);

  TrainOutcome outcome;
  std::vector<const lane::scan::Example*> dev_ptrs;
  for (const auto& ex : split.dev) dev_ptrs.push_back(&ex);
  if (!dev_ptrs.empty()) {
    outcome.dev_accuracy = lane::exact_match_accuracy(model, dev_ptrs);
  }
  if (!split.test.empty()) {
    lane::EvalReport report = lane::evaluate(model, split.test, &split.train);
    outcome.test_accuracy = report.accuracy;
  }

  json run;
  run["task"] = cfg.task;
  run["seed"] = cfg.seed;
  run["config"] = cfg.to_json();
  run["kernel_lane"] = lane::kernels::active().name;
  run["data"] = {{"train", split.train.size()},
                 {"dev", split.dev.size()},
                 {"test", split.test.size()}};
  run["lessons"] = lessons_json;
  run["warnings"] = result.warnings;
  run["updates"] = result.updates;
  run["skipped_updates"] = result.skipped;
  run["final"] = {{"dev_accuracy", outcome.dev_accuracy},
                  {"test_accuracy", outcome.test_accuracy}};
  write_text(out_dir / "manifest.json", run.dump(2) + "\n");

  std::cout << "seed " << cfg.seed << ": dev " << outcome.dev_accuracy
            << ", test " << outcome.test_accuracy << "\n";
  return outcome;
}

int cmd_eval(const std::string& checkpoint, const fs::path& data_dir,
             const std::string& which, const std::string& out_dir) {
  json manifest;
  std::unique_ptr<lane::Model> model = lane::load_checkpoint(checkpoint, &manifest);
  lane::scan::DatasetSplit split = load_split_dir(data_dir);
  const std::vector<lane::scan::Example>* set = &split.test;
  if (which == "train") set = &split.train;
  else if (which == "dev") set = &split.dev;
  else if (which != "test") throw lane::ConfigError("unknown split: " + which);
  if (set->empty()) throw lane::scan::DataError("empty split: " + which);

  std::vector<std::string> predictions;
  lane::EvalReport report =
      lane::evaluate(*model, *set, &split.train, &predictions);

  std::cout << "examples " << report.total << "\n"
            << "correct " << report.correct << "\n"
            << "accuracy " << report.accuracy << "\n";
  std::cout << lane::per_length_csv(report);
  for (const auto& [cmd, got] : report.failures) {
    std::cout << "fail: IN: " << cmd << " GOT: " << got << "\n";
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "per_length.csv", lane::per_length_csv(report));
    std::string pred_text;
    for (const auto& p : predictions) pred_text += p + "\n";
    write_text(fs::path(out_dir) / "predictions.txt", pred_text);
    json rj = {{"total", report.total},
               {"correct", report.correct},
               {"accuracy", report.accuracy}};
    write_text(fs::path(out_dir) / "report.json", rj.dump(2) + "\n");
  }
  return 0;
}

int cmd_trees(const std::string& checkpoint, const std::string& commands_file) {
  std::unique_ptr<lane::Model> model = lane::load_checkpoint(checkpoint);
  std::ifstream in(commands_file);
  if (!in) throw lane::scan::DataError("cannot open: " + commands_file);
  std::string line;
  while (std::getline(in, line)) {
    const auto toks = lane::scan::tokenize(line);
    if (toks.empty()) continue;
    std::cout << "# " << lane::scan::join(toks) << "\n";
    try {
      std::cout << lane::dump_tree(*model, toks);
    } catch (const lane::Error& e) {
      std::cout << "error: " << e.what() << "\n";
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory-augmented neurosymbolic learner for SCAN-family tasks"};
  app.require_subcommand(1);

  DataArgs data_args;
  CLI::App* data = app.add_subcommand("data", "generate dataset files");
  data->add_option("task", data_args.task,
                   "simple|add_jump|around_right|length|mcd1..3|scan_ext|miniscan")
      ->required();
  data->add_option("--seed", data_args.seed);
  data->add_option("--out", data_args.out_dir, "output dir (default $LANE_DATA_ROOT/<task>)");
  data->add_option("--mcd-train-index", data_args.mcd_train_index);
  data->add_option("--mcd-test-index", data_args.mcd_test_index);
  data->add_option("--miniscan-train", data_args.miniscan_train);
  data->add_option("--miniscan-test", data_args.miniscan_test);

  lane::RunConfig cfg;
  std::string train_data_dir, train_out_dir = "runs", config_file;
  int seeds = 1;
  bool no_simplicity = false, no_curriculum = false;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--task", cfg.task)->required();
  train->add_option("--data", train_data_dir, "dataset dir (default $LANE_DATA_ROOT/<task>)");
  train->add_option("--out", train_out_dir);
  train->add_option("--config", config_file, "key = value config file");
  train->add_option("--seed", cfg.seed);
  train->add_option("--seeds", seeds, "train this many consecutive seeds and report the mean");
  train->add_option("--dim", cfg.dim);
  train->add_option("--pool-size", cfg.pool_size);
  train->add_option("--max-steps", cfg.max_steps);
  train->add_option("--skeleton-cap", cfg.skeleton_cap);
  train->add_option("--gamma", cfg.gamma);
  train->add_option("--samples", cfg.samples);
  train->add_option("--entropy-weight", cfg.entropy_weight);
  train->add_option("--entropy-anneal", cfg.entropy_anneal);
  train->add_option("--lr-theta", cfg.lr_theta);
  train->add_option("--lr-phi", cfg.lr_phi);
  train->add_option("--epoch-cap", cfg.epoch_cap);
  train->add_option("--advance-accuracy", cfg.advance_accuracy);
  train->add_option("--lesson-lengths", cfg.lesson_lengths)->delimiter(',');
  train->add_flag("--no-simplicity", no_simplicity, "gamma = 0");
  train->add_flag("--no-curriculum", no_curriculum, "single lesson over all data");
  train->add_flag("--and-lessons", cfg.and_lessons, "extra lessons by 'and' count");

  std::string eval_checkpoint, eval_data_dir, eval_split = "test", eval_out;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint)->required();
  eval->add_option("--data", eval_data_dir);
  eval->add_option("--split", eval_split, "train|dev|test");
  eval->add_option("--out", eval_out, "directory for csv/predictions/report");

  std::string trees_checkpoint, trees_commands;
  CLI::App* trees = app.add_subcommand("trees", "dump greedy derivations");
  trees->add_option("--checkpoint", trees_checkpoint)->required();
  trees->add_option("--commands", trees_commands, "file with one command per line")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (data->parsed()) return cmd_data(data_args);
    if (train->parsed()) {
      if (!config_file.empty()) {
        lane::RunConfig file_cfg;
        file_cfg.apply_file(config_file);
        // CLI flags win over file values: re-parse flags onto the file config.
        std::string task = cfg.task;
        std::uint64_t seed_cli = cfg.seed;
        file_cfg.task = task;
        if (train->count("--seed") == 0) seed_cli = file_cfg.seed;
        cfg = file_cfg;
        cfg.seed = seed_cli;
      }
      if (no_simplicity) cfg.gamma = 0.0;
      if (no_curriculum) cfg.curriculum = false;
      cfg.validate();
      fs::path data_dir = train_data_dir.empty()
                              ? fs::path(data_root()) / cfg.task
                              : fs::path(train_data_dir);
      if (seeds <= 1) {
        train_one(cfg, data_dir, train_out_dir);
        return 0;
      }
      double sum = 0.0;
      for (int s = 0; s < seeds; ++s) {
        lane::RunConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(s);
        TrainOutcome o = train_one(
            c, data_dir, fs::path(train_out_dir) / ("seed_" + std::to_string(c.seed)));
        sum += o.test_accuracy;
      }
      std::cout << "mean test accuracy over " << seeds << " seeds: "
                << sum / seeds << "\n";
      return 0;
    }
    if (eval->parsed()) {
      fs::path data_dir = eval_data_dir.empty() ? fs::path(data_root())
                                                : fs::path(eval_data_dir);
      return cmd_eval(eval_checkpoint, data_dir, eval_split, eval_out);
    }
    if (trees->parsed()) return cmd_trees(trees_checkpoint, trees_commands);
  } catch (const lane::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const lane::scan::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lane::scan::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lane::VocabError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lane::CheckpointError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime abort: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
