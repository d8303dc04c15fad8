// qexplore: generate synthetic app corpora, train and test the DQN explorer,
// run the random baseline, probe a checkpoint and summarize trace logs.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qexplore/error.hpp"
#include "qexplore/harness.hpp"

namespace fs = std::filesystem;
using namespace qexplore;

namespace {

struct CommonOptions {
  std::uint64_t seed = 1;
  int steps = 2000;
  double epsilon = 0.2;
  double gamma = 0.6;
  std::string embedding;
  int embedding_dim = 16;
  std::vector<std::string> disabled;
  std::string out = "out";
  int repeats = 3;
  int fold = 0;
  bool carry_model = false;
};

void add_agent_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--steps", o.steps, "Iterations per app")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epsilon", o.epsilon, "Exploration rate")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--gamma", o.gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--embedding", o.embedding, "Embedding table file (word v1 ... vL)");
  cmd->add_option("--embedding-dim", o.embedding_dim, "Embedding dimension L")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--disable-feature", o.disabled, "Zero a feature: fcr, fcd or txc")
      ->check(CLI::IsMember({"fcr", "fcd", "txc"}));
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--fold", o.fold, "0: whole corpus, 1/2: two-fold split by seed parity")
      ->check(CLI::Range(0, 2));
}

ExperimentConfig to_config(const CommonOptions& o) {
  ExperimentConfig cfg;
  cfg.seed = o.seed;
  cfg.agent.step_limit = o.steps;
  cfg.agent.epsilon = o.epsilon;
  cfg.agent.gamma = o.gamma;
  cfg.features.embedding_dim = o.embedding_dim;
  for (const auto& f : o.disabled) {
    if (f == "fcr") cfg.features.use_fcr = false;
    if (f == "fcd") cfg.features.use_fcd = false;
    if (f == "txc") cfg.features.use_txc = false;
  }
  if (!o.embedding.empty()) cfg.embedding_table = o.embedding;
  cfg.repeats = o.repeats;
  cfg.fold = o.fold;
  cfg.carry_model = o.carry_model;
  cfg.validate();
  return cfg;
}

Corpus load_checked(const std::string& dir) {
  Corpus corpus = load_corpus(dir);
  for (const auto& e : corpus.errors) std::cerr << "warning: skipped " << e << '\n';
  return corpus;
}

double mean_final(const std::vector<RunRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) sum += r.final_coverage();
  return sum / static_cast<double>(records.size());
}

std::vector<fs::path> expand_logs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> logs;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& item : fs::recursive_directory_iterator(in)) {
        if (item.path().extension() == ".jsonl") found.push_back(item.path());
      }
      std::sort(found.begin(), found.end());
      logs.insert(logs.end(), found.begin(), found.end());
    } else {
      logs.emplace_back(in);
    }
  }
  return logs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DQN-guided GUI exploration on simulated apps"};
  app.require_subcommand(1);

  // gen
  GenParams gen;
  int count = 20;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "corpus";
  auto* cmd_gen_app = app.add_subcommand("gen", "Generate a seeded corpus of app specs");
  cmd_gen_app->add_option("--count", count, "Number of apps")->check(CLI::NonNegativeNumber);
  cmd_gen_app->add_option("--seed", gen_seed, "Master seed");
  cmd_gen_app->add_option("--out", gen_out, "Output directory");
  cmd_gen_app->add_option("--pages", gen.page_count, "Pages per app");
  cmd_gen_app->add_option("--depth", gen.depth, "Deepest chain length");
  cmd_gen_app->add_option("--crashes", gen.crash_count, "Injected crashes per app");
  cmd_gen_app->add_option("--events-min", gen.events_min, "Min content events per page");
  cmd_gen_app->add_option("--events-max", gen.events_max, "Max content events per page");
  cmd_gen_app->add_option("--functional-weight", gen.functional_weight,
                          "Label/behaviour correlation in [0, 1]");

  // train / test / baseline
  CommonOptions train_opts, test_opts, base_opts;
  std::string train_corpus, train_model = "model.qxp";
  auto* cmd_train_app = app.add_subcommand("train", "Train a model across a corpus");
  cmd_train_app->add_option("--corpus", train_corpus, "Corpus directory")->required();
  cmd_train_app->add_option("--model", train_model, "Checkpoint path (created or resumed)");
  add_agent_flags(cmd_train_app, train_opts);

  std::string test_corpus, test_model = "model.qxp";
  auto* cmd_test_app = app.add_subcommand("test", "Test a trained model on a corpus");
  cmd_test_app->add_option("--corpus", test_corpus, "Corpus directory")->required();
  cmd_test_app->add_option("--model", test_model, "Checkpoint path")->required();
  cmd_test_app->add_option("--repeats", test_opts.repeats, "Runs per app")
      ->check(CLI::PositiveNumber);
  cmd_test_app->add_flag("--carry-model", test_opts.carry_model,
                         "Keep updating one model across apps instead of reloading");
  add_agent_flags(cmd_test_app, test_opts);

  std::string base_corpus;
  auto* cmd_base_app = app.add_subcommand("baseline", "Uniform-random exploration baseline");
  cmd_base_app->add_option("--corpus", base_corpus, "Corpus directory")->required();
  cmd_base_app->add_option("--repeats", base_opts.repeats, "Runs per app")
      ->check(CLI::PositiveNumber);
  add_agent_flags(cmd_base_app, base_opts);

  // probe
  std::string probe_model, probe_out, probe_embedding;
  std::string probe_text = "ok";
  auto* cmd_probe_app = app.add_subcommand("probe", "Q values over a grid of FCR/FCD settings");
  cmd_probe_app->add_option("--model", probe_model, "Checkpoint path")->required();
  cmd_probe_app->add_option("--out", probe_out, "Directory for probe.csv");
  cmd_probe_app->add_option("--probe-text", probe_text, "Widget text used for every cell");
  cmd_probe_app->add_option("--embedding", probe_embedding, "Embedding table file");

  // stats
  std::vector<std::string> stats_inputs;
  auto* cmd_stats_app = app.add_subcommand("stats", "Expected-action rate from trace logs");
  cmd_stats_app->add_option("logs", stats_inputs, "Trace logs or directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_gen_app) {
      const auto entries = gen_corpus(gen, count, gen_seed, gen_out);
      std::cout << "wrote " << entries.size() << " apps to " << gen_out << '\n';
    } else if (*cmd_train_app) {
      const ExperimentConfig cfg = to_config(train_opts);
      const Corpus corpus = load_checked(train_corpus);
      const auto split = split_fold(corpus, cfg.fold);
      if (split.train.empty()) throw UsageError("train: no apps to train on");
      const auto records = cmd_train(split.train, train_model, cfg, train_opts.out);
      std::cout << "trained on " << records.size() << " apps, mean final coverage "
                << mean_final(records) << ", checkpoint " << train_model << '\n';
    } else if (*cmd_test_app) {
      const ExperimentConfig cfg = to_config(test_opts);
      const Corpus corpus = load_checked(test_corpus);
      const auto records = cmd_test(test_model, split_fold(corpus, cfg.fold).test, cfg,
                                    test_opts.out);
      std::cout << "tested " << records.size() << " runs, mean final coverage "
                << mean_final(records) << '\n';
    } else if (*cmd_base_app) {
      const ExperimentConfig cfg = to_config(base_opts);
      const Corpus corpus = load_checked(base_corpus);
      const auto records = cmd_baseline(split_fold(corpus, cfg.fold).test, cfg, base_opts.out);
      std::cout << "baseline " << records.size() << " runs, mean final coverage "
                << mean_final(records) << '\n';
    } else if (*cmd_probe_app) {
      const Checkpoint ck = load_model(probe_model);
      FeatureConfig features;
      const Architecture& arch = ck.net.architecture();
      features.embedding_dim = arch.embedding_dim;
      features.max_words = arch.max_words;
      features.generations = arch.generations;
      features.histogram_len = arch.histogram_len;
      const EmbeddingProvider embeddings =
          probe_embedding.empty()
              ? EmbeddingProvider::hashed(features.embedding_dim)
              : EmbeddingProvider::from_table_file(probe_embedding, features.embedding_dim);
      ProbeSpec spec = ProbeSpec::standard();
      spec.text = probe_text;
      const ProbeTable table = cmd_probe(ck.net, spec, embeddings, features);
      std::cout << format_probe_table(table);
      if (!probe_out.empty()) {
        fs::create_directories(probe_out);
        std::ofstream csv(fs::path(probe_out) / "probe.csv", std::ios::binary);
        write_probe_csv(table, csv);
      }
    } else if (*cmd_stats_app) {
      std::cout << cmd_stats(expand_logs(stats_inputs)).format();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
