#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qexplore/agent.hpp"
#include "qexplore/features.hpp"
#include "qexplore/nn.hpp"
#include "qexplore/sim.hpp"

namespace qexplore {

namespace fs = std::filesystem;

struct ExperimentConfig {
  FeatureConfig features;
  AgentConfig agent;
  int repeats = 3;
  std::uint64_t seed = 1;
  bool carry_model = false;    // keep updating one model across test apps
  int fold = 0;                // 0: whole corpus; 1 or 2: two-fold split
  std::optional<fs::path> embedding_table;
  bool write_traces = true;

  void validate() const;
  Architecture architecture() const { return Architecture::for_features(features); }
};

struct CorpusEntry {
  std::string name;  // file stem
  AppSpec app;
};

struct Corpus {
  std::vector<CorpusEntry> apps;
  std::vector<std::string> errors;  // per-app load failures
};

struct ManifestEntry {
  std::string file;
  std::uint64_t seed = 0;
  std::string checksum;  // FNV-1a 64 of the file bytes, hex
};

/// Writes `count` generated apps plus manifest.json into `out_dir`. App i
/// uses seed derive_seed(master_seed, i).
std::vector<ManifestEntry> gen_corpus(const GenParams& base, int count,
                                      std::uint64_t master_seed, const fs::path& out_dir);

std::string file_checksum(const fs::path& path);

/// Reads the apps listed in manifest.json (or every *.json when there is no
/// manifest). Unreadable apps are reported in `errors`, not thrown.
Corpus load_corpus(const fs::path& dir);

struct FoldSplit {
  std::vector<CorpusEntry> train;
  std::vector<CorpusEntry> test;
};

/// Fold 1 trains on even-seed apps and tests on odd ones; fold 2 swaps them.
/// Fold 0 uses every app on both sides.
FoldSplit split_fold(const Corpus& corpus, int fold);

EmbeddingProvider make_embeddings(const ExperimentConfig& cfg);

/// Per (app, repeat) episode summary.
struct RunRecord {
  std::string app;
  int repeat = 0;
  std::vector<double> coverage;       // per iteration
  std::vector<int> unique_crashes;    // running count per iteration
  bool aborted = false;
  std::string abort_reason;

  double final_coverage() const { return coverage.empty() ? 0.0 : coverage.back(); }
};

inline constexpr const char* kReportHeader = "app,repeat,iteration,coverage,unique_crashes";

void write_report_csv(const std::vector<RunRecord>& records, std::ostream& out);
void write_report_csv(const std::vector<RunRecord>& records, const fs::path& path);

/// One JSON object per line: iteration, page, event, ordinal, random, reward,
/// coverage, crash, system, candidates, unexecuted, chosen_fcr.
void write_trace_log(const std::vector<IterationTrace>& traces, std::ostream& out);

/// Trains sequentially over `apps`, starting from the checkpoint at
/// `model_path` if present (else a fresh seeded model), and writes the
/// checkpoint back plus `train_curves.csv` into `out_dir`.
std::vector<RunRecord> cmd_train(const std::vector<CorpusEntry>& apps,
                                 const fs::path& model_path, const ExperimentConfig& cfg,
                                 const fs::path& out_dir);

/// Runs the checkpoint on each app `repeats` times without modifying it on
/// disk. Writes `test.csv` and per-run trace logs under `out_dir/traces`.
std::vector<RunRecord> cmd_test(const fs::path& model_path,
                                const std::vector<CorpusEntry>& apps,
                                const ExperimentConfig& cfg, const fs::path& out_dir);

/// Uniform-random policy, no network. Writes `baseline.csv` and traces.
std::vector<RunRecord> cmd_baseline(const std::vector<CorpusEntry>& apps,
                                    const ExperimentConfig& cfg, const fs::path& out_dir);

struct ProbeRow {
  std::string label;                 // e.g. "(6#1);(1#1);(1#1)"
  std::vector<std::pair<int, int>> generations;  // (unexecuted, executed once)
};

struct ProbeSpec {
  std::vector<ProbeRow> rows;
  std::vector<int> fcr_values;
  std::string text = "ok";

  /// Eight FCD patterns crossed with FCR 0..5.
  static ProbeSpec standard();
};

struct ProbeTable {
  std::vector<std::string> row_labels;
  std::vector<int> fcr_values;
  std::vector<std::vector<double>> q;  // [row][fcr column]
};

ProbeTable cmd_probe(const QNetwork& net, const ProbeSpec& spec,
                     const EmbeddingProvider& embeddings, const FeatureConfig& features);
std::string format_probe_table(const ProbeTable& table);
void write_probe_csv(const ProbeTable& table, std::ostream& out);

struct ExpectedActionReport {
  std::size_t records = 0;
  std::size_t mixed_pages = 0;       // records with executed and unexecuted candidates
  std::size_t expected_actions = 0;  // of those, an unexecuted event was chosen
  double agent_rate = 0.0;
  double random_expectation = 0.0;   // mean unexecuted share over mixed pages
  double random_sigma = 0.0;         // std-dev of the random hit rate

  std::string format() const;
};

/// Throws FormatError naming file and line for malformed records.
ExpectedActionReport cmd_stats(const std::vector<fs::path>& trace_logs);

}  // namespace qexplore
