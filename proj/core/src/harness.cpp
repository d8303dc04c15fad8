#include "qexplore/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qexplore/error.hpp"
#include "qexplore/rng.hpp"

namespace qexplore {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kTagModel = 1;
constexpr std::uint64_t kTagTrain = 2;
constexpr std::uint64_t kTagTest = 3;
constexpr std::uint64_t kTagBaseline = 4;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

RunRecord summarize(const std::string& app, int repeat, const EpisodeResult& episode) {
  RunRecord rec;
  rec.app = app;
  rec.repeat = repeat;
  rec.coverage = episode.coverage_curve;
  rec.aborted = episode.aborted;
  rec.abort_reason = episode.abort_reason;
  std::set<std::string> seen;
  for (const auto& t : episode.traces) {
    if (t.system_crash) seen.insert(*t.system_crash);
    if (t.crash) seen.insert(*t.crash);
    rec.unique_crashes.push_back(static_cast<int>(seen.size()));
  }
  return rec;
}

void write_traces(const fs::path& dir, const std::string& app, int repeat,
                  const EpisodeResult& episode) {
  auto out = open_out(dir / (app + "_r" + std::to_string(repeat) + ".jsonl"));
  write_trace_log(episode.traces, out);
}

std::vector<RunRecord> run_corpus(const std::vector<CorpusEntry>& apps,
                                  const Checkpoint* start, const ExperimentConfig& cfg,
                                  Policy policy, std::uint64_t tag,
                                  const fs::path& trace_dir) {
  const EmbeddingProvider embeddings = make_embeddings(cfg);
  const Architecture arch = cfg.architecture();
  std::vector<RunRecord> records;
  for (int repeat = 0; repeat < cfg.repeats; ++repeat) {
    std::optional<Checkpoint> carried;
    for (const auto& entry : apps) {
      Checkpoint local = start ? *start : Checkpoint{QNetwork(arch), AdamState{}};
      if (!start) local.adam = AdamState::for_parameters(local.net.parameters().size());
      Checkpoint& model = cfg.carry_model && carried ? *carried : local;
      SimApp env(entry.app);
      const std::uint64_t seed = derive_seed(
          derive_seed(derive_seed(cfg.seed, tag), entry.app.seed),
          static_cast<std::uint64_t>(repeat));
      EpisodeResult episode = run_episode(model.net, model.adam, env, embeddings,
                                          cfg.features, cfg.agent, seed, policy);
      if (cfg.carry_model && !carried) carried = std::move(local);
      records.push_back(summarize(entry.name, repeat, episode));
      if (cfg.write_traces) write_traces(trace_dir, entry.name, repeat, episode);
    }
  }
  return records;
}

}  // namespace

void ExperimentConfig::validate() const {
  features.validate();
  agent.validate();
  if (repeats < 1) throw UsageError("repeats must be at least 1");
  if (fold < 0 || fold > 2) throw UsageError("fold must be 0, 1 or 2");
}

std::string file_checksum(const fs::path& path) { return hex64(fnv1a64(read_file(path))); }

std::vector<ManifestEntry> gen_corpus(const GenParams& base, int count,
                                      std::uint64_t master_seed, const fs::path& out_dir) {
  if (count < 0) throw UsageError("gen: count must be non-negative");
  base.validate();
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  Json manifest;
  manifest["qxp_corpus"] = 1;
  manifest["master_seed"] = master_seed;
  manifest["params"] = {{"page_count", base.page_count},
                        {"events_min", base.events_min},
                        {"events_max", base.events_max},
                        {"depth", base.depth},
                        {"crash_count", base.crash_count},
                        {"functional_weight", base.functional_weight}};
  manifest["apps"] = Json::array();
  for (int i = 0; i < count; ++i) {
    GenParams params = base;
    params.seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof name, "app_%03d.json", i);
    const fs::path path = out_dir / name;
    save_app(generate_app(params), path);
    ManifestEntry entry{name, params.seed, file_checksum(path)};
    manifest["apps"].push_back(
        {{"file", entry.file}, {"seed", entry.seed}, {"fnv1a64", entry.checksum}});
    entries.push_back(std::move(entry));
  }
  auto out = open_out(out_dir / "manifest.json");
  out << manifest.dump(1) << '\n';
  return entries;
}

Corpus load_corpus(const fs::path& dir) {
  Corpus corpus;
  std::vector<fs::path> files;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    try {
      const Json j = Json::parse(read_file(manifest));
      for (const auto& a : j.at("apps")) files.push_back(dir / a.at("file").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus manifest: " + std::string(e.what()));
    }
  } else if (fs::is_directory(dir)) {
    for (const auto& item : fs::directory_iterator(dir)) {
      if (item.path().extension() == ".json") files.push_back(item.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    throw FormatError("corpus directory not found: " + dir.string());
  }
  for (const auto& f : files) {
    try {
      corpus.apps.push_back({f.stem().string(), load_app(f)});
    } catch (const std::exception& e) {
      corpus.errors.push_back(f.filename().string() + ": " + e.what());
    }
  }
  return corpus;
}

FoldSplit split_fold(const Corpus& corpus, int fold) {
  FoldSplit split;
  for (const auto& entry : corpus.apps) {
    const bool even = entry.app.seed % 2 == 0;
    switch (fold) {
      case 0:
        split.train.push_back(entry);
        split.test.push_back(entry);
        break;
      case 1:
        (even ? split.train : split.test).push_back(entry);
        break;
      case 2:
        (even ? split.test : split.train).push_back(entry);
        break;
      default:
        throw UsageError("fold must be 0, 1 or 2");
    }
  }
  return split;
}

EmbeddingProvider make_embeddings(const ExperimentConfig& cfg) {
  if (cfg.embedding_table) {
    return EmbeddingProvider::from_table_file(*cfg.embedding_table, cfg.features.embedding_dim);
  }
  return EmbeddingProvider::hashed(cfg.features.embedding_dim);
}

void write_report_csv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.coverage.size(); ++i) {
      out << r.app << ',' << r.repeat << ',' << i << ',' << fixed6(r.coverage[i]) << ','
          << r.unique_crashes[i] << '\n';
    }
  }
}

void write_report_csv(const std::vector<RunRecord>& records, const fs::path& path) {
  auto out = open_out(path);
  write_report_csv(records, out);
}

void write_trace_log(const std::vector<IterationTrace>& traces, std::ostream& out) {
  for (const auto& t : traces) {
    std::size_t unexecuted = 0;
    for (auto f : t.candidate_fcr) unexecuted += f == 0 ? 1 : 0;
    Json j;
    j["iteration"] = t.iteration;
    j["page"] = index_of(t.page);
    j["event"] = index_of(t.event);
    j["ordinal"] = t.event_ordinal;
    j["random"] = t.was_random;
    j["reward"] = t.reward;
    j["coverage"] = t.coverage;
    j["crash"] = t.crash ? Json(*t.crash) : Json(nullptr);
    j["system"] = t.system_event ? Json(std::string(to_string(*t.system_event))) : Json(nullptr);
    j["candidates"] = t.candidate_fcr.size();
    j["unexecuted"] = unexecuted;
    j["chosen_fcr"] = t.candidate_fcr.at(t.event_ordinal);
    out << j.dump() << '\n';
  }
}

std::vector<RunRecord> cmd_train(const std::vector<CorpusEntry>& apps,
                                 const fs::path& model_path, const ExperimentConfig& cfg,
                                 const fs::path& out_dir) {
  cfg.validate();
  if (apps.empty()) throw UsageError("train: corpus is empty");
  const Architecture arch = cfg.architecture();
  Checkpoint model{QNetwork(arch), AdamState{}};
  if (fs::exists(model_path)) {
    try {
      model = load_model(model_path, arch);
    } catch (const FormatError& e) {
      throw FormatError("train: incompatible existing checkpoint: " + std::string(e.what()));
    }
  } else {
    Rng init(derive_seed(cfg.seed, kTagModel));
    model.net = QNetwork::random(arch, init);
    model.adam = AdamState::for_parameters(model.net.parameters().size());
  }

  const EmbeddingProvider embeddings = make_embeddings(cfg);
  std::vector<RunRecord> records;
  for (const auto& entry : apps) {
    SimApp env(entry.app);
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, kTagTrain), entry.app.seed);
    EpisodeResult episode = run_episode(model.net, model.adam, env, embeddings, cfg.features,
                                        cfg.agent, seed, Policy::kDqn);
    records.push_back(summarize(entry.name, 0, episode));
  }
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_model(model.net, model.adam, model_path);
  write_report_csv(records, out_dir / "train_curves.csv");
  return records;
}

std::vector<RunRecord> cmd_test(const fs::path& model_path,
                                const std::vector<CorpusEntry>& apps,
                                const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const Checkpoint start = load_model(model_path, cfg.architecture());
  auto records = run_corpus(apps, &start, cfg, Policy::kDqn, kTagTest, out_dir / "traces" / "test");
  write_report_csv(records, out_dir / "test.csv");
  return records;
}

std::vector<RunRecord> cmd_baseline(const std::vector<CorpusEntry>& apps,
                                    const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  auto records = run_corpus(apps, nullptr, cfg, Policy::kUniformRandom, kTagBaseline,
                            out_dir / "traces" / "baseline");
  write_report_csv(records, out_dir / "baseline.csv");
  return records;
}

// ---------------------------------------------------------------------------
// Probe

ProbeSpec ProbeSpec::standard() {
  auto row = [](std::pair<int, int> a, std::pair<int, int> b, std::pair<int, int> c) {
    auto part = [](std::pair<int, int> g) {
      return "(" + std::to_string(g.first) + "#" + std::to_string(g.second) + ")";
    };
    return ProbeRow{part(a) + ";" + part(b) + ";" + part(c), {a, b, c}};
  };
  ProbeSpec spec;
  spec.rows = {row({6, 1}, {1, 1}, {1, 1}), row({1, 6}, {1, 1}, {1, 1}),
               row({1, 1}, {6, 1}, {1, 1}), row({1, 1}, {1, 6}, {1, 1}),
               row({1, 1}, {1, 1}, {6, 1}), row({1, 1}, {1, 1}, {1, 6}),
               row({1, 1}, {1, 1}, {1, 1}), row({0, 0}, {0, 0}, {0, 0})};
  spec.fcr_values = {0, 1, 2, 3, 4, 5};
  return spec;
}

ProbeTable cmd_probe(const QNetwork& net, const ProbeSpec& spec,
                     const EmbeddingProvider& embeddings, const FeatureConfig& features) {
  ProbeTable table;
  table.fcr_values = spec.fcr_values;
  FeatureBundle base = FeatureBundle::zeros(features);
  base.txc = txc_feature(embeddings, spec.text, features);
  for (const auto& row : spec.rows) {
    if (static_cast<int>(row.generations.size()) > features.generations) {
      throw UsageError("probe: pattern has more generations than K");
    }
    FeatureBundle bundle = base;
    for (std::size_t g = 0; g < row.generations.size(); ++g) {
      bundle.fcd_at(static_cast<int>(g), 0) = static_cast<std::uint32_t>(row.generations[g].first);
      bundle.fcd_at(static_cast<int>(g), 1) = static_cast<std::uint32_t>(row.generations[g].second);
    }
    std::vector<double> values;
    for (int fcr : spec.fcr_values) {
      bundle.fcr = static_cast<std::uint64_t>(fcr);
      values.push_back(net.forward(bundle));
    }
    table.row_labels.push_back(row.label);
    table.q.push_back(std::move(values));
  }
  return table;
}

std::string format_probe_table(const ProbeTable& table) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-22s", "FCD \\ FCR");
  os << buf;
  for (int f : table.fcr_values) {
    std::snprintf(buf, sizeof buf, "%9d", f);
    os << buf;
  }
  os << '\n';
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%-22s", table.row_labels[r].c_str());
    os << buf;
    for (double q : table.q[r]) {
      std::snprintf(buf, sizeof buf, "%9.3f", q);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

void write_probe_csv(const ProbeTable& table, std::ostream& out) {
  out << "fcd,fcr,q\n";
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    for (std::size_t c = 0; c < table.fcr_values.size(); ++c) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", table.q[r][c]);
      out << table.row_labels[r] << ',' << table.fcr_values[c] << ',' << buf << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Stats

std::string ExpectedActionReport::format() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "records: %zu\nmixed pages: %zu\nagent expected-action rate: %.1f%% (%zu/%zu)\n"
                "random expectation: %.1f%% (sigma %.2f pp)\n",
                records, mixed_pages, 100.0 * agent_rate, expected_actions, mixed_pages,
                100.0 * random_expectation, 100.0 * random_sigma);
  os << buf;
  return os.str();
}

ExpectedActionReport cmd_stats(const std::vector<fs::path>& trace_logs) {
  ExpectedActionReport report;
  double share_sum = 0.0;
  double variance_sum = 0.0;
  for (const auto& path : trace_logs) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read trace log " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::uint64_t candidates = 0, unexecuted = 0, chosen_fcr = 0;
      try {
        const Json j = Json::parse(line);
        candidates = j.at("candidates").get<std::uint64_t>();
        unexecuted = j.at("unexecuted").get<std::uint64_t>();
        chosen_fcr = j.at("chosen_fcr").get<std::uint64_t>();
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": malformed trace record (" + e.what() + ")");
      }
      if (candidates == 0 || unexecuted > candidates) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": inconsistent candidate counts");
      }
      ++report.records;
      if (unexecuted == 0 || unexecuted == candidates) continue;
      ++report.mixed_pages;
      if (chosen_fcr == 0) ++report.expected_actions;
      const double p = static_cast<double>(unexecuted) / static_cast<double>(candidates);
      share_sum += p;
      variance_sum += p * (1.0 - p);
    }
  }
  if (report.mixed_pages > 0) {
    const double n = static_cast<double>(report.mixed_pages);
    report.agent_rate = static_cast<double>(report.expected_actions) / n;
    report.random_expectation = share_sum / n;
    report.random_sigma = std::sqrt(variance_sum) / n;
  }
  return report;
}

}  // namespace qexplore
