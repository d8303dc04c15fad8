#include "qexplore/features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "qexplore/error.hpp"
#include "qexplore/rng.hpp"

namespace qexplore {

void FeatureConfig::validate() const {
  if (generations < 1 || histogram_len < 2 || embedding_dim < 1 || max_words < 1) {
    throw UsageError("FeatureConfig: K, L, N must be positive and V >= 2");
  }
}

FeatureBundle FeatureBundle::zeros(const FeatureConfig& cfg) {
  cfg.validate();
  FeatureBundle b;
  b.generations = cfg.generations;
  b.histogram_len = cfg.histogram_len;
  b.embedding_dim = cfg.embedding_dim;
  b.max_words = cfg.max_words;
  b.fcd.assign(static_cast<std::size_t>(cfg.generations * cfg.histogram_len), 0);
  b.txc.assign(static_cast<std::size_t>(cfg.embedding_dim * cfg.max_words), 0.0);
  return b;
}

EmbeddingProvider::EmbeddingProvider(int dimension, EmbeddingSource source)
    : dimension_(dimension), source_(source) {
  if (dimension < 1) throw UsageError("EmbeddingProvider: dimension must be positive");
}

EmbeddingProvider EmbeddingProvider::hashed(int dimension) {
  return EmbeddingProvider(dimension, EmbeddingSource::kDeterministicHash);
}

EmbeddingProvider EmbeddingProvider::from_table(std::istream& in, int dimension) {
  EmbeddingProvider provider(dimension, EmbeddingSource::kTableFile);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    if (line_no == 1 && word == "#dim") {
      int declared = 0;
      if (!(fields >> declared) || declared != dimension) {
        throw FormatError("embedding table: #dim header disagrees with L=" +
                          std::to_string(dimension));
      }
      continue;
    }
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(dimension));
    double value = 0.0;
    while (fields >> value) row.push_back(value);
    if (!fields.eof() || static_cast<int>(row.size()) != dimension) {
      throw FormatError("embedding table line " + std::to_string(line_no) +
                        ": expected " + std::to_string(dimension) +
                        " values for '" + word + "'");
    }
    provider.table_.insert_or_assign(std::move(word), std::move(row));
  }
  return provider;
}

EmbeddingProvider EmbeddingProvider::from_table_file(
    const std::filesystem::path& path, int dimension) {
  std::ifstream in(path);
  if (!in) throw FormatError("embedding table not readable: " + path.string());
  return from_table(in, dimension);
}

void EmbeddingProvider::embed_into(std::string_view word, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dimension_) {
    throw UsageError("embed: output span has wrong length");
  }
  if (source_ == EmbeddingSource::kTableFile) {
    if (auto it = table_.find(std::string(word)); it != table_.end()) {
      std::copy(it->second.begin(), it->second.end(), out.begin());
      return;
    }
  }
  const std::uint64_t key = fnv1a64(word);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint64_t bits = splitmix64(key + i * 0x9e3779b97f4a7c15ULL);
    out[i] = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
  }
}

std::vector<double> EmbeddingProvider::embed(std::string_view word) const {
  std::vector<double> v(static_cast<std::size_t>(dimension_));
  embed_into(word, v);
  return v;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (in >> raw) {
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    auto first = std::find_if_not(raw.begin(), raw.end(), is_punct);
    auto last = std::find_if_not(raw.rbegin(), raw.rend(), is_punct).base();
    if (first >= last) continue;
    std::string token(first, last);
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::uint64_t fcr_feature(const ExplorationGraph& graph, EventId event) {
  return graph.fcr(event);
}

std::vector<std::vector<std::uint32_t>> fcd_feature(const ExplorationGraph& graph,
                                                    EventId event,
                                                    const FeatureConfig& cfg) {
  cfg.validate();
  if (cfg.generations > graph.max_generations()) {
    throw UsageError("fcd_feature: K exceeds the graph's generation limit");
  }
  const auto generations = graph.children_generations(event);
  const auto top = static_cast<std::uint64_t>(cfg.histogram_len - 1);
  std::vector<std::vector<std::uint32_t>> histograms(
      static_cast<std::size_t>(cfg.generations),
      std::vector<std::uint32_t>(static_cast<std::size_t>(cfg.histogram_len), 0));
  for (std::size_t m = 0; m < histograms.size(); ++m) {
    for (ClassId cls : generations[m]) {
      ++histograms[m][std::min(graph.class_fcr(cls), top)];
    }
  }
  return histograms;
}

std::vector<double> txc_feature(const EmbeddingProvider& provider,
                                std::string_view text, const FeatureConfig& cfg) {
  cfg.validate();
  if (provider.dimension() != cfg.embedding_dim) {
    throw UsageError("txc_feature: provider dimension differs from L");
  }
  const auto rows = static_cast<std::size_t>(cfg.embedding_dim);
  const auto cols = static_cast<std::size_t>(cfg.max_words);
  std::vector<double> matrix(rows * cols, 0.0);
  const auto words = tokenize(text);
  std::vector<double> column(rows);
  for (std::size_t j = 0; j < std::min(words.size(), cols); ++j) {
    provider.embed_into(words[j], column);
    for (std::size_t r = 0; r < rows; ++r) matrix[r * cols + j] = column[r];
  }
  return matrix;
}

FeatureBundle make_bundle(const ExplorationGraph& graph,
                          const EmbeddingProvider& provider, EventId event,
                          const FeatureConfig& cfg) {
  FeatureBundle b = FeatureBundle::zeros(cfg);
  const EventRecord& record = graph.event(event);
  if (cfg.use_fcr) b.fcr = fcr_feature(graph, event);
  if (cfg.use_fcd) {
    const auto histograms = fcd_feature(graph, event, cfg);
    for (int m = 0; m < cfg.generations; ++m) {
      for (int i = 0; i < cfg.histogram_len; ++i) {
        b.fcd_at(m, i) = histograms[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)];
      }
    }
  }
  if (cfg.use_txc) b.txc = txc_feature(provider, record.text, cfg);
  return b;
}

}  // namespace qexplore
