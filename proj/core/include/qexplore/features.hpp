#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qexplore/efg.hpp"

namespace qexplore {

/// Shape of the per-event feature encoding.
struct FeatureConfig {
  int generations = 3;       // K
  int histogram_len = 10;    // V
  int embedding_dim = 16;    // L; 400 for full-size word vectors
  int max_words = 6;         // N

  // Ablation switches: a disabled feature is emitted as zeros.
  bool use_fcr = true;
  bool use_fcd = true;
  bool use_txc = true;

  void validate() const;
};

// State-action encoding for one candidate event.
struct FeatureBundle {
  std::uint64_t fcr = 0;
  std::vector<std::uint32_t> fcd;  // generations x histogram_len, row-major
  std::vector<double> txc;         // embedding_dim x max_words, row-major
  int generations = 0;
  int histogram_len = 0;
  int embedding_dim = 0;
  int max_words = 0;

  static FeatureBundle zeros(const FeatureConfig& cfg);

  std::uint32_t fcd_at(int generation, int bucket) const {
    return fcd[static_cast<std::size_t>(generation * histogram_len + bucket)];
  }
  std::uint32_t& fcd_at(int generation, int bucket) {
    return fcd[static_cast<std::size_t>(generation * histogram_len + bucket)];
  }
  double txc_at(int row, int col) const {
    return txc[static_cast<std::size_t>(row * max_words + col)];
  }
  double& txc_at(int row, int col) {
    return txc[static_cast<std::size_t>(row * max_words + col)];
  }

  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

enum class EmbeddingSource { kDeterministicHash, kTableFile };

// Maps a normalized word to a fixed-length vector. The hash source is a
// counter-based generator keyed by the word's FNV-1a hash; the table source
// falls back to it for words missing from the table.
class EmbeddingProvider {
 public:
  static EmbeddingProvider hashed(int dimension);
  /// Reads `word v1 ... vL` records; an optional first line `#dim L` must
  /// agree with `dimension`. Throws FormatError on arity mismatch.
  static EmbeddingProvider from_table(std::istream& in, int dimension);
  static EmbeddingProvider from_table_file(const std::filesystem::path& path,
                                           int dimension);

  int dimension() const { return dimension_; }
  EmbeddingSource source() const { return source_; }
  std::size_t table_size() const { return table_.size(); }

  std::vector<double> embed(std::string_view word) const;
  void embed_into(std::string_view word, std::span<double> out) const;

 private:
  EmbeddingProvider(int dimension, EmbeddingSource source);

  int dimension_;
  EmbeddingSource source_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// Lowercases, splits on whitespace, strips leading/trailing punctuation and
/// drops tokens that end up empty.
std::vector<std::string> tokenize(std::string_view text);

std::uint64_t fcr_feature(const ExplorationGraph& graph, EventId event);

/// K histograms over execution counts of the merge classes in each child
/// generation; counts >= V-1 land in the last bucket.
std::vector<std::vector<std::uint32_t>> fcd_feature(const ExplorationGraph& graph,
                                                    EventId event,
                                                    const FeatureConfig& cfg);

/// L x N word-embedding matrix (row-major), zero-padded past the last word.
std::vector<double> txc_feature(const EmbeddingProvider& provider,
                                std::string_view text, const FeatureConfig& cfg);

FeatureBundle make_bundle(const ExplorationGraph& graph,
                          const EmbeddingProvider& provider, EventId event,
                          const FeatureConfig& cfg);

}  // namespace qexplore
