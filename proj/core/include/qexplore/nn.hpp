#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qexplore/features.hpp"

namespace qexplore {

class Rng;

/// Hyperparameters of the Q-network. All of them are written to checkpoints.
struct Architecture {
  int embedding_dim = 16;   // L
  int max_words = 6;        // N
  int generations = 3;      // K
  int histogram_len = 10;   // V
  int filters = 8;          // F, per width
  std::vector<int> widths = {2, 3};
  int fcr_hidden = 8;       // H_s
  int fcd_hidden = 32;      // H_v
  int hidden1 = 64;         // H1
  int hidden2 = 32;         // H2

  static Architecture for_features(const FeatureConfig& cfg);

  void validate() const;
  int text_width() const { return filters * static_cast<int>(widths.size()); }
  int concat_width() const { return text_width() + fcr_hidden + fcd_hidden; }
  int fcd_inputs() const { return generations * histogram_len; }
  bool matches(const FeatureBundle& bundle) const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Offsets of each parameter block inside the flat parameter vector. The
// order below is the checkpoint order.
struct ParameterLayout {
  struct Conv {
    int width;
    std::size_t weights;  // filters x embedding_dim x width
    std::size_t bias;     // filters
  };
  std::vector<Conv> conv;
  std::size_t fcr_w, fcr_b;
  std::size_t fcd_w, fcd_b;
  std::size_t w1, b1;
  std::size_t w2, b2;
  std::size_t w3, b3;
  std::size_t total;

  explicit ParameterLayout(const Architecture& arch);
};

using Gradient = std::vector<double>;

// Per-feature handlers feed a three-layer trunk with a linear scalar head:
//   text  : conv1d (each width) -> global max-pool -> relu
//   fcr   : log1p(count) -> dense -> relu
//   fcd   : log1p(counts) -> dense -> relu
//   trunk : concat(text, fcr, fcd) -> dense relu -> dense relu -> dense
class QNetwork {
 public:
  explicit QNetwork(Architecture arch);  // all-zero parameters

  /// He-uniform weights, zero biases.
  static QNetwork random(const Architecture& arch, Rng& rng);

  const Architecture& architecture() const { return arch_; }
  const ParameterLayout& layout() const { return layout_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  /// Scalar Q value. Throws UsageError on shape mismatch.
  double forward(const FeatureBundle& bundle) const;

  /// upstream * d(forward)/d(theta) for every parameter, in layout order.
  Gradient backward(const FeatureBundle& bundle, double upstream) const;

  /// Adds upstream * d(forward)/d(theta) into `grad` and returns the forward
  /// value.
  double accumulate_gradient(const FeatureBundle& bundle, double upstream,
                             std::span<double> grad) const;

 private:
  struct Tape;
  double run(const FeatureBundle& bundle, Tape* tape) const;
  void check_shape(const FeatureBundle& bundle) const;

  Architecture arch_;
  ParameterLayout layout_;
  std::vector<double> params_;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_parameters(std::size_t count, double learning_rate = 1e-4);
};

struct TrainingSample {
  FeatureBundle bundle;
  double target_q = 0.0;
};

/// One bias-corrected Adam update.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& adam);

/// Mean squared error before the update, then one Adam step on its gradient.
double train_batch(QNetwork& net, AdamState& adam,
                   std::span<const TrainingSample> samples);
double train_batch(QNetwork& net, AdamState& adam,
                   std::span<const TrainingSample* const> samples);

struct Checkpoint {
  QNetwork net;
  AdamState adam;
};

void save_model(const QNetwork& net, const AdamState& adam, std::ostream& out);
void save_model(const QNetwork& net, const AdamState& adam,
                const std::filesystem::path& path);
Checkpoint load_model(std::istream& in);
Checkpoint load_model(const std::filesystem::path& path);
/// Loads and rejects a checkpoint whose architecture differs from `expected`.
Checkpoint load_model(const std::filesystem::path& path, const Architecture& expected);

}  // namespace qexplore
