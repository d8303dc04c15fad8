#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qexplore/efg.hpp"
#include "qexplore/environment.hpp"
#include "qexplore/features.hpp"
#include "qexplore/nn.hpp"
#include "qexplore/rng.hpp"

namespace qexplore {

struct AgentConfig {
  double gamma = 0.6;
  double epsilon = 0.2;
  int warmup = 20;               // T: purely random iterations
  double reward_positive = 5.0;
  double reward_negative = -2.0;
  int history_batch = 4;         // history samples per training step
  int system_event_period = 10;
  int step_limit = 2000;

  void validate() const;
};

enum class Policy { kDqn, kUniformRandom };

/// r + gamma * max(next_qs); an empty next_qs contributes 0.
double q_target(double reward, std::span<const double> next_qs, double gamma);

struct ActionChoice {
  std::size_t index = 0;
  bool was_random = false;
};

/// Warm-up and epsilon-greedy selection. `q_at(i)` is only called on the
/// greedy branch; ties go to the lowest index.
ActionChoice select_action(std::size_t candidates,
                           const std::function<double(std::size_t)>& q_at,
                           int iteration, const AgentConfig& cfg, Rng& rng);
ActionChoice select_action(std::span<const double> q_values, int iteration,
                           const AgentConfig& cfg, Rng& rng);

/// Error messages of crashes already rewarded in this episode.
class CrashLedger {
 public:
  /// Returns true if the message was not seen before.
  bool record(const std::string& message) { return seen_.insert(message).second; }
  bool contains(const std::string& message) const { return seen_.count(message) != 0; }
  std::size_t size() const { return seen_.size(); }
  void clear() { seen_.clear(); }

 private:
  std::set<std::string> seen_;
};

/// +reward_positive on coverage growth or a first-seen crash, otherwise
/// reward_negative. New crash messages are added to the ledger.
double reward(bool coverage_increased, const std::optional<std::string>& crash_message,
              CrashLedger& ledger, const AgentConfig& cfg);

using ReplayMemory = std::vector<TrainingSample>;

/// `current` plus min(n, |memory|) distinct memory entries drawn uniformly
/// without replacement (returned in memory order after `current`).
std::vector<const TrainingSample*> sample_batch(const ReplayMemory& memory,
                                                const TrainingSample& current,
                                                int n, Rng& rng);

struct IterationTrace {
  int iteration = 0;
  std::optional<SystemEvent> system_event;
  std::optional<std::string> system_crash;
  PageId page{};
  EventId event{};
  std::size_t event_ordinal = 0;
  std::optional<std::string> input;
  bool was_random = false;
  double reward = 0.0;
  double coverage = 0.0;
  bool coverage_increased = false;
  std::optional<std::string> crash;
  std::vector<double> q_values;       // per candidate of the pre-step page
  std::vector<std::uint64_t> candidate_fcr;
  std::vector<double> next_q_values;  // per candidate of the post-step page
  double target = 0.0;
  std::size_t batch_size = 0;
  double loss = 0.0;
  PageId next_page{};
};

// Drives one app with the Q-network. Graph, replay memory and crash ledger
// live for one episode; the network and optimizer state are borrowed and
// persist across episodes.
class DqnAgent {
 public:
  DqnAgent(QNetwork& net, AdamState& adam, const EmbeddingProvider& embeddings,
           FeatureConfig features, AgentConfig config, std::uint64_t seed,
           Policy policy = Policy::kDqn);

  /// Clears per-episode state and launches the environment.
  void begin_episode(Environment& env);
  IterationTrace run_iteration(Environment& env, int t);

  const ExplorationGraph& graph() const { return graph_; }
  const ReplayMemory& memory() const { return memory_; }
  const CrashLedger& ledger() const { return ledger_; }
  const PageSnapshot& current_page() const { return current_; }
  const std::vector<std::string>& crashes() const { return crash_log_; }
  std::size_t network_evaluations() const { return evaluations_; }

 private:
  std::vector<FeatureBundle> bundles_for(const PageSnapshot& page) const;
  std::vector<double> evaluate(const std::vector<FeatureBundle>& bundles);
  void note_crash(const std::optional<std::string>& message);

  QNetwork& net_;
  AdamState& adam_;
  const EmbeddingProvider& embeddings_;
  FeatureConfig features_;
  AgentConfig config_;
  Policy policy_;
  Rng rng_;

  ExplorationGraph graph_;
  ReplayMemory memory_;
  CrashLedger ledger_;
  std::vector<std::string> crash_log_;
  PageSnapshot current_;
  std::size_t evaluations_ = 0;
};

struct EpisodeResult {
  std::vector<double> coverage_curve;  // after each iteration
  std::vector<std::string> crashes;    // unique messages in discovery order
  std::vector<IterationTrace> traces;
  bool aborted = false;
  std::string abort_reason;
};

/// Launches `env` and runs `config.step_limit` iterations, training `net`
/// online. Environment failures end the episode early with `aborted` set.
EpisodeResult run_episode(QNetwork& net, AdamState& adam, Environment& env,
                          const EmbeddingProvider& embeddings,
                          const FeatureConfig& features, const AgentConfig& config,
                          std::uint64_t seed, Policy policy = Policy::kDqn);

}  // namespace qexplore
