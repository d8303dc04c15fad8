#include "qexplore/agent.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "qexplore/error.hpp"
#include "qexplore/sim.hpp"

namespace qexplore {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("AgentConfig: gamma outside [0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw UsageError("AgentConfig: epsilon outside [0, 1]");
  }
  if (warmup < 0 || history_batch < 0 || system_event_period < 1 || step_limit < 0) {
    throw UsageError("AgentConfig: counts must be non-negative (period positive)");
  }
}

double q_target(double reward, std::span<const double> next_qs, double gamma) {
  if (next_qs.empty()) return reward;
  return reward + gamma * *std::max_element(next_qs.begin(), next_qs.end());
}

ActionChoice select_action(std::size_t candidates,
                           const std::function<double(std::size_t)>& q_at,
                           int iteration, const AgentConfig& cfg, Rng& rng) {
  if (candidates == 0) throw UsageError("select_action: no candidate events");
  if (iteration < cfg.warmup) return {rng.uniform_index(candidates), true};
  if (rng.uniform01() < cfg.epsilon) return {rng.uniform_index(candidates), true};
  std::size_t best = 0;
  double best_q = q_at(0);
  for (std::size_t i = 1; i < candidates; ++i) {
    const double q = q_at(i);
    if (q > best_q) {
      best_q = q;
      best = i;
    }
  }
  return {best, false};
}

ActionChoice select_action(std::span<const double> q_values, int iteration,
                           const AgentConfig& cfg, Rng& rng) {
  return select_action(
      q_values.size(), [q_values](std::size_t i) { return q_values[i]; }, iteration, cfg,
      rng);
}

double reward(bool coverage_increased, const std::optional<std::string>& crash_message,
              CrashLedger& ledger, const AgentConfig& cfg) {
  const bool unique_crash = crash_message && ledger.record(*crash_message);
  return coverage_increased || unique_crash ? cfg.reward_positive : cfg.reward_negative;
}

std::vector<const TrainingSample*> sample_batch(const ReplayMemory& memory,
                                                const TrainingSample& current,
                                                int n, Rng& rng) {
  if (n < 0) throw UsageError("sample_batch: negative history size");
  std::vector<const TrainingSample*> batch{&current};
  const std::size_t size = memory.size();
  const std::size_t take = std::min(static_cast<std::size_t>(n), size);
  // Floyd's sampling: `take` distinct indices from [0, size).
  std::set<std::size_t> chosen;
  for (std::size_t j = size - take; j < size; ++j) {
    const std::size_t t = rng.uniform_index(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  for (std::size_t i : chosen) batch.push_back(&memory[i]);
  return batch;
}

// ---------------------------------------------------------------------------

DqnAgent::DqnAgent(QNetwork& net, AdamState& adam, const EmbeddingProvider& embeddings,
                   FeatureConfig features, AgentConfig config, std::uint64_t seed,
                   Policy policy)
    : net_(net),
      adam_(adam),
      embeddings_(embeddings),
      features_(features),
      config_(config),
      policy_(policy),
      rng_(seed),
      graph_(features.generations) {
  features_.validate();
  config_.validate();
  if (policy_ == Policy::kDqn) {
    const Architecture& a = net_.architecture();
    if (a.embedding_dim != features_.embedding_dim || a.max_words != features_.max_words ||
        a.generations != features_.generations || a.histogram_len != features_.histogram_len) {
      throw UsageError("DqnAgent: network architecture does not match feature shapes");
    }
    if (embeddings_.dimension() != features_.embedding_dim) {
      throw UsageError("DqnAgent: embedding dimension does not match L");
    }
  }
}

void DqnAgent::begin_episode(Environment& env) {
  graph_ = ExplorationGraph(features_.generations);
  memory_.clear();
  ledger_.clear();
  crash_log_.clear();
  current_ = graph_.update(env.launch(), std::nullopt);
}

std::vector<FeatureBundle> DqnAgent::bundles_for(const PageSnapshot& page) const {
  std::vector<FeatureBundle> bundles;
  bundles.reserve(page.events.size());
  for (EventId e : page.events) bundles.push_back(make_bundle(graph_, embeddings_, e, features_));
  return bundles;
}

std::vector<double> DqnAgent::evaluate(const std::vector<FeatureBundle>& bundles) {
  std::vector<double> qs;
  qs.reserve(bundles.size());
  for (const auto& b : bundles) qs.push_back(net_.forward(b));
  evaluations_ += bundles.size();
  return qs;
}

void DqnAgent::note_crash(const std::optional<std::string>& message) {
  if (message && std::find(crash_log_.begin(), crash_log_.end(), *message) == crash_log_.end()) {
    crash_log_.push_back(*message);
  }
}

IterationTrace DqnAgent::run_iteration(Environment& env, int t) {
  IterationTrace trace;
  trace.iteration = t;

  if (t % config_.system_event_period == 0) {
    StepOutcome sys = env.system_event(rng_);
    trace.system_event = sys.system;
    trace.system_crash = sys.crash_message;
    if (sys.crash_message) {
      ledger_.record(*sys.crash_message);
      note_crash(sys.crash_message);
    }
    current_ = graph_.update(sys.page, std::nullopt);
  }

  const bool learning = policy_ == Policy::kDqn;
  const std::size_t n = current_.events.size();
  std::vector<FeatureBundle> bundles;
  if (learning) {
    bundles = bundles_for(current_);
    trace.q_values = evaluate(bundles);
  } else {
    trace.q_values.assign(n, 0.0);
  }
  for (EventId e : current_.events) trace.candidate_fcr.push_back(graph_.fcr(e));

  ActionChoice choice;
  if (learning) {
    choice = select_action(trace.q_values, t, config_, rng_);
  } else {
    choice = {rng_.uniform_index(n), true};
  }
  const EventId action = current_.events[choice.index];
  trace.page = current_.id;
  trace.event = action;
  trace.event_ordinal = choice.index;
  trace.was_random = choice.was_random;
  if (graph_.event(action).accepts_input()) trace.input = random_input(rng_);

  StepOutcome out = env.execute(choice.index, trace.input);
  trace.reward = reward(out.coverage_increased, out.crash_message, ledger_, config_);
  trace.coverage = out.coverage;
  trace.coverage_increased = out.coverage_increased;
  trace.crash = out.crash_message;
  note_crash(out.crash_message);

  PageSnapshot next = graph_.update(out.page, action);
  graph_.record_execution(action);
  trace.next_page = next.id;

  if (learning) {
    const auto next_bundles = bundles_for(next);
    trace.next_q_values = evaluate(next_bundles);
    trace.target = q_target(trace.reward, trace.next_q_values, config_.gamma);
    TrainingSample sample{std::move(bundles[choice.index]), trace.target};
    const auto batch = sample_batch(memory_, sample, config_.history_batch, rng_);
    trace.batch_size = batch.size();
    trace.loss = train_batch(net_, adam_, batch);
    memory_.push_back(std::move(sample));
  }
  current_ = std::move(next);
  return trace;
}

EpisodeResult run_episode(QNetwork& net, AdamState& adam, Environment& env,
                          const EmbeddingProvider& embeddings,
                          const FeatureConfig& features, const AgentConfig& config,
                          std::uint64_t seed, Policy policy) {
  EpisodeResult result;
  DqnAgent agent(net, adam, embeddings, features, config, seed, policy);
  if (config.step_limit == 0) return result;
  agent.begin_episode(env);
  result.coverage_curve.reserve(static_cast<std::size_t>(config.step_limit));
  result.traces.reserve(static_cast<std::size_t>(config.step_limit));
  for (int t = 0; t < config.step_limit; ++t) {
    try {
      result.traces.push_back(agent.run_iteration(env, t));
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
    result.coverage_curve.push_back(result.traces.back().coverage);
  }
  result.crashes = agent.crashes();
  return result;
}

}  // namespace qexplore
