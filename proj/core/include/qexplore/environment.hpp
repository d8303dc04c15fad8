#pragma once

#include <optional>
#include <string>

#include "qexplore/efg.hpp"

namespace qexplore {

class Rng;

enum class SystemEvent { kRotate, kVolume, kCall };

std::string_view to_string(SystemEvent event);

/// Result of one action against the app under test.
struct StepOutcome {
  RawPage page;
  bool coverage_increased = false;
  double coverage = 0.0;
  std::optional<std::string> crash_message;
  std::optional<SystemEvent> system;  // set when produced by a system event
};

// The app under test as seen by the agent. Events are addressed by their
// position on the current page.
class Environment {
 public:
  virtual ~Environment() = default;

  /// Starts a fresh episode and returns the first page.
  virtual RawPage launch() = 0;
  virtual StepOutcome execute(std::size_t event_index,
                              const std::optional<std::string>& input) = 0;
  virtual StepOutcome system_event(Rng& rng) = 0;
  virtual double coverage() const = 0;
};

}  // namespace qexplore
