#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qexplore/efg.hpp"
#include "qexplore/environment.hpp"

namespace qexplore {

class Rng;

/// Predicate buckets for text typed into edit events.
enum class InputClass { kAny, kNumeric, kAlpha, kHasDigit, kHasPunct, kLong };

std::string_view to_string(InputClass cls);
InputClass parse_input_class(std::string_view name);
/// Whether `input` falls into `cls`. An absent input only matches kAny.
bool input_matches(InputClass cls, const std::optional<std::string>& input);

/// Transition target meaning "behave like back".
inline constexpr int kPopPage = -1;

// Declarative app definition; this is what the JSON app spec holds.
struct AppSpec {
  struct Page {
    std::string activity;
    std::vector<RawEvent> events;
  };
  struct Transition {
    int page = 0;
    int event = 0;
    InputClass input = InputClass::kAny;
    int to = 0;  // page index or kPopPage
  };
  // Exactly one trigger applies: an event, a system event, or page entry
  // (neither set).
  struct Cover {
    std::optional<int> page;  // unset only for system-event lines
    std::optional<int> event;
    std::optional<SystemEvent> system;
    InputClass input = InputClass::kAny;
    std::vector<int> lines;
  };
  struct Crash {
    std::optional<int> page;  // unset: any page (system crashes only)
    std::optional<int> event;
    std::optional<SystemEvent> system;
    InputClass input = InputClass::kAny;
    std::string message;
  };

  std::string name;
  std::uint64_t seed = 0;
  int total_lines = 1;
  int home = 0;
  std::vector<Page> pages;
  std::vector<Transition> transitions;
  std::vector<Cover> cover;
  std::vector<Crash> crashes;

  /// Throws FormatError describing the first violated invariant.
  void validate() const;

  RawPage raw_page(int page) const;
};

std::string to_json(const AppSpec& app);
AppSpec app_from_json(std::string_view text);
AppSpec load_app(const std::filesystem::path& path);
void save_app(const AppSpec& app, const std::filesystem::path& path);

// Runtime state over an AppSpec: current page, back stack, covered lines.
// A crash relaunches the app at home and keeps the covered lines.
class SimApp final : public Environment {
 public:
  explicit SimApp(AppSpec spec);

  RawPage launch() override;
  StepOutcome execute(std::size_t event_index,
                      const std::optional<std::string>& input) override;
  StepOutcome system_event(Rng& rng) override;
  /// Dispatches a specific system event.
  StepOutcome system_event(SystemEvent event);
  double coverage() const override;

  const AppSpec& spec() const { return spec_; }
  int current_page() const { return current_; }
  const std::vector<int>& back_stack() const { return stack_; }
  std::size_t covered_lines() const { return covered_.size(); }
  bool launched() const { return launched_; }

 private:
  bool cover(const AppSpec::Cover& entry);
  bool enter_page(int page);
  std::optional<std::string> find_crash(std::optional<int> event,
                                        std::optional<SystemEvent> system,
                                        const std::optional<std::string>& input) const;
  StepOutcome outcome(bool increased, std::optional<std::string> crash) const;
  void relaunch();

  AppSpec spec_;
  // (page, event) -> indices into the AppSpec tables, in file order.
  std::map<std::pair<int, int>, std::vector<std::size_t>> transitions_;
  std::map<std::pair<int, int>, std::vector<std::size_t>> event_cover_;
  std::map<int, std::vector<std::size_t>> entry_cover_;
  int current_ = 0;
  std::vector<int> stack_;
  std::set<int> covered_;
  bool launched_ = false;
};

/// Knobs of the synthetic app generator.
struct GenParams {
  int page_count = 30;
  int events_min = 3;    // content events per page (system buttons excluded)
  int events_max = 7;
  int depth = 8;         // length of the guaranteed deepest chain
  int crash_count = 3;
  double functional_weight = 1.0;  // 0: labels independent of behavior
  std::uint64_t seed = 1;

  void validate() const;
};

/// Seeded synthetic app. Forward-navigating events tend to carry functional
/// words ("ok", "save", "next", ...) and larger cover sets; dismissive words
/// ("cancel", "close", "exit") pop back with little new code.
AppSpec generate_app(const GenParams& params);

/// Random text of length 1..12 over digits, letters and punctuation.
std::string random_input(Rng& rng);

/// Vocabulary used by the generator, exposed for audits.
bool is_functional_word(std::string_view word);
bool is_dismissive_word(std::string_view word);

}  // namespace qexplore
