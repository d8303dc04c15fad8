#include <gtest/gtest.h>

#include <cctype>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qexplore/error.hpp"
#include "qexplore/features.hpp"
#include "qexplore/rng.hpp"
#include "qexplore/sim.hpp"

using namespace qexplore;

namespace {

AppSpec fixture(const std::string& name) {
  return load_app(oracle::data_dir() / "apps" / (name + ".json"));
}

// Lines an event can newly cover in a fresh episode: its own cover set plus
// the entry lines of the page it opens.
std::size_t reachable_lines(const AppSpec& app, int page, int event) {
  std::set<int> lines;
  int target = -1;
  for (const auto& t : app.transitions) {
    if (t.page == page && t.event == event && t.to >= 0) target = t.to;
  }
  for (const auto& c : app.cover) {
    if (c.system || !c.page) continue;
    if (*c.page == page && c.event == event) lines.insert(c.lines.begin(), c.lines.end());
    if (*c.page == target && !c.event) lines.insert(c.lines.begin(), c.lines.end());
  }
  return lines.size();
}

double point_biserial(const std::vector<int>& group, const std::vector<double>& value) {
  double n1 = 0, n0 = 0, s1 = 0, s0 = 0, mean = 0;
  for (std::size_t i = 0; i < value.size(); ++i) mean += value[i];
  mean /= static_cast<double>(value.size());
  double var = 0;
  for (std::size_t i = 0; i < value.size(); ++i) {
    var += (value[i] - mean) * (value[i] - mean);
    if (group[i]) {
      ++n1;
      s1 += value[i];
    } else {
      ++n0;
      s0 += value[i];
    }
  }
  const double n = n0 + n1;
  const double sd = std::sqrt(var / n);
  return (s1 / n1 - s0 / n0) / sd * std::sqrt(n1 * n0 / (n * n));
}

double label_coverage_correlation(double weight) {
  std::vector<int> functional;
  std::vector<double> lines;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    GenParams params;
    params.seed = seed;
    params.functional_weight = weight;
    const AppSpec app = generate_app(params);
    for (int p = 0; p < static_cast<int>(app.pages.size()); ++p) {
      const auto& events = app.pages[static_cast<std::size_t>(p)].events;
      for (int e = 3; e < static_cast<int>(events.size()); ++e) {
        if (events[static_cast<std::size_t>(e)].kind != EventKind::kClick) continue;
        const auto words = tokenize(events[static_cast<std::size_t>(e)].text);
        functional.push_back(!words.empty() && is_functional_word(words[0]));
        lines.push_back(static_cast<double>(reachable_lines(app, p, e)));
      }
    }
  }
  return point_biserial(functional, lines);
}

}  // namespace

TEST(SimApp, MotivatingHomePageLayout) {
  SimApp app(fixture("motivating"));
  const RawPage home = app.launch();
  ASSERT_EQ(home.events.size(), 5u);
  const std::vector<std::string> texts = {"restart", "back", "menu", "OK", "Cancel"};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(home.events[i].text, texts[i]);
  EXPECT_EQ(home.events[0].kind, EventKind::kRestart);
  EXPECT_EQ(home.events[1].kind, EventKind::kBack);
  EXPECT_EQ(home.events[2].kind, EventKind::kMenu);
}

TEST(SimApp, LaunchIsDeterministicAndCoversEntryLines) {
  SimApp app(fixture("motivating"));
  const RawPage first = app.launch();
  EXPECT_DOUBLE_EQ(app.coverage(), 3.0 / 16.0);
  app.execute(3, std::nullopt);
  EXPECT_EQ(app.launch(), first);
  EXPECT_DOUBLE_EQ(app.coverage(), 3.0 / 16.0);
  EXPECT_TRUE(app.back_stack().empty());
}

TEST(SimApp, OkOpensNewPageAndIncreasesCoverage) {
  SimApp app(fixture("motivating"));
  const RawPage home = app.launch();
  const StepOutcome out = app.execute(3, std::nullopt);
  EXPECT_NE(out.page, home);
  EXPECT_TRUE(out.coverage_increased);
  EXPECT_FALSE(out.crash_message);
  EXPECT_EQ(app.current_page(), 1);
  EXPECT_DOUBLE_EQ(out.coverage, 8.0 / 16.0);
}

TEST(SimApp, ScrollSelfLoopAddsNothing) {
  SimApp app(fixture("scroll_loop"));
  const RawPage page = app.launch();
  const double before = app.coverage();
  const StepOutcome out = app.execute(3, std::nullopt);
  EXPECT_FALSE(out.coverage_increased);
  EXPECT_EQ(out.page, page);
  EXPECT_EQ(out.coverage, before);
  EXPECT_TRUE(app.execute(4, std::nullopt).coverage_increased);
  EXPECT_FALSE(app.execute(4, std::nullopt).coverage_increased);
}

TEST(SimApp, CrashReturnsMessageAndRelaunchesHomeKeepingCoverage) {
  SimApp app(fixture("crash"));
  app.launch();
  app.execute(3, std::nullopt);
  ASSERT_EQ(app.current_page(), 1);
  const double before = app.coverage();
  const StepOutcome out = app.execute(3, std::nullopt);
  ASSERT_TRUE(out.crash_message);
  EXPECT_EQ(*out.crash_message,
            "java.lang.NullPointerException at crash.NoteActivity.onDelete(line 42)");
  EXPECT_EQ(app.current_page(), 0);
  EXPECT_TRUE(app.back_stack().empty());
  EXPECT_EQ(out.page, app.spec().raw_page(0));
  EXPECT_GT(out.coverage, before);
  EXPECT_TRUE(out.coverage_increased);
}

TEST(SimApp, CrashFiresOnlyWhenInputPredicateMatches) {
  SimApp app(fixture("crash"));
  app.launch();
  StepOutcome plain = app.execute(4, std::string("123"));
  EXPECT_FALSE(plain.crash_message);
  EXPECT_TRUE(plain.coverage_increased);
  StepOutcome punct = app.execute(4, std::string("12.5"));
  ASSERT_TRUE(punct.crash_message);
  EXPECT_NE(punct.crash_message->find("NumberFormatException"), std::string::npos);
}

TEST(SimApp, RotateCrashAndSystemLines) {
  SimApp app(fixture("crash"));
  app.launch();
  StepOutcome home_rotate = app.system_event(SystemEvent::kRotate);
  EXPECT_FALSE(home_rotate.crash_message);
  EXPECT_EQ(home_rotate.system, SystemEvent::kRotate);

  StepOutcome volume = app.system_event(SystemEvent::kVolume);
  EXPECT_TRUE(volume.coverage_increased);
  EXPECT_EQ(app.current_page(), 0);

  app.execute(3, std::nullopt);
  StepOutcome rotate = app.system_event(SystemEvent::kRotate);
  ASSERT_TRUE(rotate.crash_message);
  EXPECT_NE(rotate.crash_message->find("onConfigurationChanged"), std::string::npos);
  EXPECT_EQ(app.current_page(), 0);
}

TEST(SimApp, SystemEventsWithoutEntriesChangeNothing) {
  SimApp app(fixture("scroll_loop"));
  const RawPage page = app.launch();
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const StepOutcome out = app.system_event(rng);
    EXPECT_FALSE(out.coverage_increased);
    EXPECT_FALSE(out.crash_message);
    EXPECT_EQ(out.page, page);
  }
}

TEST(SimApp, SystemEventKindsAreUniform) {
  SimApp app(fixture("scroll_loop"));
  app.launch();
  Rng rng(2024);
  std::vector<std::size_t> counts(3, 0);
  for (int i = 0; i < 3000; ++i) ++counts[static_cast<std::size_t>(*app.system_event(rng).system)];
  for (std::size_t c : counts) EXPECT_GT(c, 0u);
  EXPECT_GT(oracle::chi_square_p(counts), 0.01);
}

TEST(SimApp, BackFollowsStackAndRestartClearsIt) {
  SimApp app(fixture("three_page"));
  app.launch();
  app.execute(3, std::nullopt);
  app.execute(3, std::nullopt);
  EXPECT_EQ(app.current_page(), 2);
  EXPECT_EQ(app.back_stack(), (std::vector<int>{0, 1}));
  app.execute(1, std::nullopt);
  EXPECT_EQ(app.current_page(), 1);
  app.execute(1, std::nullopt);
  EXPECT_EQ(app.current_page(), 0);
  app.execute(1, std::nullopt);
  EXPECT_EQ(app.current_page(), 0);

  app.execute(3, std::nullopt);
  app.execute(3, std::nullopt);
  app.execute(0, std::nullopt);
  EXPECT_EQ(app.current_page(), 0);
  EXPECT_TRUE(app.back_stack().empty());
}

TEST(SimApp, DismissTransitionPops) {
  SimApp app(fixture("three_page"));
  app.launch();
  app.execute(3, std::nullopt);
  app.execute(4, std::nullopt);
  EXPECT_EQ(app.current_page(), 0);
}

TEST(SimApp, RejectsEventsNotOnPageAndMismatchedInput) {
  SimApp app(fixture("crash"));
  EXPECT_THROW(app.execute(0, std::nullopt), UsageError);
  app.launch();
  EXPECT_THROW(app.execute(5, std::nullopt), UsageError);
  EXPECT_THROW(app.execute(4, std::nullopt), UsageError);
  EXPECT_THROW(app.execute(3, std::string("x")), UsageError);
}

TEST(SimApp, CoverageIsMonotoneUnderRandomActions) {
  SimApp app(generate_app(GenParams{}));
  Rng rng(6);
  app.launch();
  double last = app.coverage();
  for (int i = 0; i < 500; ++i) {
    StepOutcome out;
    if (i % 10 == 0) {
      out = app.system_event(rng);
    } else {
      const RawPage page = app.spec().raw_page(app.current_page());
      const std::size_t e = rng.uniform_index(page.events.size());
      std::optional<std::string> input;
      if (page.events[e].kind == EventKind::kEdit) input = random_input(rng);
      out = app.execute(e, input);
    }
    EXPECT_GE(out.coverage, last);
    EXPECT_EQ(out.coverage_increased, out.coverage > last);
    EXPECT_LE(out.coverage, 1.0);
    last = out.coverage;
  }
}

TEST(SimApp, SameActionsGiveSameOutcomes) {
  const AppSpec spec = generate_app(GenParams{});
  auto run = [&spec] {
    SimApp app(spec);
    Rng rng(77);
    std::ostringstream log;
    app.launch();
    for (int i = 0; i < 300; ++i) {
      const RawPage page = app.spec().raw_page(app.current_page());
      const std::size_t e = rng.uniform_index(page.events.size());
      std::optional<std::string> input;
      if (page.events[e].kind == EventKind::kEdit) input = random_input(rng);
      const StepOutcome out = app.execute(e, input);
      log << app.current_page() << ' ' << out.coverage << ' ' << out.crash_message.value_or("-") << '\n';
    }
    return log.str();
  };
  EXPECT_EQ(run(), run());
}

TEST(AppSpec, JsonRoundTripIsByteStable) {
  for (const char* name : {"motivating", "scroll_loop", "crash", "three_page"}) {
    const AppSpec app = fixture(name);
    const std::string json = to_json(app);
    EXPECT_EQ(to_json(app_from_json(json)), json) << name;
  }
  const AppSpec generated = generate_app(GenParams{});
  EXPECT_EQ(to_json(app_from_json(to_json(generated))), to_json(generated));
}

TEST(AppSpec, InvalidSpecsAreRejected) {
  EXPECT_THROW(app_from_json("{\"pages\": []}"), FormatError);
  EXPECT_THROW(app_from_json("{\"qxp_app\": 2, \"total_lines\": 1, \"pages\": []}"), FormatError);
  EXPECT_THROW(app_from_json("not json"), FormatError);

  AppSpec app = fixture("three_page");
  app.transitions.push_back({0, 3, InputClass::kAny, 9});
  EXPECT_THROW(app.validate(), FormatError);
  app = fixture("three_page");
  app.cover.push_back({0, 3, std::nullopt, InputClass::kAny, {99}});
  EXPECT_THROW(app.validate(), FormatError);
  app = fixture("three_page");
  app.pages[1].events.clear();
  EXPECT_THROW(app.validate(), FormatError);
  EXPECT_THROW(load_app("/nonexistent/app.json"), FormatError);
}

TEST(InputClass, Predicates) {
  EXPECT_TRUE(input_matches(InputClass::kAny, std::nullopt));
  EXPECT_FALSE(input_matches(InputClass::kNumeric, std::nullopt));
  EXPECT_TRUE(input_matches(InputClass::kNumeric, std::string("0123")));
  EXPECT_FALSE(input_matches(InputClass::kNumeric, std::string("12a")));
  EXPECT_TRUE(input_matches(InputClass::kAlpha, std::string("abC")));
  EXPECT_TRUE(input_matches(InputClass::kHasDigit, std::string("a1")));
  EXPECT_TRUE(input_matches(InputClass::kHasPunct, std::string("a.b")));
  EXPECT_FALSE(input_matches(InputClass::kHasPunct, std::string("ab")));
  EXPECT_TRUE(input_matches(InputClass::kLong, std::string("12345678")));
  EXPECT_FALSE(input_matches(InputClass::kLong, std::string("1234567")));
  for (const char* n : {"any", "numeric", "alpha", "has_digit", "has_punct", "long"}) {
    EXPECT_EQ(to_string(parse_input_class(n)), n);
  }
}

TEST(RandomInput, LengthAndCharacterClasses) {
  Rng rng(31);
  bool digit = false, letter = false, punct = false;
  for (int i = 0; i < 10000; ++i) {
    const std::string s = random_input(rng);
    ASSERT_GE(s.size(), 1u);
    ASSERT_LE(s.size(), 12u);
    for (unsigned char c : s) {
      digit |= std::isdigit(c) != 0;
      letter |= std::isalpha(c) != 0;
      punct |= std::ispunct(c) != 0;
      ASSERT_TRUE(std::isdigit(c) || std::isalpha(c) || std::ispunct(c));
    }
  }
  EXPECT_TRUE(digit && letter && punct);
  Rng a(5), b(5);
  EXPECT_EQ(random_input(a), random_input(b));
}

TEST(GenerateApp, SameSeedSameBytes) {
  GenParams params;
  params.seed = 42;
  EXPECT_EQ(to_json(generate_app(params)), to_json(generate_app(params)));
  params.seed = 43;
  GenParams other = params;
  other.seed = 44;
  EXPECT_NE(to_json(generate_app(params)), to_json(generate_app(other)));
}

TEST(GenerateApp, InfeasibleParamsAreRejected) {
  GenParams params;
  params.depth = params.page_count;
  EXPECT_THROW(generate_app(params), UsageError);
  params = GenParams{};
  params.events_min = 5;
  params.events_max = 4;
  EXPECT_THROW(generate_app(params), UsageError);
  params = GenParams{};
  params.functional_weight = 1.5;
  EXPECT_THROW(generate_app(params), UsageError);
}

TEST(GenerateApp, SelfAudit) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GenParams params;
    params.seed = seed;
    const AppSpec app = generate_app(params);
    ASSERT_EQ(static_cast<int>(app.pages.size()), params.page_count);

    // Depth: longest shortest-path from home over forward transitions.
    std::vector<int> dist(app.pages.size(), -1);
    std::deque<int> queue{app.home};
    dist[static_cast<std::size_t>(app.home)] = 0;
    std::size_t edges = 0;
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      for (const auto& t : app.transitions) {
        if (t.page != p || t.to < 0 || t.to == p) continue;
        if (dist[static_cast<std::size_t>(t.to)] < 0) {
          dist[static_cast<std::size_t>(t.to)] = dist[static_cast<std::size_t>(p)] + 1;
          queue.push_back(t.to);
        }
      }
    }
    for (const auto& t : app.transitions) edges += t.to >= 0;
    int max_depth = 0;
    for (int d : dist) {
      EXPECT_GE(d, 0) << "unreachable page in app " << seed;
      max_depth = std::max(max_depth, d);
    }
    EXPECT_EQ(max_depth, params.depth);

    double content = 0;
    for (const auto& page : app.pages) {
      ASSERT_GE(page.events.size(), 4u);
      EXPECT_EQ(page.events[0].kind, EventKind::kRestart);
      EXPECT_EQ(page.events[1].kind, EventKind::kBack);
      EXPECT_EQ(page.events[2].kind, EventKind::kMenu);
      const auto n = static_cast<int>(page.events.size()) - 3;
      EXPECT_GE(n, params.events_min);
      content += n;
    }
    const double mean = content / static_cast<double>(app.pages.size());
    EXPECT_GE(mean, params.events_min);
    EXPECT_LE(mean, params.events_max);
    const double out_degree = static_cast<double>(edges) / static_cast<double>(app.pages.size());
    EXPECT_GT(out_degree, 0.9);
    EXPECT_LT(out_degree, params.events_max);

    EXPECT_LE(static_cast<int>(app.crashes.size()), params.crash_count);
    EXPECT_GE(static_cast<int>(app.crashes.size()), 1);
    for (const auto& c : app.crashes) {
      ASSERT_TRUE(c.page);
      EXPECT_GE(2 * dist[static_cast<std::size_t>(*c.page)], params.depth);
    }
    SimApp sim(app);
    sim.launch();
    EXPECT_LT(sim.coverage(), 0.2);
  }
}

TEST(GenerateApp, LabelsCarryNoSignalWithoutFunctionalWeight) {
  EXPECT_LT(std::fabs(label_coverage_correlation(0.0)), 0.1);
}

TEST(GenerateApp, FunctionalLabelsPredictCoverageByDefault) {
  EXPECT_GT(label_coverage_correlation(GenParams{}.functional_weight), 0.3);
}

TEST(GenerateApp, SaveAndLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "qexplore_sim_test";
  std::filesystem::create_directories(dir);
  const AppSpec app = generate_app(GenParams{});
  save_app(app, dir / "app.json");
  EXPECT_EQ(to_json(load_app(dir / "app.json")), to_json(app));
  std::filesystem::remove_all(dir);
}
