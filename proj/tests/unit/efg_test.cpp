#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "graph_fuzz.hpp"
#include "oracles.hpp"
#include "qexplore/efg.hpp"
#include "qexplore/error.hpp"
#include "qexplore/sim.hpp"

using namespace qexplore;

namespace {

RawPage make_page(std::string activity, std::vector<std::string> texts) {
  RawPage page{std::move(activity), {}};
  for (auto& t : texts) page.events.push_back({std::move(t), EventKind::kClick});
  return page;
}

RawPage motivating_page() {
  return RawPage{"SettingsActivity",
                 {{"restart", EventKind::kRestart},
                  {"back", EventKind::kBack},
                  {"menu", EventKind::kMenu},
                  {"OK", EventKind::kClick},
                  {"Cancel", EventKind::kClick}}};
}

EventId ev(std::size_t i) { return static_cast<EventId>(i); }

}  // namespace

TEST(ExplorationGraph, FirstLaunchCreatesVerticesWithoutEdges) {
  ExplorationGraph g;
  PageSnapshot snap = g.update(motivating_page(), std::nullopt);
  EXPECT_EQ(snap.events.size(), 5u);
  EXPECT_EQ(g.vertex_count(), 5u);
  EXPECT_EQ(g.edge_count(), 0u);
  for (EventId e : snap.events) EXPECT_EQ(g.fcr(e), 0u);
  EXPECT_EQ(g.event(snap.events[3]).text, "OK");
  EXPECT_EQ(g.event(snap.events[3]).ordinal, 3u);
}

TEST(ExplorationGraph, RejectsEmptyPageAndUnknownExecutedVertex) {
  ExplorationGraph g;
  EXPECT_THROW(g.update(RawPage{"Main", {}}, std::nullopt), UsageError);
  EXPECT_THROW(g.update(motivating_page(), ev(0)), UsageError);
  g.update(motivating_page(), std::nullopt);
  EXPECT_THROW(g.update(motivating_page(), ev(99)), UsageError);
  EXPECT_THROW(g.record_execution(ev(5)), UsageError);
  EXPECT_THROW(g.fcr(ev(17)), UsageError);
}

TEST(ExplorationGraph, StatusBarShortcutMergesAcrossPages) {
  ExplorationGraph g;
  g.update(make_page("Settings", {"General", "Status bar shortcut"}), std::nullopt);
  PageSnapshot p2 = g.update(make_page("Settings", {"Status bar shortcut", "Minimum length"}), ev(0));
  const EventId first = ev(1);
  const EventId second = p2.events[0];
  EXPECT_EQ(g.merge_class(first), g.merge_class(second));
  ASSERT_EQ(g.similar(second).size(), 1u);
  EXPECT_EQ(g.similar(second)[0].event, first);
  EXPECT_EQ(index_of(g.similar(second)[0].page), 0u);

  g.record_execution(first);
  EXPECT_EQ(g.fcr(first), 1u);
  EXPECT_EQ(g.fcr(second), 1u);
}

TEST(ExplorationGraph, MergeRequiresActivityKindAndText) {
  ExplorationGraph g;
  g.update(make_page("A", {"Save"}), std::nullopt);
  PageSnapshot other_activity = g.update(make_page("B", {"Save"}), ev(0));
  PageSnapshot other_text = g.update(make_page("A", {"Save", "save now"}), ev(0));
  RawPage long_click{"A", {{"Save", EventKind::kLongClick}, {"x", EventKind::kClick}}};
  PageSnapshot other_kind = g.update(long_click, ev(0));

  EXPECT_NE(g.merge_class(ev(0)), g.merge_class(other_activity.events[0]));
  EXPECT_EQ(g.merge_class(ev(0)), g.merge_class(other_text.events[0]));
  EXPECT_NE(g.merge_class(ev(0)), g.merge_class(other_text.events[1]));
  EXPECT_NE(g.merge_class(ev(0)), g.merge_class(other_kind.events[0]));
}

TEST(ExplorationGraph, RepeatedTextOnOnePageStaysDistinct) {
  ExplorationGraph g;
  PageSnapshot a = g.update(make_page("A", {"ok", "ok"}), std::nullopt);
  EXPECT_NE(g.merge_class(a.events[0]), g.merge_class(a.events[1]));
  PageSnapshot b = g.update(make_page("A", {"ok", "ok", "x"}), a.events[0]);
  EXPECT_EQ(g.merge_class(a.events[0]), g.merge_class(b.events[0]));
  EXPECT_EQ(g.merge_class(a.events[1]), g.merge_class(b.events[1]));
}

TEST(ExplorationGraph, EmptyTextMergesOnlyAtSameOrdinal) {
  ExplorationGraph g;
  PageSnapshot a = g.update(make_page("A", {"", "x"}), std::nullopt);
  PageSnapshot b = g.update(make_page("A", {"x", ""}), a.events[1]);
  PageSnapshot c = g.update(make_page("A", {"", "y"}), a.events[1]);
  EXPECT_NE(g.merge_class(a.events[0]), g.merge_class(b.events[1]));
  EXPECT_EQ(g.merge_class(a.events[0]), g.merge_class(c.events[0]));
}

TEST(ExplorationGraph, RecordExecutionCountsOnlyTheClass) {
  ExplorationGraph g;
  PageSnapshot a = g.update(make_page("A", {"one", "two"}), std::nullopt);
  for (int i = 0; i < 7; ++i) g.record_execution(a.events[0]);
  EXPECT_EQ(g.fcr(a.events[0]), 7u);
  EXPECT_EQ(g.fcr(a.events[1]), 0u);
}

TEST(ExplorationGraph, ReobservingAPageIsIdempotent) {
  ExplorationGraph g;
  PageSnapshot a = g.update(make_page("A", {"scroll me", "next"}), std::nullopt);
  PageSnapshot again = g.update(make_page("A", {"scroll me", "next"}), a.events[0]);
  EXPECT_EQ(again.id, a.id);
  const auto vertices = g.vertex_count();
  const auto edges = g.edge_count();
  const std::string before = g.dump();
  g.update(make_page("A", {"scroll me", "next"}), a.events[0]);
  EXPECT_EQ(g.vertex_count(), vertices);
  EXPECT_EQ(g.edge_count(), edges);
  EXPECT_EQ(g.dump(), before);
}

TEST(ExplorationGraph, ScrollSelfLoopOnSimulatedAppKeepsPage) {
  SimApp app(load_app(oracle::data_dir() / "apps" / "scroll_loop.json"));
  ExplorationGraph g;
  PageSnapshot first = g.update(app.launch(), std::nullopt);
  const std::size_t scroll = 3;
  ASSERT_EQ(g.event(first.events[scroll]).kind, EventKind::kScroll);
  StepOutcome out = app.execute(scroll, std::nullopt);
  const auto vertices = g.vertex_count();
  PageSnapshot next = g.update(out.page, first.events[scroll]);
  EXPECT_EQ(next.id, first.id);
  EXPECT_EQ(g.vertex_count(), vertices);
  // The self-loop edge set is exactly the page's own events.
  auto succ = g.successors(first.events[scroll]);
  EXPECT_TRUE(std::equal(succ.begin(), succ.end(), first.events.begin(), first.events.end()));
}

TEST(ExplorationGraph, UnexecutedEventHasNoChildren) {
  ExplorationGraph g;
  PageSnapshot a = g.update(make_page("A", {"x", "y"}), std::nullopt);
  EXPECT_TRUE(g.children_generation(a.events[0], 1).empty());
}

TEST(ExplorationGraph, FirstGenerationOfTwoPageSimulatorApp) {
  SimApp app(load_app(oracle::data_dir() / "apps" / "motivating.json"));
  ExplorationGraph g;
  PageSnapshot home = g.update(app.launch(), std::nullopt);
  StepOutcome out = app.execute(3, std::nullopt);
  PageSnapshot next = g.update(out.page, home.events[3]);
  g.record_execution(home.events[3]);
  ASSERT_NE(next.id, home.id);
  // restart/back/menu on the second page share the home page's classes; OK's
  // own class is not counted as its own child.
  auto gen1 = g.children_generation(home.events[3], 1);
  EXPECT_EQ(gen1.size(), 5u);
  std::vector<ClassId> expected;
  for (EventId e : next.events) expected.push_back(g.merge_class(e));
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(gen1, expected);
}

TEST(ExplorationGraph, DiamondCountsSharedGrandchildrenOnce) {
  ExplorationGraph g;
  PageSnapshot start = g.update(make_page("S", {"go"}), std::nullopt);
  PageSnapshot p = g.update(make_page("P", {"left", "right"}), start.events[0]);
  g.update(make_page("R", {"a", "b", "c", "d"}), p.events[0]);
  g.update(make_page("R", {"a", "b", "c", "d"}), p.events[1]);
  EXPECT_EQ(g.children_generation(start.events[0], 1).size(), 2u);
  EXPECT_EQ(g.children_generation(start.events[0], 2).size(), 4u);
  EXPECT_TRUE(g.children_generation(start.events[0], 3).empty());

  oracle::ClassGraph brute;
  brute.children[0] = {1, 2};
  brute.children[1] = {3, 4, 5, 6};
  brute.children[2] = {3, 4, 5, 6};
  auto gens = brute.generations(0, 3);
  EXPECT_EQ(gens[1].size(), g.children_generation(start.events[0], 2).size());
}

TEST(ExplorationGraph, GenerationBoundsAreChecked) {
  ExplorationGraph g(3);
  g.update(make_page("A", {"x"}), std::nullopt);
  EXPECT_THROW(g.children_generation(ev(0), 0), UsageError);
  EXPECT_THROW(g.children_generation(ev(0), 4), UsageError);
  EXPECT_NO_THROW(g.children_generation(ev(0), 3));
}

TEST(ExplorationGraph, ChildrenGenerationIsPure) {
  ExplorationGraph g;
  PageSnapshot a = g.update(make_page("A", {"x", "y"}), std::nullopt);
  g.update(make_page("B", {"p", "q", "x"}), a.events[0]);
  const auto first = g.children_generations(a.events[0]);
  const auto second = g.children_generations(a.events[0]);
  EXPECT_EQ(first, second);
}

TEST(ExplorationGraph, DumpListsVerticesLinksAndEdges) {
  ExplorationGraph g;
  g.update(make_page("A", {"ok"}), std::nullopt);
  g.update(make_page("A", {"ok", "tab\there"}), ev(0));
  g.record_execution(ev(0));
  const std::string expected =
      "vertex\t0\t0\tclick\tok\t1\t1-1\n"
      "vertex\t1\t1\tclick\tok\t1\t0-0\n"
      "vertex\t1\t2\tclick\ttab\\there\t0\t\n"
      "edge\t0\t1\n"
      "edge\t0\t2\n";
  EXPECT_EQ(g.dump(), expected);
}

TEST(ExplorationGraph, MergeFuzzKeepsClassCountsConsistent) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    oracle::FuzzReport report = oracle::fuzz_merge_classes(seed, 2000, 25);
    EXPECT_TRUE(report.violations.empty()) << report.violations.front();
    EXPECT_GT(report.checks, 0);
  }
}

TEST(EventKind, WireNamesRoundTrip) {
  for (int k = 0; k < 8; ++k) {
    const auto kind = static_cast<EventKind>(k);
    EXPECT_EQ(parse_event_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_event_kind("swipe"), FormatError);
}
