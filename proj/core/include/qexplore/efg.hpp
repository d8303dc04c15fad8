#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qexplore {

enum class EventKind : std::uint8_t {
  kClick,
  kLongClick,
  kEdit,
  kScroll,
  kBack,
  kMenu,
  kRestart,
  kSystem,
};

std::string_view to_string(EventKind kind);
/// Parses the lowercase wire name ("click", "long_click", ...).
EventKind parse_event_kind(std::string_view name);

// Vertex, page and merge-class identifiers are dense indices assigned by the
// graph in creation order.
enum class EventId : std::uint32_t {};
enum class PageId : std::uint32_t {};
enum class ClassId : std::uint32_t {};

constexpr std::size_t index_of(EventId id) { return static_cast<std::size_t>(id); }
constexpr std::size_t index_of(PageId id) { return static_cast<std::size_t>(id); }
constexpr std::size_t index_of(ClassId id) { return static_cast<std::size_t>(id); }

/// One widget/action pair as reported by the environment.
struct RawEvent {
  std::string text;
  EventKind kind = EventKind::kClick;

  friend auto operator<=>(const RawEvent&, const RawEvent&) = default;
  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

/// A page as observed from the environment, before the graph assigns ids.
struct RawPage {
  std::string activity;
  std::vector<RawEvent> events;

  friend auto operator<=>(const RawPage&, const RawPage&) = default;
  friend bool operator==(const RawPage&, const RawPage&) = default;
};

struct EventRecord {
  EventId id{};
  PageId page{};
  std::string text;
  EventKind kind = EventKind::kClick;
  std::string activity;
  std::size_t ordinal = 0;  // position on its page

  bool accepts_input() const { return kind == EventKind::kEdit; }
};

struct PageSnapshot {
  PageId id{};
  std::string activity;
  std::vector<EventId> events;  // same order as the raw page
};

/// A "Similar" link: the (page, event) of another vertex in the same merge
/// class.
struct SimilarLink {
  PageId page{};
  EventId event{};
};

// Compacted event flow graph. Vertices are events; executing a vertex adds
// edges to every event of the page it produced. Vertices with equal activity,
// kind and text on different pages are merged into one class that shares an
// execution count and a child set.
class ExplorationGraph {
 public:
  explicit ExplorationGraph(int max_generations = 3);

  /// Registers the observed page (creating vertices and merge links for a
  /// page not seen before) and adds edges from `executed` to each of its
  /// events. Throws UsageError on a page without events or an unknown
  /// `executed` vertex.
  PageSnapshot update(const RawPage& observed, std::optional<EventId> executed);

  /// Increments the execution count of `event`'s merge class.
  void record_execution(EventId event);

  /// Distinct merge classes at exactly BFS distance `m` from `event`
  /// (1 <= m <= max_generations), sorted by id.
  std::vector<ClassId> children_generation(EventId event, int m) const;

  /// All generations 1..max_generations from one traversal.
  std::vector<std::vector<ClassId>> children_generations(EventId event) const;

  std::uint64_t fcr(EventId event) const;
  std::uint64_t class_fcr(ClassId cls) const;
  ClassId merge_class(EventId event) const;
  std::span<const EventId> class_members(ClassId cls) const;
  std::vector<SimilarLink> similar(EventId event) const;

  const EventRecord& event(EventId id) const;
  const PageSnapshot& page(PageId id) const;
  std::optional<PageId> find_page(const RawPage& raw) const;

  /// Sorted, de-duplicated successors of one vertex.
  std::span<const EventId> successors(EventId event) const;

  bool contains(EventId id) const { return index_of(id) < vertices_.size(); }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t page_count() const { return pages_.size(); }
  std::size_t class_count() const { return classes_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  int max_generations() const { return max_generations_; }

  /// Deterministic text rendering: one `vertex` line per vertex followed by
  /// one `edge` line per edge, tab-separated.
  std::string dump() const;

 private:
  struct MergeKey {
    std::string activity;
    EventKind kind;
    std::string text;
    std::size_t slot;  // occurrence index for text, ordinal for empty text

    friend auto operator<=>(const MergeKey&, const MergeKey&) = default;
  };

  struct MergeClass {
    std::vector<EventId> members;
    std::vector<ClassId> children;  // sorted, unique
    std::uint64_t count = 0;
  };

  const EventRecord& checked(EventId id, const char* op) const;
  void add_edge(EventId from, EventId to);

  int max_generations_;
  std::vector<EventRecord> vertices_;
  std::vector<ClassId> vertex_class_;
  std::vector<std::vector<EventId>> out_edges_;
  std::vector<MergeClass> classes_;
  std::vector<PageSnapshot> pages_;
  std::map<RawPage, PageId> page_index_;
  std::map<MergeKey, ClassId> class_index_;
  std::size_t edge_count_ = 0;
};

}  // namespace qexplore
