#include "qexplore/efg.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "qexplore/error.hpp"

namespace qexplore {
namespace {

constexpr std::array<std::string_view, 8> kKindNames = {
    "click", "long_click", "edit", "scroll", "back", "menu", "restart", "system"};

void write_escaped(std::ostream& os, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '\t': os << "\\t"; break;
      case '\n': os << "\\n"; break;
      case '\\': os << "\\\\"; break;
      default: os << c;
    }
  }
}

// Inserts into a sorted vector; returns false if already present.
template <class T>
bool insert_sorted(std::vector<T>& v, T value) {
  auto it = std::lower_bound(v.begin(), v.end(), value);
  if (it != v.end() && *it == value) return false;
  v.insert(it, value);
  return true;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

EventKind parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  throw FormatError("unknown event kind '" + std::string(name) + "'");
}

ExplorationGraph::ExplorationGraph(int max_generations)
    : max_generations_(max_generations) {
  if (max_generations < 1) {
    throw UsageError("ExplorationGraph: max_generations must be positive");
  }
}

const EventRecord& ExplorationGraph::checked(EventId id, const char* op) const {
  if (!contains(id)) {
    throw UsageError(std::string(op) + ": unknown vertex " +
                     std::to_string(index_of(id)));
  }
  return vertices_[index_of(id)];
}

PageSnapshot ExplorationGraph::update(const RawPage& observed,
                                      std::optional<EventId> executed) {
  if (observed.events.empty()) {
    throw UsageError("update_graph: observed page has no events");
  }
  if (executed) checked(*executed, "update_graph");

  PageId page_id;
  if (auto found = page_index_.find(observed); found != page_index_.end()) {
    page_id = found->second;
  } else {
    page_id = static_cast<PageId>(pages_.size());
    PageSnapshot snapshot{page_id, observed.activity, {}};
    snapshot.events.reserve(observed.events.size());

    // Occurrence counter per (kind, text) on this page, so that the k-th
    // "OK" here pairs with the k-th "OK" elsewhere and never with a sibling.
    std::map<std::pair<EventKind, std::string_view>, std::size_t> seen;
    for (std::size_t ordinal = 0; ordinal < observed.events.size(); ++ordinal) {
      const RawEvent& raw = observed.events[ordinal];
      const auto id = static_cast<EventId>(vertices_.size());
      vertices_.push_back(EventRecord{id, page_id, raw.text, raw.kind,
                                      observed.activity, ordinal});
      out_edges_.emplace_back();

      const std::size_t slot =
          raw.text.empty() ? ordinal : seen[{raw.kind, raw.text}]++;
      MergeKey key{observed.activity, raw.kind, raw.text, slot};
      auto [it, inserted] =
          class_index_.try_emplace(std::move(key), static_cast<ClassId>(classes_.size()));
      if (inserted) classes_.emplace_back();
      classes_[index_of(it->second)].members.push_back(id);
      vertex_class_.push_back(it->second);
      snapshot.events.push_back(id);
    }
    pages_.push_back(std::move(snapshot));
    page_index_.emplace(observed, page_id);
  }

  if (executed) {
    for (EventId target : pages_[index_of(page_id)].events) {
      add_edge(*executed, target);
    }
  }
  return pages_[index_of(page_id)];
}

void ExplorationGraph::add_edge(EventId from, EventId to) {
  if (!insert_sorted(out_edges_[index_of(from)], to)) return;
  ++edge_count_;
  insert_sorted(classes_[index_of(vertex_class_[index_of(from)])].children,
                vertex_class_[index_of(to)]);
}

void ExplorationGraph::record_execution(EventId event) {
  checked(event, "record_execution");
  ++classes_[index_of(vertex_class_[index_of(event)])].count;
}

std::vector<std::vector<ClassId>> ExplorationGraph::children_generations(
    EventId event) const {
  checked(event, "children_generation");
  std::vector<std::vector<ClassId>> generations;
  generations.reserve(static_cast<std::size_t>(max_generations_));

  std::vector<bool> visited(classes_.size(), false);
  std::vector<ClassId> frontier{vertex_class_[index_of(event)]};
  visited[index_of(frontier.front())] = true;
  for (int m = 1; m <= max_generations_; ++m) {
    std::vector<ClassId> next;
    for (ClassId cls : frontier) {
      for (ClassId child : classes_[index_of(cls)].children) {
        if (visited[index_of(child)]) continue;
        visited[index_of(child)] = true;
        next.push_back(child);
      }
    }
    std::sort(next.begin(), next.end());
    generations.push_back(next);
    frontier = std::move(next);
  }
  return generations;
}

std::vector<ClassId> ExplorationGraph::children_generation(EventId event,
                                                           int m) const {
  if (m < 1 || m > max_generations_) {
    throw UsageError("children_generation: generation " + std::to_string(m) +
                     " outside [1, " + std::to_string(max_generations_) + "]");
  }
  return children_generations(event)[static_cast<std::size_t>(m - 1)];
}

std::uint64_t ExplorationGraph::fcr(EventId event) const {
  checked(event, "fcr");
  return classes_[index_of(vertex_class_[index_of(event)])].count;
}

std::uint64_t ExplorationGraph::class_fcr(ClassId cls) const {
  if (index_of(cls) >= classes_.size()) throw UsageError("class_fcr: unknown class");
  return classes_[index_of(cls)].count;
}

ClassId ExplorationGraph::merge_class(EventId event) const {
  checked(event, "merge_class");
  return vertex_class_[index_of(event)];
}

std::span<const EventId> ExplorationGraph::class_members(ClassId cls) const {
  if (index_of(cls) >= classes_.size()) throw UsageError("class_members: unknown class");
  return classes_[index_of(cls)].members;
}

std::vector<SimilarLink> ExplorationGraph::similar(EventId event) const {
  checked(event, "similar");
  std::vector<SimilarLink> links;
  for (EventId other : classes_[index_of(vertex_class_[index_of(event)])].members) {
    if (other != event) links.push_back({vertices_[index_of(other)].page, other});
  }
  return links;
}

const EventRecord& ExplorationGraph::event(EventId id) const {
  return checked(id, "event");
}

const PageSnapshot& ExplorationGraph::page(PageId id) const {
  if (index_of(id) >= pages_.size()) throw UsageError("page: unknown page id");
  return pages_[index_of(id)];
}

std::optional<PageId> ExplorationGraph::find_page(const RawPage& raw) const {
  if (auto it = page_index_.find(raw); it != page_index_.end()) return it->second;
  return std::nullopt;
}

std::span<const EventId> ExplorationGraph::successors(EventId event) const {
  checked(event, "successors");
  return out_edges_[index_of(event)];
}

std::string ExplorationGraph::dump() const {
  std::ostringstream os;
  for (const EventRecord& v : vertices_) {
    os << "vertex\t" << index_of(v.page) << '\t' << index_of(v.id) << '\t'
       << to_string(v.kind) << '\t';
    write_escaped(os, v.text);
    os << '\t' << fcr(v.id) << '\t';
    bool first = true;
    for (const SimilarLink& link : similar(v.id)) {
      os << (first ? "" : ",") << index_of(link.page) << '-' << index_of(link.event);
      first = false;
    }
    os << '\n';
  }
  for (std::size_t from = 0; from < out_edges_.size(); ++from) {
    for (EventId to : out_edges_[from]) {
      os << "edge\t" << from << '\t' << index_of(to) << '\n';
    }
  }
  return os.str();
}

}  // namespace qexplore
