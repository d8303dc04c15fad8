#include "qexplore/sim.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qexplore/error.hpp"
#include "qexplore/rng.hpp"

namespace qexplore {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 3> kSystemNames = {"rotate", "volume", "call"};
constexpr std::array<std::string_view, 6> kInputNames = {
    "any", "numeric", "alpha", "has_digit", "has_punct", "long"};

constexpr std::array<std::string_view, 6> kFunctional = {"ok", "save", "next",
                                                         "open", "add", "delete"};
constexpr std::array<std::string_view, 3> kDismissive = {"cancel", "close", "exit"};
constexpr std::array<std::string_view, 8> kNeutral = {
    "about", "help", "refresh", "sort", "share", "view", "info", "search"};
constexpr std::array<std::string_view, 8> kNouns = {
    "note", "file", "item", "photo", "contact", "account", "list", "entry"};
constexpr std::array<std::string_view, 4> kFields = {"name", "email", "amount", "title"};
constexpr std::array<std::string_view, 5> kExceptions = {
    "java.lang.NullPointerException", "java.lang.IllegalStateException",
    "java.lang.IndexOutOfBoundsException", "java.lang.NumberFormatException",
    "android.database.sqlite.SQLiteException"};

constexpr std::string_view kInputAlphabet =
    "0123456789"
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

SystemEvent parse_system(std::string_view name) {
  for (std::size_t i = 0; i < kSystemNames.size(); ++i) {
    if (kSystemNames[i] == name) return static_cast<SystemEvent>(i);
  }
  throw FormatError("unknown system event '" + std::string(name) + "'");
}

template <class T>
std::optional<T> opt_field(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(SystemEvent event) {
  return kSystemNames.at(static_cast<std::size_t>(event));
}

std::string_view to_string(InputClass cls) {
  return kInputNames.at(static_cast<std::size_t>(cls));
}

InputClass parse_input_class(std::string_view name) {
  for (std::size_t i = 0; i < kInputNames.size(); ++i) {
    if (kInputNames[i] == name) return static_cast<InputClass>(i);
  }
  throw FormatError("unknown input class '" + std::string(name) + "'");
}

bool input_matches(InputClass cls, const std::optional<std::string>& input) {
  if (cls == InputClass::kAny) return true;
  if (!input || input->empty()) return false;
  const std::string& s = *input;
  auto all = [&](auto pred) {
    return std::all_of(s.begin(), s.end(), [&](char c) { return pred(static_cast<unsigned char>(c)) != 0; });
  };
  auto any = [&](auto pred) {
    return std::any_of(s.begin(), s.end(), [&](char c) { return pred(static_cast<unsigned char>(c)) != 0; });
  };
  switch (cls) {
    case InputClass::kNumeric: return all(::isdigit);
    case InputClass::kAlpha: return all(::isalpha);
    case InputClass::kHasDigit: return any(::isdigit);
    case InputClass::kHasPunct: return any(::ispunct);
    case InputClass::kLong: return s.size() >= 8;
    case InputClass::kAny: break;
  }
  return true;
}

bool is_functional_word(std::string_view word) { return contains(kFunctional, word); }
bool is_dismissive_word(std::string_view word) { return contains(kDismissive, word); }

// ---------------------------------------------------------------------------
// AppSpec

RawPage AppSpec::raw_page(int page) const {
  const Page& p = pages.at(static_cast<std::size_t>(page));
  return RawPage{p.activity, p.events};
}

void AppSpec::validate() const {
  auto fail = [this](const std::string& what) {
    throw FormatError("app '" + name + "': " + what);
  };
  const int page_count = static_cast<int>(pages.size());
  if (pages.empty()) fail("no pages");
  if (total_lines < 1) fail("total_lines must be positive");
  if (home < 0 || home >= page_count) fail("home is not a page");
  for (int p = 0; p < page_count; ++p) {
    if (pages[static_cast<std::size_t>(p)].events.empty()) {
      fail("page " + std::to_string(p) + " has no events");
    }
  }
  auto valid_event = [&](int page, int event) {
    return page >= 0 && page < page_count && event >= 0 &&
           event < static_cast<int>(pages[static_cast<std::size_t>(page)].events.size());
  };
  for (const auto& t : transitions) {
    if (!valid_event(t.page, t.event)) fail("transition from unknown event");
    if (t.to != kPopPage && (t.to < 0 || t.to >= page_count)) {
      fail("transition to unknown page " + std::to_string(t.to));
    }
  }
  for (const auto& c : cover) {
    if (c.event && c.system) fail("cover entry names both an event and a system event");
    if (!c.system && !c.page) fail("cover entry without page");
    if (c.page && (*c.page < 0 || *c.page >= page_count)) fail("cover entry on unknown page");
    if (c.event && !valid_event(*c.page, *c.event)) fail("cover entry on unknown event");
    for (int line : c.lines) {
      if (line < 0 || line >= total_lines) fail("cover line outside [0, total_lines)");
    }
  }
  for (const auto& c : crashes) {
    if (c.event.has_value() == c.system.has_value()) {
      fail("crash entry needs exactly one of event/system");
    }
    if (c.event && (!c.page || !valid_event(*c.page, *c.event))) {
      fail("crash entry on unknown event");
    }
    if (c.page && (*c.page < 0 || *c.page >= page_count)) fail("crash entry on unknown page");
    if (c.message.empty()) fail("crash entry without message");
  }
}

std::string to_json(const AppSpec& app) {
  Json j;
  j["qxp_app"] = 1;
  j["name"] = app.name;
  j["seed"] = app.seed;
  j["total_lines"] = app.total_lines;
  j["home"] = app.home;
  j["pages"] = Json::array();
  for (const auto& p : app.pages) {
    Json events = Json::array();
    for (const auto& e : p.events) {
      events.push_back({{"text", e.text}, {"kind", std::string(to_string(e.kind))}});
    }
    j["pages"].push_back({{"activity", p.activity}, {"events", std::move(events)}});
  }
  j["transitions"] = Json::array();
  for (const auto& t : app.transitions) {
    Json jt{{"page", t.page}, {"event", t.event}, {"input_class", std::string(to_string(t.input))}};
    if (t.to == kPopPage) {
      jt["to"] = "back";
    } else {
      jt["to"] = t.to;
    }
    j["transitions"].push_back(std::move(jt));
  }
  j["cover"] = Json::array();
  for (const auto& c : app.cover) {
    Json jc = Json::object();
    if (c.page) jc["page"] = *c.page;
    if (c.event) jc["event"] = *c.event;
    if (c.system) jc["system"] = std::string(to_string(*c.system));
    if (c.input != InputClass::kAny) jc["input_class"] = std::string(to_string(c.input));
    jc["lines"] = c.lines;
    j["cover"].push_back(std::move(jc));
  }
  j["crashes"] = Json::array();
  for (const auto& c : app.crashes) {
    Json jc = Json::object();
    if (c.page) jc["page"] = *c.page;
    if (c.event) jc["event"] = *c.event;
    if (c.system) jc["system"] = std::string(to_string(*c.system));
    if (c.input != InputClass::kAny) jc["input_class"] = std::string(to_string(c.input));
    jc["message"] = c.message;
    j["crashes"].push_back(std::move(jc));
  }
  return j.dump(1) + "\n";
}

AppSpec app_from_json(std::string_view text) {
  AppSpec app;
  try {
    const Json j = Json::parse(text);
    if (!j.contains("qxp_app") || j.at("qxp_app").get<int>() != 1) {
      throw FormatError("app spec: missing or unsupported \"qxp_app\" version");
    }
    app.name = j.value("name", std::string("app"));
    app.seed = j.value("seed", std::uint64_t{0});
    app.total_lines = j.at("total_lines").get<int>();
    app.home = j.value("home", 0);
    for (const auto& jp : j.at("pages")) {
      AppSpec::Page page;
      page.activity = jp.at("activity").get<std::string>();
      for (const auto& je : jp.at("events")) {
        page.events.push_back(RawEvent{je.value("text", std::string()),
                                       parse_event_kind(je.at("kind").get<std::string>())});
      }
      app.pages.push_back(std::move(page));
    }
    for (const auto& jt : j.value("transitions", Json::array())) {
      AppSpec::Transition t;
      t.page = jt.at("page").get<int>();
      t.event = jt.at("event").get<int>();
      t.input = parse_input_class(jt.value("input_class", std::string("any")));
      const Json& to = jt.at("to");
      if (to.is_string()) {
        if (to.get<std::string>() != "back") throw FormatError("transition: bad 'to'");
        t.to = kPopPage;
      } else {
        t.to = to.get<int>();
      }
      app.transitions.push_back(t);
    }
    for (const auto& jc : j.value("cover", Json::array())) {
      AppSpec::Cover c;
      c.page = opt_field<int>(jc, "page");
      c.event = opt_field<int>(jc, "event");
      if (auto s = opt_field<std::string>(jc, "system")) c.system = parse_system(*s);
      c.input = parse_input_class(jc.value("input_class", std::string("any")));
      c.lines = jc.at("lines").get<std::vector<int>>();
      app.cover.push_back(std::move(c));
    }
    for (const auto& jc : j.value("crashes", Json::array())) {
      AppSpec::Crash c;
      c.page = opt_field<int>(jc, "page");
      c.event = opt_field<int>(jc, "event");
      if (auto s = opt_field<std::string>(jc, "system")) c.system = parse_system(*s);
      c.input = parse_input_class(jc.value("input_class", std::string("any")));
      c.message = jc.at("message").get<std::string>();
      app.crashes.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("app spec: ") + e.what());
  }
  app.validate();
  return app;
}

AppSpec load_app(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read app spec " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return app_from_json(buf.str());
}

void save_app(const AppSpec& app, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write app spec " + path.string());
  out << to_json(app);
}

// ---------------------------------------------------------------------------
// SimApp

SimApp::SimApp(AppSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t i = 0; i < spec_.transitions.size(); ++i) {
    const auto& t = spec_.transitions[i];
    transitions_[{t.page, t.event}].push_back(i);
  }
  for (std::size_t i = 0; i < spec_.cover.size(); ++i) {
    const auto& c = spec_.cover[i];
    if (c.system) continue;
    if (c.event) {
      event_cover_[{*c.page, *c.event}].push_back(i);
    } else {
      entry_cover_[*c.page].push_back(i);
    }
  }
  current_ = spec_.home;
}

bool SimApp::cover(const AppSpec::Cover& entry) {
  bool grew = false;
  for (int line : entry.lines) grew |= covered_.insert(line).second;
  return grew;
}

bool SimApp::enter_page(int page) {
  current_ = page;
  bool grew = false;
  if (auto it = entry_cover_.find(page); it != entry_cover_.end()) {
    for (std::size_t i : it->second) grew |= cover(spec_.cover[i]);
  }
  return grew;
}

void SimApp::relaunch() {
  stack_.clear();
  enter_page(spec_.home);
}

RawPage SimApp::launch() {
  covered_.clear();
  stack_.clear();
  launched_ = true;
  enter_page(spec_.home);
  return spec_.raw_page(current_);
}

double SimApp::coverage() const {
  return static_cast<double>(covered_.size()) / static_cast<double>(spec_.total_lines);
}

StepOutcome SimApp::outcome(bool increased, std::optional<std::string> crash) const {
  return StepOutcome{spec_.raw_page(current_), increased, coverage(), std::move(crash), std::nullopt};
}

std::optional<std::string> SimApp::find_crash(std::optional<int> event,
                                              std::optional<SystemEvent> system,
                                              const std::optional<std::string>& input) const {
  for (const auto& c : spec_.crashes) {
    if (c.page && *c.page != current_) continue;
    if (c.event != event || c.system != system) continue;
    if (!input_matches(c.input, input)) continue;
    return c.message;
  }
  return std::nullopt;
}

StepOutcome SimApp::execute(std::size_t event_index,
                            const std::optional<std::string>& input) {
  if (!launched_) throw UsageError("execute: app not launched");
  const auto& page = spec_.pages[static_cast<std::size_t>(current_)];
  if (event_index >= page.events.size()) {
    throw UsageError("execute: event " + std::to_string(event_index) +
                     " is not on the current page");
  }
  const RawEvent& ev = page.events[event_index];
  if ((ev.kind == EventKind::kEdit) != input.has_value()) {
    throw UsageError("execute: text input must be given for edit events only");
  }
  const int event = static_cast<int>(event_index);

  bool grew = false;
  if (auto it = event_cover_.find({current_, event}); it != event_cover_.end()) {
    for (std::size_t i : it->second) {
      if (input_matches(spec_.cover[i].input, input)) grew |= cover(spec_.cover[i]);
    }
  }

  if (auto crash = find_crash(event, std::nullopt, input)) {
    relaunch();
    return outcome(grew, std::move(crash));
  }

  auto pop = [this] {
    if (stack_.empty()) return spec_.home;
    const int top = stack_.back();
    stack_.pop_back();
    return top;
  };

  switch (ev.kind) {
    case EventKind::kBack:
      grew |= enter_page(pop());
      break;
    case EventKind::kRestart:
      stack_.clear();
      grew |= enter_page(spec_.home);
      break;
    default: {
      auto it = transitions_.find({current_, event});
      if (it == transitions_.end()) break;
      for (std::size_t i : it->second) {
        const auto& t = spec_.transitions[i];
        if (!input_matches(t.input, input)) continue;
        if (t.to == kPopPage) {
          grew |= enter_page(pop());
        } else if (t.to != current_) {
          stack_.push_back(current_);
          grew |= enter_page(t.to);
        }
        break;
      }
    }
  }
  return outcome(grew, std::nullopt);
}

StepOutcome SimApp::system_event(SystemEvent event) {
  if (!launched_) throw UsageError("system_event: app not launched");
  bool grew = false;
  for (const auto& c : spec_.cover) {
    if (c.system == event && (!c.page || *c.page == current_)) grew |= cover(c);
  }
  std::optional<std::string> crash = find_crash(std::nullopt, event, std::nullopt);
  if (crash) relaunch();
  StepOutcome result = outcome(grew, std::move(crash));
  result.system = event;
  return result;
}

StepOutcome SimApp::system_event(Rng& rng) {
  return system_event(static_cast<SystemEvent>(rng.uniform_index(kSystemNames.size())));
}

// ---------------------------------------------------------------------------
// Generation

std::string random_input(Rng& rng) {
  const int length = rng.uniform_int(1, 12);
  std::string s;
  s.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) s.push_back(kInputAlphabet[rng.uniform_index(kInputAlphabet.size())]);
  return s;
}

void GenParams::validate() const {
  if (page_count < 1 || events_min < 1 || events_max < events_min || depth < 0 ||
      crash_count < 0) {
    throw UsageError("GenParams: counts must be positive and events_min <= events_max");
  }
  if (depth > page_count - 1) {
    throw UsageError("GenParams: depth exceeds page_count - 1");
  }
  if (functional_weight < 0.0 || functional_weight > 1.0) {
    throw UsageError("GenParams: functional_weight must lie in [0, 1]");
  }
}

namespace {

enum class Role { kForward, kScroll, kDismiss, kLocal, kEdit };

struct Slot {
  Role role;
  int target = -1;  // child page for forward/scroll
  std::string text;
  std::vector<int> lines;
};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.uniform_index(N)];
}

}  // namespace

AppSpec generate_app(const GenParams& params) {
  params.validate();
  Rng rng(derive_seed(params.seed, 0x5157415050ULL));
  const int P = params.page_count;

  // Page tree: a guaranteed chain of `depth` pages below home, the rest
  // hung under random shallower pages.
  std::vector<int> parent(static_cast<std::size_t>(P), -1);
  std::vector<int> level(static_cast<std::size_t>(P), 0);
  std::vector<bool> variant(static_cast<std::size_t>(P), false);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(P));
  for (int p = 1; p <= params.depth; ++p) {
    parent[static_cast<std::size_t>(p)] = p - 1;
    level[static_cast<std::size_t>(p)] = p;
    children[static_cast<std::size_t>(p - 1)].push_back(p);
  }
  for (int p = params.depth + 1; p < P; ++p) {
    std::vector<int> open;
    for (int q = 0; q < p; ++q) {
      if (level[static_cast<std::size_t>(q)] < params.depth &&
          static_cast<int>(children[static_cast<std::size_t>(q)].size()) < params.events_max) {
        open.push_back(q);
      }
    }
    if (open.empty()) throw UsageError("GenParams: page tree cannot be built");
    const int q = open[rng.uniform_index(open.size())];
    parent[static_cast<std::size_t>(p)] = q;
    level[static_cast<std::size_t>(p)] = level[static_cast<std::size_t>(q)] + 1;
    children[static_cast<std::size_t>(q)].push_back(p);
    variant[static_cast<std::size_t>(p)] = rng.bernoulli(0.25);
  }

  AppSpec app;
  app.seed = params.seed;
  app.name = "app_" + std::to_string(params.seed);
  app.home = 0;

  std::vector<std::string> activity(static_cast<std::size_t>(P));
  int next_activity = 1;
  activity[0] = "MainActivity";
  for (int p = 1; p < P; ++p) {
    const auto up = static_cast<std::size_t>(parent[static_cast<std::size_t>(p)]);
    if (variant[static_cast<std::size_t>(p)] || rng.bernoulli(0.3)) {
      activity[static_cast<std::size_t>(p)] = activity[up];
    } else {
      activity[static_cast<std::size_t>(p)] = "Activity" + std::to_string(next_activity++);
    }
  }

  int next_line = 0;
  auto lines = [&](int lo, int hi) {
    std::vector<int> out(static_cast<std::size_t>(rng.uniform_int(lo, hi)));
    for (int& l : out) l = next_line++;
    return out;
  };

  const double w = params.functional_weight;
  auto label = [&](Role role) {
    int pool = 0;  // 0 functional, 1 dismissive, 2 neutral
    if (rng.bernoulli(w)) {
      pool = role == Role::kForward ? 0 : role == Role::kDismiss ? 1 : 2;
    } else {
      pool = static_cast<int>(rng.uniform_index(3));
    }
    std::string text(pool == 0   ? pick(rng, kFunctional)
                     : pool == 1 ? pick(rng, kDismissive)
                                 : pick(rng, kNeutral));
    if (rng.bernoulli(0.5)) {
      text += ' ';
      text += pick(rng, kNouns);
    }
    return text;
  };

  std::vector<std::vector<Slot>> slots(static_cast<std::size_t>(P));
  std::vector<std::vector<int>> entry(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) {
    const auto pi = static_cast<std::size_t>(p);
    entry[pi] = lines(4, 10);
    auto& page = slots[pi];
    for (int child : children[pi]) {
      const bool scroll = variant[static_cast<std::size_t>(child)];
      Slot s{scroll ? Role::kScroll : Role::kForward, child,
             scroll ? std::string("scroll") : label(Role::kForward), {}};
      s.lines = scroll ? lines(0, 1) : lines(3, 8);
      page.push_back(std::move(s));
    }
    // Scrolled pages repeat part of the page they came from; the repeated
    // widgets run the same handlers.
    if (variant[pi]) {
      for (const Slot& s : slots[static_cast<std::size_t>(parent[pi])]) {
        if ((s.role == Role::kLocal || s.role == Role::kDismiss) && rng.bernoulli(0.7)) {
          page.push_back(Slot{s.role, -1, s.text, s.lines});
        }
      }
    }
    const int content = std::max(rng.uniform_int(params.events_min, params.events_max),
                                 static_cast<int>(page.size()));
    bool has_dismiss = false;
    while (static_cast<int>(page.size()) < content) {
      Slot s{Role::kLocal, -1, {}, {}};
      const double u = rng.uniform01();
      if (!has_dismiss && p != 0 && u < 0.35) {
        s.role = Role::kDismiss;
        has_dismiss = true;
        s.text = label(Role::kDismiss);
        s.lines = lines(1, 2);
      } else if (u > 0.85) {
        s.role = Role::kEdit;
        s.text = "enter " + std::string(pick(rng, kFields));
        s.lines = lines(1, 3);
      } else {
        s.text = label(Role::kLocal);
        s.lines = rng.bernoulli(0.15) ? std::vector<int>{} : lines(1, 5);
      }
      page.push_back(std::move(s));
    }
    for (std::size_t i = page.size(); i > 1; --i) {
      std::swap(page[i - 1], page[rng.uniform_index(i)]);
    }
  }

  // Leaving an activity runs its lifecycle callbacks: back shares the
  // activity's pause/stop lines, restart its teardown lines.
  std::map<std::string, std::vector<int>> lifecycle;
  std::map<std::string, std::vector<int>> teardown;
  for (int p = 0; p < P; ++p) {
    const std::string& a = activity[static_cast<std::size_t>(p)];
    if (lifecycle[a].empty()) {
      lifecycle[a] = lines(1, 3);
      teardown[a] = lines(1, 2);
    }
  }

  // Assemble pages: restart, back and menu first, then content.
  for (int p = 0; p < P; ++p) {
    const auto pi = static_cast<std::size_t>(p);
    AppSpec::Page page{activity[pi], {{"restart", EventKind::kRestart},
                                      {"back", EventKind::kBack},
                                      {"menu", EventKind::kMenu}}};
    app.cover.push_back(AppSpec::Cover{p, std::nullopt, std::nullopt, InputClass::kAny, entry[pi]});
    app.cover.push_back(AppSpec::Cover{p, 0, std::nullopt, InputClass::kAny, teardown[activity[pi]]});
    app.cover.push_back(AppSpec::Cover{p, 1, std::nullopt, InputClass::kAny, lifecycle[activity[pi]]});
    app.cover.push_back(AppSpec::Cover{p, 2, std::nullopt, InputClass::kAny, lines(1, 2)});
    for (const Slot& s : slots[pi]) {
      const int e = static_cast<int>(page.events.size());
      const EventKind kind = s.role == Role::kEdit     ? EventKind::kEdit
                             : s.role == Role::kScroll ? EventKind::kScroll
                                                       : EventKind::kClick;
      page.events.push_back(RawEvent{s.text, kind});
      if (!s.lines.empty()) {
        app.cover.push_back(AppSpec::Cover{p, e, std::nullopt, InputClass::kAny, s.lines});
      }
      switch (s.role) {
        case Role::kForward:
        case Role::kScroll:
          app.transitions.push_back({p, e, InputClass::kAny, s.target});
          break;
        case Role::kDismiss:
          app.transitions.push_back({p, e, InputClass::kAny, kPopPage});
          break;
        case Role::kEdit:
          // Validation branch reached only by inputs with punctuation.
          app.cover.push_back(AppSpec::Cover{p, e, std::nullopt, InputClass::kHasPunct, lines(2, 4)});
          break;
        case Role::kLocal:
          break;
      }
    }
    app.pages.push_back(std::move(page));
  }

  app.cover.push_back(AppSpec::Cover{std::nullopt, std::nullopt, SystemEvent::kRotate,
                                     InputClass::kAny, lines(2, 4)});
  app.cover.push_back(AppSpec::Cover{std::nullopt, std::nullopt, SystemEvent::kCall,
                                     InputClass::kAny, lines(1, 2)});

  // Crashes live on the deeper half of the tree.
  std::vector<int> deep;
  for (int p = 0; p < P; ++p) {
    if (level[static_cast<std::size_t>(p)] * 2 >= params.depth && p != 0) deep.push_back(p);
  }
  if (deep.empty()) deep.push_back(0);
  std::set<std::pair<int, int>> used;
  for (int c = 0; c < params.crash_count; ++c) {
    const int p = deep[rng.uniform_index(deep.size())];
    const auto& page = app.pages[static_cast<std::size_t>(p)];
    std::string where = app.name + "." + page.activity + ".page" + std::to_string(p);
    AppSpec::Crash crash;
    crash.page = p;
    const double u = rng.uniform01();
    if (u < 0.2 && !used.count({p, -1})) {
      crash.system = SystemEvent::kRotate;
      used.insert({p, -1});
      where += ".onConfigurationChanged";
    } else {
      std::vector<int> candidates;
      for (int e = 3; e < static_cast<int>(page.events.size()); ++e) {
        if (!used.count({p, e}) && page.events[static_cast<std::size_t>(e)].kind != EventKind::kScroll) {
          candidates.push_back(e);
        }
      }
      if (candidates.empty()) continue;
      const int e = candidates[rng.uniform_index(candidates.size())];
      used.insert({p, e});
      crash.event = e;
      if (page.events[static_cast<std::size_t>(e)].kind == EventKind::kEdit) {
        crash.input = InputClass::kHasPunct;
      }
      where += ".onClick";
    }
    crash.message = std::string(pick(rng, kExceptions)) + " at " + where + "(line " +
                    std::to_string(rng.uniform_int(10, 400)) + ")";
    app.crashes.push_back(std::move(crash));
  }

  // Unreachable code keeps the coverage ceiling below 1.
  app.total_lines = next_line + std::max(1, next_line * 15 / 100);
  app.validate();
  return app;
}

}  // namespace qexplore
