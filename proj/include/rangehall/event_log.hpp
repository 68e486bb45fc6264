#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event.hpp"

namespace rangehall {

/// Immutable copy of a run and a prefix of its log. Every analytics
/// operation works on these.
struct RunSnapshot {
  TrainingRun run;
  std::vector<EventEnvelope> events;

  bool closed() const { return run.end_time.has_value(); }
  /// End of the observation window: run end, else the last event, else start.
  Timestamp horizon() const {
    if (run.end_time) return *run.end_time;
    Timestamp t = run.start_time;
    for (const auto& e : events) t = std::max(t, e.timestamp);
    return t;
  }
  bool operator==(const RunSnapshot&) const = default;
};

struct TimeWindow {
  Timestamp from{};  // inclusive
  Timestamp to{};    // exclusive
  bool contains(Timestamp t) const { return t >= from && t < to; }
};

struct EventFilter {
  std::optional<std::set<std::string>> actors;
  std::optional<std::set<PayloadKind>> kinds;
  std::optional<TimeWindow> window;

  bool matches(const EventEnvelope& e) const {
    if (actors && !actors->count(e.actor_id)) return false;
    if (kinds && !kinds->count(e.kind())) return false;
    if (window && !window->contains(e.timestamp)) return false;
    return true;
  }
};

inline std::vector<EventEnvelope> filter_events(const std::vector<EventEnvelope>& events, const EventFilter& filter) {
  std::vector<EventEnvelope> out;
  for (const auto& e : events)
    if (filter.matches(e)) out.push_back(e);
  return out;
}

/// Reference checks an event must pass before it may enter a run's log.
inline void check_event_references(const TrainingDefinition& def, const TrainingRun& run, const PendingEvent& ev) {
  auto unknown = [](const std::string& what) { throw Error(ErrorCode::UnknownReference, what); };
  const bool system = ev.actor_id == kSystemActor;
  if (!system && !run.find(ev.actor_id)) throw Error(ErrorCode::UnknownActor, "actor '" + ev.actor_id + "' is not in run " + run.run_id);

  auto need_level = [&](const std::string& id) -> const Level& {
    const Level* l = def.find_level(id);
    if (!l) unknown("unknown level '" + id + "'");
    return *l;
  };
  auto need_node = [&](const std::string& id) {
    if (!def.scenario.topology.find_node(id)) unknown("unknown node '" + id + "'");
  };

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HintTaken>) {
          if (!need_level(p.level_id).find_hint(p.hint_id))
            unknown("unknown hint '" + p.hint_id + "' in level '" + p.level_id + "'");
        } else if constexpr (requires { p.level_id; }) {
          need_level(p.level_id);
        } else if constexpr (std::is_same_v<T, MessageSent>) {
          if (!run.find(p.to_actor_id)) unknown("unknown message recipient '" + p.to_actor_id + "'");
        } else if constexpr (std::is_same_v<T, ServiceProbe>) {
          if (!def.find_service(p.service_id)) unknown("unknown scored service '" + p.service_id + "'");
        } else if constexpr (requires { p.node_id; }) {
          need_node(p.node_id);
        } else if constexpr (std::is_same_v<T, LinkThroughput>) {
          need_node(p.from);
          need_node(p.to);
        } else if constexpr (std::is_same_v<T, ManualScoringEvent>) {
          const Participant* issuer = run.find(p.issued_by);
          if (!issuer) throw Error(ErrorCode::UnknownActor, "unknown issuer '" + p.issued_by + "'");
          if (!issuer->has_role(Role::SparringPartner) && !issuer->has_role(Role::Supervisor))
            throw Error(ErrorCode::RoleForbidden, "'" + p.issued_by + "' may not issue manual scores");
          if (p.category != kRevertCategory && !def.criteria.has_category(p.category))
            unknown("unknown manual scoring category '" + p.category + "'");
          const auto teams = def.scenario.topology.teams();
          const bool team_subject = run.has_team(p.subject) ||
                                    std::find(teams.begin(), teams.end(), p.subject) != teams.end();
          if (!team_subject && !run.find(p.subject)) unknown("unknown scoring subject '" + p.subject + "'");
          if (p.attack_id && !def.find_attack(*p.attack_id)) unknown("unknown attack '" + *p.attack_id + "'");
          if (p.attack_id.has_value() != p.attack_outcome.has_value())
            unknown("attack_outcome must be present exactly when attack_id is");
        }
      },
      ev.payload);
}

// ---------------------------------------------------------------------------
// JSON Lines persistence

inline Json run_end_record(Timestamp end) { return Json{{"type", "run_end"}, {"end_time", format_timestamp(end)}}; }

inline void write_run_log(std::ostream& out, const RunSnapshot& snap) {
  out << compact_dump(run_header_to_json(snap.run)) << '\n';
  for (const auto& e : snap.events) out << compact_dump(envelope_to_json(e)) << '\n';
}

inline std::string run_log_text(const RunSnapshot& snap) {
  std::ostringstream ss;
  write_run_log(ss, snap);
  return ss.str();
}

inline void save_run_log(const std::string& path, const RunSnapshot& snap) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write_run_log(out, snap);
}

/// Reads a run-header line followed by event and run_end records. Sequence
/// numbers must be exactly 1..n.
inline RunSnapshot read_run_log(std::istream& in) {
  RunSnapshot snap;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const Json record = parse_json_line(line, line_no);
    const std::string loc = "line " + std::to_string(line_no);
    if (!have_header) {
      snap.run = run_header_from_json(record, loc);
      have_header = true;
      continue;
    }
    const std::string type = record.is_object() && record.contains("type") && record["type"].is_string()
                                 ? record["type"].get<std::string>()
                                 : "";
    if (type == "run_end") {
      ObjectReader r(record, loc);
      r.string("type");
      snap.run.end_time = r.timestamp("end_time");
      r.finish();
    } else if (type == "event") {
      EventEnvelope e = envelope_from_json(record, loc);
      if (e.run_id != snap.run.run_id) ObjectReader::fail(loc + "/run_id", "event belongs to run '" + e.run_id + "'");
      if (e.seq != snap.events.size() + 1)
        ObjectReader::fail(loc + "/seq", "expected seq " + std::to_string(snap.events.size() + 1));
      snap.events.push_back(std::move(e));
    } else if (type == "transaction") {
      continue;  // transaction exports may be interleaved; they are derived data
    } else {
      ObjectReader::fail(loc + "/type", "unknown record type '" + type + "'");
    }
  }
  if (!have_header) throw Error(ErrorCode::SchemaError, "event log is empty (missing run header)");
  return snap;
}

inline RunSnapshot parse_run_log(const std::string& text) {
  std::istringstream ss(text);
  return read_run_log(ss);
}

inline RunSnapshot load_run_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_run_log(in);
}

// ---------------------------------------------------------------------------

struct LogOptions {
  Millis skew_tolerance{5000};
};

/// Append-only, totally ordered log of one run. Appends are serialized;
/// readers get consistent prefixes and may run concurrently with appends.
class RunLog {
 public:
  RunLog(TrainingRun run, std::shared_ptr<const TrainingDefinition> definition, LogOptions options = {})
      : definition_(std::move(definition)), options_(options) {
    if (!definition_) throw Error(ErrorCode::InvalidArgument, "run log needs a definition");
    std::set<std::string> ids;
    for (const auto& p : run.participants) {
      if (p.actor_id == kSystemActor) throw Error(ErrorCode::InvalidArgument, "'system' is a reserved actor id");
      if (!ids.insert(p.actor_id).second) throw Error(ErrorCode::InvalidArgument, "duplicate actor id '" + p.actor_id + "'");
    }
    if (run.end_time && *run.end_time < run.start_time)
      throw Error(ErrorCode::InvalidArgument, "end_time precedes start_time");
    snapshot_.run = std::move(run);
  }

  /// Resumes a persisted log. Subsequent appends go to the same file.
  static std::unique_ptr<RunLog> open(const std::string& path, std::shared_ptr<const TrainingDefinition> definition,
                                      LogOptions options = {}) {
    RunSnapshot snap = load_run_log(path);
    auto log = std::make_unique<RunLog>(snap.run, std::move(definition), options);
    log->snapshot_.events = std::move(snap.events);
    log->sink_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app);
    if (!*log->sink_) throw Error(ErrorCode::Io, "cannot append to " + path);
    return log;
  }

  /// Starts persisting to `path`: writes the header and existing events.
  void persist_to(const std::string& path) {
    std::unique_lock lock(mutex_);
    auto out = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*out) throw Error(ErrorCode::Io, "cannot write " + path);
    RunSnapshot header_only{snapshot_.run, {}};
    header_only.run.end_time.reset();
    write_run_log(*out, header_only);
    for (const auto& e : snapshot_.events) *out << compact_dump(envelope_to_json(e)) << '\n';
    if (snapshot_.run.end_time) *out << compact_dump(run_end_record(*snapshot_.run.end_time)) << '\n';
    out->flush();
    sink_ = std::move(out);
  }

  EventEnvelope append(const PendingEvent& pending) {
    std::unique_lock lock(mutex_);
    if (snapshot_.run.end_time) throw Error(ErrorCode::RunClosed, "run " + snapshot_.run.run_id + " has ended");
    check_event_references(*definition_, snapshot_.run, pending);
    EventEnvelope e;
    e.run_id = snapshot_.run.run_id;
    e.seq = snapshot_.events.size() + 1;
    e.timestamp = pending.timestamp;
    e.actor_id = pending.actor_id;
    e.payload = pending.payload;
    if (!snapshot_.events.empty() && snapshot_.events.back().timestamp - e.timestamp > options_.skew_tolerance)
      e.clock_skew = true;
    if (sink_) {
      *sink_ << compact_dump(envelope_to_json(e)) << '\n';
      sink_->flush();
      if (!*sink_) throw Error(ErrorCode::Io, "write failed for run " + snapshot_.run.run_id);
    }
    snapshot_.events.push_back(e);
    return e;
  }

  void close(Timestamp end_time) {
    std::unique_lock lock(mutex_);
    if (snapshot_.run.end_time) throw Error(ErrorCode::RunClosed, "run " + snapshot_.run.run_id + " has ended");
    if (end_time < snapshot_.run.start_time) throw Error(ErrorCode::InvalidArgument, "end_time precedes start_time");
    snapshot_.run.end_time = end_time;
    if (sink_) {
      *sink_ << compact_dump(run_end_record(end_time)) << '\n';
      sink_->flush();
    }
  }

  std::vector<EventEnvelope> read(const EventFilter& filter = {}) const {
    std::shared_lock lock(mutex_);
    return filter_events(snapshot_.events, filter);
  }

  RunSnapshot snapshot() const {
    std::shared_lock lock(mutex_);
    return snapshot_;
  }

  TrainingRun run() const {
    std::shared_lock lock(mutex_);
    return snapshot_.run;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return snapshot_.events.size();
  }

  const TrainingDefinition& definition() const { return *definition_; }
  std::shared_ptr<const TrainingDefinition> definition_ptr() const { return definition_; }

 private:
  std::shared_ptr<const TrainingDefinition> definition_;
  LogOptions options_;
  mutable std::shared_mutex mutex_;
  RunSnapshot snapshot_;
  std::unique_ptr<std::ofstream> sink_;
};

// ---------------------------------------------------------------------------
// Level intervals

enum class LevelOutcome { Completed, Skipped, InProgress };

inline std::string_view to_string(LevelOutcome o) {
  switch (o) {
    case LevelOutcome::Completed: return "completed";
    case LevelOutcome::Skipped: return "skipped";
    case LevelOutcome::InProgress: return "in_progress";
  }
  return "in_progress";
}

struct LevelInterval {
  std::string level_id;
  Timestamp start{};
  std::optional<Timestamp> end;
  LevelOutcome outcome = LevelOutcome::InProgress;
  std::uint64_t start_seq = 0;

  /// Duration up to the interval's end, or up to `horizon` while open.
  Millis duration(Timestamp horizon) const { return std::max(Millis{0}, (end ? *end : horizon) - start); }
  bool operator==(const LevelInterval&) const = default;
};

namespace detail {

inline std::vector<LevelInterval> pair_level_events(const TrainingDefinition& def, const std::vector<EventEnvelope>& events,
                                                    std::string_view actor_id) {
  std::vector<LevelInterval> out;
  for (const auto& e : events) {
    if (e.actor_id != actor_id) continue;
    if (const auto* s = e.as<LevelStarted>()) {
      out.push_back({s->level_id, e.timestamp, std::nullopt, LevelOutcome::InProgress, e.seq});
      continue;
    }
    std::optional<LevelOutcome> outcome;
    std::string level;
    if (const auto* c = e.as<LevelCompleted>()) outcome = LevelOutcome::Completed, level = c->level_id;
    else if (const auto* k = e.as<LevelSkipped>()) outcome = LevelOutcome::Skipped, level = k->level_id;
    if (!outcome) continue;
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      if (it->level_id == level && it->outcome == LevelOutcome::InProgress) {
        it->end = e.timestamp;
        it->outcome = *outcome;
        break;
      }
    }
  }
  auto order_of = [&](const std::string& id) {
    const Level* l = def.find_level(id);
    return l ? l->order : std::numeric_limits<std::int64_t>::max();
  };
  std::stable_sort(out.begin(), out.end(), [&](const LevelInterval& a, const LevelInterval& b) {
    const auto oa = order_of(a.level_id), ob = order_of(b.level_id);
    if (oa != ob) return oa < ob;
    return a.start_seq < b.start_seq;
  });
  return out;
}

}  // namespace detail

/// One interval per LevelStarted of the trainee, closed by the matching
/// completion or skip, ordered by level order.
inline std::vector<LevelInterval> derive_level_intervals(const TrainingDefinition& def, const RunSnapshot& snap,
                                                         std::string_view actor_id) {
  const Participant* p = snap.run.find(actor_id);
  if (!p || !p->has_role(Role::Trainee))
    throw Error(ErrorCode::UnknownActor, "'" + std::string(actor_id) + "' is not a trainee of run " + snap.run.run_id);
  return detail::pair_level_events(def, snap.events, actor_id);
}

}  // namespace rangehall

namespace rangehall {

/// Run-id keyed collection of logs. Logs are independent; the registry
/// only guards its own map.
class RunRegistry {
 public:
  RunLog& create(TrainingRun run, std::shared_ptr<const TrainingDefinition> definition, LogOptions options = {}) {
    std::unique_lock lock(mutex_);
    const std::string id = run.run_id;
    if (logs_.count(id)) throw Error(ErrorCode::InvalidArgument, "run '" + id + "' already exists");
    auto log = std::make_unique<RunLog>(std::move(run), std::move(definition), options);
    RunLog& ref = *log;
    logs_.emplace(id, std::move(log));
    return ref;
  }

  RunLog& adopt(std::unique_ptr<RunLog> log) {
    std::unique_lock lock(mutex_);
    const std::string id = log->run().run_id;
    if (logs_.count(id)) throw Error(ErrorCode::InvalidArgument, "run '" + id + "' already exists");
    RunLog& ref = *log;
    logs_.emplace(id, std::move(log));
    return ref;
  }

  RunLog& get(const std::string& run_id) const {
    std::shared_lock lock(mutex_);
    auto it = logs_.find(run_id);
    if (it == logs_.end()) throw Error(ErrorCode::UnknownRun, "no run '" + run_id + "'");
    return *it->second;
  }

  bool contains(const std::string& run_id) const {
    std::shared_lock lock(mutex_);
    return logs_.count(run_id) != 0;
  }

  std::vector<std::string> run_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : logs_) out.push_back(id);
    return out;
  }

  std::vector<EventEnvelope> read_events(const std::string& run_id, const EventFilter& filter = {}) const {
    return get(run_id).read(filter);
  }

  std::vector<LevelInterval> derive_level_intervals(const std::string& run_id, std::string_view actor_id) const {
    const RunLog& log = get(run_id);
    return rangehall::derive_level_intervals(log.definition(), log.snapshot(), actor_id);
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<RunLog>> logs_;
};

}  // namespace rangehall
