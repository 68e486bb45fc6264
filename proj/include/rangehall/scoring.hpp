#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"

namespace rangehall {

enum class ScoreCategory {
  LevelCompletion,
  HintPenalty,
  SkipPenalty,
  WrongFlagPenalty,
  SolutionDisplayPenalty,
  ServiceAvailability,
  Manual,
  Revert,
};

/// A score category; manual categories carry the definition's name and
/// print as "manual:<name>".
struct Category {
  ScoreCategory kind = ScoreCategory::LevelCompletion;
  std::string manual;

  static Category manual_named(std::string name) { return {ScoreCategory::Manual, std::move(name)}; }

  std::string str() const {
    switch (kind) {
      case ScoreCategory::LevelCompletion: return "level_completion";
      case ScoreCategory::HintPenalty: return "hint_penalty";
      case ScoreCategory::SkipPenalty: return "skip_penalty";
      case ScoreCategory::WrongFlagPenalty: return "wrong_flag_penalty";
      case ScoreCategory::SolutionDisplayPenalty: return "solution_display_penalty";
      case ScoreCategory::ServiceAvailability: return "service_availability";
      case ScoreCategory::Manual: return "manual:" + manual;
      case ScoreCategory::Revert: return "revert";
    }
    return "";
  }

  static std::optional<Category> parse(std::string_view s) {
    if (s.rfind("manual:", 0) == 0) return manual_named(std::string(s.substr(7)));
    for (ScoreCategory k : {ScoreCategory::LevelCompletion, ScoreCategory::HintPenalty, ScoreCategory::SkipPenalty,
                            ScoreCategory::WrongFlagPenalty, ScoreCategory::SolutionDisplayPenalty,
                            ScoreCategory::ServiceAvailability, ScoreCategory::Revert})
      if (Category{k, {}}.str() == s) return Category{k, {}};
    return std::nullopt;
  }

  bool is_penalty() const {
    return kind == ScoreCategory::HintPenalty || kind == ScoreCategory::SkipPenalty ||
           kind == ScoreCategory::WrongFlagPenalty || kind == ScoreCategory::SolutionDisplayPenalty ||
           kind == ScoreCategory::Revert;
  }
  bool is_award() const { return kind == ScoreCategory::LevelCompletion; }

  auto operator<=>(const Category&) const = default;
};

/// D5 atom: one signed score change caused by exactly one event.
struct ScoreTransaction {
  std::string subject;
  Timestamp timestamp{};
  std::int64_t delta = 0;
  Category category;
  std::uint64_t source_seq = 0;
  bool operator==(const ScoreTransaction&) const = default;
};

inline Json transaction_to_json(const ScoreTransaction& t) {
  return Json{{"type", "transaction"},
              {"subject", t.subject},
              {"timestamp", format_timestamp(t.timestamp)},
              {"delta", t.delta},
              {"category", t.category.str()},
              {"source_seq", t.source_seq}};
}

inline ScoreTransaction transaction_from_json(const Json& value, const std::string& location = "") {
  ObjectReader r(value, location);
  if (r.string("type") != "transaction") ObjectReader::fail(r.at("type"), "expected type 'transaction'");
  ScoreTransaction t;
  t.subject = r.string("subject");
  t.timestamp = r.timestamp("timestamp");
  t.delta = r.integer("delta");
  const std::string cat = r.string("category");
  auto parsed = Category::parse(cat);
  if (!parsed) ObjectReader::fail(r.at("category"), "unknown category '" + cat + "'");
  t.category = *parsed;
  t.source_seq = static_cast<std::uint64_t>(r.integer("source_seq"));
  r.finish();
  return t;
}

/// JSON Lines export, one transaction per line.
inline std::string transactions_jsonl(const std::vector<ScoreTransaction>& txs) {
  std::string out;
  for (const auto& t : txs) out += compact_dump(transaction_to_json(t)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Incremental scorers. Each keeps exactly the state needed to continue a
// log from any seq boundary.

class CtfScorer {
 public:
  explicit CtfScorer(const TrainingDefinition& def) : def_(&def) {
    if (def.kind != TrainingKind::CTF) throw Error(ErrorCode::KindMismatch, "definition '" + def.id + "' is not a CTF");
  }

  std::optional<ScoreTransaction> feed(const EventEnvelope& e) {
    auto tx = [&](std::int64_t delta, ScoreCategory cat) {
      return ScoreTransaction{e.actor_id, e.timestamp, delta, Category{cat, {}}, e.seq};
    };
    auto level = [&](const std::string& id) -> const Level& {
      const Level* l = def_->find_level(id);
      if (!l) throw Error(ErrorCode::UnknownReference, "unknown level '" + id + "' at seq " + std::to_string(e.seq));
      return *l;
    };
    if (const auto* h = e.as<HintTaken>()) {
      const Hint* hint = level(h->level_id).find_hint(h->hint_id);
      if (!hint) throw Error(ErrorCode::UnknownReference, "unknown hint '" + h->hint_id + "' at seq " + std::to_string(e.seq));
      return tx(-hint->penalty_points, ScoreCategory::HintPenalty);
    }
    if (const auto* c = e.as<LevelCompleted>()) {
      const Level& l = level(c->level_id);
      if (!finished_.insert({e.actor_id, l.id}).second) return std::nullopt;
      return tx(l.max_points, ScoreCategory::LevelCompletion);
    }
    if (const auto* s = e.as<LevelSkipped>()) {
      const Level& l = level(s->level_id);
      if (!finished_.insert({e.actor_id, l.id}).second) return std::nullopt;
      return tx(-l.skip_penalty, ScoreCategory::SkipPenalty);
    }
    if (const auto* f = e.as<FlagSubmitted>()) {
      level(f->level_id);
      if (f->correct) return std::nullopt;
      const std::int64_t attempt = ++wrong_attempts_[{e.actor_id, f->level_id}];
      const auto& crit = def_->criteria;
      if (crit.free_attempts && attempt > *crit.free_attempts) return tx(-crit.wrong_flag_penalty, ScoreCategory::WrongFlagPenalty);
      return std::nullopt;
    }
    if (const auto* d = e.as<SolutionDisplayed>()) {
      const Level& l = level(d->level_id);
      if (l.solution_display_penalty > 0 && displayed_.insert({e.actor_id, l.id}).second)
        return tx(-l.solution_display_penalty, ScoreCategory::SolutionDisplayPenalty);
      return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  using Key = std::pair<std::string, std::string>;  // actor, level
  const TrainingDefinition* def_;
  std::map<Key, std::int64_t> wrong_attempts_;
  std::set<Key> finished_;
  std::set<Key> displayed_;
};

class CdxScorer {
 public:
  explicit CdxScorer(const TrainingDefinition& def) : def_(&def) {
    if (def.kind != TrainingKind::CDX) throw Error(ErrorCode::KindMismatch, "definition '" + def.id + "' is not a CDX");
  }

  std::optional<ScoreTransaction> feed(const EventEnvelope& e) const {
    if (const auto* p = e.as<ServiceProbe>()) {
      const ScoredService* svc = def_->find_service(p->service_id);
      if (!svc) throw Error(ErrorCode::UnknownService, "service '" + p->service_id + "' is not scored");
      const std::int64_t delta = p->status == ServiceStatus::Up ? svc->award_per_check : -svc->penalty_per_failed_check;
      return ScoreTransaction{def_->team_of_node(svc->node_id), e.timestamp, delta,
                              Category{ScoreCategory::ServiceAvailability, {}}, e.seq};
    }
    if (const auto* m = e.as<ManualScoringEvent>()) {
      if (m->category == kRevertCategory)
        return ScoreTransaction{m->subject, e.timestamp, -def_->criteria.revert_penalty, Category{ScoreCategory::Revert, {}},
                                e.seq};
      if (!def_->criteria.has_category(m->category))
        throw Error(ErrorCode::UnknownCategory, "category '" + m->category + "' is not declared");
      return ScoreTransaction{m->subject, e.timestamp, m->points, Category::manual_named(m->category), e.seq};
    }
    return std::nullopt;
  }

 private:
  const TrainingDefinition* def_;
};

/// Either scorer, chosen by the definition kind.
class RunScorer {
 public:
  explicit RunScorer(const TrainingDefinition& def) {
    if (def.kind == TrainingKind::CTF) impl_.emplace<CtfScorer>(def);
    else impl_.emplace<CdxScorer>(def);
  }

  std::optional<ScoreTransaction> feed(const EventEnvelope& e) {
    return std::visit(
        [&](auto& s) -> std::optional<ScoreTransaction> {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, std::monostate>) return std::nullopt;
          else return s.feed(e);
        },
        impl_);
  }

  void feed_all(const std::vector<EventEnvelope>& events, std::vector<ScoreTransaction>& out) {
    for (const auto& e : events)
      if (auto t = feed(e)) out.push_back(std::move(*t));
  }

 private:
  std::variant<std::monostate, CtfScorer, CdxScorer> impl_;
};

/// CTF rules over a trainee's events (events of several trainees are scored
/// independently per actor).
inline std::vector<ScoreTransaction> score_ctf_run(const TrainingDefinition& def, const std::vector<EventEnvelope>& events) {
  CtfScorer scorer(def);
  std::vector<ScoreTransaction> out;
  for (const auto& e : events)
    if (auto t = scorer.feed(e)) out.push_back(std::move(*t));
  return out;
}

/// CDX rules: service probes score the owning team, manual events pass through.
inline std::vector<ScoreTransaction> score_cdx_run(const TrainingDefinition& def, const std::vector<EventEnvelope>& events) {
  CdxScorer scorer(def);
  std::vector<ScoreTransaction> out;
  for (const auto& e : events)
    if (auto t = scorer.feed(e)) out.push_back(std::move(*t));
  return out;
}

inline std::vector<ScoreTransaction> score_run(const TrainingDefinition& def, const std::vector<EventEnvelope>& events) {
  return def.kind == TrainingKind::CTF ? score_ctf_run(def, events) : score_cdx_run(def, events);
}

/// Events of one CDX team: probes of its services plus manual scores on it.
inline std::vector<EventEnvelope> events_for_team(const TrainingDefinition& def, const std::vector<EventEnvelope>& events,
                                                  std::string_view team_id) {
  std::vector<EventEnvelope> out;
  for (const auto& e : events) {
    if (const auto* p = e.as<ServiceProbe>()) {
      const ScoredService* svc = def.find_service(p->service_id);
      if (svc && def.team_of_node(svc->node_id) == team_id) out.push_back(e);
    } else if (const auto* m = e.as<ManualScoringEvent>()) {
      if (m->subject == team_id) out.push_back(e);
    }
  }
  return out;
}

/// The subject a participant's scores accrue to: its team in a CDX, itself in a CTF.
inline std::string scoring_subject(const TrainingDefinition& def, const Participant& p) {
  if (def.kind == TrainingKind::CDX && p.team_id) return *p.team_id;
  return p.actor_id;
}

/// Every subject that appears on a run's scoreboard, even without transactions.
inline std::vector<std::string> scoreboard_subjects(const TrainingDefinition& def, const TrainingRun& run) {
  std::vector<std::string> out;
  if (def.kind == TrainingKind::CDX) {
    out = def.scenario.topology.teams();
    for (const auto& p : run.participants)
      if (p.has_role(Role::Trainee) && p.team_id && std::find(out.begin(), out.end(), *p.team_id) == out.end())
        out.push_back(*p.team_id);
  } else {
    out = run.actors_with(Role::Trainee);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timeline and scoreboard

struct TimelinePoint {
  Timestamp timestamp{};
  std::int64_t cumulative = 0;
  std::int64_t delta = 0;
  std::uint64_t source_seq = 0;
  bool operator==(const TimelinePoint&) const = default;
};

struct ScoreTimeline {
  std::string subject;
  std::vector<TimelinePoint> points;

  std::int64_t final_total() const { return points.empty() ? 0 : points.back().cumulative; }
  bool operator==(const ScoreTimeline&) const = default;
};

/// Prefix sums of one subject's transactions, which must be ordered by
/// (timestamp, source_seq).
inline ScoreTimeline build_timeline(const std::vector<ScoreTransaction>& txs) {
  ScoreTimeline tl;
  if (txs.empty()) return tl;
  tl.subject = txs.front().subject;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    const auto& t = txs[i];
    if (t.subject != tl.subject)
      throw Error(ErrorCode::SubjectMismatch, "timeline of '" + tl.subject + "' got a transaction of '" + t.subject + "'");
    if (i > 0 && std::tie(t.timestamp, t.source_seq) < std::tie(txs[i - 1].timestamp, txs[i - 1].source_seq))
      throw Error(ErrorCode::UnsortedInput, "transaction " + std::to_string(i) + " is out of order");
    total += t.delta;
    tl.points.push_back({t.timestamp, total, t.delta, t.source_seq});
  }
  return tl;
}

/// Per-subject split of a mixed transaction list, each sorted for build_timeline.
inline std::map<std::string, std::vector<ScoreTransaction>> group_by_subject(const std::vector<ScoreTransaction>& txs) {
  std::map<std::string, std::vector<ScoreTransaction>> out;
  for (const auto& t : txs) out[t.subject].push_back(t);
  for (auto& [_, list] : out)
    std::stable_sort(list.begin(), list.end(), [](const ScoreTransaction& a, const ScoreTransaction& b) {
      return std::tie(a.timestamp, a.source_seq) < std::tie(b.timestamp, b.source_seq);
    });
  return out;
}

struct ScoreboardRow {
  std::string subject;
  std::int64_t total = 0;
  std::map<std::string, std::int64_t> per_category;
  bool operator==(const ScoreboardRow&) const = default;
};

struct Scoreboard {
  std::vector<ScoreboardRow> rows;

  /// 1-based position, or 0 when absent.
  std::size_t rank_of(std::string_view subject) const {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].subject == subject) return i + 1;
    return 0;
  }
  const ScoreboardRow* row(std::string_view subject) const {
    for (const auto& r : rows)
      if (r.subject == subject) return &r;
    return nullptr;
  }
  bool operator==(const Scoreboard&) const = default;
};

/// One row per subject (plus zero rows for `extra_subjects`), sorted by
/// total descending then subject ascending.
inline Scoreboard build_scoreboard(const std::vector<ScoreTransaction>& txs, const std::vector<std::string>& extra_subjects = {}) {
  std::map<std::string, ScoreboardRow> rows;
  for (const auto& s : extra_subjects) rows[s].subject = s;
  for (const auto& t : txs) {
    auto& row = rows[t.subject];
    row.subject = t.subject;
    row.total += t.delta;
    row.per_category[t.category.str()] += t.delta;
  }
  Scoreboard board;
  for (auto& [_, r] : rows) board.rows.push_back(std::move(r));
  std::stable_sort(board.rows.begin(), board.rows.end(), [](const ScoreboardRow& a, const ScoreboardRow& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.subject < b.subject;
  });
  return board;
}

inline Json to_json(const Scoreboard& board) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < board.rows.size(); ++i) {
    const auto& r = board.rows[i];
    rows.push_back({{"rank", i + 1}, {"subject", r.subject}, {"total", r.total}, {"per_category", r.per_category}});
  }
  return Json{{"rows", rows}};
}

inline Json to_json(const ScoreTimeline& tl) {
  Json pts = Json::array();
  for (const auto& p : tl.points)
    pts.push_back({{"timestamp", format_timestamp(p.timestamp)},
                   {"cumulative", p.cumulative},
                   {"delta", p.delta},
                   {"source_seq", p.source_seq}});
  return Json{{"subject", tl.subject}, {"points", pts}};
}

// ---------------------------------------------------------------------------
// Assessment records

enum class AssessmentMetric { TimeSpentSec, HintsTaken, WrongFlags, Completed };

inline std::string_view to_string(AssessmentMetric m) {
  switch (m) {
    case AssessmentMetric::TimeSpentSec: return "time_spent_sec";
    case AssessmentMetric::HintsTaken: return "hints_taken";
    case AssessmentMetric::WrongFlags: return "wrong_flags";
    case AssessmentMetric::Completed: return "completed";
  }
  return "";
}

struct AssessmentRecord {
  std::string subject;
  std::optional<std::string> level_id;
  AssessmentMetric metric = AssessmentMetric::Completed;
  std::variant<bool, double> value;
  bool operator==(const AssessmentRecord&) const = default;
};

/// Per trainee and level: time spent, hints, wrong flags, completion.
inline std::vector<AssessmentRecord> assessment_records(const TrainingDefinition& def, const RunSnapshot& snap) {
  std::vector<AssessmentRecord> out;
  const Timestamp horizon = snap.horizon();
  for (const auto& actor : snap.run.actors_with(Role::Trainee)) {
    const auto intervals = derive_level_intervals(def, snap, actor);
    for (const auto& level : def.scenario.levels) {
      double seconds = 0.0;
      bool completed = false, touched = false;
      for (const auto& iv : intervals) {
        if (iv.level_id != level.id) continue;
        touched = true;
        seconds += to_seconds(iv.duration(horizon));
        completed = completed || iv.outcome == LevelOutcome::Completed;
      }
      if (!touched) continue;
      double hints = 0, wrong = 0;
      for (const auto& e : snap.events) {
        if (e.actor_id != actor) continue;
        if (const auto* h = e.as<HintTaken>(); h && h->level_id == level.id) ++hints;
        if (const auto* f = e.as<FlagSubmitted>(); f && f->level_id == level.id && !f->correct) ++wrong;
      }
      out.push_back({actor, level.id, AssessmentMetric::TimeSpentSec, seconds});
      out.push_back({actor, level.id, AssessmentMetric::HintsTaken, hints});
      out.push_back({actor, level.id, AssessmentMetric::WrongFlags, wrong});
      out.push_back({actor, level.id, AssessmentMetric::Completed, completed});
    }
  }
  return out;
}

inline Json to_json(const AssessmentRecord& r) {
  Json v = std::holds_alternative<bool>(r.value) ? Json(std::get<bool>(r.value)) : Json(std::get<double>(r.value));
  return Json{{"subject", r.subject},
              {"level_id", r.level_id ? Json(*r.level_id) : Json(nullptr)},
              {"metric", to_string(r.metric)},
              {"value", v}};
}

}  // namespace rangehall
