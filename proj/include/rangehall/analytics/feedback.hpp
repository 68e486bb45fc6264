#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"
#include "rangehall/scoring.hpp"

namespace rangehall {

struct FeedbackLevelRow {
  std::string level_id;
  Millis time_spent{0};
  std::int64_t hints_taken = 0;
  std::int64_t wrong_flags = 0;
  std::int64_t score_delta = 0;
  LevelOutcome outcome = LevelOutcome::InProgress;
  bool operator==(const FeedbackLevelRow&) const = default;
};

struct CohortLevelStats {
  std::string level_id;
  std::size_t trainees = 0;
  Millis slowest_time{0};
  double mean_time_ms = 0.0;
  bool operator==(const CohortLevelStats&) const = default;
};

struct FeedbackSummary {
  std::string actor_id;
  std::string subject;  // scoreboard subject: the actor (CTF) or its team (CDX)
  std::vector<FeedbackLevelRow> per_level;
  std::int64_t total_score = 0;
  std::size_t rank = 0;
  std::size_t cohort_size = 0;
  std::vector<CohortLevelStats> cohort_stats;
  ScoreTimeline timeline;
  bool operator==(const FeedbackSummary&) const = default;
};

namespace detail {

/// Per-level rows of one trainee. Time for an unfinished level runs to the horizon.
inline std::vector<FeedbackLevelRow> level_rows(const TrainingDefinition& def, const RunSnapshot& snap,
                                                const std::string& actor, const std::vector<ScoreTransaction>& txs) {
  std::map<std::uint64_t, std::string> level_of_seq;
  for (const auto& e : snap.events)
    if (e.actor_id == actor)
      if (auto l = level_of(e.payload)) level_of_seq[e.seq] = *l;

  std::vector<FeedbackLevelRow> rows;
  const Timestamp horizon = snap.horizon();
  for (const auto& iv : derive_level_intervals(def, snap, actor)) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const FeedbackLevelRow& r) { return r.level_id == iv.level_id; });
    if (it == rows.end()) {
      rows.push_back({iv.level_id});
      it = std::prev(rows.end());
    }
    it->time_spent += iv.duration(horizon);
    if (it->outcome != LevelOutcome::Completed) it->outcome = iv.outcome;
  }
  for (auto& row : rows) {
    for (const auto& e : snap.events) {
      if (e.actor_id != actor) continue;
      if (const auto* h = e.as<HintTaken>(); h && h->level_id == row.level_id) ++row.hints_taken;
      if (const auto* f = e.as<FlagSubmitted>(); f && f->level_id == row.level_id && !f->correct) ++row.wrong_flags;
    }
    for (const auto& t : txs)
      if (t.subject == actor)
        if (auto l = level_of_seq.find(t.source_seq); l != level_of_seq.end() && l->second == row.level_id)
          row.score_delta += t.delta;
  }
  return rows;
}

}  // namespace detail

/// Post-run feedback for one trainee: per-level breakdown, score, rank and
/// how the rest of the cohort fared on the same levels.
inline FeedbackSummary personal_feedback(const TrainingDefinition& def, const RunSnapshot& snap, const std::string& actor_id) {
  if (!snap.closed()) throw Error(ErrorCode::RunStillOpen, "run " + snap.run.run_id + " is still open");
  const Participant* p = snap.run.find(actor_id);
  if (!p || !p->has_role(Role::Trainee))
    throw Error(ErrorCode::UnknownActor, "'" + actor_id + "' is not a trainee of run " + snap.run.run_id);

  const auto txs = score_run(def, snap.events);
  const auto board = build_scoreboard(txs, scoreboard_subjects(def, snap.run));

  FeedbackSummary out;
  out.actor_id = actor_id;
  out.subject = scoring_subject(def, *p);
  out.per_level = detail::level_rows(def, snap, actor_id, txs);
  const auto* row = board.row(out.subject);
  out.total_score = row ? row->total : 0;
  out.rank = board.rank_of(out.subject);
  const auto grouped = group_by_subject(txs);
  if (auto it = grouped.find(out.subject); it != grouped.end()) out.timeline = build_timeline(it->second);
  else out.timeline.subject = out.subject;

  const auto trainees = snap.run.actors_with(Role::Trainee);
  out.cohort_size = trainees.size();
  std::map<std::string, std::vector<Millis>> times;
  for (const auto& t : trainees)
    for (const auto& r : detail::level_rows(def, snap, t, txs)) times[r.level_id].push_back(r.time_spent);
  for (const auto& level : def.scenario.levels) {
    auto it = times.find(level.id);
    if (it == times.end()) continue;
    CohortLevelStats s{level.id, it->second.size()};
    double sum = 0;
    for (Millis m : it->second) {
      s.slowest_time = std::max(s.slowest_time, m);
      sum += static_cast<double>(m.count());
    }
    s.mean_time_ms = sum / static_cast<double>(it->second.size());
    out.cohort_stats.push_back(s);
  }
  return out;
}

inline Json to_json(const FeedbackSummary& f) {
  Json rows = Json::array();
  for (const auto& r : f.per_level)
    rows.push_back({{"level_id", r.level_id},
                    {"time_spent_sec", to_seconds(r.time_spent)},
                    {"hints_taken", r.hints_taken},
                    {"wrong_flags", r.wrong_flags},
                    {"score_delta", r.score_delta},
                    {"outcome", to_string(r.outcome)}});
  Json cohort = Json::array();
  for (const auto& c : f.cohort_stats)
    cohort.push_back({{"level_id", c.level_id},
                      {"trainees", c.trainees},
                      {"slowest_time_sec", to_seconds(c.slowest_time)},
                      {"mean_time_sec", c.mean_time_ms / 1000.0}});
  return Json{{"actor_id", f.actor_id},
              {"subject", f.subject},
              {"per_level", rows},
              {"total_score", f.total_score},
              {"rank", f.rank},
              {"cohort_size", f.cohort_size},
              {"cohort_stats", cohort},
              {"timeline", to_json(f.timeline)}};
}

}  // namespace rangehall
