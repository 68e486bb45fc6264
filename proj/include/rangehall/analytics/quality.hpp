#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"

namespace rangehall {

/// Linear-interpolation quantile of sorted data (q in [0,1]).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

enum class DifficultyLabel { TooEasy, Balanced, TooHard };

inline std::string_view to_string(DifficultyLabel d) {
  switch (d) {
    case DifficultyLabel::TooEasy: return "too_easy";
    case DifficultyLabel::Balanced: return "balanced";
    case DifficultyLabel::TooHard: return "too_hard";
  }
  return "";
}

struct QualityThresholds {
  double too_hard_completion = 0.3;  // below: too hard
  double too_hard_ratio = 2.0;       // above: too hard
  double too_easy_completion = 0.95;
  double too_easy_ratio = 0.5;
  double too_easy_hint_usage = 0.1;
};

struct LevelQuality {
  std::string level_id;
  std::size_t trainees = 0;
  std::size_t completions = 0;
  double completion_rate = 0.0;
  std::optional<double> median_time_min;  // over completed attempts
  std::optional<double> iqr_time_min;
  std::optional<double> time_ratio;       // median / expected
  double hint_usage_rate = 0.0;
  DifficultyLabel difficulty = DifficultyLabel::Balanced;
  bool operator==(const LevelQuality&) const = default;
};

struct CorrectnessFinding {
  std::string level_id;
  std::string code;  // NEVER_COMPLETED | SOLUTION_ALWAYS_DISPLAYED
  std::string message;
  bool operator==(const CorrectnessFinding&) const = default;
};

struct QualityReport {
  std::string definition_id;
  std::size_t runs = 0;
  std::size_t trainees = 0;
  std::vector<LevelQuality> per_level;
  std::vector<CorrectnessFinding> correctness_findings;
  double overall_completion_rate = 0.0;  // mean over levels
  std::optional<double> mean_time_ratio;  // mean over levels that have one
  double mean_hint_usage_rate = 0.0;
  bool operator==(const QualityReport&) const = default;
};

inline DifficultyLabel label_difficulty(const LevelQuality& q, const QualityThresholds& t) {
  if (q.completion_rate < t.too_hard_completion || (q.time_ratio && *q.time_ratio > t.too_hard_ratio))
    return DifficultyLabel::TooHard;
  if (q.completion_rate > t.too_easy_completion && q.time_ratio && *q.time_ratio < t.too_easy_ratio &&
      q.hint_usage_rate < t.too_easy_hint_usage)
    return DifficultyLabel::TooEasy;
  return DifficultyLabel::Balanced;
}

/// Correctness and difficulty statistics of a definition over closed runs.
inline QualityReport definition_quality_report(const TrainingDefinition& def, const std::vector<RunSnapshot>& runs,
                                               const QualityThresholds& thresholds = {}) {
  if (runs.empty()) throw Error(ErrorCode::NoRuns, "quality report needs at least one run");
  for (const auto& r : runs) {
    if (r.run.definition_id != def.id)
      throw Error(ErrorCode::DefinitionMismatch, "run " + r.run.run_id + " uses definition '" + r.run.definition_id + "'");
    if (!r.closed()) throw Error(ErrorCode::RunStillOpen, "run " + r.run.run_id + " is still open");
  }

  QualityReport report;
  report.definition_id = def.id;
  report.runs = runs.size();
  for (const auto& r : runs) report.trainees += r.run.actors_with(Role::Trainee).size();

  std::vector<const Level*> levels;
  for (const auto& l : def.scenario.levels) levels.push_back(&l);
  std::stable_sort(levels.begin(), levels.end(), [](const Level* a, const Level* b) { return a->order < b->order; });

  for (const Level* level : levels) {
    LevelQuality q;
    q.level_id = level->id;
    q.trainees = report.trainees;
    std::vector<double> minutes;
    std::size_t hint_users = 0, completers = 0, completers_with_solution = 0;
    for (const auto& r : runs) {
      for (const auto& actor : r.run.actors_with(Role::Trainee)) {
        bool completed = false;
        for (const auto& iv : derive_level_intervals(def, r, actor)) {
          if (iv.level_id != level->id || iv.outcome != LevelOutcome::Completed) continue;
          if (!completed) minutes.push_back(to_minutes(iv.duration(r.horizon())));
          completed = true;
        }
        bool used_hint = false, saw_solution = false;
        for (const auto& e : r.events) {
          if (e.actor_id != actor) continue;
          if (const auto* h = e.as<HintTaken>(); h && h->level_id == level->id) used_hint = true;
          if (const auto* s = e.as<SolutionDisplayed>(); s && s->level_id == level->id) saw_solution = true;
        }
        hint_users += used_hint ? 1 : 0;
        if (completed) {
          ++completers;
          completers_with_solution += saw_solution ? 1 : 0;
        }
      }
    }
    q.completions = completers;
    if (q.trainees > 0) {
      q.completion_rate = static_cast<double>(completers) / static_cast<double>(q.trainees);
      q.hint_usage_rate = static_cast<double>(hint_users) / static_cast<double>(q.trainees);
    }
    if (!minutes.empty()) {
      std::sort(minutes.begin(), minutes.end());
      q.median_time_min = quantile_sorted(minutes, 0.5);
      q.iqr_time_min = quantile_sorted(minutes, 0.75) - quantile_sorted(minutes, 0.25);
      const double expected = static_cast<double>(level->expected_duration.count());
      if (expected > 0) q.time_ratio = *q.median_time_min / expected;
    }
    q.difficulty = label_difficulty(q, thresholds);
    if (completers == 0)
      report.correctness_findings.push_back({level->id, "NEVER_COMPLETED", "no trainee completed level '" + level->id + "'"});
    else if (completers_with_solution == completers)
      report.correctness_findings.push_back(
          {level->id, "SOLUTION_ALWAYS_DISPLAYED", "every trainee who completed level '" + level->id + "' displayed its solution"});
    report.per_level.push_back(std::move(q));
  }

  if (!report.per_level.empty()) {
    double completion = 0, hints = 0, ratio = 0;
    std::size_t ratios = 0;
    for (const auto& q : report.per_level) {
      completion += q.completion_rate;
      hints += q.hint_usage_rate;
      if (q.time_ratio) {
        ratio += *q.time_ratio;
        ++ratios;
      }
    }
    const auto n = static_cast<double>(report.per_level.size());
    report.overall_completion_rate = completion / n;
    report.mean_hint_usage_rate = hints / n;
    if (ratios > 0) report.mean_time_ratio = ratio / static_cast<double>(ratios);
  }
  return report;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const QualityReport& r) {
  Json levels = Json::array();
  for (const auto& q : r.per_level)
    levels.push_back({{"level_id", q.level_id},
                      {"trainees", q.trainees},
                      {"completions", q.completions},
                      {"completion_rate", q.completion_rate},
                      {"median_time_min", optional_json(q.median_time_min)},
                      {"iqr_time_min", optional_json(q.iqr_time_min)},
                      {"time_ratio", optional_json(q.time_ratio)},
                      {"hint_usage_rate", q.hint_usage_rate},
                      {"difficulty", to_string(q.difficulty)}});
  Json findings = Json::array();
  for (const auto& f : r.correctness_findings)
    findings.push_back({{"level_id", f.level_id}, {"code", f.code}, {"message", f.message}});
  return Json{{"definition_id", r.definition_id},
              {"runs", r.runs},
              {"trainees", r.trainees},
              {"per_level", levels},
              {"correctness_findings", findings},
              {"overall_completion_rate", r.overall_completion_rate},
              {"mean_time_ratio", optional_json(r.mean_time_ratio)},
              {"mean_hint_usage_rate", r.mean_hint_usage_rate}};
}

inline QualityReport quality_report_from_json(const Json& root) {
  auto opt = [](ObjectReader& r, const std::string& key) -> std::optional<double> {
    if (r.has(key)) return r.number(key);
    r.optional(key);
    return std::nullopt;
  };
  QualityReport rep;
  ObjectReader r(root, "");
  rep.definition_id = r.string("definition_id");
  rep.runs = static_cast<std::size_t>(r.integer_or("runs", 0));
  rep.trainees = static_cast<std::size_t>(r.integer_or("trainees", 0));
  r.each("per_level", [&](const Json& v, const std::string& loc) {
    ObjectReader l(v, loc);
    LevelQuality q;
    q.level_id = l.string("level_id");
    q.trainees = static_cast<std::size_t>(l.integer_or("trainees", 0));
    q.completions = static_cast<std::size_t>(l.integer_or("completions", 0));
    q.completion_rate = l.number("completion_rate");
    q.median_time_min = opt(l, "median_time_min");
    q.iqr_time_min = opt(l, "iqr_time_min");
    q.time_ratio = opt(l, "time_ratio");
    q.hint_usage_rate = l.number_or("hint_usage_rate", 0.0);
    const std::string d = l.string_or("difficulty", "balanced");
    q.difficulty = d == "too_easy" ? DifficultyLabel::TooEasy : d == "too_hard" ? DifficultyLabel::TooHard : DifficultyLabel::Balanced;
    l.finish();
    rep.per_level.push_back(q);
  });
  r.each("correctness_findings", [&](const Json& v, const std::string& loc) {
    ObjectReader f(v, loc);
    CorrectnessFinding cf{f.string("level_id"), f.string("code"), f.string_or("message", "")};
    f.finish();
    rep.correctness_findings.push_back(cf);
  });
  rep.overall_completion_rate = r.number("overall_completion_rate");
  rep.mean_time_ratio = opt(r, "mean_time_ratio");
  rep.mean_hint_usage_rate = r.number_or("mean_hint_usage_rate", 0.0);
  r.finish();
  return rep;
}

// ---------------------------------------------------------------------------

struct ComparisonTolerances {
  double completion = 0.05;
  double time_ratio = 0.1;
};

enum class HarderDefinition { A, B, Indistinguishable };

inline std::string_view to_string(HarderDefinition h) {
  switch (h) {
    case HarderDefinition::A: return "a";
    case HarderDefinition::B: return "b";
    case HarderDefinition::Indistinguishable: return "indistinguishable";
  }
  return "";
}

struct ComparisonReport {
  HarderDefinition harder = HarderDefinition::Indistinguishable;
  double completion_delta = 0.0;  // a - b
  double time_ratio_delta = 0.0;  // a - b (0 when either lacks a ratio)
  double hint_usage_delta = 0.0;  // a - b
  double effect_size = 0.0;       // difference in mean time_ratio
  bool operator==(const ComparisonReport&) const = default;
};

/// Which of two definitions is harder: lower completion wins, higher time
/// ratio breaks completion ties, both under tolerance is a draw.
inline ComparisonReport compare_definitions(const QualityReport& a, const QualityReport& b, const ComparisonTolerances& tol = {}) {
  if (a.per_level.empty() || b.per_level.empty()) throw Error(ErrorCode::EmptyReport, "comparison needs two non-empty reports");
  ComparisonReport out;
  out.completion_delta = a.overall_completion_rate - b.overall_completion_rate;
  if (a.mean_time_ratio && b.mean_time_ratio) out.time_ratio_delta = *a.mean_time_ratio - *b.mean_time_ratio;
  out.hint_usage_delta = a.mean_hint_usage_rate - b.mean_hint_usage_rate;
  out.effect_size = out.time_ratio_delta;
  if (std::abs(out.completion_delta) >= tol.completion)
    out.harder = out.completion_delta < 0 ? HarderDefinition::A : HarderDefinition::B;
  else if (std::abs(out.time_ratio_delta) >= tol.time_ratio)
    out.harder = out.time_ratio_delta > 0 ? HarderDefinition::A : HarderDefinition::B;
  else
    out.harder = HarderDefinition::Indistinguishable;
  return out;
}

inline Json to_json(const ComparisonReport& c) {
  return Json{{"harder", to_string(c.harder)},
              {"deltas", {{"completion_rate", c.completion_delta}, {"time_ratio", c.time_ratio_delta}, {"hint_usage_rate", c.hint_usage_delta}}},
              {"effect_size", c.effect_size}};
}

}  // namespace rangehall
