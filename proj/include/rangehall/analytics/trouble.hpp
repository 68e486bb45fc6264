#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"

namespace rangehall {

struct TroubleRules {
  double stuck_factor = 2.0;
  int bruteforce_n = 4;
  Millis bruteforce_window = std::chrono::minutes{5};
  Millis quit_window = std::chrono::minutes{3};
};

enum class TroubleKind { Stuck, FlagBruteforce, AboutToQuit };

inline std::string_view to_string(TroubleKind k) {
  switch (k) {
    case TroubleKind::Stuck: return "stuck";
    case TroubleKind::FlagBruteforce: return "flag_bruteforce";
    case TroubleKind::AboutToQuit: return "about_to_quit";
  }
  return "";
}

struct TroubleAlert {
  std::string actor_id;
  std::string level_id;
  TroubleKind kind = TroubleKind::Stuck;
  std::string evidence;
  Timestamp raised_at{};
  bool operator==(const TroubleAlert&) const = default;
};

inline Json to_json(const TroubleAlert& a) {
  return Json{{"actor_id", a.actor_id},
              {"level_id", a.level_id},
              {"kind", to_string(a.kind)},
              {"evidence", a.evidence},
              {"raised_at", format_timestamp(a.raised_at)}};
}

inline Json to_json(const std::vector<TroubleAlert>& alerts) {
  Json arr = Json::array();
  for (const auto& a : alerts) arr.push_back(to_json(a));
  return arr;
}

/// Stuck threshold of a level in milliseconds.
inline Millis stuck_threshold(const Level& level, double factor) {
  const auto expected = std::chrono::duration_cast<Millis>(level.expected_duration).count();
  return Millis{std::llround(factor * static_cast<double>(expected))};
}

/// Trainees in trouble as of `now`, judged only on events stamped at or
/// before `now`. One alert per (trainee, level, kind); sorted by raised_at,
/// then actor.
inline std::vector<TroubleAlert> detect_trouble(const TrainingDefinition& def, const RunSnapshot& snap, Timestamp now,
                                                const TroubleRules& rules = {}) {
  if (now < snap.run.start_time) throw Error(ErrorCode::InvalidArgument, "'now' precedes the run start");
  std::vector<EventEnvelope> known;
  for (const auto& e : snap.events)
    if (e.timestamp <= now) known.push_back(e);

  std::vector<TroubleAlert> alerts;
  for (const auto& actor : snap.run.actors_with(Role::Trainee)) {
    // Stuck: some interval has lasted longer than factor x expected.
    std::map<std::string, bool> stuck_seen;
    for (const auto& iv : detail::pair_level_events(def, known, actor)) {
      const Level* level = def.find_level(iv.level_id);
      if (!level || stuck_seen[iv.level_id]) continue;
      const Millis threshold = stuck_threshold(*level, rules.stuck_factor);
      const Timestamp until = iv.end ? std::min(*iv.end, now) : now;
      if (until - iv.start > threshold) {
        stuck_seen[iv.level_id] = true;
        alerts.push_back({actor, iv.level_id, TroubleKind::Stuck,
                          "in level for " + std::to_string(std::chrono::duration_cast<std::chrono::minutes>(until - iv.start).count()) +
                              " min, expected " + std::to_string(level->expected_duration.count()) + " min",
                          iv.start + threshold});
      }
    }

    std::map<std::string, std::vector<Timestamp>> wrong;
    std::map<std::string, std::map<std::string, Timestamp>> first_hint;
    std::map<std::string, Timestamp> first_solution;
    std::vector<std::string> level_order;
    auto note_level = [&](const std::string& id) {
      if (std::find(level_order.begin(), level_order.end(), id) == level_order.end()) level_order.push_back(id);
    };
    for (const auto& e : known) {
      if (e.actor_id != actor) continue;
      if (const auto* f = e.as<FlagSubmitted>(); f && !f->correct) {
        wrong[f->level_id].push_back(e.timestamp);
        note_level(f->level_id);
      } else if (const auto* h = e.as<HintTaken>()) {
        first_hint[h->level_id].emplace(h->hint_id, e.timestamp);
        note_level(h->level_id);
      } else if (const auto* s = e.as<SolutionDisplayed>()) {
        first_solution.emplace(s->level_id, e.timestamp);
        note_level(s->level_id);
      }
    }

    for (const auto& level_id : level_order) {
      // Flag brute force: n wrong submissions inside one window.
      if (auto it = wrong.find(level_id); it != wrong.end() && rules.bruteforce_n > 0) {
        auto times = it->second;
        std::sort(times.begin(), times.end());
        const std::size_t n = static_cast<std::size_t>(rules.bruteforce_n);
        for (std::size_t j = n - 1; j < times.size(); ++j) {
          if (times[j] - times[j + 1 - n] <= rules.bruteforce_window) {
            alerts.push_back({actor, level_id, TroubleKind::FlagBruteforce,
                              std::to_string(n) + " wrong flags within " +
                                  std::to_string(std::chrono::duration_cast<std::chrono::seconds>(times[j] - times[j + 1 - n]).count()) +
                                  " s",
                              times[j]});
            break;
          }
        }
      }
      // About to quit: every hint and the solution opened in a short burst.
      const Level* level = def.find_level(level_id);
      auto sol = first_solution.find(level_id);
      if (!level || sol == first_solution.end()) continue;
      Timestamp lo = sol->second, hi = sol->second;
      bool all_hints = true;
      for (const auto& hint : level->hints) {
        auto& taken = first_hint[level_id];
        auto h = taken.find(hint.id);
        if (h == taken.end()) {
          all_hints = false;
          break;
        }
        lo = std::min(lo, h->second);
        hi = std::max(hi, h->second);
      }
      if (all_hints && hi - lo <= rules.quit_window)
        alerts.push_back({actor, level_id, TroubleKind::AboutToQuit,
                          "all " + std::to_string(level->hints.size()) + " hints and the solution within " +
                              std::to_string(std::chrono::duration_cast<std::chrono::seconds>(hi - lo).count()) + " s",
                          hi});
    }
  }
  std::sort(alerts.begin(), alerts.end(), [](const TroubleAlert& a, const TroubleAlert& b) {
    return std::tie(a.raised_at, a.actor_id, a.kind, a.level_id) < std::tie(b.raised_at, b.actor_id, b.kind, b.level_id);
  });
  return alerts;
}

}  // namespace rangehall
