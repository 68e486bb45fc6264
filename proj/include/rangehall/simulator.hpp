#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"
#include "rangehall/random.hpp"

namespace rangehall {

struct TraineeProfile {
  std::string actor_id;
  double skill = 0.5;
  double hint_propensity = 0.0;
  double guess_propensity = 0.0;
  double base_solve_time = 1.0;  // multiplier on the per-level median solve time
  std::optional<std::string> team_id;
};

struct TeamProfile {
  std::string team_id;
  double defense_skill = 0.5;
  int members = 4;
};

struct SimulationConfig {
  std::uint64_t seed = 1;
  std::chrono::minutes wall_duration{120};
  std::optional<std::chrono::seconds> probe_interval;  // overrides every check_interval
  std::vector<TeamProfile> team_profiles;
  std::vector<TraineeProfile> trainees;  // CTF profiles when loaded from a file
  Timestamp start_time = parse_timestamp("2026-01-05T09:00:00Z");
  std::string run_id;  // empty: "<definition id>-sim-<seed>"

  // Behaviour knobs.
  double solve_time_sigma = 0.5;             // log-normal shape
  double wrong_flags_per_level = 3.0;        // Poisson mean at guess_propensity 1
  double commands_per_level = 0.0;           // Poisson mean of CommandEntered per level
  std::chrono::seconds start_jitter{120};    // trainees start within [0, jitter)
  int supervisors = 1;
  double member_message_rate = 2.0;          // MessageSent per hour per team member
  double leader_rate_factor = 3.0;           // leader rate = factor x member rate
  std::chrono::minutes outage_median{20};
  double outage_sigma = 0.5;
  std::chrono::minutes metric_interval{10};  // 0 disables NodeMetric samples
};

namespace detail {

inline void require_unit(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, what + " must lie in [0,1]");
}

inline void check_config(const SimulationConfig& c) {
  if (c.wall_duration.count() <= 0) throw Error(ErrorCode::InvalidArgument, "wall_duration must be positive");
  if (c.probe_interval && c.probe_interval->count() <= 0)
    throw Error(ErrorCode::InvalidArgument, "probe_interval must be positive");
  if (c.solve_time_sigma < 0.0 || c.outage_sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
  if (c.start_jitter.count() < 0) throw Error(ErrorCode::InvalidArgument, "start_jitter must be non-negative");
  for (const auto& t : c.team_profiles) require_unit(t.defense_skill, "defense_skill of " + t.team_id);
}

/// Events are produced out of order and sorted once; `stream` and `order`
/// make ties deterministic.
struct Draft {
  Timestamp time;
  std::uint64_t stream;
  std::uint64_t order;
  PendingEvent event;
};

inline RunSnapshot materialize(TrainingRun run, const TrainingDefinition& def, std::vector<Draft> drafts, Timestamp end) {
  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return std::tie(a.time, a.stream, a.order) < std::tie(b.time, b.stream, b.order);
  });
  auto shared = std::make_shared<const TrainingDefinition>(def);
  RunLog log(std::move(run), shared);
  for (auto& d : drafts) log.append(d.event);
  log.close(end);
  return log.snapshot();
}

inline Millis draw_millis(double ms) { return Millis{std::max<std::int64_t>(1, std::llround(ms))}; }

}  // namespace detail

/// Synthetic CTF session: each trainee walks the levels in order, taking
/// hints and guessing flags per its profile, skipping any level whose drawn
/// solve time would overrun the wall window.
inline RunSnapshot simulate_ctf_run(const TrainingDefinition& def, const std::vector<TraineeProfile>& profiles,
                                    const SimulationConfig& config) {
  if (def.kind != TrainingKind::CTF) throw Error(ErrorCode::KindMismatch, "definition '" + def.id + "' is not a CTF");
  if (profiles.empty()) throw Error(ErrorCode::InvalidArgument, "at least one trainee profile is required");
  if (static_cast<std::int64_t>(profiles.size()) > def.max_participants)
    throw Error(ErrorCode::TooManyParticipants, std::to_string(profiles.size()) + " trainees exceed max_participants " +
                                                    std::to_string(def.max_participants));
  detail::check_config(config);
  for (const auto& p : profiles) {
    detail::require_unit(p.skill, "skill of " + p.actor_id);
    detail::require_unit(p.hint_propensity, "hint_propensity of " + p.actor_id);
    detail::require_unit(p.guess_propensity, "guess_propensity of " + p.actor_id);
    if (!(p.base_solve_time > 0.0)) throw Error(ErrorCode::InvalidArgument, "base_solve_time of " + p.actor_id + " must be positive");
  }

  TrainingRun run;
  run.run_id = config.run_id.empty() ? def.id + "-sim-" + std::to_string(config.seed) : config.run_id;
  run.definition_id = def.id;
  run.start_time = config.start_time;
  for (const auto& p : profiles) run.participants.push_back({p.actor_id, {Role::Trainee}, p.team_id});
  for (int s = 1; s <= config.supervisors; ++s) run.participants.push_back({"supervisor-" + std::to_string(s), {Role::Supervisor}, {}});
  run.metadata = Json{{"synthetic", true}, {"generator", "rangehall-simulator"}, {"seed", config.seed}, {"kind", "CTF"}};

  std::vector<const Level*> levels;
  for (const auto& l : def.scenario.levels) levels.push_back(&l);
  std::stable_sort(levels.begin(), levels.end(), [](const Level* a, const Level* b) { return a->order < b->order; });

  const Timestamp end = config.start_time + config.wall_duration;
  std::vector<detail::Draft> drafts;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& prof = profiles[i];
    Rng rng = Rng::stream(config.seed, i);
    std::uint64_t order = 0;
    auto emit = [&](Timestamp t, Payload p) { drafts.push_back({t, i, order++, {t, prof.actor_id, std::move(p)}}); };

    const auto jitter_ms = static_cast<double>(std::chrono::duration_cast<Millis>(config.start_jitter).count());
    Timestamp t = config.start_time + Millis{static_cast<std::int64_t>(rng.uniform() * jitter_ms)};
    for (const Level* level : levels) {
      const double median_ms = static_cast<double>(std::chrono::duration_cast<Millis>(level->expected_duration).count()) *
                               (2.0 - prof.skill) * prof.base_solve_time;
      const Millis solve = detail::draw_millis(rng.lognormal(median_ms, config.solve_time_sigma));
      // Draw the within-level behaviour unconditionally so the stream stays aligned.
      std::vector<double> hint_at;
      for (std::size_t h = 0; h < level->hints.size(); ++h)
        hint_at.push_back(rng.bernoulli(prof.hint_propensity) ? rng.uniform() : -1.0);
      const std::int64_t wrong = rng.poisson(prof.guess_propensity * config.wrong_flags_per_level);
      std::vector<double> wrong_at;
      for (std::int64_t w = 0; w < wrong; ++w) wrong_at.push_back(rng.uniform());
      const std::int64_t commands = rng.poisson(config.commands_per_level);
      std::vector<double> command_at;
      for (std::int64_t c = 0; c < commands; ++c) command_at.push_back(rng.uniform());

      emit(t, LevelStarted{level->id});
      if (t + solve > end) {
        emit(t, LevelSkipped{level->id});
        continue;
      }
      struct Inner {
        double at;
        int rank;
        Payload payload;
      };
      std::vector<Inner> inner;
      for (std::size_t h = 0; h < hint_at.size(); ++h)
        if (hint_at[h] >= 0.0) inner.push_back({hint_at[h], 0, HintTaken{level->id, level->hints[h].id}});
      for (double w : wrong_at) inner.push_back({w, 1, FlagSubmitted{level->id, false}});
      for (std::size_t c = 0; c < command_at.size(); ++c)
        inner.push_back({command_at[c], 2, CommandEntered{"cmd " + level->id + " #" + std::to_string(c + 1)}});
      std::stable_sort(inner.begin(), inner.end(), [](const Inner& a, const Inner& b) { return std::tie(a.at, a.rank) < std::tie(b.at, b.rank); });
      for (auto& in : inner)
        emit(t + Millis{static_cast<std::int64_t>(in.at * static_cast<double>(solve.count()))}, std::move(in.payload));
      t += solve;
      emit(t, LevelCompleted{level->id});
    }
  }
  return detail::materialize(std::move(run), def, std::move(drafts), end);
}

/// Actor ids the CDX simulator creates.
inline std::string cdx_member_id(const std::string& team, int n) { return team + "-m" + std::to_string(n); }
inline constexpr std::string_view kRedTeamActor = "red-team";
inline constexpr std::string_view kWhiteTeamActor = "white-team";
inline constexpr std::string_view kGreenTeamActor = "green-team";

/// Synthetic CDX session: the attack plan fires on schedule, successful
/// attacks take their target node down for a drawn outage, scored services
/// are probed on their interval, and team members chat around a leader.
inline RunSnapshot simulate_cdx_run(const TrainingDefinition& def, const SimulationConfig& config) {
  using std::chrono::duration_cast;
  if (def.kind != TrainingKind::CDX) throw Error(ErrorCode::KindMismatch, "definition '" + def.id + "' is not a CDX");
  detail::check_config(config);
  std::map<std::string, const TeamProfile*> profile_of;
  for (const auto& tp : config.team_profiles) profile_of[tp.team_id] = &tp;
  const auto teams = def.scenario.topology.teams();
  for (const auto& team : teams)
    if (!profile_of.count(team)) throw Error(ErrorCode::MissingTeamProfile, "no profile for team '" + team + "'");

  TrainingRun run;
  run.run_id = config.run_id.empty() ? def.id + "-sim-" + std::to_string(config.seed) : config.run_id;
  run.definition_id = def.id;
  run.start_time = config.start_time;
  Json leaders = Json::object();
  for (const auto& team : teams) {
    const int members = std::max(1, profile_of[team]->members);
    for (int m = 1; m <= members; ++m) run.participants.push_back({cdx_member_id(team, m), {Role::Trainee}, team});
    leaders[team] = cdx_member_id(team, 1);
  }
  run.participants.push_back({std::string(kRedTeamActor), {Role::SparringPartner}, {}});
  run.participants.push_back({std::string(kWhiteTeamActor), {Role::SparringPartner, Role::Supervisor}, {}});
  run.participants.push_back({std::string(kGreenTeamActor), {Role::Operator}, {}});
  run.metadata = Json{{"synthetic", true},
                      {"generator", "rangehall-simulator"},
                      {"seed", config.seed},
                      {"kind", "CDX"},
                      {"communication",
                       {{"model", "synthetic leader-centred MessageSent traffic"},
                        {"leaders", leaders},
                        {"leader_rate_factor", config.leader_rate_factor},
                        {"member_message_rate_per_hour", config.member_message_rate}}}};

  const Timestamp start = config.start_time;
  const Timestamp end = start + config.wall_duration;
  std::vector<detail::Draft> drafts;
  std::uint64_t order = 0;
  auto emit = [&](Timestamp t, std::uint64_t stream, std::string actor, Payload p) {
    drafts.push_back({t, stream, order++, {t, std::move(actor), std::move(p)}});
  };
  enum Stream : std::uint64_t { kAttacks = 1, kOutage = 2, kProbes = 3, kMetrics = 4, kMessages = 5 };

  // Attacks, in schedule order.
  std::vector<const AttackPlanEntry*> plan;
  for (const auto& a : def.scenario.attack_plan) plan.push_back(&a);
  std::stable_sort(plan.begin(), plan.end(),
                   [](const AttackPlanEntry* a, const AttackPlanEntry* b) { return a->scheduled_offset < b->scheduled_offset; });
  Rng attack_rng = Rng::stream(config.seed, kAttacks);
  Rng outage_rng = Rng::stream(config.seed, kOutage);
  std::map<std::string, std::vector<std::pair<Timestamp, Timestamp>>> outages;
  for (const AttackPlanEntry* a : plan) {
    const Timestamp at = start + a->scheduled_offset;
    if (at >= end) continue;
    const std::string team = def.team_of_node(a->target);
    auto it = profile_of.find(team);
    const double defense = it == profile_of.end() ? 0.0 : it->second->defense_skill;
    const bool success = attack_rng.uniform() < 1.0 - defense;
    const double outage_ms = outage_rng.lognormal(
        static_cast<double>(duration_cast<Millis>(config.outage_median).count()), config.outage_sigma);
    ManualScoringEvent m;
    m.issued_by = std::string(kRedTeamActor);
    m.subject = team;
    m.category = a->category;
    m.points = success ? -a->penalty_points : 0;
    m.comment = a->attack_type + (success ? " succeeded against " : " defended on ") + a->target;
    m.attack_id = a->id;
    m.attack_outcome = success ? AttackOutcome::Success : AttackOutcome::Failure;
    emit(at, kAttacks, std::string(kRedTeamActor), m);
    if (success) outages[a->target].push_back({at, at + detail::draw_millis(outage_ms)});
  }
  // Merge overlapping outages per node and emit failure/recovery pairs.
  std::map<std::string, std::vector<std::pair<Timestamp, Timestamp>>> merged;
  for (auto& [node, list] : outages) {
    std::sort(list.begin(), list.end());
    auto& out = merged[node];
    for (const auto& iv : list) {
      if (!out.empty() && iv.first <= out.back().second) out.back().second = std::max(out.back().second, iv.second);
      else out.push_back(iv);
    }
    for (const auto& [from, to] : out) {
      emit(from, kOutage, std::string(kSystemActor), NodeFailure{node});
      if (to < end) emit(to, kOutage, std::string(kSystemActor), NodeRecovery{node});
    }
  }
  auto node_down = [&](const std::string& node, Timestamp t) {
    auto it = merged.find(node);
    if (it == merged.end()) return false;
    for (const auto& [from, to] : it->second)
      if (t >= from && t < to) return true;
    return false;
  };

  // Service probes.
  Rng probe_rng = Rng::stream(config.seed, kProbes);
  const Millis wall = duration_cast<Millis>(config.wall_duration);
  for (const auto& svc : def.criteria.scored_services) {
    const Millis interval = duration_cast<Millis>(config.probe_interval ? *config.probe_interval : svc.check_interval);
    const std::int64_t checks = wall / interval;
    for (std::int64_t k = 0; k < checks; ++k) {
      const Timestamp t = start + k * interval;
      const bool down = node_down(svc.node_id, t);
      const double latency = down ? 0.0 : std::round(probe_rng.uniform(2.0, 40.0) * 1000.0) / 1000.0;
      emit(t, kProbes, std::string(kSystemActor),
           ServiceProbe{svc.id, down ? ServiceStatus::Down : ServiceStatus::Up, latency});
    }
  }

  // Node utilization samples.
  if (config.metric_interval.count() > 0) {
    Rng metric_rng = Rng::stream(config.seed, kMetrics);
    const Millis step = duration_cast<Millis>(config.metric_interval);
    for (Timestamp t = start; t < end; t += step) {
      for (const auto& node : def.scenario.topology.nodes) {
        const double cpu = std::clamp(25.0 + 15.0 * metric_rng.normal(), 0.0, 100.0);
        const double mem = std::clamp(45.0 + 10.0 * metric_rng.normal(), 0.0, 100.0);
        if (node_down(node.id, t)) continue;
        emit(t, kMetrics, std::string(kSystemActor),
             NodeMetric{node.id, std::round(cpu * 100.0) / 100.0, std::round(mem * 100.0) / 100.0});
      }
    }
  }

  // Team communication: one Poisson process per member, leaders faster.
  if (config.member_message_rate > 0.0) {
    std::uint64_t actor_index = 0;
    for (const auto& team : teams) {
      const int members = std::max(1, profile_of[team]->members);
      for (int m = 1; m <= members; ++m, ++actor_index) {
        if (members < 2) continue;
        Rng rng = Rng::stream(config.seed, (kMessages << 32) + actor_index);
        const double per_hour = config.member_message_rate * (m == 1 ? config.leader_rate_factor : 1.0);
        const double rate_per_ms = per_hour / 3600000.0;
        double offset = rng.exponential(rate_per_ms);
        std::uint64_t n = 0;
        while (offset < static_cast<double>(wall.count())) {
          int to = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(members - 1)));
          if (to >= m) ++to;
          emit(start + Millis{static_cast<std::int64_t>(offset)}, kMessages, cdx_member_id(team, m),
               MessageSent{cdx_member_id(team, to), "status update " + std::to_string(++n)});
          offset += rng.exponential(rate_per_ms);
        }
      }
    }
  }

  return detail::materialize(std::move(run), def, std::move(drafts), end);
}

// ---------------------------------------------------------------------------
// Config file

inline SimulationConfig simulation_config_from_json(const Json& root) {
  SimulationConfig c;
  ObjectReader r(root, "");
  c.seed = static_cast<std::uint64_t>(r.integer_or("seed", 1));
  c.wall_duration = std::chrono::minutes{r.integer_or("wall_duration", c.wall_duration.count())};
  if (auto p = r.maybe_integer("probe_interval")) c.probe_interval = std::chrono::seconds{*p};
  if (r.has("start_time")) c.start_time = r.timestamp("start_time");
  else r.optional("start_time");
  c.run_id = r.string_or("run_id", "");
  r.each("team_profiles", [&](const Json& v, const std::string& loc) {
    ObjectReader t(v, loc);
    TeamProfile tp;
    tp.team_id = t.string("team_id");
    tp.defense_skill = t.number_or("defense_skill", tp.defense_skill);
    tp.members = static_cast<int>(t.integer_or("members", tp.members));
    t.finish();
    c.team_profiles.push_back(tp);
  });
  r.each("trainees", [&](const Json& v, const std::string& loc) {
    ObjectReader t(v, loc);
    TraineeProfile p;
    p.actor_id = t.string("actor_id");
    p.skill = t.number_or("skill", p.skill);
    p.hint_propensity = t.number_or("hint_propensity", p.hint_propensity);
    p.guess_propensity = t.number_or("guess_propensity", p.guess_propensity);
    p.base_solve_time = t.number_or("base_solve_time", p.base_solve_time);
    if (t.has("team_id")) p.team_id = t.string("team_id");
    else t.optional("team_id");
    t.finish();
    c.trainees.push_back(p);
  });
  c.solve_time_sigma = r.number_or("solve_time_sigma", c.solve_time_sigma);
  c.wrong_flags_per_level = r.number_or("wrong_flags_per_level", c.wrong_flags_per_level);
  c.commands_per_level = r.number_or("commands_per_level", c.commands_per_level);
  c.start_jitter = std::chrono::seconds{r.integer_or("start_jitter", c.start_jitter.count())};
  c.supervisors = static_cast<int>(r.integer_or("supervisors", c.supervisors));
  c.member_message_rate = r.number_or("member_message_rate", c.member_message_rate);
  c.leader_rate_factor = r.number_or("leader_rate_factor", c.leader_rate_factor);
  c.outage_median = std::chrono::minutes{r.integer_or("outage_median", c.outage_median.count())};
  c.outage_sigma = r.number_or("outage_sigma", c.outage_sigma);
  c.metric_interval = std::chrono::minutes{r.integer_or("metric_interval", c.metric_interval.count())};
  r.finish();
  return c;
}

/// Dispatches on the definition kind; CTF runs use config.trainees.
inline RunSnapshot simulate_run(const TrainingDefinition& def, const SimulationConfig& config) {
  if (def.kind == TrainingKind::CTF) return simulate_ctf_run(def, config.trainees, config);
  return simulate_cdx_run(def, config);
}

}  // namespace rangehall
