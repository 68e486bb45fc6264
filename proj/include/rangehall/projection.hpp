#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "rangehall/analytics/trouble.hpp"
#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"
#include "rangehall/scoring.hpp"

namespace rangehall {

struct Viewer {
  std::string actor_id;
  Role role = Role::Trainee;
  auto operator<=>(const Viewer&) const = default;
};

/// A live-update channel is one (actor, role) pair.
using Channel = Viewer;

inline Json to_json(const Viewer& v) { return Json{{"actor_id", v.actor_id}, {"role", to_string(v.role)}}; }

// --- view payloads -----------------------------------------------------------

enum class ThroughputClass { Idle, Low, Medium, High };

inline std::string_view to_string(ThroughputClass c) {
  switch (c) {
    case ThroughputClass::Idle: return "idle";
    case ThroughputClass::Low: return "low";
    case ThroughputClass::Medium: return "medium";
    case ThroughputClass::High: return "high";
  }
  return "idle";
}

/// Bytes per second: below 1 kB/s idle, below 1 MB/s low, below 100 MB/s medium.
inline ThroughputClass throughput_class(std::optional<double> bytes_per_sec) {
  if (!bytes_per_sec || *bytes_per_sec < 1e3) return ThroughputClass::Idle;
  if (*bytes_per_sec < 1e6) return ThroughputClass::Low;
  if (*bytes_per_sec < 1e8) return ThroughputClass::Medium;
  return ThroughputClass::High;
}

struct LevelProgress {
  std::string level_id;
  std::string title;
  std::string state;                     // not_started | in_progress | completed | skipped
  std::optional<std::string> task_text;  // only once the level was started
  bool operator==(const LevelProgress&) const = default;
};

struct TakenHint {
  std::string level_id;
  std::string hint_id;
  std::string text;
  std::int64_t penalty_points = 0;
  Timestamp taken_at{};
  bool operator==(const TakenHint&) const = default;
};

struct InboundMessage {
  std::string from_actor_id;
  Timestamp timestamp{};
  std::string text;
  bool operator==(const InboundMessage&) const = default;
};

struct NodeGlyphs {
  std::string node_id;
  NodeRole role = NodeRole::Server;
  std::optional<std::string> team;
  bool up = true;
  std::vector<std::string> glyphs;  // sorted
  bool operator==(const NodeGlyphs&) const = default;
};

struct LinkGlyph {
  std::string from;
  std::string to;
  ThroughputClass throughput = ThroughputClass::Idle;
  bool operator==(const LinkGlyph&) const = default;
};

struct TopologyView {
  std::vector<NodeGlyphs> nodes;
  std::vector<LinkGlyph> links;
  bool operator==(const TopologyView&) const = default;
};

struct ScoreboardLite {
  std::string subject;
  std::int64_t total = 0;
  std::size_t rank = 0;
  std::size_t subjects = 0;
  bool operator==(const ScoreboardLite&) const = default;
};

struct TraineeView {
  std::string actor_id;
  std::optional<std::string> team_id;
  std::optional<std::string> current_level;
  std::vector<LevelProgress> levels;
  std::vector<TakenHint> hints_taken;
  std::vector<EventEnvelope> own_events;
  ScoreTimeline timeline;
  std::vector<InboundMessage> messages;  // from non-trainees only
  TopologyView topology;
  ScoreboardLite scoreboard;
  bool operator==(const TraineeView&) const = default;
};

struct EventDot {
  std::uint64_t seq = 0;
  Timestamp timestamp{};
  PayloadKind kind = PayloadKind::LevelStarted;
  std::optional<std::string> level_id;
  bool operator==(const EventDot&) const = default;
};

struct OverviewRow {
  std::string actor_id;
  std::optional<std::string> team_id;
  Timestamp first_activity{};  // own start offset; run start when idle
  std::vector<LevelInterval> intervals;
  std::vector<EventDot> dots;
  std::optional<std::string> current_level;
  std::int64_t total = 0;
  std::size_t rank = 0;
  bool operator==(const OverviewRow&) const = default;
};

struct SupervisorView {
  std::vector<OverviewRow> rows;
  std::vector<TroubleAlert> alerts;
  Scoreboard scoreboard;
  bool operator==(const SupervisorView&) const = default;
};

enum class AttackRuntimeState { Inactive, Ongoing, Completed };

inline std::string_view to_string(AttackRuntimeState s) {
  switch (s) {
    case AttackRuntimeState::Inactive: return "inactive";
    case AttackRuntimeState::Ongoing: return "ongoing";
    case AttackRuntimeState::Completed: return "completed";
  }
  return "inactive";
}

struct AttackPlanState {
  std::string attack_id;
  std::string attack_type;
  std::string target;
  std::string category;
  Timestamp scheduled_time{};
  AttackRuntimeState state = AttackRuntimeState::Inactive;
  std::optional<AttackOutcome> outcome;  // present iff completed
  bool rendered_success = false;
  std::vector<std::string> comments;
  bool operator==(const AttackPlanState&) const = default;
};

struct SparringView {
  std::vector<AttackPlanState> attack_plan;
  std::vector<InboundMessage> messages;
  bool operator==(const SparringView&) const = default;
};

struct NodeStatusView {
  std::string node_id;
  NodeRole role = NodeRole::Server;
  std::optional<std::string> team;
  bool up = true;
  std::int64_t failures = 0;
  std::optional<double> cpu_percent;
  std::optional<double> memory_percent;
  bool operator==(const NodeStatusView&) const = default;
};

struct ServiceStatusView {
  std::string service_id;
  std::string node_id;
  std::optional<ServiceStatus> status;  // latest probe
  std::optional<double> latency_ms;
  std::int64_t probes = 0;
  std::int64_t up_probes = 0;
  bool operator==(const ServiceStatusView&) const = default;
};

struct LinkStatusView {
  std::string from;
  std::string to;
  std::optional<double> bytes_per_sec;
  ThroughputClass throughput = ThroughputClass::Idle;
  bool operator==(const LinkStatusView&) const = default;
};

struct OperatorView {
  std::vector<NodeStatusView> nodes;
  std::vector<ServiceStatusView> services;
  std::vector<LinkStatusView> links;
  bool operator==(const OperatorView&) const = default;
};

using RoleViewPayload = std::variant<TraineeView, SupervisorView, SparringView, OperatorView>;

struct RoleView {
  std::string run_id;
  Viewer viewer;
  Timestamp as_of{};
  RoleViewPayload payload;
  bool operator==(const RoleView&) const = default;
};

// --- projection --------------------------------------------------------------

namespace detail {

/// Everything the views of one run prefix share, computed once.
struct ProjectionContext {
  const TrainingDefinition& def;
  RunSnapshot snap;  // cut at as_of
  Timestamp as_of;
  std::vector<ScoreTransaction> txs;
  Scoreboard board;
  std::map<std::string, std::vector<ScoreTransaction>> by_subject;
  std::map<std::string, bool> node_up;
  std::map<std::pair<std::string, std::string>, double> link_rate;

  ProjectionContext(const TrainingDefinition& d, const RunSnapshot& full, Timestamp t) : def(d), as_of(t) {
    snap.run = full.run;
    std::uint64_t cut = 0;
    for (const auto& e : full.events)
      if (e.timestamp <= t) cut = std::max(cut, e.seq);
    for (const auto& e : full.events)
      if (e.seq <= cut) snap.events.push_back(e);
    // The run end is only visible once reached.
    if (snap.run.end_time && *snap.run.end_time > t) snap.run.end_time.reset();

    txs = score_run(def, snap.events);
    board = build_scoreboard(txs, scoreboard_subjects(def, snap.run));
    by_subject = group_by_subject(txs);
    for (const auto& n : def.scenario.topology.nodes) node_up[n.id] = true;
    for (const auto& e : snap.events) {
      if (const auto* f = e.as<NodeFailure>()) node_up[f->node_id] = false;
      else if (const auto* r = e.as<NodeRecovery>()) node_up[r->node_id] = true;
      else if (const auto* l = e.as<LinkThroughput>()) link_rate[{l->from, l->to}] = l->bytes_per_sec;
    }
  }

  ScoreTimeline timeline_of(const std::string& subject) const {
    auto it = by_subject.find(subject);
    if (it == by_subject.end()) return ScoreTimeline{subject, {}};
    return build_timeline(it->second);
  }

  bool is_trainee(const std::string& actor) const {
    const Participant* p = snap.run.find(actor);
    return p && p->has_role(Role::Trainee);
  }

  std::vector<InboundMessage> inbound_messages(const std::string& actor, bool from_trainees) const {
    std::vector<InboundMessage> out;
    for (const auto& e : snap.events)
      if (const auto* m = e.as<MessageSent>(); m && m->to_actor_id == actor && e.actor_id != actor)
        if (from_trainees || !is_trainee(e.actor_id)) out.push_back({e.actor_id, e.timestamp, m->text});
    return out;
  }

  std::optional<double> link_bytes(const Link& l) const {
    if (auto it = link_rate.find({l.from, l.to}); it != link_rate.end()) return it->second;
    if (auto it = link_rate.find({l.to, l.from}); it != link_rate.end()) return it->second;
    return std::nullopt;
  }
};

inline std::optional<std::string> current_level_of(const std::vector<LevelInterval>& ivs) {
  std::optional<std::string> out;
  std::uint64_t latest = 0;
  for (const auto& iv : ivs)
    if (iv.outcome == LevelOutcome::InProgress && iv.start_seq >= latest) {
      latest = iv.start_seq;
      out = iv.level_id;
    }
  return out;
}

inline TraineeView trainee_view(const ProjectionContext& ctx, const Participant& p) {
  const auto& def = ctx.def;
  TraineeView v;
  v.actor_id = p.actor_id;
  v.team_id = p.team_id;
  const auto ivs = derive_level_intervals(def, ctx.snap, p.actor_id);
  v.current_level = current_level_of(ivs);

  std::vector<const Level*> levels;
  for (const auto& l : def.scenario.levels) levels.push_back(&l);
  std::stable_sort(levels.begin(), levels.end(), [](const Level* a, const Level* b) { return a->order < b->order; });
  for (const Level* l : levels) {
    LevelProgress lp{l->id, l->title, "not_started", std::nullopt};
    for (const auto& iv : ivs) {
      if (iv.level_id != l->id) continue;
      lp.task_text = l->task_text;
      if (iv.outcome == LevelOutcome::Completed) lp.state = "completed";
      else if (iv.outcome == LevelOutcome::Skipped && lp.state != "completed") lp.state = "skipped";
      else if (lp.state == "not_started") lp.state = "in_progress";
    }
    v.levels.push_back(std::move(lp));
  }

  std::set<std::pair<std::string, std::string>> seen_hints;
  for (const auto& e : ctx.snap.events) {
    if (e.actor_id != p.actor_id) continue;
    v.own_events.push_back(e);
    if (const auto* h = e.as<HintTaken>(); h && seen_hints.insert({h->level_id, h->hint_id}).second) {
      const Level* l = def.find_level(h->level_id);
      const Hint* hint = l ? l->find_hint(h->hint_id) : nullptr;
      v.hints_taken.push_back({h->level_id, h->hint_id, hint ? hint->text : "", hint ? hint->penalty_points : 0, e.timestamp});
    }
  }
  v.messages = ctx.inbound_messages(p.actor_id, false);

  const std::string subject = scoring_subject(def, p);
  v.timeline = ctx.timeline_of(subject);
  v.scoreboard.subject = subject;
  if (const auto* row = ctx.board.row(subject)) v.scoreboard.total = row->total;
  v.scoreboard.rank = ctx.board.rank_of(subject);
  v.scoreboard.subjects = ctx.board.rows.size();

  for (const auto& n : def.scenario.topology.nodes) {
    NodeGlyphs g{n.id, n.role, n.team, ctx.node_up.at(n.id), {}};
    g.glyphs.emplace_back(to_string(n.role));
    if (!g.up) g.glyphs.emplace_back("down");
    const bool own_node = def.kind == TrainingKind::CDX ? (n.team && p.team_id && *n.team == *p.team_id) : n.role == NodeRole::Attacker;
    if (own_node && !v.messages.empty()) g.glyphs.emplace_back("mail");
    std::sort(g.glyphs.begin(), g.glyphs.end());
    v.topology.nodes.push_back(std::move(g));
  }
  for (const auto& l : def.scenario.topology.links) v.topology.links.push_back({l.from, l.to, throughput_class(ctx.link_bytes(l))});
  return v;
}

inline SupervisorView supervisor_view(const ProjectionContext& ctx) {
  SupervisorView v;
  for (const auto& actor : ctx.snap.run.actors_with(Role::Trainee)) {
    const Participant* p = ctx.snap.run.find(actor);
    OverviewRow row;
    row.actor_id = actor;
    row.team_id = p->team_id;
    row.intervals = derive_level_intervals(ctx.def, ctx.snap, actor);
    row.current_level = current_level_of(row.intervals);
    std::optional<Timestamp> first;
    for (const auto& e : ctx.snap.events) {
      if (e.actor_id != actor) continue;
      row.dots.push_back({e.seq, e.timestamp, e.kind(), level_of(e.payload)});
      if (!first || e.timestamp < *first) first = e.timestamp;
    }
    row.first_activity = first.value_or(ctx.snap.run.start_time);
    const std::string subject = scoring_subject(ctx.def, *p);
    if (const auto* r = ctx.board.row(subject)) row.total = r->total;
    row.rank = ctx.board.rank_of(subject);
    v.rows.push_back(std::move(row));
  }
  if (ctx.as_of >= ctx.snap.run.start_time) v.alerts = detect_trouble(ctx.def, ctx.snap, ctx.as_of);
  v.scoreboard = ctx.board;
  return v;
}

inline SparringView sparring_view(const ProjectionContext& ctx, const std::string& actor) {
  SparringView v;
  for (const auto& a : ctx.def.scenario.attack_plan) {
    AttackPlanState s;
    s.attack_id = a.id;
    s.attack_type = a.attack_type;
    s.target = a.target;
    s.category = a.category;
    s.scheduled_time = ctx.snap.run.start_time + std::chrono::duration_cast<Millis>(a.scheduled_offset);
    for (const auto& e : ctx.snap.events) {
      const auto* m = e.as<ManualScoringEvent>();
      if (!m || m->attack_id != a.id) continue;
      if (!s.outcome) s.outcome = m->attack_outcome;
      if (!m->comment.empty()) s.comments.push_back(m->comment);
    }
    bool completed = false;
    for (const auto& e : ctx.snap.events)
      if (const auto* m = e.as<ManualScoringEvent>(); m && m->attack_id == a.id) completed = true;
    if (completed) s.state = AttackRuntimeState::Completed;
    else if (ctx.as_of >= s.scheduled_time) s.state = AttackRuntimeState::Ongoing;
    if (!completed) s.outcome.reset();
    s.rendered_success = completed && s.outcome == AttackOutcome::Success;
    v.attack_plan.push_back(std::move(s));
  }
  v.messages = ctx.inbound_messages(actor, true);
  return v;
}

inline OperatorView operator_view(const ProjectionContext& ctx) {
  OperatorView v;
  std::map<std::string, NodeStatusView> nodes;
  for (const auto& n : ctx.def.scenario.topology.nodes) {
    NodeStatusView s;
    s.node_id = n.id;
    s.role = n.role;
    s.team = n.team;
    s.up = ctx.node_up.at(n.id);
    nodes.emplace(n.id, s);
  }
  std::map<std::string, ServiceStatusView> services;
  for (const auto& svc : ctx.def.criteria.scored_services) {
    ServiceStatusView s;
    s.service_id = svc.id;
    s.node_id = svc.node_id;
    services.emplace(svc.id, s);
  }
  for (const auto& e : ctx.snap.events) {
    if (const auto* m = e.as<NodeMetric>()) {
      if (auto it = nodes.find(m->node_id); it != nodes.end()) {
        it->second.cpu_percent = m->cpu_percent;
        it->second.memory_percent = m->memory_percent;
      }
    } else if (const auto* f = e.as<NodeFailure>()) {
      if (auto it = nodes.find(f->node_id); it != nodes.end()) ++it->second.failures;
    } else if (const auto* p = e.as<ServiceProbe>()) {
      if (auto it = services.find(p->service_id); it != services.end()) {
        it->second.status = p->status;
        it->second.latency_ms = p->latency_ms;
        ++it->second.probes;
        it->second.up_probes += p->status == ServiceStatus::Up ? 1 : 0;
      }
    }
  }
  for (const auto& n : ctx.def.scenario.topology.nodes) v.nodes.push_back(nodes.at(n.id));
  for (const auto& svc : ctx.def.criteria.scored_services) v.services.push_back(services.at(svc.id));
  for (const auto& l : ctx.def.scenario.topology.links) {
    const auto bytes = ctx.link_bytes(l);
    v.links.push_back({l.from, l.to, bytes, throughput_class(bytes)});
  }
  return v;
}

inline RoleView project_with(const ProjectionContext& ctx, const Viewer& viewer) {
  const Participant* p = ctx.snap.run.find(viewer.actor_id);
  if (!p) throw Error(ErrorCode::NotAParticipant, "'" + viewer.actor_id + "' is not a participant of run " + ctx.snap.run.run_id);
  if (!p->has_role(viewer.role))
    throw Error(ErrorCode::RoleForbidden, "'" + viewer.actor_id + "' does not hold the " + std::string(to_string(viewer.role)) + " role");
  RoleView view{ctx.snap.run.run_id, viewer, ctx.as_of, {}};
  switch (viewer.role) {
    case Role::Trainee: view.payload = trainee_view(ctx, *p); break;
    case Role::Supervisor: view.payload = supervisor_view(ctx); break;
    case Role::SparringPartner: view.payload = sparring_view(ctx, viewer.actor_id); break;
    case Role::Operator: view.payload = operator_view(ctx); break;
  }
  return view;
}

}  // namespace detail

/// The run as one participant in one role may see it at `as_of`: the
/// events up to the highest seq stamped at or before `as_of`. Without
/// `as_of`, the whole log up to its horizon.
inline RoleView project_role_view(const TrainingDefinition& def, const RunSnapshot& snap, const Viewer& viewer,
                                  std::optional<Timestamp> as_of = std::nullopt) {
  const detail::ProjectionContext ctx(def, snap, as_of.value_or(snap.horizon()));
  return detail::project_with(ctx, viewer);
}

/// Every (actor, role) channel a run offers.
inline std::vector<Channel> run_channels(const TrainingRun& run) {
  std::vector<Channel> out;
  for (const auto& p : run.participants)
    for (Role r : p.roles) out.push_back({p.actor_id, r});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// --- serialization -----------------------------------------------------------

inline Json to_json(const TraineeView& v) {
  Json levels = Json::array(), hints = Json::array(), events = Json::array(), messages = Json::array();
  for (const auto& l : v.levels)
    levels.push_back({{"level_id", l.level_id}, {"title", l.title}, {"state", l.state}, {"task_text", l.task_text ? Json(*l.task_text) : Json(nullptr)}});
  for (const auto& h : v.hints_taken)
    hints.push_back({{"level_id", h.level_id}, {"hint_id", h.hint_id}, {"text", h.text}, {"penalty_points", h.penalty_points},
                     {"taken_at", format_timestamp(h.taken_at)}});
  for (const auto& e : v.own_events) events.push_back(envelope_to_json(e));
  for (const auto& m : v.messages)
    messages.push_back({{"from_actor_id", m.from_actor_id}, {"timestamp", format_timestamp(m.timestamp)}, {"text", m.text}});
  Json nodes = Json::array(), links = Json::array();
  for (const auto& n : v.topology.nodes)
    nodes.push_back({{"node_id", n.node_id}, {"role", to_string(n.role)}, {"team", n.team ? Json(*n.team) : Json(nullptr)}, {"up", n.up}, {"glyphs", n.glyphs}});
  for (const auto& l : v.topology.links) links.push_back({{"link", Json::array({l.from, l.to})}, {"throughput", to_string(l.throughput)}});
  return Json{{"kind", "trainee"},
              {"actor_id", v.actor_id},
              {"team_id", v.team_id ? Json(*v.team_id) : Json(nullptr)},
              {"current_level", v.current_level ? Json(*v.current_level) : Json(nullptr)},
              {"levels", levels},
              {"hints_taken", hints},
              {"own_events", events},
              {"timeline", to_json(v.timeline)},
              {"messages", messages},
              {"topology", {{"nodes", nodes}, {"links", links}}},
              {"scoreboard", {{"subject", v.scoreboard.subject}, {"total", v.scoreboard.total}, {"rank", v.scoreboard.rank}, {"subjects", v.scoreboard.subjects}}}};
}

inline Json to_json(const SupervisorView& v) {
  Json rows = Json::array();
  for (const auto& r : v.rows) {
    Json ivs = Json::array(), dots = Json::array();
    for (const auto& iv : r.intervals)
      ivs.push_back({{"level_id", iv.level_id}, {"start", format_timestamp(iv.start)}, {"end", iv.end ? Json(format_timestamp(*iv.end)) : Json(nullptr)},
                     {"outcome", to_string(iv.outcome)}});
    for (const auto& d : r.dots)
      dots.push_back({{"seq", d.seq}, {"timestamp", format_timestamp(d.timestamp)}, {"kind", to_string(d.kind)},
                      {"level_id", d.level_id ? Json(*d.level_id) : Json(nullptr)}});
    rows.push_back({{"actor_id", r.actor_id},
                    {"team_id", r.team_id ? Json(*r.team_id) : Json(nullptr)},
                    {"first_activity", format_timestamp(r.first_activity)},
                    {"intervals", ivs},
                    {"dots", dots},
                    {"current_level", r.current_level ? Json(*r.current_level) : Json(nullptr)},
                    {"total", r.total},
                    {"rank", r.rank}});
  }
  return Json{{"kind", "supervisor"}, {"rows", rows}, {"alerts", to_json(v.alerts)}, {"scoreboard", to_json(v.scoreboard)}};
}

inline Json to_json(const SparringView& v) {
  Json plan = Json::array(), messages = Json::array();
  for (const auto& a : v.attack_plan)
    plan.push_back({{"attack_id", a.attack_id},
                    {"attack_type", a.attack_type},
                    {"target", a.target},
                    {"category", a.category},
                    {"scheduled_time", format_timestamp(a.scheduled_time)},
                    {"state", to_string(a.state)},
                    {"outcome", a.outcome ? Json(to_string(*a.outcome)) : Json(nullptr)},
                    {"rendered_success", a.rendered_success},
                    {"comments", a.comments}});
  for (const auto& m : v.messages)
    messages.push_back({{"from_actor_id", m.from_actor_id}, {"timestamp", format_timestamp(m.timestamp)}, {"text", m.text}});
  return Json{{"kind", "sparring_partner"}, {"attack_plan", plan}, {"messages", messages}};
}

inline Json to_json(const OperatorView& v) {
  auto opt = [](const std::optional<double>& d) { return d ? Json(*d) : Json(nullptr); };
  Json nodes = Json::array(), services = Json::array(), links = Json::array();
  for (const auto& n : v.nodes)
    nodes.push_back({{"node_id", n.node_id}, {"role", to_string(n.role)}, {"team", n.team ? Json(*n.team) : Json(nullptr)}, {"up", n.up},
                     {"failures", n.failures}, {"cpu_percent", opt(n.cpu_percent)}, {"memory_percent", opt(n.memory_percent)}});
  for (const auto& s : v.services)
    services.push_back({{"service_id", s.service_id}, {"node_id", s.node_id}, {"status", s.status ? Json(to_string(*s.status)) : Json(nullptr)},
                        {"latency_ms", opt(s.latency_ms)}, {"probes", s.probes}, {"up_probes", s.up_probes}});
  for (const auto& l : v.links)
    links.push_back({{"link", Json::array({l.from, l.to})}, {"bytes_per_sec", opt(l.bytes_per_sec)}, {"throughput", to_string(l.throughput)}});
  return Json{{"kind", "operator"}, {"nodes", nodes}, {"services", services}, {"links", links}};
}

inline Json to_json(const RoleView& v) {
  return Json{{"run_id", v.run_id},
              {"viewer", to_json(v.viewer)},
              {"as_of", format_timestamp(v.as_of)},
              {"view", std::visit([](const auto& p) { return to_json(p); }, v.payload)}};
}

// --- live updates ------------------------------------------------------------

/// Channels whose view changes because `event` was appended to `before`.
/// Both sides are projected at the same instant, so time-driven changes
/// (an attack becoming due, a trainee becoming stuck) are not attributed
/// to the event. A channel left out has a byte-identical view.
inline std::vector<Channel> publish_update(const TrainingDefinition& def, const RunSnapshot& before, const EventEnvelope& event) {
  if (event.run_id != before.run.run_id) throw Error(ErrorCode::UnknownRun, "event belongs to run '" + event.run_id + "'");
  RunSnapshot after = before;
  after.events.push_back(event);
  const Timestamp t = std::max(after.horizon(), event.timestamp);
  const detail::ProjectionContext ctx_before(def, before, t), ctx_after(def, after, t);
  std::vector<Channel> changed;
  for (const auto& ch : run_channels(before.run)) {
    const Json a = to_json(detail::project_with(ctx_before, ch));
    const Json b = to_json(detail::project_with(ctx_after, ch));
    if (a != b) changed.push_back(ch);
  }
  return changed;
}

inline Json to_json(const std::vector<Channel>& channels) {
  Json arr = Json::array();
  for (const auto& c : channels) arr.push_back(to_json(c));
  return arr;
}

}  // namespace rangehall
