#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"
#include "rangehall/scoring.hpp"

namespace rangehall {

struct BehaviorOptions {
  bool level_qualified = false;  // "HintTaken@level-2" instead of "HintTaken"
};

struct BehaviorNode {
  std::string label;
  std::int64_t count = 0;
  double mean_score_delta = 0.0;  // mean of the score change each occurrence caused
  bool operator==(const BehaviorNode&) const = default;
};

struct BehaviorEdge {
  std::string from;
  std::string to;
  std::int64_t count = 0;
  bool operator==(const BehaviorEdge&) const = default;
};

struct AnomalyScore {
  std::string run_id;
  std::string actor_id;
  Millis total_time{0};
  double z_score = 0.0;
  bool operator==(const AnomalyScore&) const = default;
};

struct BehaviorGraph {
  std::vector<BehaviorNode> nodes;  // sorted by label
  std::vector<BehaviorEdge> edges;  // sorted by (from, to)
  std::vector<AnomalyScore> anomaly_scores;
  bool operator==(const BehaviorGraph&) const = default;

  const BehaviorEdge* edge(std::string_view from, std::string_view to) const {
    for (const auto& e : edges)
      if (e.from == from && e.to == to) return &e;
    return nullptr;
  }
  const BehaviorNode* node(std::string_view label) const {
    for (const auto& n : nodes)
      if (n.label == label) return &n;
    return nullptr;
  }
};

inline std::string behavior_label(const EventEnvelope& e, const BehaviorOptions& opt) {
  std::string label(to_string(e.kind()));
  if (opt.level_qualified)
    if (auto l = level_of(e.payload)) label += "@" + *l;
  return label;
}

/// Seq-ordered user actions of every trainee in a run.
inline std::map<std::string, std::vector<const EventEnvelope*>> trainee_action_traces(const RunSnapshot& snap) {
  std::map<std::string, std::vector<const EventEnvelope*>> traces;
  for (const auto& actor : snap.run.actors_with(Role::Trainee)) traces[actor];
  for (const auto& e : snap.events) {
    if (family_of(e.kind()) != PayloadFamily::UserAction) continue;
    if (auto it = traces.find(e.actor_id); it != traces.end()) it->second.push_back(&e);
  }
  for (auto& [_, trace] : traces)
    std::sort(trace.begin(), trace.end(), [](const EventEnvelope* a, const EventEnvelope* b) { return a->seq < b->seq; });
  return traces;
}

/// Directly-follows graph over trainee actions plus completion-time z-scores.
inline BehaviorGraph behavior_analysis(const TrainingDefinition& def, const std::vector<RunSnapshot>& runs,
                                       const BehaviorOptions& opt = {}) {
  if (runs.empty()) throw Error(ErrorCode::NoRuns, "behavior analysis needs at least one run");

  std::map<std::string, std::pair<std::int64_t, std::int64_t>> node_acc;  // label -> (count, delta sum)
  std::map<std::pair<std::string, std::string>, std::int64_t> edge_acc;
  std::vector<AnomalyScore> anomalies;

  for (const auto& snap : runs) {
    std::map<std::uint64_t, std::int64_t> delta_of_seq;
    for (const auto& t : score_run(def, snap.events)) delta_of_seq[t.source_seq] += t.delta;

    for (const auto& [actor, trace] : trainee_action_traces(snap)) {
      const std::string* prev = nullptr;
      std::vector<std::string> labels;
      labels.reserve(trace.size());
      for (const auto* e : trace) {
        labels.push_back(behavior_label(*e, opt));
        auto& acc = node_acc[labels.back()];
        ++acc.first;
        if (auto d = delta_of_seq.find(e->seq); d != delta_of_seq.end()) acc.second += d->second;
      }
      for (const auto& l : labels) {
        if (prev) ++edge_acc[{*prev, l}];
        prev = &l;
      }
      if (def.kind == TrainingKind::CTF) {
        AnomalyScore a{snap.run.run_id, actor};
        for (const auto& iv : derive_level_intervals(def, snap, actor)) a.total_time += iv.duration(snap.horizon());
        anomalies.push_back(a);
      }
    }
  }

  BehaviorGraph g;
  for (const auto& [label, acc] : node_acc)
    g.nodes.push_back({label, acc.first, static_cast<double>(acc.second) / static_cast<double>(acc.first)});
  for (const auto& [key, count] : edge_acc) g.edges.push_back({key.first, key.second, count});

  if (!anomalies.empty()) {
    double mean = 0;
    for (const auto& a : anomalies) mean += static_cast<double>(a.total_time.count());
    mean /= static_cast<double>(anomalies.size());
    double var = 0;
    for (const auto& a : anomalies) {
      const double d = static_cast<double>(a.total_time.count()) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(anomalies.size()));
    for (auto& a : anomalies) a.z_score = sd > 0 ? (static_cast<double>(a.total_time.count()) - mean) / sd : 0.0;
  }
  std::sort(anomalies.begin(), anomalies.end(),
            [](const AnomalyScore& a, const AnomalyScore& b) { return std::tie(a.run_id, a.actor_id) < std::tie(b.run_id, b.actor_id); });
  g.anomaly_scores = std::move(anomalies);
  return g;
}

inline Json to_json(const BehaviorGraph& g) {
  Json nodes = Json::array(), edges = Json::array(), anomalies = Json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"label", n.label}, {"count", n.count}, {"mean_score_delta", n.mean_score_delta}});
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"count", e.count}});
  for (const auto& a : g.anomaly_scores)
    anomalies.push_back({{"run_id", a.run_id}, {"actor_id", a.actor_id}, {"total_time_sec", to_seconds(a.total_time)}, {"z_score", a.z_score}});
  return Json{{"nodes", nodes}, {"edges", edges}, {"anomaly_scores", anomalies}};
}

// ---------------------------------------------------------------------------

struct ActorCentrality {
  std::string actor_id;
  std::optional<std::string> team_id;
  std::int64_t degree = 0;           // distinct partners
  std::int64_t weighted_degree = 0;  // messages sent + received
  bool operator==(const ActorCentrality&) const = default;
};

struct CentralityReport {
  std::vector<ActorCentrality> actors;                          // sorted by actor_id
  std::map<std::string, std::vector<std::string>> leader_candidates;  // team -> maximal actors
  bool operator==(const CentralityReport&) const = default;

  const ActorCentrality* find(std::string_view actor) const {
    for (const auto& a : actors)
      if (a.actor_id == actor) return &a;
    return nullptr;
  }
};

/// Degree centrality over the undirected MessageSent graph of one run.
inline CentralityReport communication_centrality(const RunSnapshot& snap) {
  std::map<std::string, std::set<std::string>> partners;
  std::map<std::string, std::int64_t> weight;
  for (const auto& p : snap.run.participants) {
    partners[p.actor_id];
    weight[p.actor_id];
  }
  for (const auto& e : snap.events) {
    const auto* m = e.as<MessageSent>();
    if (!m) continue;
    ++weight[e.actor_id];
    ++weight[m->to_actor_id];
    if (e.actor_id != m->to_actor_id) {
      partners[e.actor_id].insert(m->to_actor_id);
      partners[m->to_actor_id].insert(e.actor_id);
    }
  }
  CentralityReport out;
  for (const auto& [actor, ps] : partners) {
    ActorCentrality c;
    c.actor_id = actor;
    if (const auto* p = snap.run.find(actor)) c.team_id = p->team_id;
    c.degree = static_cast<std::int64_t>(ps.size());
    c.weighted_degree = weight[actor];
    out.actors.push_back(c);
  }
  std::map<std::string, std::int64_t> best;
  for (const auto& c : out.actors)
    if (c.team_id && c.weighted_degree > 0) best[*c.team_id] = std::max(best[*c.team_id], c.weighted_degree);
  for (const auto& c : out.actors)
    if (c.team_id && c.weighted_degree > 0 && c.weighted_degree == best[*c.team_id]) out.leader_candidates[*c.team_id].push_back(c.actor_id);
  return out;
}

inline Json to_json(const CentralityReport& r) {
  Json actors = Json::array();
  for (const auto& a : r.actors)
    actors.push_back({{"actor_id", a.actor_id},
                      {"team_id", a.team_id ? Json(*a.team_id) : Json(nullptr)},
                      {"degree", a.degree},
                      {"weighted_degree", a.weighted_degree}});
  return Json{{"actors", actors}, {"leader_candidates", Json(r.leader_candidates)}};
}

}  // namespace rangehall
