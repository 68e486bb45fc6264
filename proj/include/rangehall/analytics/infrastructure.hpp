#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rangehall/definition.hpp"
#include "rangehall/event_log.hpp"

namespace rangehall {

/// Nearest-rank percentile (p in (0,100]) of unsorted samples.
inline double nearest_rank(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

struct Percentiles {
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  bool operator==(const Percentiles&) const = default;
};

inline Percentiles percentiles_of(const std::vector<double>& samples) {
  return {nearest_rank(samples, 50), nearest_rank(samples, 95), samples.empty() ? 0.0 : *std::max_element(samples.begin(), samples.end())};
}

struct ServiceUptime {
  std::string service_id;
  std::int64_t probes = 0;
  std::int64_t up_probes = 0;
  double uptime_fraction = 0.0;
  std::optional<double> mean_latency_ms;  // over up probes; absent when none answered
  bool operator==(const ServiceUptime&) const = default;
};

struct NodeReliability {
  std::string node_id;
  std::int64_t failure_count = 0;
  double operating_hours = 0.0;
  std::optional<double> mttf_hours;  // absent without failures
  bool operator==(const NodeReliability&) const = default;
};

struct NodeUtilization {
  std::string node_id;
  std::size_t samples = 0;
  Percentiles cpu;
  Percentiles memory;
  bool operator==(const NodeUtilization&) const = default;
};

struct LinkUtilization {
  std::string from;
  std::string to;
  std::size_t samples = 0;
  Percentiles bytes_per_sec;
  bool operator==(const LinkUtilization&) const = default;
};

struct InfrastructureReport {
  std::vector<ServiceUptime> services;
  std::vector<NodeReliability> nodes;
  std::vector<NodeUtilization> utilization;
  std::vector<LinkUtilization> links;
  bool empty() const { return services.empty() && nodes.empty() && utilization.empty() && links.empty(); }
  bool operator==(const InfrastructureReport&) const = default;

  const ServiceUptime* service(std::string_view id) const {
    for (const auto& s : services)
      if (s.service_id == id) return &s;
    return nullptr;
  }
  const NodeReliability* node(std::string_view id) const {
    for (const auto& n : nodes)
      if (n.node_id == id) return &n;
    return nullptr;
  }
};

/// Availability, reliability and utilization statistics over runs. A node
/// counts as operating from run start until its first failure, and again
/// after each recovery, up to the run horizon.
inline InfrastructureReport infrastructure_report(const TrainingDefinition& def, const std::vector<RunSnapshot>& runs) {
  struct ServiceAcc {
    std::int64_t probes = 0, up = 0;
    double latency = 0.0;
  };
  struct NodeAcc {
    std::int64_t failures = 0;
    Millis operating{0};
  };
  std::map<std::string, ServiceAcc> services;
  std::map<std::string, NodeAcc> nodes;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> metrics;
  std::map<std::pair<std::string, std::string>, std::vector<double>> links;

  for (const auto& snap : runs) {
    std::map<std::string, std::optional<Timestamp>> up_since;  // nullopt while down
    auto node_state = [&](const std::string& id) -> std::optional<Timestamp>& {
      auto it = up_since.find(id);
      if (it == up_since.end()) it = up_since.emplace(id, snap.run.start_time).first;
      return it->second;
    };
    for (const auto& e : snap.events) {
      if (const auto* p = e.as<ServiceProbe>()) {
        auto& s = services[p->service_id];
        ++s.probes;
        s.up += p->status == ServiceStatus::Up ? 1 : 0;
        if (p->status == ServiceStatus::Up) s.latency += p->latency_ms;  // a down probe's latency is a placeholder
        if (const auto* svc = def.find_service(p->service_id)) {
          nodes[svc->node_id];
          node_state(svc->node_id);
        }
      } else if (const auto* m = e.as<NodeMetric>()) {
        metrics[m->node_id].first.push_back(m->cpu_percent);
        metrics[m->node_id].second.push_back(m->memory_percent);
        nodes[m->node_id];
        node_state(m->node_id);
      } else if (const auto* f = e.as<NodeFailure>()) {
        auto& st = node_state(f->node_id);
        auto& acc = nodes[f->node_id];
        if (st) {
          acc.operating += std::max(Millis{0}, e.timestamp - *st);
          ++acc.failures;
          st.reset();
        }
      } else if (const auto* r = e.as<NodeRecovery>()) {
        nodes[r->node_id];
        auto& st = node_state(r->node_id);
        if (!st) st = e.timestamp;
      } else if (const auto* l = e.as<LinkThroughput>()) {
        links[{l->from, l->to}].push_back(l->bytes_per_sec);
      }
    }
    const Timestamp horizon = snap.horizon();
    for (const auto& [id, st] : up_since)
      if (st) nodes[id].operating += std::max(Millis{0}, horizon - *st);
  }

  InfrastructureReport out;
  for (const auto& [id, s] : services) {
    ServiceUptime u;
    u.service_id = id;
    u.probes = s.probes;
    u.up_probes = s.up;
    u.uptime_fraction = s.probes > 0 ? static_cast<double>(s.up) / static_cast<double>(s.probes) : 0.0;
    if (s.up > 0) u.mean_latency_ms = s.latency / static_cast<double>(s.up);
    out.services.push_back(u);
  }
  for (const auto& [id, n] : nodes) {
    NodeReliability r;
    r.node_id = id;
    r.failure_count = n.failures;
    r.operating_hours = to_hours(n.operating);
    if (n.failures > 0) r.mttf_hours = r.operating_hours / static_cast<double>(n.failures);
    out.nodes.push_back(r);
  }
  for (const auto& [id, m] : metrics) out.utilization.push_back({id, m.first.size(), percentiles_of(m.first), percentiles_of(m.second)});
  for (const auto& [key, v] : links) out.links.push_back({key.first, key.second, v.size(), percentiles_of(v)});
  return out;
}

inline Json to_json(const Percentiles& p) { return Json{{"p50", p.p50}, {"p95", p.p95}, {"max", p.max}}; }

inline Json to_json(const InfrastructureReport& r) {
  Json services = Json::array(), nodes = Json::array(), util = Json::array(), links = Json::array();
  for (const auto& s : r.services) {
    Json j{{"service_id", s.service_id}, {"probes", s.probes}, {"up_probes", s.up_probes}, {"uptime_fraction", s.uptime_fraction}};
    if (s.mean_latency_ms) j["mean_latency_ms"] = *s.mean_latency_ms;
    services.push_back(j);
  }
  for (const auto& n : r.nodes) {
    Json j{{"node_id", n.node_id}, {"failure_count", n.failure_count}, {"operating_hours", n.operating_hours}};
    if (n.mttf_hours) j["mttf_hours"] = *n.mttf_hours;
    nodes.push_back(j);
  }
  for (const auto& u : r.utilization)
    util.push_back({{"node_id", u.node_id}, {"samples", u.samples}, {"cpu_percent", to_json(u.cpu)}, {"memory_percent", to_json(u.memory)}});
  for (const auto& l : r.links)
    links.push_back({{"link", Json::array({l.from, l.to})}, {"samples", l.samples}, {"bytes_per_sec", to_json(l.bytes_per_sec)}});
  return Json{{"services", services}, {"nodes", nodes}, {"utilization", util}, {"links", links}};
}

}  // namespace rangehall
