#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rangehall/error.hpp"
#include "rangehall/json_io.hpp"

namespace rangehall {

inline constexpr std::int64_t kSchemaVersion = 1;

enum class TrainingKind { CTF, CDX };
enum class NodeRole { Attacker, Victim, Server, Workstation, Router };

inline std::string_view to_string(TrainingKind k) { return k == TrainingKind::CTF ? "CTF" : "CDX"; }

inline std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::Attacker: return "attacker";
    case NodeRole::Victim: return "victim";
    case NodeRole::Server: return "server";
    case NodeRole::Workstation: return "workstation";
    case NodeRole::Router: return "router";
  }
  return "server";
}

struct Node {
  std::string id;
  NodeRole role = NodeRole::Server;
  std::vector<std::string> services;
  std::optional<std::string> team;  // owning blue team in a CDX

  bool hosts(std::string_view service) const {
    return std::find(services.begin(), services.end(), service) != services.end();
  }
  bool operator==(const Node&) const = default;
};

struct Link {
  std::string from;
  std::string to;
  bool operator==(const Link&) const = default;
};

struct NetworkTopology {
  std::vector<Node> nodes;
  std::vector<Link> links;

  const Node* find_node(std::string_view id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }

  /// Distinct team ids in first-appearance order.
  std::vector<std::string> teams() const {
    std::vector<std::string> out;
    for (const auto& n : nodes)
      if (n.team && std::find(out.begin(), out.end(), *n.team) == out.end()) out.push_back(*n.team);
    return out;
  }
  bool operator==(const NetworkTopology&) const = default;
};

struct Hint {
  std::string id;
  std::string text;
  std::int64_t penalty_points = 0;
  bool operator==(const Hint&) const = default;
};

struct Level {
  std::string id;
  std::int64_t order = 1;
  std::string title;
  std::string task_text;
  std::string flag;
  std::int64_t max_points = 0;
  std::vector<Hint> hints;
  std::chrono::minutes expected_duration{0};
  std::string solution_text;
  std::int64_t skip_penalty = 0;
  std::int64_t solution_display_penalty = 0;

  const Hint* find_hint(std::string_view hint_id) const {
    for (const auto& h : hints)
      if (h.id == hint_id) return &h;
    return nullptr;
  }
  std::int64_t total_hint_penalty() const {
    std::int64_t sum = 0;
    for (const auto& h : hints) sum += h.penalty_points;
    return sum;
  }
  bool operator==(const Level&) const = default;
};

struct AttackPlanEntry {
  std::string id;
  std::chrono::minutes scheduled_offset{0};
  std::string attack_type;
  std::string target;
  std::string category;
  std::int64_t penalty_points = 0;
  std::string details;
  bool operator==(const AttackPlanEntry&) const = default;
};

struct Vulnerability {
  std::string node_id;
  std::string label;
  bool operator==(const Vulnerability&) const = default;
};

/// D1: what the range looks like and what happens in it.
struct TechnicalScenario {
  NetworkTopology topology;
  std::vector<Level> levels;
  std::vector<AttackPlanEntry> attack_plan;
  std::vector<Vulnerability> vulnerabilities;
  bool operator==(const TechnicalScenario&) const = default;
};

struct ScoredService {
  std::string id;
  std::string node_id;
  std::string service_name;
  std::chrono::seconds check_interval{0};
  std::int64_t award_per_check = 0;
  std::int64_t penalty_per_failed_check = 0;
  std::vector<std::string> depends_on;  // stored, not scored
  bool operator==(const ScoredService&) const = default;
};

/// D2: how trainees are assessed.
struct AssessmentCriteria {
  std::vector<ScoredService> scored_services;
  std::vector<std::string> manual_penalty_categories;
  std::int64_t revert_penalty = 0;
  std::int64_t wrong_flag_penalty = 0;
  std::optional<std::int64_t> free_attempts;  // nullopt = unlimited
  Json questionnaires = Json::array();

  bool has_category(std::string_view name) const {
    return std::find(manual_penalty_categories.begin(), manual_penalty_categories.end(), name) !=
           manual_penalty_categories.end();
  }
  bool operator==(const AssessmentCriteria&) const = default;
};

struct TrainingDefinition {
  std::int64_t schema_version = kSchemaVersion;
  std::string id;
  std::string title;
  TrainingKind kind = TrainingKind::CTF;
  TechnicalScenario scenario;
  AssessmentCriteria criteria;
  std::vector<std::string> prerequisites;
  std::chrono::minutes expected_total_duration{0};
  std::int64_t max_participants = 1;

  const Level* find_level(std::string_view level_id) const {
    for (const auto& l : scenario.levels)
      if (l.id == level_id) return &l;
    return nullptr;
  }
  const ScoredService* find_service(std::string_view service_id) const {
    for (const auto& s : criteria.scored_services)
      if (s.id == service_id) return &s;
    return nullptr;
  }
  const AttackPlanEntry* find_attack(std::string_view attack_id) const {
    for (const auto& a : scenario.attack_plan)
      if (a.id == attack_id) return &a;
    return nullptr;
  }
  /// Team owning a node, or the node id itself when the node has no team.
  std::string team_of_node(std::string_view node_id) const {
    const Node* n = scenario.topology.find_node(node_id);
    if (n && n->team) return *n->team;
    return std::string(node_id);
  }
  bool operator==(const TrainingDefinition&) const = default;
};

// ---------------------------------------------------------------------------
// Decoding

namespace detail {

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& text, const std::pair<std::string_view, Enum> (&table)[N],
               const std::string& location) {
  for (const auto& [name, value] : table)
    if (name == text) return value;
  ObjectReader::fail(location, "unknown value '" + text + "'");
}

inline constexpr std::pair<std::string_view, TrainingKind> kKindNames[] = {{"CTF", TrainingKind::CTF},
                                                                           {"CDX", TrainingKind::CDX}};
inline constexpr std::pair<std::string_view, NodeRole> kNodeRoleNames[] = {
    {"attacker", NodeRole::Attacker}, {"victim", NodeRole::Victim},       {"server", NodeRole::Server},
    {"workstation", NodeRole::Workstation}, {"router", NodeRole::Router}};

class DefinitionDecoder {
 public:
  TrainingDefinition decode(const Json& root) {
    TrainingDefinition def;
    ObjectReader r(root, "");
    def.schema_version = r.integer("schema_version");
    if (def.schema_version != kSchemaVersion)
      ObjectReader::fail(r.at("schema_version"), "unsupported schema version " + std::to_string(def.schema_version));
    def.id = r.string("id");
    def.title = r.string_or("title", "");
    def.kind = enum_from(r.string("kind"), kKindNames, r.at("kind"));
    def.prerequisites = r.strings_or_empty("prerequisites");
    def.expected_total_duration = std::chrono::minutes{r.integer("expected_total_duration")};
    def.max_participants = r.integer("max_participants");
    def.scenario = scenario(r.required("scenario"), r.at("scenario"));
    def.criteria = criteria(r.required("criteria"), r.at("criteria"));
    r.finish();
    resolve(def);
    return def;
  }

 private:
  struct PendingHint {
    Hint hint;
    std::string level_id;
    std::string location;
  };

  TechnicalScenario scenario(const Json& value, const std::string& location) {
    TechnicalScenario s;
    ObjectReader r(value, location);
    {
      ObjectReader t(r.required("topology"), r.at("topology"));
      t.each("nodes", [&](const Json& v, const std::string& loc) {
        ObjectReader n(v, loc);
        Node node;
        node.id = n.string("id");
        node.role = enum_from(n.string("role"), kNodeRoleNames, n.at("role"));
        node.services = n.strings_or_empty("services");
        if (n.has("team")) node.team = n.string("team");
        else n.optional("team");
        n.finish();
        s.topology.nodes.push_back(std::move(node));
      });
      t.each("links", [&](const Json& v, const std::string& loc) {
        if (!v.is_array() || v.size() != 2) ObjectReader::fail(loc, "expected a [node_id, node_id] pair");
        Link link{ObjectReader::as_string(v[0], loc + "/0"), ObjectReader::as_string(v[1], loc + "/1")};
        link_locations_.push_back(loc);
        s.topology.links.push_back(std::move(link));
      });
      t.finish();
    }
    r.each("levels", [&](const Json& v, const std::string& loc) {
      ObjectReader l(v, loc);
      Level level;
      level.id = l.string("id");
      level.order = l.integer("order");
      level.title = l.string_or("title", "");
      level.task_text = l.string_or("task_text", "");
      level.flag = l.string("flag");
      level.max_points = l.integer("max_points");
      level.expected_duration = std::chrono::minutes{l.integer("expected_duration")};
      level.solution_text = l.string_or("solution_text", "");
      level.skip_penalty = l.integer_or("skip_penalty", 0);
      level.solution_display_penalty = l.integer_or("solution_display_penalty", 0);
      l.finish();
      s.levels.push_back(std::move(level));
    });
    r.each("hints", [&](const Json& v, const std::string& loc) {
      ObjectReader h(v, loc);
      PendingHint p;
      p.hint.id = h.string("id");
      p.level_id = h.string("level_id");
      p.hint.text = h.string_or("text", "");
      p.hint.penalty_points = h.integer("penalty_points");
      p.location = loc;
      h.finish();
      hints_.push_back(std::move(p));
    });
    r.each("attack_plan", [&](const Json& v, const std::string& loc) {
      ObjectReader a(v, loc);
      AttackPlanEntry e;
      e.id = a.string("id");
      e.scheduled_offset = std::chrono::minutes{a.integer("scheduled_offset")};
      e.attack_type = a.string("attack_type");
      e.target = a.string("target");
      e.category = a.string("category");
      e.penalty_points = a.integer("penalty_points");
      e.details = a.string_or("details", "");
      a.finish();
      attack_locations_.push_back(loc);
      s.attack_plan.push_back(std::move(e));
    });
    r.each("vulnerabilities", [&](const Json& v, const std::string& loc) {
      ObjectReader a(v, loc);
      Vulnerability vul{a.string("node_id"), a.string("label")};
      a.finish();
      vulnerability_locations_.push_back(loc);
      s.vulnerabilities.push_back(std::move(vul));
    });
    r.finish();
    return s;
  }

  AssessmentCriteria criteria(const Json& value, const std::string& location) {
    AssessmentCriteria c;
    ObjectReader r(value, location);
    r.each("scored_services", [&](const Json& v, const std::string& loc) {
      ObjectReader s(v, loc);
      ScoredService svc;
      svc.id = s.string("id");
      svc.node_id = s.string("node_id");
      svc.service_name = s.string("service_name");
      svc.check_interval = std::chrono::seconds{s.integer("check_interval")};
      svc.award_per_check = s.integer_or("award_per_check", 0);
      svc.penalty_per_failed_check = s.integer_or("penalty_per_failed_check", 0);
      svc.depends_on = s.strings_or_empty("depends_on");
      s.finish();
      service_locations_.push_back(loc);
      c.scored_services.push_back(std::move(svc));
    });
    c.manual_penalty_categories = r.strings_or_empty("manual_penalty_categories");
    c.revert_penalty = r.integer_or("revert_penalty", 0);
    c.wrong_flag_penalty = r.integer_or("wrong_flag_penalty", 0);
    c.free_attempts = r.maybe_integer("free_attempts");
    if (const Json* q = r.optional("questionnaires")) {
      if (!q->is_array()) ObjectReader::fail(r.at("questionnaires"), "expected an array");
      c.questionnaires = *q;
    }
    r.finish();
    return c;
  }

  // Second pass: attach hints to levels and collect every unresolved id.
  void resolve(TrainingDefinition& def) {
    std::vector<DanglingReference> dangling;
    const auto& topo = def.scenario.topology;
    auto need_node = [&](const std::string& id, const std::string& loc) {
      if (!topo.find_node(id)) dangling.push_back({id, loc, "node"});
    };
    for (std::size_t i = 0; i < topo.links.size(); ++i) {
      need_node(topo.links[i].from, link_locations_[i] + "/0");
      need_node(topo.links[i].to, link_locations_[i] + "/1");
    }
    for (auto& p : hints_) {
      auto it = std::find_if(def.scenario.levels.begin(), def.scenario.levels.end(),
                             [&](const Level& l) { return l.id == p.level_id; });
      if (it == def.scenario.levels.end()) {
        dangling.push_back({p.level_id, p.location + "/level_id", "level"});
        continue;
      }
      it->hints.push_back(std::move(p.hint));
    }
    for (std::size_t i = 0; i < def.scenario.attack_plan.size(); ++i) {
      const auto& a = def.scenario.attack_plan[i];
      need_node(a.target, attack_locations_[i] + "/target");
      if (!def.criteria.has_category(a.category))
        dangling.push_back({a.category, attack_locations_[i] + "/category", "manual penalty category"});
    }
    for (std::size_t i = 0; i < def.scenario.vulnerabilities.size(); ++i)
      need_node(def.scenario.vulnerabilities[i].node_id, vulnerability_locations_[i] + "/node_id");
    for (std::size_t i = 0; i < def.criteria.scored_services.size(); ++i) {
      const auto& s = def.criteria.scored_services[i];
      const Node* node = topo.find_node(s.node_id);
      if (!node) {
        dangling.push_back({s.node_id, service_locations_[i] + "/node_id", "node"});
      } else if (!node->hosts(s.service_name)) {
        dangling.push_back({s.service_name, service_locations_[i] + "/service_name", "service on node " + s.node_id});
      }
      for (std::size_t d = 0; d < s.depends_on.size(); ++d)
        if (!def.find_service(s.depends_on[d]))
          dangling.push_back(
              {s.depends_on[d], service_locations_[i] + "/depends_on/" + std::to_string(d), "scored service"});
    }
    if (!dangling.empty()) throw ReferenceError(std::move(dangling));
  }

  std::vector<PendingHint> hints_;
  std::vector<std::string> link_locations_;
  std::vector<std::string> attack_locations_;
  std::vector<std::string> vulnerability_locations_;
  std::vector<std::string> service_locations_;
};

}  // namespace detail

/// Builds a definition from its generic tree (JSON or converted YAML).
inline TrainingDefinition definition_from_json(const Json& root) { return detail::DefinitionDecoder{}.decode(root); }

/// Parses either the JSON interchange form or the YAML authoring form.
inline TrainingDefinition parse_definition(std::string_view document) {
  return definition_from_json(parse_document(document));
}

inline TrainingDefinition load_definition(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_definition(ss.str());
}

// ---------------------------------------------------------------------------
// Canonical encoding

inline Json definition_to_json(const TrainingDefinition& def) {
  Json nodes = Json::array();
  for (const auto& n : def.scenario.topology.nodes) {
    nodes.push_back({{"id", n.id},
                     {"role", to_string(n.role)},
                     {"services", n.services},
                     {"team", n.team ? Json(*n.team) : Json(nullptr)}});
  }
  Json links = Json::array();
  for (const auto& l : def.scenario.topology.links) links.push_back(Json::array({l.from, l.to}));

  Json levels = Json::array();
  Json hints = Json::array();
  for (const auto& l : def.scenario.levels) {
    levels.push_back({{"id", l.id},
                      {"order", l.order},
                      {"title", l.title},
                      {"task_text", l.task_text},
                      {"flag", l.flag},
                      {"max_points", l.max_points},
                      {"expected_duration", l.expected_duration.count()},
                      {"solution_text", l.solution_text},
                      {"skip_penalty", l.skip_penalty},
                      {"solution_display_penalty", l.solution_display_penalty}});
    for (const auto& h : l.hints)
      hints.push_back({{"id", h.id}, {"level_id", l.id}, {"text", h.text}, {"penalty_points", h.penalty_points}});
  }
  Json attacks = Json::array();
  for (const auto& a : def.scenario.attack_plan) {
    attacks.push_back({{"id", a.id},
                       {"scheduled_offset", a.scheduled_offset.count()},
                       {"attack_type", a.attack_type},
                       {"target", a.target},
                       {"category", a.category},
                       {"penalty_points", a.penalty_points},
                       {"details", a.details}});
  }
  Json vulns = Json::array();
  for (const auto& v : def.scenario.vulnerabilities) vulns.push_back({{"node_id", v.node_id}, {"label", v.label}});

  Json services = Json::array();
  for (const auto& s : def.criteria.scored_services) {
    services.push_back({{"id", s.id},
                        {"node_id", s.node_id},
                        {"service_name", s.service_name},
                        {"check_interval", s.check_interval.count()},
                        {"award_per_check", s.award_per_check},
                        {"penalty_per_failed_check", s.penalty_per_failed_check},
                        {"depends_on", s.depends_on}});
  }

  return Json{
      {"schema_version", def.schema_version},
      {"id", def.id},
      {"title", def.title},
      {"kind", to_string(def.kind)},
      {"prerequisites", def.prerequisites},
      {"expected_total_duration", def.expected_total_duration.count()},
      {"max_participants", def.max_participants},
      {"scenario",
       {{"topology", {{"nodes", nodes}, {"links", links}}},
        {"levels", levels},
        {"hints", hints},
        {"attack_plan", attacks},
        {"vulnerabilities", vulns}}},
      {"criteria",
       {{"scored_services", services},
        {"manual_penalty_categories", def.criteria.manual_penalty_categories},
        {"revert_penalty", def.criteria.revert_penalty},
        {"wrong_flag_penalty", def.criteria.wrong_flag_penalty},
        {"free_attempts", def.criteria.free_attempts ? Json(*def.criteria.free_attempts) : Json(nullptr)},
        {"questionnaires", def.criteria.questionnaires}}},
  };
}

/// Bit-exact canonical text: sorted keys, every field present.
inline std::string serialize_definition(const TrainingDefinition& def) { return canonical_dump(definition_to_json(def)); }

inline std::string canonicalize_document(std::string_view document) {
  return serialize_definition(parse_definition(document));
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { Error, Warning };

inline std::string_view to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

struct Finding {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  std::string location;
  bool operator==(const Finding&) const = default;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool has_errors() const {
    return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Error; });
  }
  std::size_t error_count() const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Error; }));
  }
  bool contains(std::string_view code) const {
    return std::any_of(findings.begin(), findings.end(), [&](const Finding& f) { return f.code == code; });
  }
};

inline Json to_json(const ValidationReport& report) {
  Json arr = Json::array();
  for (const auto& f : report.findings)
    arr.push_back({{"severity", to_string(f.severity)}, {"code", f.code}, {"message", f.message}, {"location", f.location}});
  return Json{{"findings", arr}, {"errors", report.error_count()}};
}

/// Statically checkable consistency of a definition. Never throws; the
/// findings are sorted by location, then code.
inline ValidationReport validate_definition(const TrainingDefinition& def) {
  std::vector<Finding> out;
  auto error = [&](std::string code, std::string location, std::string message) {
    out.push_back({Severity::Error, std::move(code), std::move(message), std::move(location)});
  };
  auto warning = [&](std::string code, std::string location, std::string message) {
    out.push_back({Severity::Warning, std::move(code), std::move(message), std::move(location)});
  };
  auto non_negative = [&](std::int64_t v, const std::string& loc) {
    if (v < 0) error("NEGATIVE_VALUE", loc, "value must be non-negative, got " + std::to_string(v));
  };
  auto index_loc = [](const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); };

  const auto& sc = def.scenario;
  const auto& topo = sc.topology;
  const auto& crit = def.criteria;

  if (def.schema_version != kSchemaVersion) error("SCHEMA_VERSION", "/schema_version", "unsupported schema version");
  if (def.id.empty()) error("EMPTY_ID", "/id", "definition id is empty");
  if (def.expected_total_duration.count() <= 0)
    error("NONPOSITIVE_DURATION", "/expected_total_duration", "expected_total_duration must be positive");
  if (def.max_participants <= 0) error("NONPOSITIVE_PARTICIPANTS", "/max_participants", "max_participants must be positive");

  if (def.kind == TrainingKind::CTF) {
    if (sc.levels.empty()) error("CTF_WITHOUT_LEVELS", "/scenario/levels", "a CTF definition needs at least one level");
    if (!sc.attack_plan.empty())
      error("CTF_WITH_ATTACK_PLAN", "/scenario/attack_plan", "a CTF definition must not declare an attack plan");
  } else {
    if (sc.attack_plan.empty())
      error("CDX_WITHOUT_ATTACK_PLAN", "/scenario/attack_plan", "a CDX definition needs a non-empty attack plan");
  }

  // Topology.
  std::set<std::string> node_ids;
  for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
    if (!node_ids.insert(topo.nodes[i].id).second)
      error("DUPLICATE_ID", index_loc("/scenario/topology/nodes", i) + "/id", "duplicate node id '" + topo.nodes[i].id + "'");
  }
  for (std::size_t i = 0; i < topo.links.size(); ++i) {
    const auto& l = topo.links[i];
    const std::string loc = index_loc("/scenario/topology/links", i);
    if (l.from == l.to) error("SELF_LOOP", loc, "link connects node '" + l.from + "' to itself");
    if (!node_ids.count(l.from)) error("DANGLING_REFERENCE", loc + "/0", "unknown node '" + l.from + "'");
    if (!node_ids.count(l.to)) error("DANGLING_REFERENCE", loc + "/1", "unknown node '" + l.to + "'");
  }

  // Levels.
  std::set<std::string> level_ids;
  std::map<std::string, std::size_t> flag_owner;
  std::vector<std::int64_t> orders;
  for (std::size_t i = 0; i < sc.levels.size(); ++i) {
    const auto& l = sc.levels[i];
    const std::string loc = index_loc("/scenario/levels", i);
    if (!level_ids.insert(l.id).second) error("DUPLICATE_ID", loc + "/id", "duplicate level id '" + l.id + "'");
    orders.push_back(l.order);
    if (l.flag.empty()) {
      error("EMPTY_FLAG", loc + "/flag", "level '" + l.id + "' has an empty flag");
    } else if (auto [it, inserted] = flag_owner.emplace(l.flag, i); !inserted) {
      error("DUPLICATE_FLAG", loc + "/flag",
            "level '" + l.id + "' reuses the flag of level '" + sc.levels[it->second].id + "'");
    }
    non_negative(l.max_points, loc + "/max_points");
    non_negative(l.skip_penalty, loc + "/skip_penalty");
    non_negative(l.solution_display_penalty, loc + "/solution_display_penalty");
    if (l.expected_duration.count() <= 0) {
      error("NONPOSITIVE_DURATION", loc + "/expected_duration", "level '" + l.id + "' needs a positive expected_duration");
    } else if (def.expected_total_duration.count() > 0 && l.expected_duration > def.expected_total_duration) {
      warning("LEVEL_LONGER_THAN_TRAINING", loc + "/expected_duration",
              "level '" + l.id + "' is expected to take longer than the whole training");
    }
    std::set<std::string> hint_ids;
    for (std::size_t h = 0; h < l.hints.size(); ++h) {
      const auto& hint = l.hints[h];
      if (!hint_ids.insert(hint.id).second)
        error("DUPLICATE_ID", loc + "/hints/" + std::to_string(h), "duplicate hint id '" + hint.id + "'");
      non_negative(hint.penalty_points, loc + "/hints/" + std::to_string(h) + "/penalty_points");
    }
    if (l.total_hint_penalty() > l.max_points)
      error("HINT_PENALTY_EXCEEDS_POINTS", loc,
            "hint penalties of level '" + l.id + "' (" + std::to_string(l.total_hint_penalty()) + ") exceed max_points (" +
                std::to_string(l.max_points) + ")");
  }
  {
    std::vector<std::int64_t> sorted = orders;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] != static_cast<std::int64_t>(i + 1)) {
        error("LEVEL_ORDER_GAP", "/scenario/levels", "level order values must form the sequence 1.." + std::to_string(sorted.size()));
        break;
      }
    }
  }

  // Attack plan.
  std::set<std::string> attack_ids;
  for (std::size_t i = 0; i < sc.attack_plan.size(); ++i) {
    const auto& a = sc.attack_plan[i];
    const std::string loc = index_loc("/scenario/attack_plan", i);
    if (!attack_ids.insert(a.id).second) error("DUPLICATE_ID", loc + "/id", "duplicate attack id '" + a.id + "'");
    if (a.scheduled_offset.count() < 0 || a.scheduled_offset >= def.expected_total_duration)
      error("OFFSET_OUT_OF_RANGE", loc + "/scheduled_offset",
            "attack '" + a.id + "' is scheduled at " + std::to_string(a.scheduled_offset.count()) +
                " min, outside the " + std::to_string(def.expected_total_duration.count()) + " min training");
    if (!node_ids.count(a.target)) error("DANGLING_REFERENCE", loc + "/target", "unknown node '" + a.target + "'");
    if (!crit.has_category(a.category))
      error("DANGLING_REFERENCE", loc + "/category", "unknown manual penalty category '" + a.category + "'");
    non_negative(a.penalty_points, loc + "/penalty_points");
  }
  for (std::size_t i = 0; i < sc.vulnerabilities.size(); ++i)
    if (!node_ids.count(sc.vulnerabilities[i].node_id))
      error("DANGLING_REFERENCE", index_loc("/scenario/vulnerabilities", i) + "/node_id",
            "unknown node '" + sc.vulnerabilities[i].node_id + "'");

  // Criteria.
  std::set<std::string> categories;
  for (std::size_t i = 0; i < crit.manual_penalty_categories.size(); ++i) {
    const auto& c = crit.manual_penalty_categories[i];
    if (!categories.insert(c).second)
      error("DUPLICATE_CATEGORY", index_loc("/criteria/manual_penalty_categories", i), "duplicate category '" + c + "'");
    if (c == "revert")
      error("RESERVED_CATEGORY", index_loc("/criteria/manual_penalty_categories", i), "'revert' is a built-in category");
  }
  std::set<std::string> service_ids;
  for (std::size_t i = 0; i < crit.scored_services.size(); ++i) {
    const auto& s = crit.scored_services[i];
    const std::string loc = index_loc("/criteria/scored_services", i);
    if (!service_ids.insert(s.id).second) error("DUPLICATE_ID", loc + "/id", "duplicate service id '" + s.id + "'");
    if (s.check_interval.count() <= 0)
      error("NONPOSITIVE_INTERVAL", loc + "/check_interval", "service '" + s.id + "' needs a positive check_interval");
    non_negative(s.award_per_check, loc + "/award_per_check");
    non_negative(s.penalty_per_failed_check, loc + "/penalty_per_failed_check");
    if (s.award_per_check == 0 && s.penalty_per_failed_check == 0)
      error("UNSCORED_SERVICE", loc, "service '" + s.id + "' neither awards nor penalizes");
    const Node* node = topo.find_node(s.node_id);
    if (!node) {
      error("DANGLING_REFERENCE", loc + "/node_id", "unknown node '" + s.node_id + "'");
    } else {
      if (!node->hosts(s.service_name))
        error("DANGLING_REFERENCE", loc + "/service_name", "node '" + s.node_id + "' does not host '" + s.service_name + "'");
      if (def.kind == TrainingKind::CDX && !node->team)
        error("SERVICE_WITHOUT_TEAM", loc + "/node_id", "node '" + s.node_id + "' of a scored service belongs to no team");
    }
  }
  for (std::size_t i = 0; i < crit.scored_services.size(); ++i) {
    const auto& deps = crit.scored_services[i].depends_on;
    for (std::size_t d = 0; d < deps.size(); ++d)
      if (!service_ids.count(deps[d]))
        error("DANGLING_REFERENCE", index_loc("/criteria/scored_services", i) + "/depends_on/" + std::to_string(d),
              "unknown service '" + deps[d] + "'");
  }
  non_negative(crit.revert_penalty, "/criteria/revert_penalty");
  non_negative(crit.wrong_flag_penalty, "/criteria/wrong_flag_penalty");
  if (crit.free_attempts) non_negative(*crit.free_attempts, "/criteria/free_attempts");

  std::sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.location, a.code, a.message) < std::tie(b.location, b.code, b.message);
  });
  return ValidationReport{std::move(out)};
}

/// Upper bound on the score a subject can reach: all levels without any
/// penalty (CTF) or every service check passing for the whole training (CDX).
inline std::int64_t max_achievable_score(const TrainingDefinition& def) {
  const auto report = validate_definition(def);
  if (report.has_errors())
    throw Error(ErrorCode::InvalidDefinition,
                "definition '" + def.id + "' has " + std::to_string(report.error_count()) + " validation error(s)");
  std::int64_t total = 0;
  if (def.kind == TrainingKind::CTF) {
    for (const auto& l : def.scenario.levels) total += l.max_points;
  } else {
    const auto duration = std::chrono::duration_cast<std::chrono::seconds>(def.expected_total_duration);
    for (const auto& s : def.criteria.scored_services) total += s.award_per_check * (duration / s.check_interval);
  }
  return total;
}

}  // namespace rangehall
