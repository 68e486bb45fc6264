#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "rangehall/error.hpp"
#include "rangehall/json_io.hpp"
#include "rangehall/time.hpp"

namespace rangehall {

/// Actor id used for infrastructure observations.
inline constexpr std::string_view kSystemActor = "system";

enum class Role { Trainee, SparringPartner, Supervisor, Operator };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Trainee: return "trainee";
    case Role::SparringPartner: return "sparring_partner";
    case Role::Supervisor: return "supervisor";
    case Role::Operator: return "operator";
  }
  return "trainee";
}

inline std::optional<Role> role_from_string(std::string_view s) {
  for (Role r : {Role::Trainee, Role::SparringPartner, Role::Supervisor, Role::Operator})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct Participant {
  std::string actor_id;
  std::vector<Role> roles;
  std::optional<std::string> team_id;

  bool has_role(Role r) const { return std::find(roles.begin(), roles.end(), r) != roles.end(); }
  bool operator==(const Participant&) const = default;
};

struct TrainingRun {
  std::string run_id;
  std::string definition_id;
  Timestamp start_time{};
  std::optional<Timestamp> end_time;
  std::vector<Participant> participants;
  Json metadata = Json::object();

  const Participant* find(std::string_view actor_id) const {
    for (const auto& p : participants)
      if (p.actor_id == actor_id) return &p;
    return nullptr;
  }
  bool has_team(std::string_view team_id) const {
    return std::any_of(participants.begin(), participants.end(),
                       [&](const Participant& p) { return p.team_id && *p.team_id == team_id; });
  }
  std::vector<std::string> actors_with(Role role) const {
    std::vector<std::string> out;
    for (const auto& p : participants)
      if (p.has_role(role)) out.push_back(p.actor_id);
    return out;
  }
  bool operator==(const TrainingRun&) const = default;
};

// --- D3: user actions -------------------------------------------------------

struct LevelStarted {
  std::string level_id;
  bool operator==(const LevelStarted&) const = default;
};
struct HintTaken {
  std::string level_id;
  std::string hint_id;
  bool operator==(const HintTaken&) const = default;
};
struct FlagSubmitted {
  std::string level_id;
  bool correct = false;
  bool operator==(const FlagSubmitted&) const = default;
};
struct LevelCompleted {
  std::string level_id;
  bool operator==(const LevelCompleted&) const = default;
};
struct LevelSkipped {
  std::string level_id;
  bool operator==(const LevelSkipped&) const = default;
};
struct SolutionDisplayed {
  std::string level_id;
  bool operator==(const SolutionDisplayed&) const = default;
};
struct CommandEntered {
  std::string text;
  bool operator==(const CommandEntered&) const = default;
};
struct MessageSent {
  std::string to_actor_id;
  std::string text;
  bool operator==(const MessageSent&) const = default;
};
struct QuestionnaireAnswered {
  std::string questionnaire_id;
  Json answers;
  bool operator==(const QuestionnaireAnswered&) const = default;
};

// --- D4: infrastructure observations ----------------------------------------

enum class ServiceStatus { Up, Down };

struct ServiceProbe {
  std::string service_id;
  ServiceStatus status = ServiceStatus::Up;
  double latency_ms = 0.0;
  bool operator==(const ServiceProbe&) const = default;
};
struct NodeMetric {
  std::string node_id;
  double cpu_percent = 0.0;
  double memory_percent = 0.0;
  bool operator==(const NodeMetric&) const = default;
};
struct NodeFailure {
  std::string node_id;
  bool operator==(const NodeFailure&) const = default;
};
struct NodeRecovery {
  std::string node_id;
  bool operator==(const NodeRecovery&) const = default;
};
struct LinkThroughput {
  std::string from;
  std::string to;
  double bytes_per_sec = 0.0;
  bool operator==(const LinkThroughput&) const = default;
};

// --- manual assessment -------------------------------------------------------

enum class AttackOutcome { Success, Failure };

inline constexpr std::string_view kRevertCategory = "revert";

struct ManualScoringEvent {
  std::string issued_by;
  std::string subject;   // team id or actor id
  std::string category;  // a manual_penalty_category, or "revert"
  std::int64_t points = 0;
  std::string comment;
  std::optional<std::string> attack_id;
  std::optional<AttackOutcome> attack_outcome;
  bool operator==(const ManualScoringEvent&) const = default;
};

/// Alternative order is the PayloadKind numbering and is part of no file
/// format (payloads are serialized by kind name).
using Payload = std::variant<LevelStarted, HintTaken, FlagSubmitted, LevelCompleted, LevelSkipped, SolutionDisplayed,
                             CommandEntered, MessageSent, QuestionnaireAnswered, ServiceProbe, NodeMetric, NodeFailure,
                             NodeRecovery, LinkThroughput, ManualScoringEvent>;

enum class PayloadKind {
  LevelStarted,
  HintTaken,
  FlagSubmitted,
  LevelCompleted,
  LevelSkipped,
  SolutionDisplayed,
  CommandEntered,
  MessageSent,
  QuestionnaireAnswered,
  ServiceProbe,
  NodeMetric,
  NodeFailure,
  NodeRecovery,
  LinkThroughput,
  ManualScoring,
};

inline constexpr std::string_view kPayloadKindNames[] = {
    "LevelStarted",     "HintTaken",   "FlagSubmitted",  "LevelCompleted", "LevelSkipped",
    "SolutionDisplayed", "CommandEntered", "MessageSent", "QuestionnaireAnswered", "ServiceProbe",
    "NodeMetric",       "NodeFailure", "NodeRecovery",   "LinkThroughput", "ManualScoring"};

static_assert(std::variant_size_v<Payload> == std::size(kPayloadKindNames));

inline PayloadKind kind_of(const Payload& p) { return static_cast<PayloadKind>(p.index()); }
inline std::string_view to_string(PayloadKind k) { return kPayloadKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<PayloadKind> payload_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kPayloadKindNames); ++i)
    if (kPayloadKindNames[i] == s) return static_cast<PayloadKind>(i);
  return std::nullopt;
}

enum class PayloadFamily { UserAction, Infrastructure, ManualScoring };

inline PayloadFamily family_of(PayloadKind k) {
  if (k <= PayloadKind::QuestionnaireAnswered) return PayloadFamily::UserAction;
  if (k == PayloadKind::ManualScoring) return PayloadFamily::ManualScoring;
  return PayloadFamily::Infrastructure;
}

/// Level the payload is about, for the level-scoped user actions.
inline std::optional<std::string> level_of(const Payload& p) {
  return std::visit(
      [](const auto& v) -> std::optional<std::string> {
        if constexpr (requires { v.level_id; }) return v.level_id;
        else return std::nullopt;
      },
      p);
}

struct EventEnvelope {
  std::string run_id;
  std::uint64_t seq = 0;
  Timestamp timestamp{};
  std::string actor_id;
  Payload payload;
  bool clock_skew = false;

  PayloadKind kind() const { return kind_of(payload); }
  template <typename T>
  const T* as() const {
    return std::get_if<T>(&payload);
  }
  bool operator==(const EventEnvelope&) const = default;
};

/// An event before the log has assigned it a sequence number.
struct PendingEvent {
  Timestamp timestamp{};
  std::string actor_id;
  Payload payload;
};

// ---------------------------------------------------------------------------
// JSON codec

inline std::string_view to_string(ServiceStatus s) { return s == ServiceStatus::Up ? "up" : "down"; }
inline std::string_view to_string(AttackOutcome o) { return o == AttackOutcome::Success ? "success" : "failure"; }

inline Json payload_to_json(const Payload& payload) {
  Json j = std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LevelStarted> || std::is_same_v<T, LevelCompleted> ||
                      std::is_same_v<T, LevelSkipped> || std::is_same_v<T, SolutionDisplayed>) {
          return {{"level_id", v.level_id}};
        } else if constexpr (std::is_same_v<T, HintTaken>) {
          return {{"level_id", v.level_id}, {"hint_id", v.hint_id}};
        } else if constexpr (std::is_same_v<T, FlagSubmitted>) {
          return {{"level_id", v.level_id}, {"correct", v.correct}};
        } else if constexpr (std::is_same_v<T, CommandEntered>) {
          return {{"text", v.text}};
        } else if constexpr (std::is_same_v<T, MessageSent>) {
          return {{"to_actor_id", v.to_actor_id}, {"text", v.text}};
        } else if constexpr (std::is_same_v<T, QuestionnaireAnswered>) {
          return {{"questionnaire_id", v.questionnaire_id}, {"answers", v.answers}};
        } else if constexpr (std::is_same_v<T, ServiceProbe>) {
          return {{"service_id", v.service_id}, {"status", to_string(v.status)}, {"latency_ms", v.latency_ms}};
        } else if constexpr (std::is_same_v<T, NodeMetric>) {
          return {{"node_id", v.node_id}, {"cpu_percent", v.cpu_percent}, {"memory_percent", v.memory_percent}};
        } else if constexpr (std::is_same_v<T, NodeFailure> || std::is_same_v<T, NodeRecovery>) {
          return {{"node_id", v.node_id}};
        } else if constexpr (std::is_same_v<T, LinkThroughput>) {
          return {{"link", Json::array({v.from, v.to})}, {"bytes_per_sec", v.bytes_per_sec}};
        } else {
          static_assert(std::is_same_v<T, ManualScoringEvent>);
          return {{"issued_by", v.issued_by},
                  {"subject", v.subject},
                  {"category", v.category},
                  {"points", v.points},
                  {"comment", v.comment},
                  {"attack_id", v.attack_id ? Json(*v.attack_id) : Json(nullptr)},
                  {"attack_outcome", v.attack_outcome ? Json(to_string(*v.attack_outcome)) : Json(nullptr)}};
        }
      },
      payload);
  j["kind"] = to_string(kind_of(payload));
  return j;
}

inline Payload payload_from_json(const Json& value, const std::string& location) {
  ObjectReader r(value, location);
  const std::string kind_name = r.string("kind");
  const auto kind = payload_kind_from_string(kind_name);
  if (!kind) ObjectReader::fail(r.at("kind"), "unknown payload kind '" + kind_name + "'");
  auto percent = [&](const std::string& key) {
    const double v = r.number(key);
    if (v < 0.0 || v > 100.0) ObjectReader::fail(r.at(key), "percentage out of [0,100]");
    return v;
  };
  Payload p;
  switch (*kind) {
    case PayloadKind::LevelStarted: p = LevelStarted{r.string("level_id")}; break;
    case PayloadKind::HintTaken: {
      HintTaken h{r.string("level_id"), r.string("hint_id")};
      p = h;
      break;
    }
    case PayloadKind::FlagSubmitted: {
      FlagSubmitted f{r.string("level_id"), r.boolean("correct")};
      p = f;
      break;
    }
    case PayloadKind::LevelCompleted: p = LevelCompleted{r.string("level_id")}; break;
    case PayloadKind::LevelSkipped: p = LevelSkipped{r.string("level_id")}; break;
    case PayloadKind::SolutionDisplayed: p = SolutionDisplayed{r.string("level_id")}; break;
    case PayloadKind::CommandEntered: p = CommandEntered{r.string("text")}; break;
    case PayloadKind::MessageSent: {
      MessageSent m{r.string("to_actor_id"), r.string_or("text", "")};
      p = m;
      break;
    }
    case PayloadKind::QuestionnaireAnswered: {
      QuestionnaireAnswered q;
      q.questionnaire_id = r.string("questionnaire_id");
      const Json* a = r.optional("answers");
      q.answers = a ? *a : Json(nullptr);
      p = q;
      break;
    }
    case PayloadKind::ServiceProbe: {
      ServiceProbe s;
      s.service_id = r.string("service_id");
      const std::string status = r.string("status");
      if (status != "up" && status != "down") ObjectReader::fail(r.at("status"), "expected 'up' or 'down'");
      s.status = status == "up" ? ServiceStatus::Up : ServiceStatus::Down;
      s.latency_ms = r.number_or("latency_ms", 0.0);
      if (s.latency_ms < 0.0) ObjectReader::fail(r.at("latency_ms"), "latency must be non-negative");
      p = s;
      break;
    }
    case PayloadKind::NodeMetric: {
      NodeMetric m;
      m.node_id = r.string("node_id");
      m.cpu_percent = percent("cpu_percent");
      m.memory_percent = percent("memory_percent");
      p = m;
      break;
    }
    case PayloadKind::NodeFailure: p = NodeFailure{r.string("node_id")}; break;
    case PayloadKind::NodeRecovery: p = NodeRecovery{r.string("node_id")}; break;
    case PayloadKind::LinkThroughput: {
      const Json& link = r.required("link");
      if (!link.is_array() || link.size() != 2) ObjectReader::fail(r.at("link"), "expected a [node_id, node_id] pair");
      LinkThroughput t{ObjectReader::as_string(link[0], r.at("link") + "/0"),
                       ObjectReader::as_string(link[1], r.at("link") + "/1"), r.number("bytes_per_sec")};
      if (t.bytes_per_sec < 0.0) ObjectReader::fail(r.at("bytes_per_sec"), "throughput must be non-negative");
      p = t;
      break;
    }
    case PayloadKind::ManualScoring: {
      ManualScoringEvent m;
      m.issued_by = r.string("issued_by");
      m.subject = r.string("subject");
      m.category = r.string("category");
      m.points = r.integer("points");
      m.comment = r.string_or("comment", "");
      if (r.has("attack_id")) m.attack_id = r.string("attack_id");
      else r.optional("attack_id");
      if (r.has("attack_outcome")) {
        const std::string o = r.string("attack_outcome");
        if (o != "success" && o != "failure") ObjectReader::fail(r.at("attack_outcome"), "expected 'success' or 'failure'");
        m.attack_outcome = o == "success" ? AttackOutcome::Success : AttackOutcome::Failure;
      } else {
        r.optional("attack_outcome");
      }
      if (m.attack_id.has_value() != m.attack_outcome.has_value())
        ObjectReader::fail(location, "attack_outcome must be present exactly when attack_id is");
      p = m;
      break;
    }
  }
  r.finish();
  return p;
}

inline Json envelope_to_json(const EventEnvelope& e) {
  return Json{{"type", "event"},
              {"run_id", e.run_id},
              {"seq", e.seq},
              {"timestamp", format_timestamp(e.timestamp)},
              {"actor_id", e.actor_id},
              {"payload", payload_to_json(e.payload)},
              {"clock_skew", e.clock_skew}};
}

inline EventEnvelope envelope_from_json(const Json& value, const std::string& location = "") {
  ObjectReader r(value, location);
  if (const Json* t = r.optional("type"); t && *t != "event") ObjectReader::fail(r.at("type"), "expected type 'event'");
  EventEnvelope e;
  e.run_id = r.string("run_id");
  const std::int64_t seq = r.integer("seq");
  if (seq <= 0) ObjectReader::fail(r.at("seq"), "seq must be positive");
  e.seq = static_cast<std::uint64_t>(seq);
  e.timestamp = r.timestamp("timestamp");
  e.actor_id = r.string("actor_id");
  e.payload = payload_from_json(r.required("payload"), r.at("payload"));
  e.clock_skew = r.boolean_or("clock_skew", false);
  r.finish();
  return e;
}

/// Ingest form: no seq, no run id (both are assigned by the log).
inline PendingEvent pending_from_json(const Json& value, const std::string& location = "") {
  ObjectReader r(value, location);
  PendingEvent e;
  e.timestamp = r.timestamp("timestamp");
  e.actor_id = r.string("actor_id");
  e.payload = payload_from_json(r.required("payload"), r.at("payload"));
  r.finish();
  return e;
}

inline Json pending_to_json(const PendingEvent& e) {
  return Json{{"timestamp", format_timestamp(e.timestamp)}, {"actor_id", e.actor_id}, {"payload", payload_to_json(e.payload)}};
}

inline Json participant_to_json(const Participant& p) {
  Json roles = Json::array();
  for (Role r : p.roles) roles.push_back(to_string(r));
  return Json{{"actor_id", p.actor_id}, {"roles", roles}, {"team_id", p.team_id ? Json(*p.team_id) : Json(nullptr)}};
}

inline Participant participant_from_json(const Json& value, const std::string& location) {
  ObjectReader r(value, location);
  Participant p;
  p.actor_id = r.string("actor_id");
  auto add_role = [&](const std::string& name, const std::string& loc) {
    auto role = role_from_string(name);
    if (!role) ObjectReader::fail(loc, "unknown role '" + name + "'");
    if (!p.has_role(*role)) p.roles.push_back(*role);
  };
  if (r.has("role")) add_role(r.string("role"), r.at("role"));
  else r.optional("role");
  r.each("roles", [&](const Json& v, const std::string& loc) { add_role(ObjectReader::as_string(v, loc), loc); });
  if (p.roles.empty()) ObjectReader::fail(location, "participant needs at least one role");
  if (r.has("team_id")) p.team_id = r.string("team_id");
  else r.optional("team_id");
  r.finish();
  return p;
}

inline Json run_header_to_json(const TrainingRun& run) {
  Json parts = Json::array();
  for (const auto& p : run.participants) parts.push_back(participant_to_json(p));
  return Json{{"type", "run_header"},
              {"run_id", run.run_id},
              {"definition_id", run.definition_id},
              {"start_time", format_timestamp(run.start_time)},
              {"end_time", run.end_time ? Json(format_timestamp(*run.end_time)) : Json(nullptr)},
              {"participants", parts},
              {"metadata", run.metadata}};
}

inline TrainingRun run_header_from_json(const Json& value, const std::string& location = "") {
  ObjectReader r(value, location);
  if (const Json* t = r.optional("type"); t && *t != "run_header")
    ObjectReader::fail(r.at("type"), "expected type 'run_header'");
  TrainingRun run;
  run.run_id = r.string("run_id");
  run.definition_id = r.string("definition_id");
  run.start_time = r.timestamp("start_time");
  if (r.has("end_time")) run.end_time = r.timestamp("end_time");
  else r.optional("end_time");
  r.each("participants", [&](const Json& v, const std::string& loc) { run.participants.push_back(participant_from_json(v, loc)); });
  if (const Json* m = r.optional("metadata")) run.metadata = *m;
  r.finish();
  return run;
}

}  // namespace rangehall
