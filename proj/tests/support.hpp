#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rangehall/rangehall.hpp"

namespace rh_test {

using namespace rangehall;
using namespace std::chrono_literals;

inline std::filesystem::path fixtures_dir() { return RANGEHALL_FIXTURES; }
inline std::filesystem::path samples_dir() { return RANGEHALL_SAMPLES; }

inline const char* kUnitCtf = R"(
schema_version: 1
id: unit-ctf
title: Unit CTF
kind: CTF
expected_total_duration: 60
max_participants: 10
scenario:
  topology:
    nodes:
      - {id: kali, role: attacker, services: [ssh]}
      - {id: web, role: victim, services: [http]}
    links: [[kali, web]]
  levels:
    - {id: l1, order: 1, title: One, task_text: Find the first flag, flag: F1, max_points: 100, expected_duration: 10,
       skip_penalty: 20, solution_display_penalty: 30}
    - {id: l2, order: 2, title: Two, task_text: Find the second flag, flag: F2, max_points: 50, expected_duration: 5,
       skip_penalty: 10}
    - {id: l3, order: 3, title: Three, task_text: Find the third flag, flag: F3, max_points: 80, expected_duration: 15}
  hints:
    - {id: h1, level_id: l1, text: Look at the ports, penalty_points: 10}
    - {id: h2, level_id: l1, text: Port 80, penalty_points: 5}
    - {id: h3, level_id: l2, text: Check robots.txt, penalty_points: 7}
criteria:
  wrong_flag_penalty: 2
  free_attempts: 1
)";

inline const char* kUnitCdx = R"(
schema_version: 1
id: unit-cdx
title: Unit CDX
kind: CDX
expected_total_duration: 120
max_participants: 10
scenario:
  topology:
    nodes:
      - {id: internet, role: router}
      - {id: red, role: attacker}
      - {id: t1-web, role: server, services: [http], team: team-1}
      - {id: t2-web, role: server, services: [http], team: team-2}
    links: [[red, internet], [t1-web, internet], [t2-web, internet]]
  attack_plan:
    - {id: a1, scheduled_offset: 10, attack_type: sqli, target: t1-web, category: defacement, penalty_points: 100}
    - {id: a2, scheduled_offset: 30, attack_type: ddos, target: t2-web, category: exfiltration, penalty_points: 50}
criteria:
  scored_services:
    - {id: s1, node_id: t1-web, service_name: http, check_interval: 60, award_per_check: 2, penalty_per_failed_check: 3}
    - {id: s2, node_id: t2-web, service_name: http, check_interval: 60, award_per_check: 2, penalty_per_failed_check: 3}
  manual_penalty_categories: [defacement, exfiltration]
  revert_penalty: 50
)";

inline const TrainingDefinition& unit_ctf() {
  static const TrainingDefinition def = parse_definition(kUnitCtf);
  return def;
}

inline const TrainingDefinition& unit_cdx() {
  static const TrainingDefinition def = parse_definition(kUnitCdx);
  return def;
}

inline Timestamp t0() { return parse_timestamp("2026-01-05T09:00:00Z"); }
inline Timestamp at(std::chrono::milliseconds d) { return t0() + d; }

inline Participant trainee(std::string id, std::optional<std::string> team = std::nullopt) {
  return {std::move(id), {Role::Trainee}, std::move(team)};
}

inline TrainingRun make_run(const TrainingDefinition& def, std::vector<Participant> participants, std::string run_id = "r1") {
  TrainingRun run;
  run.run_id = std::move(run_id);
  run.definition_id = def.id;
  run.start_time = t0();
  run.participants = std::move(participants);
  run.metadata = Json::object();
  return run;
}

/// Builds a validated snapshot by appending through a RunLog.
class LogBuilder {
 public:
  LogBuilder(const TrainingDefinition& def, TrainingRun run)
      : log_(std::move(run), std::make_shared<const TrainingDefinition>(def)) {}

  LogBuilder& add(std::chrono::milliseconds offset, std::string actor, Payload p) {
    log_.append({at(offset), std::move(actor), std::move(p)});
    return *this;
  }
  LogBuilder& close(std::chrono::milliseconds offset) {
    log_.close(at(offset));
    return *this;
  }
  RunSnapshot snapshot() const { return log_.snapshot(); }

 private:
  RunLog log_;
};

inline std::vector<std::filesystem::path> corpus_files() {
  std::vector<std::filesystem::path> out;
  for (const auto& dir : {fixtures_dir() / "definitions", samples_dir()})
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const auto ext = e.path().extension();
      if (ext != ".yaml" && ext != ".json") continue;
      const auto name = e.path().filename().string();
      if (name.find("-sim") != std::string::npos) continue;  // simulation configs
      out.push_back(e.path());
    }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rh_test
