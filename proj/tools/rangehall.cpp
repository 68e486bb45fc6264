// rangehall command line: validate, simulate, score, analyze, serve.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rangehall/rangehall.hpp"
#include "rangehall/server.hpp"

namespace rh = rangehall;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rh::Error(rh::ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rh::Error(rh::ErrorCode::Io, "cannot write " + path);
  out << text;
}

/// Loads a definition and refuses it when validation reports errors.
rh::TrainingDefinition load_valid_definition(const std::string& path) {
  auto def = rh::load_definition(path);
  const auto report = rh::validate_definition(def);
  if (report.has_errors()) {
    for (const auto& f : report.findings)
      if (f.severity == rh::Severity::Error) std::cerr << path << ": " << f.location << ": " << f.code << ": " << f.message << "\n";
    throw rh::Error(rh::ErrorCode::InvalidDefinition, path + " has validation errors");
  }
  return def;
}

std::vector<rh::RunSnapshot> load_logs(const std::vector<std::string>& paths) {
  std::vector<rh::RunSnapshot> out;
  for (const auto& p : paths) out.push_back(rh::load_run_log(p));
  return out;
}

std::string opt_fixed(const std::optional<double>& v, int digits = 2) { return v ? rh::fixed(*v, digits) : "-"; }

int exit_code_for(const rh::Error& e) {
  switch (e.code()) {
    case rh::ErrorCode::Io:
    case rh::ErrorCode::InvalidArgument: return kExitUsage;
    default: return kExitInvalid;
  }
}

void print_error(const rh::Error& e) {
  std::cerr << "rangehall: " << rh::error_code_name(e.code()) << ": " << e.what() << "\n";
  if (const auto* r = dynamic_cast<const rh::ReferenceError*>(&e))
    for (const auto& d : r->dangling()) std::cerr << "  " << d.location << ": unknown " << d.target << " '" << d.id << "'\n";
}

rh::Gateway* g_gateway = nullptr;

void on_signal(int) {
  if (g_gateway) g_gateway->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyber-range training analytics: definitions, runs, scores and reports"};
  app.require_subcommand(1);
  std::function<int()> action;

  // validate ------------------------------------------------------------------
  auto* validate = app.add_subcommand("validate", "Parse and check a training definition");
  std::string v_def, v_canonical;
  bool v_json = false;
  validate->add_option("definition", v_def, "Definition file (YAML or JSON)")->required();
  validate->add_option("--canonical", v_canonical, "Write the canonical JSON form to this file ('-' for stdout)");
  validate->add_flag("--json", v_json, "Print the validation report as JSON");
  validate->callback([&] {
    action = [&] {
      const auto def = rh::load_definition(v_def);
      const auto report = rh::validate_definition(def);
      if (v_json) {
        std::cout << rh::canonical_dump(rh::to_json(report));
      } else if (report.findings.empty()) {
        std::cout << v_def << ": ok (" << rh::to_string(def.kind) << ", " << def.scenario.levels.size() << " levels, "
                  << def.criteria.scored_services.size() << " scored services)\n";
      } else {
        rh::TextTable t({"severity", "code", "location", "message"});
        for (const auto& f : report.findings) t.add({std::string(rh::to_string(f.severity)), f.code, f.location, f.message});
        std::cout << t.render();
      }
      if (!v_canonical.empty() && !report.has_errors()) write_output(v_canonical, rh::serialize_definition(def));
      return report.has_errors() ? kExitInvalid : kExitOk;
    };
  });

  // simulate ------------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Generate a seeded synthetic run log");
  std::string s_def, s_config, s_out;
  std::optional<std::uint64_t> s_seed;
  simulate->add_option("definition", s_def, "Definition file")->required();
  simulate->add_option("--config", s_config, "Simulation config (JSON or YAML)")->required();
  simulate->add_option("--out", s_out, "Output log file (JSON Lines)")->required();
  simulate->add_option("--seed", s_seed, "Override the config seed");
  simulate->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(s_def);
      auto config = rh::simulation_config_from_json(rh::parse_document(read_file(s_config)));
      if (s_seed) config.seed = *s_seed;
      const auto snap = rh::simulate_run(def, config);
      rh::save_run_log(s_out, snap);
      std::cerr << "wrote " << snap.events.size() << " events of run " << snap.run.run_id << " to " << s_out << "\n";
      return kExitOk;
    };
  });

  // score ---------------------------------------------------------------------
  auto* score = app.add_subcommand("score", "Score a run log and print the scoreboard");
  std::string sc_def, sc_log, sc_tx;
  bool sc_json = false;
  score->add_option("definition", sc_def, "Definition file")->required();
  score->add_option("log", sc_log, "Run log")->required();
  score->add_option("--transactions", sc_tx, "Write score transactions as JSON Lines ('-' for stdout)");
  score->add_flag("--json", sc_json, "Print the scoreboard as JSON");
  score->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(sc_def);
      const auto snap = rh::load_run_log(sc_log);
      if (snap.run.definition_id != def.id)
        throw rh::Error(rh::ErrorCode::DefinitionMismatch, "log is for definition '" + snap.run.definition_id + "'");
      const auto txs = rh::score_run(def, snap.events);
      const auto board = rh::build_scoreboard(txs, rh::scoreboard_subjects(def, snap.run));
      if (!sc_tx.empty()) write_output(sc_tx, rh::transactions_jsonl(txs));
      if (sc_json) {
        std::cout << rh::canonical_dump(rh::to_json(board));
      } else if (sc_tx != "-") {
        rh::TextTable t({"rank", "subject", "total"});
        for (std::size_t i = 0; i < board.rows.size(); ++i)
          t.add({std::to_string(i + 1), board.rows[i].subject, std::to_string(board.rows[i].total)});
        std::cout << t.render();
      }
      return kExitOk;
    };
  });

  // analyze -------------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "Reflection-phase reports");
  analyze->require_subcommand(1);
  bool a_json = false;
  analyze->add_flag("--json", a_json, "Print JSON instead of tables");

  auto* feedback = analyze->add_subcommand("feedback", "Personal feedback for one trainee");
  std::string f_def, f_log, f_actor;
  feedback->add_option("definition", f_def)->required();
  feedback->add_option("log", f_log)->required();
  feedback->add_option("--actor", f_actor, "Trainee actor id")->required();
  feedback->add_flag("--json", a_json);
  feedback->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(f_def);
      const auto fb = rh::personal_feedback(def, rh::load_run_log(f_log), f_actor);
      if (a_json) {
        std::cout << rh::canonical_dump(rh::to_json(fb));
        return kExitOk;
      }
      std::cout << fb.actor_id << ": total " << fb.total_score << ", rank " << fb.rank << " of " << fb.cohort_size << "\n\n";
      rh::TextTable t({"level", "outcome", "time_min", "hints", "wrong_flags", "score", "cohort_mean_min", "cohort_slowest_min"});
      for (const auto& r : fb.per_level) {
        std::string mean = "-", slowest = "-";
        for (const auto& c : fb.cohort_stats)
          if (c.level_id == r.level_id) {
            mean = rh::fixed(c.mean_time_ms / 60000.0, 1);
            slowest = rh::fixed(rh::to_minutes(c.slowest_time), 1);
          }
        t.add({r.level_id, std::string(rh::to_string(r.outcome)), rh::fixed(rh::to_minutes(r.time_spent), 1), std::to_string(r.hints_taken),
               std::to_string(r.wrong_flags), std::to_string(r.score_delta), mean, slowest});
      }
      std::cout << t.render();
      return kExitOk;
    };
  });

  auto* quality = analyze->add_subcommand("quality", "Correctness and difficulty of a definition over runs");
  std::string q_def, q_out;
  std::vector<std::string> q_logs;
  quality->add_option("definition", q_def)->required();
  quality->add_option("logs", q_logs, "Closed run logs")->required();
  quality->add_option("--out", q_out, "Also write the JSON report here (input for 'compare')");
  quality->add_flag("--json", a_json);
  quality->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(q_def);
      const auto report = rh::definition_quality_report(def, load_logs(q_logs));
      if (!q_out.empty()) write_output(q_out, rh::canonical_dump(rh::to_json(report)));
      if (a_json) {
        std::cout << rh::canonical_dump(rh::to_json(report));
        return kExitOk;
      }
      rh::TextTable t({"level", "completion", "median_min", "iqr_min", "time_ratio", "hint_usage", "difficulty"});
      for (const auto& q : report.per_level)
        t.add({q.level_id, rh::fixed(q.completion_rate), opt_fixed(q.median_time_min, 1), opt_fixed(q.iqr_time_min, 1), opt_fixed(q.time_ratio),
               rh::fixed(q.hint_usage_rate), std::string(rh::to_string(q.difficulty))});
      std::cout << report.runs << " runs, " << report.trainees << " trainees\n\n" << t.render();
      for (const auto& f : report.correctness_findings) std::cout << f.code << ": " << f.message << "\n";
      return kExitOk;
    };
  });

  auto* compare = analyze->add_subcommand("compare", "Which of two definitions is harder (takes two quality reports)");
  std::string c_a, c_b;
  double c_tol_completion = 0.05, c_tol_ratio = 0.1;
  compare->add_option("report_a", c_a, "Quality report JSON of definition A")->required();
  compare->add_option("report_b", c_b, "Quality report JSON of definition B")->required();
  compare->add_option("--completion-tolerance", c_tol_completion)->capture_default_str();
  compare->add_option("--ratio-tolerance", c_tol_ratio)->capture_default_str();
  compare->add_flag("--json", a_json);
  compare->callback([&] {
    action = [&] {
      const auto a = rh::quality_report_from_json(rh::parse_document(read_file(c_a)));
      const auto b = rh::quality_report_from_json(rh::parse_document(read_file(c_b)));
      const auto cmp = rh::compare_definitions(a, b, {c_tol_completion, c_tol_ratio});
      if (a_json) {
        std::cout << rh::canonical_dump(rh::to_json(cmp));
        return kExitOk;
      }
      std::cout << "harder: " << rh::to_string(cmp.harder) << "\n"
                << "completion delta (a-b): " << rh::fixed(cmp.completion_delta, 3) << "\n"
                << "time ratio delta (a-b): " << rh::fixed(cmp.time_ratio_delta, 3) << "\n"
                << "hint usage delta (a-b): " << rh::fixed(cmp.hint_usage_delta, 3) << "\n"
                << "effect size: " << rh::fixed(cmp.effect_size, 3) << "\n";
      return kExitOk;
    };
  });

  auto* behavior = analyze->add_subcommand("behavior", "Directly-follows graph, anomalies and communication centrality");
  std::string b_def;
  std::vector<std::string> b_logs;
  bool b_levels = false;
  behavior->add_option("definition", b_def)->required();
  behavior->add_option("logs", b_logs)->required();
  behavior->add_flag("--level-qualified", b_levels, "Qualify action kinds by level");
  behavior->add_flag("--json", a_json);
  behavior->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(b_def);
      const auto runs = load_logs(b_logs);
      const auto graph = rh::behavior_analysis(def, runs, {b_levels});
      if (a_json) {
        rh::Json centrality = rh::Json::object();
        for (const auto& r : runs) centrality[r.run.run_id] = rh::to_json(rh::communication_centrality(r));
        std::cout << rh::canonical_dump(rh::Json{{"graph", rh::to_json(graph)}, {"centrality", centrality}});
        return kExitOk;
      }
      rh::TextTable nodes({"action", "count", "mean_score_delta"});
      for (const auto& n : graph.nodes) nodes.add({n.label, std::to_string(n.count), rh::fixed(n.mean_score_delta)});
      rh::TextTable edges({"from", "to", "count"});
      for (const auto& e : graph.edges) edges.add({e.from, e.to, std::to_string(e.count)});
      std::cout << nodes.render() << "\n" << edges.render();
      if (!graph.anomaly_scores.empty()) {
        rh::TextTable an({"run", "actor", "total_min", "z_score"});
        for (const auto& a : graph.anomaly_scores) an.add({a.run_id, a.actor_id, rh::fixed(rh::to_minutes(a.total_time), 1), rh::fixed(a.z_score)});
        std::cout << "\n" << an.render();
      }
      for (const auto& r : runs) {
        const auto c = rh::communication_centrality(r);
        if (c.leader_candidates.empty()) continue;
        std::cout << "\n" << r.run.run_id << " leader candidates:\n";
        for (const auto& [team, actors] : c.leader_candidates) {
          std::cout << "  " << team << ":";
          for (const auto& a : actors) std::cout << " " << a;
          std::cout << "\n";
        }
      }
      return kExitOk;
    };
  });

  auto* infra = analyze->add_subcommand("infra", "Service uptime, node MTTF and utilization");
  std::string i_def;
  std::vector<std::string> i_logs;
  infra->add_option("definition", i_def)->required();
  infra->add_option("logs", i_logs)->required();
  infra->add_flag("--json", a_json);
  infra->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(i_def);
      const auto report = rh::infrastructure_report(def, load_logs(i_logs));
      if (a_json) {
        std::cout << rh::canonical_dump(rh::to_json(report));
        return kExitOk;
      }
      if (report.empty()) {
        std::cout << "no infrastructure events\n";
        return kExitOk;
      }
      rh::TextTable svc({"service", "probes", "up", "uptime"});
      for (const auto& s : report.services) svc.add({s.service_id, std::to_string(s.probes), std::to_string(s.up_probes), rh::fixed(s.uptime_fraction, 4)});
      rh::TextTable nodes({"node", "failures", "operating_h", "mttf_h"});
      for (const auto& n : report.nodes)
        nodes.add({n.node_id, std::to_string(n.failure_count), rh::fixed(n.operating_hours, 2), opt_fixed(n.mttf_hours, 2)});
      rh::TextTable util({"node", "samples", "cpu_p50", "cpu_p95", "cpu_max", "mem_p50", "mem_p95", "mem_max"});
      for (const auto& u : report.utilization)
        util.add({u.node_id, std::to_string(u.samples), rh::fixed(u.cpu.p50, 1), rh::fixed(u.cpu.p95, 1), rh::fixed(u.cpu.max, 1),
                  rh::fixed(u.memory.p50, 1), rh::fixed(u.memory.p95, 1), rh::fixed(u.memory.max, 1)});
      std::cout << svc.render() << "\n" << nodes.render() << "\n" << util.render();
      return kExitOk;
    };
  });

  auto* trouble = analyze->add_subcommand("trouble", "Trainees in trouble at a point in time");
  std::string t_def, t_log, t_now;
  trouble->add_option("definition", t_def)->required();
  trouble->add_option("log", t_log)->required();
  trouble->add_option("--now", t_now, "Evaluation time (RFC 3339); defaults to the log horizon");
  trouble->add_flag("--json", a_json);
  trouble->callback([&] {
    action = [&] {
      const auto def = load_valid_definition(t_def);
      const auto snap = rh::load_run_log(t_log);
      const auto now = t_now.empty() ? snap.horizon() : rh::parse_timestamp(t_now);
      const auto alerts = rh::detect_trouble(def, snap, now);
      if (a_json) {
        std::cout << rh::canonical_dump(rh::to_json(alerts));
        return kExitOk;
      }
      rh::TextTable t({"raised_at", "actor", "level", "kind", "evidence"});
      for (const auto& a : alerts) t.add({rh::format_timestamp(a.raised_at), a.actor_id, a.level_id, std::string(rh::to_string(a.kind)), a.evidence});
      std::cout << t.render();
      return kExitOk;
    };
  });

  // serve ---------------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the HTTP API and live stream");
  std::optional<int> sv_port;
  std::optional<std::string> sv_dir;
  std::string sv_host = "127.0.0.1";
  serve->add_option("--port", sv_port, "Port (default $RANGEHALL_PORT or 8080)");
  serve->add_option("--data-dir", sv_dir, "Data directory (default $RANGEHALL_DATA_DIR or ./rangehall-data)");
  serve->add_option("--host", sv_host, "Bind address")->capture_default_str();
  serve->callback([&] {
    action = [&] {
      auto options = rh::gateway_options_from_env(sv_dir, sv_port);
      options.host = sv_host;
      rh::Gateway gateway(options);
      const int port = gateway.bind();
      g_gateway = &gateway;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << options.data_dir << " on http://" << options.host << ":" << port << "\n";
      gateway.serve();
      g_gateway = nullptr;
      return kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const rh::Error& e) {
    print_error(e);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "rangehall: " << e.what() << "\n";
    return kExitUsage;
  }
}
