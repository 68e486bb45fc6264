// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "oracles.hpp"

using namespace rh_test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects the first few failure messages and the pass/fail verdict.
class Checker {
 public:
  void fail(const std::string& msg) {
    pass_ = false;
    if (++failures_ <= 5) messages_ += (messages_.empty() ? "" : "; ") + msg;
  }
  void expect(bool ok, const std::function<std::string()>& msg) {
    if (!ok) fail(msg());
  }
  Outcome done(const std::string& summary) const {
    if (pass_) return {true, summary};
    return {false, summary + " | " + std::to_string(failures_) + " failure(s): " + messages_};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::string messages_;
};

TrainingDefinition fixture(const std::string& name) { return load_definition((fixtures_dir() / "definitions" / name).string()); }

std::vector<TraineeProfile> drawn_profiles(std::uint64_t seed, int n) {
  Rng rng(seed * 7919 + 17);
  std::vector<TraineeProfile> out;
  for (int i = 1; i <= n; ++i)
    out.push_back({"trainee-" + std::to_string(i), rng.uniform(0.05, 0.95), rng.uniform(), rng.uniform(), rng.uniform(0.6, 1.4), {}});
  return out;
}

std::vector<TraineeProfile> fixed_profiles(int n, double skill) {
  std::vector<TraineeProfile> out;
  for (int i = 1; i <= n; ++i) out.push_back({"trainee-" + std::to_string(i), skill, 0.3, 0.3, 1.0, {}});
  return out;
}

SimulationConfig ctf_config(std::uint64_t seed, std::chrono::minutes wall = std::chrono::minutes{120}) {
  SimulationConfig c;
  c.seed = seed;
  c.wall_duration = wall;
  return c;
}

// 1 -------------------------------------------------------------------------
Outcome scoring_conservation() {
  Checker ck;
  const auto def = fixture("ctf-5-levels.yaml");
  const auto started = std::chrono::steady_clock::now();
  std::size_t subjects = 0, transactions = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto snap = simulate_ctf_run(def, drawn_profiles(seed, 5), ctf_config(seed));
    const auto txs = score_run(def, snap.events);
    transactions += txs.size();
    const auto board = build_scoreboard(txs, scoreboard_subjects(def, snap.run));
    const auto grouped = group_by_subject(txs);
    for (const auto& row : board.rows) {
      ++subjects;
      std::int64_t sum = 0;
      for (const auto& t : txs)
        if (t.subject == row.subject) sum += t.delta;
      auto it = grouped.find(row.subject);
      const std::int64_t endpoint = it == grouped.end() ? 0 : build_timeline(it->second).final_total();
      ck.expect(row.total == sum && endpoint == sum, [&] {
        return "seed " + std::to_string(seed) + " " + row.subject + ": board " + std::to_string(row.total) + ", timeline " +
               std::to_string(endpoint) + ", sum " + std::to_string(sum);
      });
    }
    ck.expect(board.rows.size() == 5, [&] { return "seed " + std::to_string(seed) + ": " + std::to_string(board.rows.size()) + " subjects"; });
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  ck.expect(secs < 60.0, [&] { return "took " + std::to_string(secs) + " s"; });
  std::ostringstream s;
  s << "1000 runs, " << subjects << " subjects, " << transactions << " transactions, " << std::fixed;
  s.precision(2);
  s << secs << " s";
  return ck.done(s.str());
}

// 2 -------------------------------------------------------------------------
Outcome deterministic_replay() {
  Checker ck;
  const auto ctf = fixture("ctf-5-levels.yaml");
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto snap = simulate_ctf_run(ctf, drawn_profiles(seed, 5), ctf_config(seed));
    const auto a = transactions_jsonl(score_run(ctf, snap.events));
    const auto b = transactions_jsonl(score_run(ctf, snap.events));
    ck.expect(a == b, [&] { return "ctf seed " + std::to_string(seed) + " rescoring differs"; });
  }
  const auto cdx_def = load_definition((samples_dir() / "cdx-exercise.yaml").string());
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimulationConfig c;
    c.seed = seed;
    c.wall_duration = std::chrono::minutes{360};
    for (int t = 1; t <= 6; ++t) c.team_profiles.push_back({"team-" + std::to_string(t), 0.5, 2});
    const auto snap = simulate_cdx_run(cdx_def, c);
    ck.expect(transactions_jsonl(score_run(cdx_def, snap.events)) == transactions_jsonl(score_run(cdx_def, snap.events)),
              [&] { return "cdx seed " + std::to_string(seed) + " rescoring differs"; });
  }

  std::size_t splits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomLogOptions opt;
    opt.events = 120;
    opt.skew_probability = 0.05;
    const bool is_ctf = seed % 2 == 1;
    const auto snap = is_ctf ? random_ctf_log(unit_ctf(), seed, opt) : random_cdx_log(seed, 120);
    const auto& def = is_ctf ? unit_ctf() : unit_cdx();
    const auto whole = transactions_jsonl(score_run(def, snap.events));
    for (std::size_t k = 0; k <= snap.events.size(); ++k, ++splits) {
      const std::vector<EventEnvelope> prefix(snap.events.begin(), snap.events.begin() + static_cast<std::ptrdiff_t>(k));
      const std::vector<EventEnvelope> suffix(snap.events.begin() + static_cast<std::ptrdiff_t>(k), snap.events.end());
      RunScorer scorer(def);
      std::vector<ScoreTransaction> out;
      scorer.feed_all(prefix, out);
      const auto prefix_text = transactions_jsonl(out);
      scorer.feed_all(suffix, out);
      ck.expect(transactions_jsonl(out) == whole, [&] { return "seed " + std::to_string(seed) + " split at " + std::to_string(k); });
      ck.expect(prefix_text == transactions_jsonl(score_run(def, prefix)) && whole.compare(0, prefix_text.size(), prefix_text) == 0,
                [&] { return "seed " + std::to_string(seed) + " prefix " + std::to_string(k) + " is not a prefix"; });
    }
  }
  return ck.done("205 logs rescored, " + std::to_string(splits) + " splits over 20 logs");
}

// 3 -------------------------------------------------------------------------
Outcome structural_fidelity() {
  Checker ck;
  const auto ctf = fixture("ctf-8-levels.yaml");
  std::size_t intervals = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const int trainees = 1 + static_cast<int>((seed - 1) % 20);
    const auto wall = std::chrono::minutes{60 + static_cast<int>((seed * 37) % 61)};
    auto profiles = drawn_profiles(seed, trainees);
    auto cfg = ctf_config(seed, wall);
    cfg.commands_per_level = 1.0;
    const auto snap = simulate_ctf_run(ctf, profiles, cfg);
    const Timestamp from = snap.run.start_time, to = snap.run.start_time + wall;
    for (const auto& actor : snap.run.actors_with(Role::Trainee)) {
      auto ivs = derive_level_intervals(ctf, snap, actor);
      std::stable_sort(ivs.begin(), ivs.end(), [](const LevelInterval& a, const LevelInterval& b) { return a.start_seq < b.start_seq; });
      intervals += ivs.size();
      for (std::size_t i = 0; i < ivs.size(); ++i) {
        const auto& iv = ivs[i];
        const std::string where = "seed " + std::to_string(seed) + " " + actor + " " + iv.level_id;
        ck.expect(iv.end.has_value(), [&] { return where + " never closed"; });
        if (!iv.end) continue;
        ck.expect(iv.start >= from && *iv.end <= to && iv.start <= *iv.end, [&] { return where + " outside the window"; });
        if (i > 0) {
          const auto& prev = ivs[i - 1];
          ck.expect(prev.end && *prev.end <= iv.start, [&] { return where + " overlaps " + prev.level_id; });
          ck.expect(ctf.find_level(prev.level_id)->order < ctf.find_level(iv.level_id)->order,
                    [&] { return where + " out of level order"; });
        }
      }
    }
  }

  const auto cdx = load_definition((samples_dir() / "cdx-exercise.yaml").string());
  std::size_t services = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const double defense : {1.0, 0.3}) {
      SimulationConfig c;
      c.seed = seed;
      c.wall_duration = std::chrono::minutes{360};
      for (int t = 1; t <= 6; ++t) c.team_profiles.push_back({"team-" + std::to_string(t), defense, 3});
      const auto snap = simulate_cdx_run(cdx, c);
      std::map<std::string, std::int64_t> probes, down;
      bool outage = false;
      for (const auto& e : snap.events) {
        if (const auto* p = e.as<ServiceProbe>()) {
          ++probes[p->service_id];
          down[p->service_id] += p->status == ServiceStatus::Down;
        }
        outage |= e.kind() == PayloadKind::NodeFailure;
      }
      ck.expect(defense < 1.0 || !outage, [&] { return "perfect defense still had an outage"; });
      for (const auto& svc : cdx.criteria.scored_services) {
        ++services;
        const std::int64_t expected = std::chrono::duration_cast<Millis>(c.wall_duration).count() /
                                      std::chrono::duration_cast<Millis>(svc.check_interval).count();
        ck.expect(probes[svc.id] == expected, [&] {
          return svc.id + ": " + std::to_string(probes[svc.id]) + " probes, expected " + std::to_string(expected);
        });
        if (!outage) ck.expect(down[svc.id] == 0, [&] { return svc.id + " down without an outage"; });
      }
    }
  }
  return ck.done("60 CTF runs (1-20 trainees, 60-120 min, " + std::to_string(intervals) + " intervals), " + std::to_string(services) +
                 " CDX service checks over 6 teams x 6 h");
}

// 4 -------------------------------------------------------------------------
Outcome trouble_oracle() {
  Checker ck;
  std::size_t alerts = 0, evaluations = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    RandomLogOptions opt;
    opt.trainees = 1 + static_cast<int>(seed % 5);
    opt.events = 40 + static_cast<int>((seed * 13) % 260);
    opt.close = seed % 3 != 0;
    opt.skew_probability = seed % 4 == 0 ? 0.05 : 0.0;
    const auto snap = random_ctf_log(unit_ctf(), seed, opt);
    TroubleRules rules;
    if (seed % 5 == 0) {
      rules.stuck_factor = 1.5;
      rules.bruteforce_n = 3;
      rules.bruteforce_window = std::chrono::minutes{2};
      rules.quit_window = std::chrono::minutes{1};
    }
    const Timestamp h = snap.horizon();
    const Timestamp mid = snap.run.start_time + (h - snap.run.start_time) / 2;
    for (const Timestamp now : {h, mid, h + std::chrono::hours{1}}) {
      ++evaluations;
      const auto got = alert_keys(detect_trouble(unit_ctf(), snap, now, rules));
      const auto want = oracle_trouble(unit_ctf(), snap, now, rules);
      alerts += want.size();
      ck.expect(got == want, [&] {
        return "seed " + std::to_string(seed) + " at " + format_timestamp(now) + ": " + std::to_string(got.size()) + " alerts vs " +
               std::to_string(want.size());
      });
    }
  }
  return ck.done("200 logs, " + std::to_string(evaluations) + " evaluations, " + std::to_string(alerts) + " alerts matched");
}

// 5 -------------------------------------------------------------------------
Outcome behavior_oracle() {
  Checker ck;
  std::int64_t edges = 0;
  for (const int events : {1, 10, 100, 1000, 10000}) {
    RandomLogOptions opt;
    opt.trainees = 4;
    opt.events = events;
    const auto snap = random_ctf_log(unit_ctf(), static_cast<std::uint64_t>(events), opt);
    const auto graph = behavior_analysis(unit_ctf(), {snap});
    const auto want = oracle_dfg({snap});
    std::map<std::pair<std::string, std::string>, std::int64_t> got;
    for (const auto& e : graph.edges) got[{e.from, e.to}] = e.count;
    for (const auto& [_, n] : got) edges += n;
    ck.expect(got == want, [&] { return std::to_string(events) + "-event log: " + std::to_string(got.size()) + " edges vs " + std::to_string(want.size()); });
  }

  // Hand fixture: failures at 4 h and 9 h, recoveries at 5 h and 10 h, closed at 12 h.
  const std::vector<Participant> people{trainee("t1-a", "team-1"), {"ops", {Role::Operator}, {}}};
  LogBuilder b(unit_cdx(), make_run(unit_cdx(), people));
  b.add(1h, "system", ServiceProbe{"s1", ServiceStatus::Up, 10}).add(2h, "system", ServiceProbe{"s1", ServiceStatus::Up, 20});
  b.add(3h, "system", ServiceProbe{"s1", ServiceStatus::Up, 30}).add(4h, "system", NodeFailure{"t1-web"});
  b.add(4h + 30min, "system", ServiceProbe{"s1", ServiceStatus::Down, 0}).add(5h, "system", NodeRecovery{"t1-web"});
  b.add(9h, "system", NodeFailure{"t1-web"}).add(10h, "system", NodeRecovery{"t1-web"}).close(12h);
  const auto report = infrastructure_report(unit_cdx(), {b.snapshot()});
  auto rel = [](double got, double want) { return std::abs(got - want) <= 1e-9 * std::abs(want); };
  const auto* node = report.node("t1-web");
  const auto* svc = report.service("s1");
  ck.expect(node && node->failure_count == 2 && node->mttf_hours && rel(*node->mttf_hours, 5.0) && rel(node->operating_hours, 10.0),
            [&] { return "MTTF fixture: " + (node && node->mttf_hours ? std::to_string(*node->mttf_hours) : std::string("none")); });
  ck.expect(svc && svc->probes == 4 && svc->up_probes == 3 && rel(svc->uptime_fraction, 0.75) && svc->mean_latency_ms && rel(*svc->mean_latency_ms, 20.0),
            [&] { return "uptime fixture: " + (svc ? std::to_string(svc->uptime_fraction) : std::string("none")); });
  return ck.done("DFG on logs up to 10000 events (" + std::to_string(edges) + " transitions), MTTF 5.0 h, uptime 0.75");
}

// 6 -------------------------------------------------------------------------
TrainingDefinition harder_variant(TrainingDefinition def) {
  def.id += "-hard";
  for (auto& l : def.scenario.levels) {
    l.expected_duration *= 2;
    std::vector<Hint> kept;
    for (std::size_t i = 0; i < l.hints.size(); i += 2) kept.push_back(l.hints[i]);
    l.hints = std::move(kept);
  }
  return def;
}

double completion_rate(const std::vector<RunSnapshot>& runs, std::size_t levels) {
  std::size_t done = 0, slots = 0;
  for (const auto& r : runs) {
    for (const auto& e : r.events) done += e.kind() == PayloadKind::LevelCompleted;
    slots += levels * r.run.actors_with(Role::Trainee).size();
  }
  return slots ? static_cast<double>(done) / static_cast<double>(slots) : 0.0;
}

Outcome difficulty_monotonicity() {
  Checker ck;
  const auto a = fixture("ctf-5-levels.yaml");
  const auto b = harder_variant(a);
  const std::size_t n_levels = a.scenario.levels.size();
  double high = 0.0, low = 0.0;
  int b_harder = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    std::vector<RunSnapshot> hi, lo, runs_a, runs_b;
    for (std::uint64_t k = 0; k < 3; ++k) {
      const std::uint64_t s = seed * 100 + k;
      hi.push_back(simulate_ctf_run(a, fixed_profiles(5, 0.9), ctf_config(s)));
      lo.push_back(simulate_ctf_run(a, fixed_profiles(5, 0.2), ctf_config(s)));
      runs_a.push_back(simulate_ctf_run(a, drawn_profiles(s, 5), ctf_config(s)));
      runs_b.push_back(simulate_ctf_run(b, drawn_profiles(s, 5), ctf_config(s)));
    }
    high += completion_rate(hi, n_levels);
    low += completion_rate(lo, n_levels);
    const auto cmp = compare_definitions(definition_quality_report(a, runs_a), definition_quality_report(b, runs_b));
    b_harder += cmp.harder == HarderDefinition::B;
  }
  high /= 30.0;
  low /= 30.0;
  ck.expect(high > low, [&] { return "completion at 0.9 not above 0.2"; });
  ck.expect(b_harder >= 27, [&] { return "B harder in only " + std::to_string(b_harder) + "/30 seeds"; });
  std::ostringstream s;
  s.precision(3);
  s << "completion " << high << " (skill 0.9) vs " << low << " (skill 0.2); B harder in " << b_harder << "/30";
  return ck.done(s.str());
}

// 7 -------------------------------------------------------------------------
Outcome role_isolation() {
  Checker ck;
  std::size_t pairs = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const bool is_ctf = seed % 5 != 0;
    RandomLogOptions opt;
    opt.trainees = 2 + static_cast<int>(seed % 3);
    opt.events = 120;
    opt.skew_probability = seed % 7 == 0 ? 0.05 : 0.0;
    const auto snap = is_ctf ? random_ctf_log(unit_ctf(), seed, opt) : random_cdx_log(seed, 150);
    const auto& def = is_ctf ? unit_ctf() : unit_cdx();
    const auto trainees = snap.run.actors_with(Role::Trainee);
    for (const auto& x : trainees)
      for (const auto& y : trainees) {
        if (x == y) continue;
        ++pairs;
        std::string why;
        ck.expect(trainee_view_isolated(def, snap, x, y, &why), [&] { return "seed " + std::to_string(seed) + ": " + why; });
      }
    std::string why;
    ck.expect(sparring_views_clean(def, snap, &why), [&] { return "seed " + std::to_string(seed) + ": " + why; });
  }
  return ck.done("500 logs, " + std::to_string(pairs) + " trainee pairs");
}

// 8 -------------------------------------------------------------------------
Outcome round_trip() {
  Checker ck;
  const auto files = corpus_files();
  bool ctf_shape = false, cdx_shape = false;
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    try {
      const auto def = load_definition(path.string());
      const auto text = serialize_definition(def);
      const auto back = parse_definition(text);
      ck.expect(back == def, [&] { return name + ": parse(serialize(d)) != d"; });
      ck.expect(serialize_definition(back) == text, [&] { return name + ": serialization not stable"; });
      std::size_t hints = 0;
      for (const auto& l : def.scenario.levels) hints += l.hints.size();
      if (def.kind == TrainingKind::CTF && def.scenario.levels.size() >= 5 && def.scenario.levels.size() <= 8 && hints > 0) ctf_shape = true;
      std::set<std::string> teams;
      for (const auto& n : def.scenario.topology.nodes)
        if (n.team) teams.insert(*n.team);
      const auto cats = def.criteria.manual_penalty_categories.size();
      if (def.kind == TrainingKind::CDX && teams.size() == 6 && def.criteria.scored_services.size() >= 24 && cats > 0 && cats <= 30)
        cdx_shape = true;
    } catch (const Error& e) {
      ck.fail(name + ": " + e.what());
    }
  }
  ck.expect(files.size() >= 20, [&] { return "only " + std::to_string(files.size()) + " corpus files"; });
  ck.expect(ctf_shape, [] { return "no CTF with 5-8 levels and hints"; });
  ck.expect(cdx_shape, [] { return "no CDX with 6 teams, >= 24 services and <= 30 categories"; });
  return ck.done(std::to_string(files.size()) + " files round-tripped");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scoring conservation", scoring_conservation}, {"deterministic replay", deterministic_replay},
      {"structural fidelity", structural_fidelity},   {"trouble oracle", trouble_oracle},
      {"behavior oracle", behavior_oracle},           {"difficulty monotonicity", difficulty_monotonicity},
      {"role isolation", role_isolation},             {"round trip", round_trip}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
