#include "pch.hpp"

using namespace rh_test;

namespace {

std::vector<std::int64_t> deltas(const std::vector<ScoreTransaction>& txs) {
  std::vector<std::int64_t> out;
  for (const auto& t : txs) out.push_back(t.delta);
  return out;
}

std::int64_t sum(const std::vector<std::int64_t>& v) { return std::accumulate(v.begin(), v.end(), std::int64_t{0}); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Io;
}

LogBuilder ctf_builder() { return LogBuilder(unit_ctf(), make_run(unit_ctf(), {trainee("a"), trainee("b")})); }

LogBuilder cdx_builder() {
  return LogBuilder(unit_cdx(), make_run(unit_cdx(), {trainee("t1-a", "team-1"), trainee("t2-a", "team-2"),
                                                      {"red", {Role::SparringPartner}, {}}, {"white", {Role::Supervisor}, {}}}));
}

}  // namespace

TEST(CtfScoring, EmptyLog) { EXPECT_TRUE(score_ctf_run(unit_ctf(), {}).empty()); }

TEST(CtfScoring, HintThenCompletion) {
  auto b = ctf_builder();
  b.add(1min, "a", HintTaken{"l1", "h1"}).add(5min, "a", LevelCompleted{"l1"});
  const auto txs = score_ctf_run(unit_ctf(), b.snapshot().events);
  EXPECT_EQ(deltas(txs), (std::vector<std::int64_t>{-10, 100}));
  EXPECT_EQ(sum(deltas(txs)), 90);
  EXPECT_EQ(txs[0].category.str(), "hint_penalty");
  EXPECT_EQ(txs[1].category.str(), "level_completion");
  EXPECT_EQ(txs[1].source_seq, 2u);
  EXPECT_EQ(txs[1].subject, "a");
}

TEST(CtfScoring, SkipGivesNoCompletionAward) {
  auto b = ctf_builder();
  b.add(1min, "a", LevelSkipped{"l1"}).add(2min, "a", LevelCompleted{"l1"});
  const auto txs = score_ctf_run(unit_ctf(), b.snapshot().events);
  EXPECT_EQ(deltas(txs), (std::vector<std::int64_t>{-20}));
  EXPECT_EQ(txs[0].category.str(), "skip_penalty");
}

TEST(CtfScoring, WrongFlagsBeyondFreeAttempts) {
  auto b = ctf_builder();
  for (int i = 0; i < 4; ++i) b.add(Millis{i * 1000}, "a", FlagSubmitted{"l1", false});
  b.add(5s, "a", FlagSubmitted{"l1", true});
  b.add(6s, "a", FlagSubmitted{"l2", false});  // first wrong on another level is free
  const auto txs = score_ctf_run(unit_ctf(), b.snapshot().events);
  EXPECT_EQ(deltas(txs), (std::vector<std::int64_t>{-2, -2, -2}));
  for (const auto& t : txs) EXPECT_EQ(t.category.str(), "wrong_flag_penalty");
}

TEST(CtfScoring, UnlimitedAttemptsAreFree) {
  Json j = parse_document(kUnitCtf);
  j["criteria"].erase("free_attempts");
  const auto def = definition_from_json(j);
  LogBuilder b(def, make_run(def, {trainee("a")}));
  for (int i = 0; i < 6; ++i) b.add(Millis{i}, "a", FlagSubmitted{"l1", false});
  EXPECT_TRUE(score_ctf_run(def, b.snapshot().events).empty());
}

TEST(CtfScoring, SolutionDisplayPenalizedOnce) {
  auto b = ctf_builder();
  b.add(0ms, "a", SolutionDisplayed{"l1"}).add(1s, "a", SolutionDisplayed{"l1"}).add(2s, "a", SolutionDisplayed{"l2"});
  const auto txs = score_ctf_run(unit_ctf(), b.snapshot().events);
  EXPECT_EQ(deltas(txs), (std::vector<std::int64_t>{-30}));
  EXPECT_EQ(txs[0].category.str(), "solution_display_penalty");
}

TEST(CtfScoring, RepeatedCompletionCountsOnce) {
  auto b = ctf_builder();
  b.add(0ms, "a", LevelCompleted{"l3"}).add(1s, "a", LevelCompleted{"l3"}).add(2s, "b", LevelCompleted{"l3"});
  EXPECT_EQ(deltas(score_ctf_run(unit_ctf(), b.snapshot().events)), (std::vector<std::int64_t>{80, 80}));
}

TEST(CtfScoring, OtherEventsScoreNothing) {
  auto b = ctf_builder();
  b.add(0ms, "a", LevelStarted{"l1"}).add(1s, "a", CommandEntered{"ls"}).add(2s, "a", MessageSent{"b", "hi"});
  b.add(3s, "a", QuestionnaireAnswered{"q", Json::object()});
  EXPECT_TRUE(score_ctf_run(unit_ctf(), b.snapshot().events).empty());
}

TEST(CtfScoring, KindMismatch) {
  EXPECT_EQ(code_of([] { score_ctf_run(unit_cdx(), {}); }), ErrorCode::KindMismatch);
  EXPECT_EQ(code_of([] { score_cdx_run(unit_ctf(), {}); }), ErrorCode::KindMismatch);
}

TEST(CtfScoring, MatchesRuleTableOracle) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto snap = random_ctf_log(unit_ctf(), seed);
    const auto board = build_scoreboard(score_run(unit_ctf(), snap.events), scoreboard_subjects(unit_ctf(), snap.run));
    for (const auto& [actor, total] : oracle_ctf_totals(unit_ctf(), snap)) {
      const auto* row = board.row(actor);
      ASSERT_NE(row, nullptr) << actor;
      EXPECT_EQ(row->total, total) << "seed " << seed << " actor " << actor;
    }
  }
}

TEST(CdxScoring, Empty) { EXPECT_TRUE(score_cdx_run(unit_cdx(), {}).empty()); }

TEST(CdxScoring, ProbesAndManualPenalty) {
  Json j = parse_document(kUnitCdx);
  j["criteria"]["scored_services"][0]["award_per_check"] = 1;
  const auto def = definition_from_json(j);
  LogBuilder b(def, make_run(def, {{"red", {Role::SparringPartner}, {}}}));
  for (int i = 0; i < 3; ++i) b.add(std::chrono::minutes{i}, "system", ServiceProbe{"s1", ServiceStatus::Up, 4.0});
  b.add(4min, "red", ManualScoringEvent{"red", "team-1", "defacement", -5, "site defaced", {}, {}});
  const auto txs = score_cdx_run(def, b.snapshot().events);
  EXPECT_EQ(deltas(txs), (std::vector<std::int64_t>{1, 1, 1, -5}));
  EXPECT_EQ(sum(deltas(txs)), -2);
  for (const auto& t : txs) EXPECT_EQ(t.subject, "team-1");
  EXPECT_EQ(txs[3].category.str(), "manual:defacement");
}

TEST(CdxScoring, DownProbeAndRevert) {
  auto b = cdx_builder();
  b.add(0ms, "system", ServiceProbe{"s2", ServiceStatus::Down, 0});
  b.add(1min, "white", ManualScoringEvent{"white", "team-2", "revert", 0, "restore t2-web", {}, {}});
  b.add(2min, "t1-a", CommandEntered{"ls"});
  const auto txs = score_cdx_run(unit_cdx(), b.snapshot().events);
  EXPECT_EQ(deltas(txs), (std::vector<std::int64_t>{-3, -50}));
  EXPECT_EQ(txs[0].category.str(), "service_availability");
  EXPECT_EQ(txs[1].category.str(), "revert");
  EXPECT_EQ(txs[0].subject, "team-2");
}

TEST(CdxScoring, UnknownServiceAndCategory) {
  EventEnvelope e;
  e.run_id = "r1";
  e.seq = 1;
  e.timestamp = t0();
  e.actor_id = "system";
  e.payload = ServiceProbe{"nope", ServiceStatus::Up, 1};
  EXPECT_EQ(code_of([&] { score_cdx_run(unit_cdx(), {e}); }), ErrorCode::UnknownService);
  e.actor_id = "red";
  e.payload = ManualScoringEvent{"red", "team-1", "graffiti", -1, "", {}, {}};
  EXPECT_EQ(code_of([&] { score_cdx_run(unit_cdx(), {e}); }), ErrorCode::UnknownCategory);
}

TEST(Timeline, PrefixSums) {
  EXPECT_TRUE(build_timeline({}).points.empty());
  std::vector<ScoreTransaction> txs = {{"a", at(1min), 100, {ScoreCategory::LevelCompletion, {}}, 1},
                                       {"a", at(2min), -10, {ScoreCategory::HintPenalty, {}}, 2}};
  const auto tl = build_timeline(txs);
  ASSERT_EQ(tl.points.size(), 2u);
  EXPECT_EQ(tl.points[0].cumulative, 100);
  EXPECT_EQ(tl.points[1].cumulative, 90);
  EXPECT_EQ(tl.final_total(), 90);
  EXPECT_EQ(tl.points[0].timestamp, at(1min));

  const auto zero = build_timeline({{"a", at(0ms), 0, {}, 1}});
  ASSERT_EQ(zero.points.size(), 1u);
  EXPECT_EQ(zero.points[0].cumulative, 0);
}

TEST(Timeline, RejectsMixedOrUnsorted) {
  std::vector<ScoreTransaction> mixed = {{"a", at(0ms), 1, {}, 1}, {"b", at(1ms), 1, {}, 2}};
  EXPECT_EQ(code_of([&] { build_timeline(mixed); }), ErrorCode::SubjectMismatch);
  std::vector<ScoreTransaction> unsorted = {{"a", at(5ms), 1, {}, 2}, {"a", at(1ms), 1, {}, 1}};
  EXPECT_EQ(code_of([&] { build_timeline(unsorted); }), ErrorCode::UnsortedInput);
}

TEST(Scoreboard, GroupsCategories) {
  std::vector<ScoreTransaction> txs = {{"team-1", at(0ms), 1, {ScoreCategory::ServiceAvailability, {}}, 1},
                                       {"team-1", at(1ms), 1, {ScoreCategory::ServiceAvailability, {}}, 2},
                                       {"team-1", at(2ms), -5, Category::manual_named("x"), 3}};
  const auto board = build_scoreboard(txs);
  ASSERT_EQ(board.rows.size(), 1u);
  EXPECT_EQ(board.rows[0].total, -3);
  EXPECT_EQ(board.rows[0].per_category, (std::map<std::string, std::int64_t>{{"service_availability", 2}, {"manual:x", -5}}));
}

TEST(Scoreboard, TiesBrokenBySubject) {
  std::vector<ScoreTransaction> txs = {{"zed", at(0ms), 10, {}, 1}, {"amy", at(1ms), 10, {}, 2}, {"bob", at(2ms), 20, {}, 3}};
  const auto board = build_scoreboard(txs);
  ASSERT_EQ(board.rows.size(), 3u);
  EXPECT_EQ(board.rows[0].subject, "bob");
  EXPECT_EQ(board.rows[1].subject, "amy");
  EXPECT_EQ(board.rows[2].subject, "zed");
  EXPECT_EQ(board.rank_of("zed"), 3u);
  EXPECT_TRUE(build_scoreboard({}).rows.empty());
}

TEST(Scoreboard, ExtraSubjectsGetZeroRows) {
  const auto board = build_scoreboard({{"a", at(0ms), -1, {}, 1}}, {"a", "b"});
  ASSERT_EQ(board.rows.size(), 2u);
  EXPECT_EQ(board.rows[0].subject, "b");
  EXPECT_EQ(board.rows[0].total, 0);
}

TEST(ScoringProperty, ConservationAcrossViews) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto ctf = random_ctf_log(unit_ctf(), seed);
    const auto cdx = random_cdx_log(seed);
    for (const auto& [def, snap] : {std::pair{&unit_ctf(), &ctf}, std::pair{&unit_cdx(), &cdx}}) {
      const auto txs = score_run(*def, snap->events);
      const auto board = build_scoreboard(txs);
      for (const auto& [subject, list] : group_by_subject(txs)) {
        std::int64_t direct = 0;
        for (const auto& t : txs)
          if (t.subject == subject) direct += t.delta;
        EXPECT_EQ(build_timeline(list).final_total(), direct);
        EXPECT_EQ(board.row(subject)->total, direct);
      }
    }
  }
}

TEST(ScoringProperty, EveryTransactionTracesToOneEvent) {
  const auto snap = random_ctf_log(unit_ctf(), 4);
  const auto txs = score_run(unit_ctf(), snap.events);
  std::set<std::uint64_t> seen;
  for (const auto& t : txs) {
    ASSERT_GE(t.source_seq, 1u);
    ASSERT_LE(t.source_seq, snap.events.size());
    const auto& e = snap.events[t.source_seq - 1];
    EXPECT_EQ(e.timestamp, t.timestamp);
    EXPECT_EQ(e.actor_id, t.subject);
    EXPECT_TRUE(seen.insert(t.source_seq).second);
  }
}

TEST(Transactions, JsonRoundTrip) {
  const auto txs = score_run(unit_cdx(), random_cdx_log(5).events);
  ASSERT_FALSE(txs.empty());
  for (const auto& t : txs) EXPECT_EQ(transaction_from_json(transaction_to_json(t)), t);
  EXPECT_EQ(Category::parse("manual:dns-hijack")->manual, "dns-hijack");
  EXPECT_FALSE(Category::parse("bonus"));
}

TEST(Assessment, RecordsPerLevel) {
  auto b = ctf_builder();
  b.add(0ms, "a", LevelStarted{"l1"}).add(1min, "a", HintTaken{"l1", "h2"}).add(2min, "a", FlagSubmitted{"l1", false});
  b.add(10min, "a", LevelCompleted{"l1"}).close(20min);
  const auto recs = assessment_records(unit_ctf(), b.snapshot());
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(std::get<double>(recs[0].value), 600.0);
  EXPECT_EQ(std::get<double>(recs[1].value), 1.0);
  EXPECT_EQ(std::get<double>(recs[2].value), 1.0);
  EXPECT_TRUE(std::get<bool>(recs[3].value));
  EXPECT_EQ(to_json(recs[0])["metric"], "time_spent_sec");
}
