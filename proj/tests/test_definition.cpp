#include <fstream>
#include <set>
#include <sstream>

#include "pch.hpp"

using namespace rh_test;

namespace {

const char* kMinimalCtf = R"(
schema_version: 1
id: minimal
kind: CTF
expected_total_duration: 30
max_participants: 1
scenario:
  topology: {nodes: [{id: kali, role: attacker}]}
  levels:
    - {id: only, order: 1, flag: F, max_points: 10, expected_duration: 10}
criteria: {}
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json minimal_json() { return parse_document(kMinimalCtf); }

ValidationReport validate_json(const Json& j) { return validate_definition(definition_from_json(j)); }

std::vector<std::string> codes(const ValidationReport& r) {
  std::vector<std::string> out;
  for (const auto& f : r.findings) out.push_back(f.code);
  return out;
}

}  // namespace

TEST(Definition, MinimalCtfParses) {
  const auto def = parse_definition(kMinimalCtf);
  EXPECT_EQ(def.kind, TrainingKind::CTF);
  ASSERT_EQ(def.scenario.levels.size(), 1u);
  EXPECT_TRUE(def.scenario.levels[0].hints.empty());
  EXPECT_EQ(def.scenario.levels[0].expected_duration, std::chrono::minutes{10});
  EXPECT_TRUE(validate_definition(def).findings.empty());
}

TEST(Definition, SampleCdxHasExerciseShape) {
  const auto def = load_definition((samples_dir() / "cdx-exercise.yaml").string());
  EXPECT_EQ(def.kind, TrainingKind::CDX);
  EXPECT_EQ(def.scenario.topology.teams().size(), 6u);
  EXPECT_EQ(def.criteria.scored_services.size(), 36u);
  EXPECT_EQ(def.criteria.manual_penalty_categories.size(), 24u);
  EXPECT_EQ(def.expected_total_duration, std::chrono::minutes{360});
  EXPECT_FALSE(validate_definition(def).has_errors());
}

TEST(Definition, ThirtyCategoryCdxParses) {
  const auto def = load_definition((fixtures_dir() / "definitions" / "cdx-6-teams-30-categories.yaml").string());
  EXPECT_EQ(def.criteria.manual_penalty_categories.size(), 30u);
  EXPECT_EQ(def.scenario.topology.teams().size(), 6u);
  EXPECT_GE(def.criteria.scored_services.size(), 24u);
}

TEST(Definition, HintWithDanglingLevelNamesTheId) {
  Json j = minimal_json();
  j["scenario"]["hints"] = Json::array({{{"id", "h"}, {"level_id", "ghost"}, {"penalty_points", 1}}});
  try {
    definition_from_json(j);
    FAIL() << "expected ReferenceError";
  } catch (const ReferenceError& e) {
    ASSERT_EQ(e.dangling().size(), 1u);
    EXPECT_EQ(e.dangling()[0].id, "ghost");
    EXPECT_EQ(e.dangling()[0].location, "/scenario/hints/0/level_id");
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Definition, ReferenceErrorListsEveryDanglingId) {
  Json j = parse_document(kUnitCdx);
  j["scenario"]["topology"]["links"].push_back(Json::array({"t1-web", "nowhere"}));
  j["scenario"]["attack_plan"][0]["target"] = "void";
  j["criteria"]["scored_services"][1]["service_name"] = "gopher";
  // Independent scan: every id that names nothing.
  std::set<std::string> expected = {"nowhere", "void", "gopher"};
  try {
    definition_from_json(j);
    FAIL() << "expected ReferenceError";
  } catch (const ReferenceError& e) {
    std::set<std::string> got;
    for (const auto& d : e.dangling()) got.insert(d.id);
    EXPECT_EQ(got, expected);
  }
}

TEST(Definition, SyntaxErrorCarriesPosition) {
  try {
    parse_definition("{\n  \"id\": \"x\",\n  \"kind\" \"CTF\"\n}");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 1u);
  }
  try {
    parse_definition("id: [unclosed\nkind: CTF\n");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_GE(e.line(), 1u);
  }
}

TEST(Definition, SchemaErrors) {
  auto expect_schema = [](Json j) {
    try {
      definition_from_json(j);
      FAIL() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaError) << e.what();
    }
  };
  Json j = minimal_json();
  j.erase("kind");
  expect_schema(j);
  j = minimal_json();
  j["kind"] = "RACE";
  expect_schema(j);
  j = minimal_json();
  j["unexpected"] = 1;
  expect_schema(j);
  j = minimal_json();
  j["scenario"]["levels"][0]["max_points"] = "ten";
  expect_schema(j);
  j = minimal_json();
  j["schema_version"] = 2;
  expect_schema(j);
}

TEST(Definition, QuotedScalarsStayStrings) {
  const auto def = load_definition((fixtures_dir() / "definitions" / "ctf-tricky-scalars.yaml").string());
  EXPECT_EQ(def.scenario.levels[0].flag, "yes");
  EXPECT_EQ(def.scenario.levels[1].flag, "123");
  EXPECT_EQ(def.scenario.levels[2].flag, "null");
  EXPECT_EQ(def.scenario.levels[3].title, "1.5");
}

TEST(Definition, YamlAndJsonFormsAgree) {
  const auto from_yaml = unit_ctf();
  const auto from_json = parse_definition(serialize_definition(from_yaml));
  EXPECT_EQ(from_yaml, from_json);
}

TEST(Validation, MinimalHasZeroFindings) { EXPECT_TRUE(validate_json(minimal_json()).findings.empty()); }

TEST(Validation, DuplicateFlag) {
  Json j = parse_document(kUnitCtf);
  j["scenario"]["levels"][1]["flag"] = j["scenario"]["levels"][0]["flag"];
  const auto report = validate_json(j);
  // Oracle: flags seen more than once.
  std::map<std::string, int> seen;
  for (const auto& l : j["scenario"]["levels"]) ++seen[l["flag"].get<std::string>()];
  const auto dup = std::count_if(seen.begin(), seen.end(), [](const auto& kv) { return kv.second > 1; });
  EXPECT_EQ(dup, 1);
  EXPECT_TRUE(report.contains("DUPLICATE_FLAG"));
  EXPECT_TRUE(report.has_errors());
}

TEST(Validation, AttackOutsideSixHourExercise) {
  Json j = parse_document(kUnitCdx);
  j["expected_total_duration"] = 360;
  j["scenario"]["attack_plan"][0]["scheduled_offset"] = 7 * 60;
  const auto report = validate_json(j);
  EXPECT_TRUE(report.contains("OFFSET_OUT_OF_RANGE"));
  ASSERT_EQ(report.error_count(), 1u);
  EXPECT_EQ(report.findings[0].location, "/scenario/attack_plan/0/scheduled_offset");
}

TEST(Validation, StructuralRules) {
  struct Case {
    const char* code;
    std::function<void(Json&)> mutate;
    bool cdx = false;
  };
  const std::vector<Case> cases = {
      {"CTF_WITHOUT_LEVELS", [](Json& j) { j["scenario"]["levels"] = Json::array(); j["scenario"].erase("hints"); }},
      {"LEVEL_ORDER_GAP", [](Json& j) { j["scenario"]["levels"][2]["order"] = 5; }},
      {"DUPLICATE_ID", [](Json& j) { j["scenario"]["levels"][1]["id"] = "l3"; j["scenario"]["hints"][2]["level_id"] = "l1"; }},
      {"EMPTY_FLAG", [](Json& j) { j["scenario"]["levels"][0]["flag"] = ""; }},
      {"NEGATIVE_VALUE", [](Json& j) { j["scenario"]["levels"][0]["skip_penalty"] = -1; }},
      {"HINT_PENALTY_EXCEEDS_POINTS", [](Json& j) { j["scenario"]["levels"][1]["max_points"] = 5; }},
      {"NONPOSITIVE_DURATION", [](Json& j) { j["scenario"]["levels"][0]["expected_duration"] = 0; }},
      {"SELF_LOOP", [](Json& j) { j["scenario"]["topology"]["links"].push_back(Json::array({"web", "web"})); }},
      {"CDX_WITHOUT_ATTACK_PLAN", [](Json& j) { j["scenario"]["attack_plan"] = Json::array(); }, true},
      {"RESERVED_CATEGORY", [](Json& j) { j["criteria"]["manual_penalty_categories"].push_back("revert"); }, true},
      {"DUPLICATE_CATEGORY", [](Json& j) { j["criteria"]["manual_penalty_categories"].push_back("defacement"); }, true},
      {"UNSCORED_SERVICE", [](Json& j) {
         j["criteria"]["scored_services"][0]["award_per_check"] = 0;
         j["criteria"]["scored_services"][0]["penalty_per_failed_check"] = 0;
       }, true},
      {"NONPOSITIVE_INTERVAL", [](Json& j) { j["criteria"]["scored_services"][0]["check_interval"] = 0; }, true},
      {"SERVICE_WITHOUT_TEAM", [](Json& j) { j["scenario"]["topology"]["nodes"][2].erase("team"); }, true},
  };
  for (const auto& c : cases) {
    Json j = parse_document(c.cdx ? kUnitCdx : kUnitCtf);
    c.mutate(j);
    const auto report = validate_json(j);
    EXPECT_TRUE(report.contains(c.code)) << c.code << ": " << to_json(report).dump();
  }
}

TEST(Validation, LongLevelIsOnlyAWarning) {
  Json j = minimal_json();
  j["scenario"]["levels"][0]["expected_duration"] = 45;
  const auto report = validate_json(j);
  EXPECT_TRUE(report.contains("LEVEL_LONGER_THAN_TRAINING"));
  EXPECT_FALSE(report.has_errors());
}

TEST(Validation, PureAndSorted) {
  Json j = parse_document(kUnitCdx);
  j["scenario"]["attack_plan"][1]["scheduled_offset"] = 500;
  j["criteria"]["scored_services"][0]["check_interval"] = -1;
  j["criteria"]["revert_penalty"] = -4;
  const auto def = definition_from_json(j);
  const auto a = validate_definition(def), b = validate_definition(def);
  EXPECT_EQ(a.findings, b.findings);
  ASSERT_GE(a.findings.size(), 3u);
  for (std::size_t i = 1; i < a.findings.size(); ++i)
    EXPECT_LE(std::tie(a.findings[i - 1].location, a.findings[i - 1].code), std::tie(a.findings[i].location, a.findings[i].code));
}

TEST(MaxScore, CtfSumsLevels) {
  Json j = minimal_json();
  j["scenario"]["levels"] = Json::array({{{"id", "a"}, {"order", 1}, {"flag", "A"}, {"max_points", 100}, {"expected_duration", 5}},
                                         {{"id", "b"}, {"order", 2}, {"flag", "B"}, {"max_points", 50}, {"expected_duration", 5}}});
  EXPECT_EQ(max_achievable_score(definition_from_json(j)), 150);
}

TEST(MaxScore, CdxEnumeratesCheckTicks) {
  Json j = parse_document(kUnitCdx);
  j["expected_total_duration"] = 360;
  j["criteria"]["scored_services"] = Json::array({{{"id", "s1"}, {"node_id", "t1-web"}, {"service_name", "http"},
                                                   {"check_interval", 600}, {"award_per_check", 1}}});
  std::int64_t ticks = 0;
  for (int t = 0; t + 10 <= 360; t += 10) ++ticks;
  EXPECT_EQ(ticks, 36);
  EXPECT_EQ(max_achievable_score(definition_from_json(j)), ticks);
}

TEST(MaxScore, NothingScoredIsZero) {
  Json j = parse_document(kUnitCdx);
  j["criteria"]["scored_services"] = Json::array();
  EXPECT_EQ(max_achievable_score(definition_from_json(j)), 0);
}

TEST(MaxScore, InvalidDefinitionRejected) {
  Json j = minimal_json();
  j["scenario"]["levels"][0]["flag"] = "";
  try {
    max_achievable_score(definition_from_json(j));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDefinition);
  }
}

TEST(Corpus, HasEnoughFilesOfBothShapes) {
  const auto files = corpus_files();
  EXPECT_GE(files.size(), 20u);
  int ctf_shaped = 0, cdx_shaped = 0;
  for (const auto& f : files) {
    const auto def = load_definition(f.string());
    if (def.kind == TrainingKind::CTF && def.scenario.levels.size() >= 5 && def.scenario.levels.size() <= 8) {
      const bool hints = std::any_of(def.scenario.levels.begin(), def.scenario.levels.end(), [](const Level& l) { return !l.hints.empty(); });
      if (hints) ++ctf_shaped;
    }
    if (def.kind == TrainingKind::CDX && def.scenario.topology.teams().size() == 6 && def.criteria.scored_services.size() >= 24 &&
        def.criteria.manual_penalty_categories.size() <= 30)
      ++cdx_shaped;
  }
  EXPECT_GE(ctf_shaped, 5);
  EXPECT_GE(cdx_shaped, 4);
}

TEST(Corpus, EveryFileValidatesAndRoundTrips) {
  for (const auto& f : corpus_files()) {
    SCOPED_TRACE(f.filename().string());
    const auto def = load_definition(f.string());
    EXPECT_FALSE(validate_definition(def).has_errors()) << to_json(validate_definition(def)).dump();
    const auto text = serialize_definition(def);
    const auto again = parse_definition(text);
    EXPECT_EQ(again, def);
    EXPECT_EQ(serialize_definition(again), text);
    EXPECT_EQ(canonicalize_document(read_file(f)), text);
  }
}

TEST(Corpus, CanonicalFormHasSortedKeysAndTrailingNewline) {
  const auto text = serialize_definition(unit_cdx());
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(text.back(), '\n');
  const Json j = Json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_TRUE(j["scenario"]["hints"].is_array());
}
