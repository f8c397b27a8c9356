#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace priodrift;
using namespace priodrift::testing;

namespace {

Json nested_document() {
  return Json::parse(R"({
    "key": "AMQ-1",
    "fields": {
      "project": {"key": "AMQ"},
      "reporter": {"name": "alice"},
      "created": "2014-11-11T10:18:00.000+0000",
      "priority": {"name": "Critical"},
      "status": {"name": "Closed"},
      "summary": "Broker hangs on restart",
      "description": "Steps to reproduce",
      "components": [{"name": "broker"}],
      "labels": ["hang"],
      "comment": {"comments": [
        {"author": {"name": "bob"}, "created": "2014-11-12T07:18:00.000+0000", "body": "seen it"},
        {"author": {"name": "carol"}, "created": "2014-11-13T07:18:00.000+0000", "body": "me too"}
      ]}
    },
    "changelog": {"histories": [
      {"author": {"name": "bob"}, "created": "2014-11-14T08:00:00.000+0000",
       "items": [{"field": "priority", "fromString": "Major", "toString": "Critical"},
                 {"field": "assignee", "fromString": "", "toString": "bob"}]},
      {"author": {"name": "bob"}, "created": "2014-11-20T08:00:00.000+0000",
       "items": [{"field": "status", "fromString": "Open", "toString": "Closed"}]}
    ]}
  })");
}

}  // namespace

TEST_CASE("parsing tracker documents") {
  SUBCASE("empty stream") {
    std::istringstream in("");
    const ParseResult r = parse_issue_dump(in);
    CHECK(r.issues.empty());
    CHECK(r.errors.empty());
  }
  SUBCASE("nested layout maps comments and changelog items") {
    const IssueRecord issue = parse_issue_document(nested_document(), 0);
    CHECK(issue.issue_key == "AMQ-1");
    CHECK(issue.project_id == "AMQ");
    CHECK(issue.comments.size() == 2);
    CHECK(issue.history.size() == 3);
    CHECK(issue.initial_priority == Priority::Major);
    CHECK(issue.final_status == FinalStatus::Closed);
    CHECK(issue.components.count("broker") == 1);
  }
  SUBCASE("missing creation timestamp is a schema error naming the path") {
    Json doc = nested_document();
    doc["fields"].erase("created");
    try {
      parse_issue_document(doc, 7);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SchemaError);
      CHECK(std::string(e.what()).find("created") != std::string::npos);
    }
    const ParseResult r = parse_issue_dump(std::vector<Json>{doc});
    CHECK(r.issues.empty());
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].issue_key == "AMQ-1");
  }
  SUBCASE("flat layout round trips through to_document") {
    IssueRecord issue = make_issue("P-1", 1'500'000'000, Priority::Minor);
    add_comment(issue, 1'500'000'100, "x", 4);
    add_priority_change(issue, 1'500'000'200, Priority::Minor, Priority::Major);
    add_resolution(issue, 1'500'000'300);
    const IssueRecord back = parse_issue_document(to_document(issue), 0);
    CHECK(back.initial_priority == Priority::Minor);
    CHECK(back.history.size() == 2);
    CHECK(back.comments.size() == 1);
    CHECK(back.comments[0].body_length == 4);
  }
  SUBCASE("unresolved issues are rejected, not silently dropped") {
    Json doc = nested_document();
    doc["fields"]["status"] = Json{{"name", "Open"}};
    const ParseResult r = parse_issue_dump(std::vector<Json>{doc});
    CHECK(r.issues.empty());
    CHECK(r.rejected.size() == 1);
  }
}

TEST_CASE("priority normalization") {
  const AliasTable aliases = default_alias_table();
  CHECK(resolve_priority(" BLOCKER ", aliases) == Priority::Blocker);
  CHECK(resolve_priority("urgent", aliases) == Priority::Blocker);
  CHECK_FALSE(resolve_priority("P3-nice-to-have", aliases).has_value());

  IssueRecord issue = make_issue("P-1", 1000);
  issue.raw_initial_priority = "P3-nice-to-have";
  CHECK(normalize_priority_trail(issue, aliases).removed_reason.has_value());
  const CorrectionResult r = correct_issues({issue});
  CHECK(r.issues.empty());
  REQUIRE(r.removed.size() == 1);
  CHECK(r.removed[0].issue_key == "P-1");
}

TEST_CASE("short-interval fixtures") {
  const auto cases = short_interval_cases();
  std::map<std::string, int> per_rule;
  for (const auto& c : cases) {
    CAPTURE(c.name);
    ++per_rule[c.rule];
    CHECK(check_short_interval_case(c) == "");
  }
  CHECK(per_rule["a"] == 10);
  CHECK(per_rule["b"] == 10);
  CHECK(per_rule["c"] == 10);
  CHECK(per_rule["fixpoint"] >= 1);
}

TEST_CASE("short-interval correction is idempotent on a noisy corpus") {
  SyntheticCorpus corpus = generate_corpus(small_corpus(2, 150, 5));
  NoiseConfig noise;
  noise.rapid_edit_rate = 0.3;
  const auto noisy = inject_noise(corpus.issues, noise, corpus.truth);
  for (const auto& issue : noisy) {
    const IssueRecord once = apply_short_interval_rules(issue);
    const IssueRecord twice = apply_short_interval_rules(once);
    REQUIRE(once.history.size() == twice.history.size());
    CHECK(once.initial_priority == twice.initial_priority);
  }
}

TEST_CASE("batch edits are flagged") {
  std::vector<IssueRecord> issues;
  for (int i = 0; i < 6; ++i) {
    IssueRecord issue = make_issue("B-" + std::to_string(i), 1'000'000);
    add_priority_change(issue, 2'000'000 + i, Priority::Major, Priority::Minor, "bot");
    issues.push_back(issue);
  }
  IssueRecord lone = make_issue("B-9", 1'000'000);
  add_priority_change(lone, 3'000'000, Priority::Major, Priority::Minor, "human");
  issues.push_back(lone);
  const EventKeySet flagged = flag_batch_edits(issues);
  CHECK(flagged.size() == 6);
  CHECK(flagged.count({"B-9", 1}) == 0);
  const auto rows = build_phase2_dataset(issues, flagged);
  CHECK(rows.size() == 1);
}

TEST_CASE("labelled datasets") {
  std::vector<IssueRecord> issues;
  for (int i = 0; i < 12; ++i) {
    IssueRecord issue = make_issue("D-" + std::to_string(i), 1000 * (i + 1));
    if (i < 5) add_priority_change(issue, 1000 * (i + 1) + 500, Priority::Major, Priority::Minor);
    if (i == 0) {
      add_priority_change(issue, 1700, Priority::Minor, Priority::Critical);
      add_priority_change(issue, 1900, Priority::Critical, Priority::Trivial);
    }
    issues.push_back(issue);
  }
  const auto p1 = build_phase1_dataset(issues);
  CHECK(p1.size() == 12);
  CHECK(std::count_if(p1.begin(), p1.end(), [](const Phase1Row& r) { return r.label == 1; }) == 5);
  CHECK(p1[0].label == 1);  // three changes, one row
  for (const auto& r : p1) {
    CHECK(r.snapshot.comments_before().empty());
    CHECK(r.snapshot.history_before().empty());
  }
  const auto p2 = build_phase2_dataset(issues);
  CHECK(p2.size() == 7);
  CHECK(std::count_if(p2.begin(), p2.end(), [](const Phase2Row& r) { return r.issue_key == "D-0"; }) == 3);
  CHECK(std::count_if(p2.begin(), p2.end(), [](const Phase2Row& r) { return r.issue_key == "D-7"; }) == 0);
  const auto d1 = std::find_if(p2.begin(), p2.end(), [](const Phase2Row& r) { return r.issue_key == "D-1"; });
  REQUIRE(d1 != p2.end());
  CHECK(code(d1->label) == 4);  // Major -> Minor
  for (const auto& r : p2) {
    for (const auto& c : r.snapshot.comments_before()) CHECK(c.timestamp < r.event.event_time);
    for (const auto& h : r.snapshot.history_before()) CHECK(h.timestamp < r.event.event_time);
  }
}

TEST_CASE("project statistics") {
  SUBCASE("a project without changes") {
    std::vector<IssueRecord> issues;
    for (int i = 0; i < 10; ++i) issues.push_back(make_issue("Z-" + std::to_string(i), 1000, Priority::Major, "r", "Z"));
    const auto stats = project_stats(issues);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].project_id == "Z");
    CHECK(stats[0].change_probability == 0.0);
    CHECK(stats[1].project_id == std::string(kAllProjects));
  }
  SUBCASE("planted 20% change rate matches the generator ledger") {
    CorpusConfig cfg = small_corpus(1, 1000, 11);
    cfg.scale_projects = true;
    cfg.project_rate_min = 0.2;
    cfg.project_rate_max = 0.2;
    const SyntheticCorpus corpus = generate_corpus(cfg);
    const auto stats = project_stats(corpus.issues);
    std::size_t changed = 0;
    for (const auto& b : corpus.truth.bugs) changed += b.n_changes > 0 ? 1 : 0;
    CHECK(stats[0].n_bugs_with_change == changed);
    CHECK(std::abs(stats[0].change_probability - 0.2) < 0.04);
  }
}

TEST_CASE("correction pipeline invariants") {
  SyntheticCorpus corpus = generate_corpus(small_corpus(3, 200, 9));
  NoiseConfig noise;
  noise.rapid_edit_rate = 0.2;
  noise.alias_rate = 0.1;
  std::vector<IssueRecord> noisy = inject_noise(corpus.issues, noise, corpus.truth);
  IssueRecord bad = make_issue("X-1", 1000);
  bad.raw_initial_priority = "weird";
  noisy.push_back(bad);
  const std::size_t n_in = noisy.size();
  const CorrectionResult r = correct_issues(noisy);
  // removal accounting
  CHECK(n_in == r.issues.size() + r.removed.size());
  // conservation
  std::size_t events = 0;
  for (const auto& issue : r.issues) events += extract_priority_changes(issue).size();
  CHECK(build_phase2_dataset(r.issues).size() == events);
  // sorted output
  CHECK(std::is_sorted(r.issues.begin(), r.issues.end(), [](const IssueRecord& a, const IssueRecord& b) {
    return std::tie(a.project_id, a.issue_key) < std::tie(b.project_id, b.issue_key);
  }));
}
