#include "support.hpp"

#include <doctest.h>

using namespace priodrift;
using namespace priodrift::testing;

TEST_CASE("priority names encode to codes") {
  CHECK(code(encode_priority("Blocker")) == 1);
  CHECK(code(encode_priority("trivial")) == 5);
  CHECK(encode_priority(" MAJOR ") == Priority::Major);
  CHECK_THROWS_AS(encode_priority("P0"), Error);
  try {
    encode_priority("P0");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownPriority);
  }
}

TEST_CASE("priority encoding round trips for all five names") {
  for (Priority p : kAllPriorities) {
    CHECK(encode_priority(priority_name(p)) == p);
    CHECK(priority_from_code(code(p)) == p);
  }
}

TEST_CASE("priority change extraction") {
  SUBCASE("no priority items gives no events") {
    IssueRecord issue = make_issue("A-1", 1000);
    add_history(issue, 1100, "assignee");
    CHECK(extract_priority_changes(issue).empty());
  }
  SUBCASE("two changes get ordinals 1 and 2") {
    IssueRecord issue = make_issue("A-1", 1000);
    add_priority_change(issue, 2000, Priority::Major, Priority::Blocker);
    add_priority_change(issue, 3000, Priority::Blocker, Priority::Critical);
    const auto events = extract_priority_changes(issue);
    REQUIRE(events.size() == 2);
    CHECK(events[0].ordinal == 1);
    CHECK(events[1].ordinal == 2);
    CHECK(events[0].old_priority == Priority::Major);
    CHECK(events[0].new_priority == Priority::Blocker);
    CHECK(events[1].new_priority == Priority::Critical);
    CHECK(events[1].event_time == 3000);
  }
  SUBCASE("a from value contradicting the current priority is inconsistent") {
    IssueRecord issue = make_issue("A-1", 1000, Priority::Critical);
    add_priority_change(issue, 2000, Priority::Major, Priority::Minor);
    try {
      extract_priority_changes(issue);
      FAIL("expected InconsistentTrail");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InconsistentTrail);
    }
  }
}

TEST_CASE("snapshots hide everything at or after the cut") {
  IssueRecord issue = make_issue("A-1", 1000);
  for (int i = 0; i < 10; ++i) add_comment(issue, 2000 + 100 * i);
  add_priority_change(issue, 2550, Priority::Major, Priority::Critical);
  add_history(issue, 2600, "labels");

  SUBCASE("cut at creation") {
    const IssueSnapshot s = snapshot_at(issue, issue.created_at);
    CHECK(s.comments_before().empty());
    CHECK(s.history_before().empty());
    CHECK(s.current_priority == Priority::Major);
  }
  SUBCASE("cut at a change after six comments") {
    const IssueSnapshot s = snapshot_at(issue, 2550);
    CHECK(s.comments_before().size() == 6);
    CHECK(s.history_before().empty());
    CHECK(s.current_priority == Priority::Major);
  }
  SUBCASE("cut after all events equals the full issue") {
    const IssueSnapshot s = snapshot_at(issue, 100000);
    CHECK(s.comments_before().size() == issue.comments.size());
    CHECK(s.history_before().size() == issue.history.size());
    CHECK(s.current_priority == Priority::Critical);
  }
  SUBCASE("an event exactly at the cut is excluded") {
    const IssueSnapshot s = snapshot_at(issue, 2000);
    CHECK(s.comments_before().empty());
  }
  SUBCASE("a cut before creation is rejected") {
    CHECK_THROWS_AS(snapshot_at(issue, 999), Error);
  }
}

TEST_CASE("snapshot invariants hold on a synthetic corpus") {
  const SyntheticCorpus corpus = generate_corpus(small_corpus(2, 150, 3));
  std::size_t events_checked = 0;
  for (const auto& issue : corpus.issues) {
    for (const auto& e : extract_priority_changes(issue)) {
      // priority replay
      CHECK(snapshot_at(issue, e.event_time).current_priority == e.old_priority);
      ++events_checked;
    }
    // replay determinism: restricting a later snapshot to an earlier cut gives the earlier snapshot
    std::vector<Timestamp> cuts = {issue.created_at};
    for (const auto& c : issue.comments) cuts.push_back(c.timestamp);
    for (const auto& h : issue.history) cuts.push_back(h.timestamp + 1);
    std::sort(cuts.begin(), cuts.end());
    const Timestamp t1 = cuts[cuts.size() / 2];
    const Timestamp t2 = cuts.back();
    const IssueSnapshot early = snapshot_at(issue, t1);
    const IssueSnapshot late = snapshot_at(issue, t2);
    const IssueSnapshot restricted = snapshot_at(late.base, t1);
    CHECK(restricted.comments_before().size() == early.comments_before().size());
    CHECK(restricted.history_before().size() == early.history_before().size());
    CHECK(restricted.current_priority == early.current_priority);
    for (const auto& c : early.comments_before()) CHECK(c.timestamp < t1);
    for (const auto& h : early.history_before()) CHECK(h.timestamp < t1);
  }
  CHECK(events_checked > 10);
}
