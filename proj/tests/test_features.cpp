#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace priodrift;
using namespace priodrift::testing;

namespace {

double value_of(const FeatureRow& row, const std::string& name) {
  for (std::size_t i = 0; i < row.names.size(); ++i) {
    if (row.names[i] == name) return row.values[i];
  }
  throw std::runtime_error("no column " + name);
}

std::vector<TimedEvent> random_timeline(Rng& rng, double start, double end, std::size_t n) {
  std::vector<TimedEvent> events;
  static const char* authors[] = {"a", "b", "c", "d"};
  for (std::size_t i = 0; i < n; ++i) {
    double t = std::floor(start + rng.uniform() * (end - start));
    if (!events.empty() && rng.uniform() < 0.15) t = events[rng.index(events.size())].time;  // ties
    events.push_back({t, authors[rng.index(4)], static_cast<double>(1 + rng.index(500))});
  }
  return events;
}

FeatureConfig plain_config() {
  FeatureConfig fc;
  fc.text_mode = TextMode::Hashed;
  fc.text_width = 64;
  return fc;
}

}  // namespace

TEST_CASE("reporter weight") {
  CHECK(reporter_weight(100, 100, 50) == 1.0);
  CHECK(reporter_weight(50, 100, 50) == doctest::Approx(std::exp(-1.0)));
  CHECK(reporter_weight(100, 100, 0) == 1.0);
  CHECK(reporter_weight(10, 100, 0) == 1.0);
}

TEST_CASE("weighted reporter mean at ages 0, T and 2T") {
  const double T = 86400.0, tc = 10 * T;
  const double w0 = reporter_weight(tc, tc, T), w1 = reporter_weight(tc - T, tc, T), w2 = reporter_weight(tc - 2 * T, tc, T);
  const double rep_ave = (1 * w0 + 3 * w1 + 5 * w2) / (w0 + w1 + w2);
  const double oracle = (1 + 3 * std::exp(-1.0) + 5 * std::exp(-2.0)) / (1 + std::exp(-1.0) + std::exp(-2.0));
  CHECK(rep_ave == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(rep_ave == doctest::Approx(1.8496).epsilon(1e-4));
}

TEST_CASE("reporter history features") {
  const Timestamp day = 86400;
  SUBCASE("equal weights, priorities 2 and 4") {
    std::vector<IssueRecord> corpus = {make_issue("R-1", 10 * day, Priority::Critical, "r"),
                                       make_issue("R-2", 10 * day, Priority::Minor, "r"),
                                       make_issue("R-3", 20 * day, Priority::Major, "r")};
    const ReporterHistory h(corpus);
    const ReporterFeatures f = h.query("r", 20 * day, "R-3");
    CHECK(f.rep_ave == doctest::Approx(3.0));
    CHECK(f.rep_med == doctest::Approx(3.0));
    CHECK(f.bug_count == 2);
  }
  SUBCASE("one upward and one downward change") {
    IssueRecord a = make_issue("R-1", 1 * day, Priority::Major, "r");
    add_priority_change(a, 2 * day, Priority::Major, Priority::Critical);
    IssueRecord b = make_issue("R-2", 1 * day, Priority::Major, "r");
    add_priority_change(b, 2 * day, Priority::Major, Priority::Trivial);
    const ReporterHistory h({a, b});
    const ReporterFeatures f = h.query("r", 5 * day, "X");
    CHECK(f.rep_up == doctest::Approx(0.5));
    CHECK(f.changed_count == 2);
    CHECK(f.rep_ave_rg == doctest::Approx(1.5));
  }
  SUBCASE("cold start imputation") {
    const ReporterHistory h(std::vector<IssueRecord>{});
    const ReporterFeatures f = h.query("nobody", 100, "X");
    CHECK(f.rep_ave == 3.0);
    CHECK(f.rep_med == 3.0);
    CHECK(f.rep_up == 0.5);
    CHECK(f.rep_ave_rg == 0.0);
  }
  SUBCASE("history spanning the horizon uses the earliest report") {
    // ages T, T/2 and 0+ relative to the cut with horizon T.
    std::vector<IssueRecord> corpus = {make_issue("R-1", 0, Priority::Blocker, "r"),
                                       make_issue("R-2", 5 * day, Priority::Major, "r"),
                                       make_issue("R-3", 10 * day - 1, Priority::Trivial, "r")};
    const ReporterHistory h(corpus);
    const ReporterFeatures f = h.query("r", 10 * day, "X");
    const double T = 10.0 * day;
    const double w[] = {std::exp(-1.0), std::exp(-0.5), std::exp(-1.0 / T)};
    CHECK(f.rep_ave == doctest::Approx((1 * w[0] + 3 * w[1] + 5 * w[2]) / (w[0] + w[1] + w[2])).epsilon(1e-12));
  }
}

TEST_CASE("project state and flow") {
  const Timestamp day = 86400;
  std::vector<IssueRecord> corpus = {make_issue("P-1", 1 * day, Priority::Critical),
                                     make_issue("P-2", 2 * day, Priority::Major),
                                     make_issue("P-3", 3 * day, Priority::Minor)};
  add_resolution(corpus[0], 8 * day);
  IssueRecord late = make_issue("P-4", 6 * day, Priority::Major);
  corpus.push_back(late);
  const ProjectIndex idx(corpus);
  const ProjectState s = idx.state_at("P", 4 * day);
  CHECK(s.open_count == 3.0);
  CHECK(s.average_priority == doctest::Approx(3.0));
  const ProjectFlow f = idx.flow("P", 2 * day, 9 * day, "P-2");
  CHECK(f.new_count == 2.0);  // P-3 and P-4, not P-2 itself
  CHECK(f.close_count == 1.0);
  const ProjectState empty = idx.state_at("EMPTY", 4 * day);
  CHECK(empty.open_count == 0.0);
  CHECK(empty.average_priority == 3.0);
}

TEST_CASE("reference comment timeline") {
  const ReferenceTimeline ref = amq5430_timeline();
  std::vector<TimedEvent> events;
  for (Timestamp t : ref.comments) events.push_back({static_cast<double>(t), "a", 1.0});
  const auto diffs = frequency_diffs(events, static_cast<double>(ref.start), static_cast<double>(ref.end), Measure::Count);
  REQUIRE(diffs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(diffs[i] - ref.expected_diffs[i]) <= 0.01);
  CHECK(std::abs(max_freq_change(events, static_cast<double>(ref.start), static_cast<double>(ref.end), Measure::Count) -
                 5.57) <= 0.01);

  IssueRecord issue = make_issue("AMQ-5430", ref.start);
  IssueRecord history_twin = make_issue("AMQ-5430", ref.start);
  for (Timestamp t : ref.comments) {
    add_comment(issue, t);
    add_history(history_twin, t, "labels");
  }
  CHECK(std::abs(comment_change_features(snapshot_at(issue, ref.end)).max_num_diff - 5.57) <= 0.01);
  CHECK(std::abs(history_change_features(snapshot_at(history_twin, ref.end)).max_item_diff - 5.57) <= 0.01);
}

TEST_CASE("frequency change edge cases") {
  CHECK(max_freq_change({}, 0, 100, Measure::Count) == 0.0);
  CHECK(max_freq_change({{10, "a", 1}}, 0, 100, Measure::Count) == 0.0);
  CHECK(comment_change_features(snapshot_at(make_issue("E-1", 0), 1000)).max_num_diff == 0.0);
  const HistoryChange h = history_change_features(snapshot_at(make_issue("E-1", 0), 1000));
  CHECK(h.max_item_diff == 0.0);
  CHECK(h.max_author_diff == 0.0);
  CHECK(h.max_field_diff == 0.0);

  std::vector<TimedEvent> uniform;
  for (int i = 0; i < 8; ++i) uniform.push_back({1000.0 * (i + 0.5), "a", 1.0});
  const auto diffs = frequency_diffs(uniform, 0, 8000, Measure::Count);
  for (double d : diffs) CHECK(std::abs(d) < 1e-12);
  CHECK(max_freq_change(uniform, 0, 8000, Measure::Count) == brute_max_freq_change(uniform, 0, 8000, Measure::Count));
}

TEST_CASE("distinct-key measures against brute force") {
  IssueRecord single = make_issue("S-1", 0);
  for (Timestamp t : {1000, 5000, 5200, 9000}) add_comment(single, t, "solo", 30);
  const IssueSnapshot snap = snapshot_at(single, 20000);
  std::vector<TimedEvent> ev;
  for (const auto& c : snap.comments_before()) ev.push_back({static_cast<double>(c.timestamp), c.author_id, 30.0});
  CHECK(comment_change_features(snap).max_pers_diff == brute_max_freq_change(ev, 0, 20000, Measure::DistinctKeys));

  IssueRecord same_field = make_issue("S-2", 0), three_fields = make_issue("S-3", 0);
  const std::vector<std::pair<Timestamp, std::string>> a_items = {{1000, "labels"}, {5000, "labels"}, {9000, "labels"}};
  const std::vector<std::pair<Timestamp, std::string>> b_items = {{1000, "labels"}, {5000, "assignee"}, {9000, "status"}};
  std::vector<TimedEvent> a_ev, b_ev;
  for (const auto& [t, f] : a_items) {
    add_history(same_field, t, f);
    a_ev.push_back({static_cast<double>(t), f, 1});
  }
  for (const auto& [t, f] : b_items) {
    add_history(three_fields, t, f);
    b_ev.push_back({static_cast<double>(t), f, 1});
  }
  const double a = history_change_features(snapshot_at(same_field, 10000)).max_field_diff;
  const double b = history_change_features(snapshot_at(three_fields, 10000)).max_field_diff;
  CHECK(a != b);
  CHECK(a == brute_max_freq_change(a_ev, 0, 10000, Measure::DistinctKeys));
  CHECK(b == brute_max_freq_change(b_ev, 0, 10000, Measure::DistinctKeys));
}

TEST_CASE("max_freq_change matches brute force on random timelines") {
  Rng rng(2024);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const double start = 1e9, end = start + 1 + std::floor(rng.uniform() * 90 * 86400);
    const auto events = random_timeline(rng, start, end, rng.index(21));
    for (Measure m : {Measure::Count, Measure::DistinctKeys, Measure::Magnitude}) {
      const double got = max_freq_change(events, start, end, m);
      const double want = brute_max_freq_change(events, start, end, m);
      if (std::abs(got - want) > 1e-12 * std::max(1.0, std::abs(want))) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("related bugs") {
  const Timestamp day = 86400;
  IssueRecord target = make_issue("L-1", 10 * day);
  target.components = {"core"};
  IssueRecord shares = make_issue("L-2", 1 * day);
  shares.components = {"core"};
  IssueRecord other = make_issue("L-3", 1 * day);
  other.components = {"ui"};
  {
    const CorpusIndex idx({target, shares, other});
    CHECK(idx.related_keys(target, 10 * day) == std::set<std::string>{"L-2"});
  }
  IssueRecord lonely = make_issue("L-4", 10 * day);
  {
    const CorpusIndex idx({lonely, shares, other});
    CHECK(idx.related_keys(lonely, 10 * day).empty());
  }
  IssueRecord labelled = make_issue("L-5", 10 * day);
  labelled.labels = {"perf"};
  labelled.linked_issue_keys = {"L-3"};
  IssueRecord a = make_issue("L-6", 2 * day);
  a.labels = {"perf"};
  {
    const CorpusIndex idx({labelled, a, other});
    CHECK(idx.related_keys(labelled, 10 * day) == std::set<std::string>{"L-6", "L-3"});
  }
}

TEST_CASE("basic features") {
  IssueRecord issue = make_issue("B-1", 1000, Priority::Major);
  issue.summary_text = std::string(64, 's');
  add_priority_change(issue, 5000, Priority::Major, Priority::Blocker);
  const std::vector<IssueRecord> corpus = {issue};
  const FeatureConfig fc = plain_config();
  const FeatureExtractor ex(corpus, fc);
  const FeatureSchema schema = make_schema(Phase::II, corpus, fc);
  const FeatureRow at_creation = ex.phase2_row(snapshot_at(issue, 1000), schema);
  CHECK(value_of(at_creation, "Changed") == 0.0);
  CHECK(value_of(at_creation, "PCNum") == 0.0);
  CHECK(value_of(at_creation, "PCDir") == 0.0);
  CHECK(value_of(at_creation, "PCRange") == 0.0);
  CHECK(value_of(at_creation, "SmyLen") == 64.0);
  const FeatureRow later = ex.phase2_row(snapshot_at(issue, 6000), schema);
  CHECK(value_of(later, "PCDir") == 1.0);
  CHECK(value_of(later, "PCRange") == 2.0);
  CHECK(value_of(later, "CurPri") == 1.0);
  CHECK(ex.phase2_row(snapshot_at(issue, 6000), schema).values == later.values);
}

TEST_CASE("text vectors") {
  const auto zero = hashed_text_features("", "", 64);
  CHECK(zero.size() == 64);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));
  CHECK(hashed_text_features("crash on save", "stack trace", 64) == hashed_text_features("crash on save", "stack trace", 64));
  EmbeddingStore store;
  store.insert("K-1", 100, {0.1, 0.2});
  CHECK(store.lookup("K-1", 100) == std::vector<double>{0.1, 0.2});
  try {
    store.lookup("K-2", 100);
    FAIL("expected MissingEmbedding");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingEmbedding);
  }
}

TEST_CASE("schema layout and manifest persistence") {
  const SyntheticCorpus corpus = generate_corpus(small_corpus(2, 60, 4));
  const FeatureConfig fc = plain_config();
  const FeatureSchema s1 = make_schema(Phase::I, corpus.issues, fc);
  CHECK(s1.width() == 4 + 11 + 64);
  const FeatureSchema back = FeatureSchema::from_json(s1.to_json());
  CHECK(back.names == s1.names);
  CHECK(back.fingerprint() == s1.fingerprint());
  const FeatureSchema again = make_schema(Phase::I, corpus.issues, fc);
  CHECK(again.names == s1.names);
  const FeatureExtractor ex(corpus.issues, fc);
  const FeatureMatrix m = ex.phase1_matrix(build_phase1_dataset(corpus.issues), s1);
  CHECK(static_cast<std::size_t>(m.values.cols()) == s1.width());
  CHECK(m.values.allFinite());
}

TEST_CASE("feature invariants on a synthetic corpus") {
  const SyntheticCorpus corpus = generate_corpus(small_corpus(2, 200, 6));
  const FeatureConfig fc = plain_config();
  const FeatureExtractor ex(corpus.issues, fc);
  const FeatureSchema schema = make_schema(Phase::II, corpus.issues, fc);
  const auto rows = build_phase2_dataset(corpus.issues);
  REQUIRE(rows.size() > 20);

  SUBCASE("shrinking the cut never increases counts") {
    for (std::size_t i = 0; i < rows.size(); i += 3) {
      const auto& issue = *std::find_if(corpus.issues.begin(), corpus.issues.end(),
                                        [&](const IssueRecord& x) { return x.issue_key == rows[i].issue_key; });
      const Timestamp t2 = rows[i].event.event_time;
      const Timestamp t1 = issue.created_at + (t2 - issue.created_at) / 2;
      const FeatureRow late = ex.phase2_row(snapshot_at(issue, t2), schema);
      const FeatureRow early = ex.phase2_row(snapshot_at(issue, t1), schema);
      for (const char* c : {"PCNum", "RelNum", "RepBugNum"}) CHECK(value_of(early, c) <= value_of(late, c));
      CHECK(snapshot_at(issue, t1).comments_before().size() <= snapshot_at(issue, t2).comments_before().size());
    }
  }
  SUBCASE("weighted means stay within bounds") {
    const ReporterHistory h(corpus.issues);
    for (const auto& row : rows) {
      const ReporterFeatures f = h.query(row.snapshot.base.reporter_id, row.event.event_time, row.issue_key);
      CHECK(f.rep_up >= 0.0);
      CHECK(f.rep_up <= 1.0);
      CHECK(f.rep_ave >= 1.0);
      CHECK(f.rep_ave <= 5.0);
    }
  }
  SUBCASE("translating every timestamp leaves features unchanged") {
    const Timestamp shift = 7 * 86400 + 13;
    std::vector<IssueRecord> shifted = corpus.issues;
    for (auto& issue : shifted) {
      issue.created_at += shift;
      for (auto& c : issue.comments) c.timestamp += shift;
      for (auto& h : issue.history) h.timestamp += shift;
    }
    const FeatureExtractor ex2(shifted, fc);
    const auto rows2 = build_phase2_dataset(shifted);
    REQUIRE(rows2.size() == rows.size());
    const FeatureMatrix a = ex.phase2_matrix(rows, schema);
    const FeatureMatrix b = ex2.phase2_matrix(rows2, schema);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("phase 2 rows do not see the future") {
  const SyntheticCorpus corpus = generate_corpus(small_corpus(2, 150, 8));
  const LeakageReport r = check_leakage(corpus.issues, 150);
  CHECK(r.rows_checked > 20);
  CHECK_MESSAGE(r.phase2_violations == 0, r.first_violation);
  CHECK(r.phase1_violations == 0);
}

TEST_CASE("feature CSV round trip") {
  const SyntheticCorpus corpus = generate_corpus(small_corpus(1, 80, 2));
  const FeatureConfig fc = plain_config();
  const FeatureExtractor ex(corpus.issues, fc);
  const FeatureSchema schema = make_schema(Phase::I, corpus.issues, fc);
  const FeatureMatrix m = ex.phase1_matrix(build_phase1_dataset(corpus.issues), schema);
  const std::string path = (std::filesystem::temp_directory_path() / "priodrift_features.csv").string();
  write_feature_csv(m, path, "config_hash=test");
  const FeatureMatrix back = read_feature_csv(path, schema);
  CHECK(back.values == m.values);
  CHECK(back.labels == m.labels);
  std::filesystem::remove(path);
}
