#pragma once

#include "priodrift/pipeline.hpp"

#include <string>
#include <vector>

namespace priodrift::testing {

// ---------------------------------------------------------------------------
// Issue construction

IssueRecord make_issue(const std::string& key, Timestamp created, Priority initial = Priority::Major,
                       const std::string& reporter = "reporter", const std::string& project = "P");
void add_comment(IssueRecord& issue, Timestamp t, const std::string& author = "dev", std::size_t length = 10);
void add_priority_change(IssueRecord& issue, Timestamp t, Priority from, Priority to, const std::string& author = "dev");
void add_history(IssueRecord& issue, Timestamp t, const std::string& field, const std::string& author = "dev",
                 const std::string& from = "", const std::string& to = "x");
void add_resolution(IssueRecord& issue, Timestamp t);

// ---------------------------------------------------------------------------
// Reference timeline with five comments and known relative frequency changes.

struct ReferenceTimeline {
  Timestamp start = 0;
  Timestamp end = 0;
  std::vector<Timestamp> comments;
  std::vector<double> expected_diffs;  // two decimals
};

ReferenceTimeline amq5430_timeline();

// ---------------------------------------------------------------------------
// Short-interval correction fixtures (threshold 5 minutes).

struct TrailStep {
  std::string author;
  double minutes = 0;  // after creation
  Priority from = Priority::Major;
  Priority to = Priority::Major;
};

struct ShortIntervalCase {
  std::string name;
  std::string rule;  // "a", "b", "c" or "fixpoint"
  Priority initial = Priority::Major;
  std::vector<TrailStep> input;
  Priority expected_initial = Priority::Major;
  std::vector<TrailStep> expected;
  /// Non-priority items at these minutes, expected to survive untouched.
  std::vector<double> other_items;
};

std::vector<ShortIntervalCase> short_interval_cases();
IssueRecord build_case_issue(const ShortIntervalCase& c);
/// Empty when the corrected issue matches the expectation and correction is idempotent.
std::string check_short_interval_case(const ShortIntervalCase& c);

// ---------------------------------------------------------------------------
// Independent oracles

/// Recomputes every split directly from the event list.
double brute_max_freq_change(const std::vector<TimedEvent>& events, double start, double end, Measure measure);

/// Adjusted value per p: min over ranks j >= rank(i) of m p_(j) / j, capped at 1.
std::vector<double> brute_bh_q(const std::vector<double>& p);
/// Rejection set of the step-up procedure: largest k with p_(k) <= k alpha / m.
std::vector<bool> brute_bh_reject(const std::vector<double>& p, double alpha);

struct BruteMetrics {
  double precision = 0, recall = 0, f1 = 0;
};
BruteMetrics brute_binary(const std::vector<int>& y_true, const std::vector<int>& y_pred);
/// (weighted, macro) F1 from raw label pairs.
std::pair<double, double> brute_multiclass(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                           const std::vector<int>& classes);

/// Point-in-convex-hull test in 2-D with an absolute tolerance.
bool in_convex_hull(const std::vector<std::pair<double, double>>& points, std::pair<double, double> q,
                    double tol = 1e-9);

// ---------------------------------------------------------------------------
// Leakage

/// Copy of the corpus with everything at or after `t` removed: issues created
/// at or after t are dropped and other issues lose their later events.
std::vector<IssueRecord> truncate_corpus(const std::vector<IssueRecord>& corpus, Timestamp t);

struct LeakageReport {
  std::size_t rows_checked = 0;
  std::size_t phase2_violations = 0;
  std::size_t phase1_rows = 0;
  std::size_t phase1_violations = 0;
  std::string first_violation;
};

/// Compares every Phase II feature row against the same row computed on the
/// truncated corpus, for up to `max_rows` rows.
LeakageReport check_leakage(const std::vector<IssueRecord>& corpus, std::size_t max_rows);

/// Small planted-signal corpus with noise off; cheap enough for unit tests.
CorpusConfig small_corpus(std::size_t projects, std::size_t bugs, std::uint64_t seed = 1);

}  // namespace priodrift::testing
