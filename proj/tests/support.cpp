#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace priodrift::testing {

IssueRecord make_issue(const std::string& key, Timestamp created, Priority initial, const std::string& reporter,
                       const std::string& project) {
  IssueRecord issue;
  issue.project_id = project;
  issue.issue_key = key;
  issue.reporter_id = reporter;
  issue.created_at = created;
  issue.initial_priority = initial;
  issue.raw_initial_priority = std::string(priority_name(initial));
  issue.summary_text = "summary of " + key;
  issue.description_text = "description";
  return issue;
}

void add_comment(IssueRecord& issue, Timestamp t, const std::string& author, std::size_t length) {
  issue.comments.push_back({author, t, length, std::string(length, 'a')});
}

void add_priority_change(IssueRecord& issue, Timestamp t, Priority from, Priority to, const std::string& author) {
  issue.history.push_back({author, t, "priority", std::string(priority_name(from)), std::string(priority_name(to))});
}

void add_history(IssueRecord& issue, Timestamp t, const std::string& field, const std::string& author,
                 const std::string& from, const std::string& to) {
  issue.history.push_back({author, t, field, from, to});
}

void add_resolution(IssueRecord& issue, Timestamp t) { issue.history.push_back({"dev", t, "status", "Open", "Resolved"}); }

ReferenceTimeline amq5430_timeline() {
  ReferenceTimeline r;
  r.start = parse_timestamp("2014-11-11T10:18:00Z");
  r.end = parse_timestamp("2014-11-26T05:58:00Z");
  for (const char* t : {"2014-11-12T07:18:00Z", "2014-11-17T09:54:00Z", "2014-11-19T10:20:00Z",
                        "2014-11-25T07:23:00Z", "2014-11-26T02:28:00Z"}) {
    r.comments.push_back(parse_timestamp(t));
  }
  r.expected_diffs = {0.21, 0.34, 0.88, 5.57};
  return r;
}

// ---------------------------------------------------------------------------
// Short-interval fixtures

std::vector<ShortIntervalCase> short_interval_cases() {
  using P = Priority;
  const P B = P::Blocker, C = P::Critical, M = P::Major, N = P::Minor, T = P::Trivial;
  const std::string r = "reporter";
  std::vector<ShortIntervalCase> cs = {
      // Rule (a): reporter edits right after creation redefine the initial priority.
      {"reporter edit at 3 min", "a", M, {{r, 3, M, C}}, C, {}},
      {"reporter edit exactly at threshold", "a", M, {{r, 5, M, C}}, C, {}},
      {"reporter edit after threshold", "a", M, {{r, 6, M, C}}, M, {{r, 6, M, C}}},
      {"other user edit at 3 min", "a", M, {{"u", 3, M, C}}, M, {{"u", 3, M, C}}},
      {"two reporter edits in window", "a", M, {{r, 1, M, C}, {r, 2, C, B}}, B, {}},
      {"second reporter edit outside window", "a", M, {{r, 2, M, C}, {r, 7, C, B}}, C, {{r, 7, C, B}}},
      {"reporter edit then other user", "a", M, {{r, 2, M, C}, {"u", 3, C, N}}, C, {{"u", 3, C, N}}},
      {"reporter edit then late reporter edit", "a", M, {{r, 4.99, M, T}, {r, 20, T, N}}, T, {{r, 20, T, N}}},
      {"reporter edit at creation instant", "a", M, {{r, 0, M, C}}, C, {}},
      {"reporter round trip inside window", "a", M, {{r, 3, M, C}, {r, 4, C, M}}, M, {}},
      // Rule (b): a same-user round trip within the threshold is deleted.
      {"round trip in 2 min", "b", M, {{"u", 60, M, B}, {"u", 62, B, M}}, M, {}},
      {"round trip exactly at threshold", "b", M, {{"u", 60, M, B}, {"u", 65, B, M}}, M, {}},
      {"round trip after threshold", "b", M, {{"u", 60, M, B}, {"u", 66, B, M}}, M, {{"u", 60, M, B}, {"u", 66, B, M}}},
      {"round trip by two users", "b", M, {{"u", 60, M, B}, {"v", 62, B, M}}, M, {{"u", 60, M, B}, {"v", 62, B, M}}},
      {"three item round trip", "b", M, {{"u", 60, M, B}, {"u", 61, B, C}, {"u", 63, C, M}}, M, {}},
      {"round trip then later change", "b", M, {{"u", 60, M, B}, {"u", 62, B, M}, {"u", 200, M, N}}, M,
       {{"u", 200, M, N}}},
      {"two round trips", "b", M, {{"u", 60, M, B}, {"u", 61, B, M}, {"v", 100, M, N}, {"v", 103, N, M}}, M, {}},
      {"round trip after unrelated change", "b", M, {{"u", 30, M, C}, {"w", 60, C, B}, {"w", 62, B, C}}, M,
       {{"u", 30, M, C}}},
      {"reporter round trip late", "b", M, {{r, 60, M, B}, {r, 64, B, M}}, M, {}},
      {"round trip then quick change", "b", M, {{"u", 60, M, B}, {"u", 62, B, M}, {"u", 63, M, C}}, M,
       {{"u", 63, M, C}}},
      // Rule (c): consecutive same-user edits within the threshold merge.
      {"two edits in 4 min", "c", M, {{"u", 60, M, B}, {"u", 64, B, C}}, M, {{"u", 64, M, C}}},
      {"two edits exactly at threshold", "c", M, {{"u", 60, M, B}, {"u", 65, B, C}}, M, {{"u", 65, M, C}}},
      {"two edits after threshold", "c", M, {{"u", 60, M, B}, {"u", 66, B, C}}, M, {{"u", 60, M, B}, {"u", 66, B, C}}},
      {"two edits by two users", "c", M, {{"u", 60, M, B}, {"v", 64, B, C}}, M, {{"u", 60, M, B}, {"v", 64, B, C}}},
      {"three edits merge", "c", M, {{"u", 60, M, B}, {"u", 62, B, C}, {"u", 64, C, N}}, M, {{"u", 64, M, N}}},
      {"chained merge beyond threshold", "c", M, {{"u", 60, M, B}, {"u", 64, B, C}, {"u", 68, C, N}}, M,
       {{"u", 68, M, N}}},
      {"merge then other user", "c", M, {{"u", 60, M, B}, {"u", 62, B, C}, {"v", 63, C, N}}, M,
       {{"u", 62, M, C}, {"v", 63, C, N}}},
      {"merge across other fields", "c", M, {{"u", 60, M, B}, {"u", 62, B, C}}, M, {{"u", 62, M, C}}, {61}},
      {"two independent merges", "c", M, {{"u", 60, M, B}, {"u", 61, B, C}, {"v", 100, C, N}, {"v", 102, N, T}}, M,
       {{"u", 61, M, C}, {"v", 102, C, T}}},
      {"merge after initial correction", "c", M, {{r, 2, M, B}, {"u", 30, B, C}, {"u", 33, C, N}}, B,
       {{"u", 33, B, N}}},
      // Compositions that need several passes to reach the fixpoint.
      {"a then b then c", "fixpoint", M,
       {{r, 2, M, C}, {"u", 60, C, B}, {"u", 62, B, C}, {"v", 100, C, N}, {"v", 103, N, T}}, C, {{"v", 103, C, T}}},
      {"round trip through two steps", "fixpoint", M, {{"u", 60, M, B}, {"u", 62, B, C}, {"u", 64, C, M}}, M, {}},
      {"reporter window then lone edit", "fixpoint", M, {{r, 1, M, B}, {r, 3, B, C}, {r, 7, C, N}}, C,
       {{r, 7, C, N}}},
      {"merge exposes round trip", "fixpoint", M, {{"u", 60, M, B}, {"u", 64, B, C}, {"u", 68, C, M}}, M, {}},
  };
  return cs;
}

namespace {

Timestamp minutes(double m) { return static_cast<Timestamp>(std::llround(m * 60.0)); }

const Timestamp kCaseCreated = 1'600'000'000;

std::string describe_trail(const IssueRecord& issue) {
  std::ostringstream ss;
  ss << "initial=" << priority_name(issue.initial_priority) << " [";
  for (const auto& h : issue.history) {
    ss << h.author_id << "@" << (h.timestamp - kCaseCreated) << "s " << h.field << ":" << h.from_value << "->"
       << h.to_value << "; ";
  }
  ss << "]";
  return ss.str();
}

bool same_history(const IssueRecord& a, const IssueRecord& b) {
  if (a.initial_priority != b.initial_priority || a.history.size() != b.history.size()) return false;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const auto& x = a.history[i];
    const auto& y = b.history[i];
    if (x.author_id != y.author_id || x.timestamp != y.timestamp || x.field != y.field ||
        x.from_value != y.from_value || x.to_value != y.to_value) {
      return false;
    }
  }
  return true;
}

}  // namespace

IssueRecord build_case_issue(const ShortIntervalCase& c) {
  IssueRecord issue = make_issue("CASE-1", kCaseCreated, c.initial);
  std::vector<ChangeItem> items;
  for (const auto& s : c.input) {
    items.push_back({s.author, kCaseCreated + minutes(s.minutes), "priority", std::string(priority_name(s.from)),
                     std::string(priority_name(s.to))});
  }
  for (double m : c.other_items) items.push_back({"u", kCaseCreated + minutes(m), "assignee", "", "dev"});
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  issue.history = items;
  return issue;
}

std::string check_short_interval_case(const ShortIntervalCase& c) {
  const IssueRecord input = build_case_issue(c);
  const IssueRecord once = apply_short_interval_rules(input);
  ShortIntervalCase expected_case = c;
  expected_case.input = c.expected;
  expected_case.initial = c.expected_initial;
  const IssueRecord expected = build_case_issue(expected_case);
  if (!same_history(once, expected)) {
    return c.name + ": got " + describe_trail(once) + ", expected " + describe_trail(expected);
  }
  const IssueRecord twice = apply_short_interval_rules(once);
  if (!same_history(once, twice)) return c.name + ": not idempotent, second pass gave " + describe_trail(twice);
  return {};
}

// ---------------------------------------------------------------------------
// Oracles

double brute_max_freq_change(const std::vector<TimedEvent>& events, double start, double end, Measure measure) {
  std::vector<double> times;
  for (const auto& e : events) times.push_back(e.time);
  std::sort(times.begin(), times.end());
  auto measure_of = [&](bool before, double split) {
    double total = 0.0;
    std::set<std::string> keys;
    for (const auto& e : events) {
      if ((e.time < split) != before) continue;
      if (measure == Measure::Count) total += 1.0;
      if (measure == Measure::Magnitude) total += e.magnitude;
      if (measure == Measure::DistinctKeys) keys.insert(e.key);
    }
    return measure == Measure::DistinctKeys ? static_cast<double>(keys.size()) : total;
  };
  double best = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double split = (times[k - 1] + times[k]) / 2.0;
    const double before_days = (split - start) / 86400.0;
    const double after_days = (end - split) / 86400.0;
    if (before_days <= 0.0 || after_days <= 0.0) continue;
    const double f_before = measure_of(true, split) / before_days;
    if (f_before <= 0.0) continue;
    const double f_after = measure_of(false, split) / after_days;
    best = std::max(best, std::abs((f_after - f_before) / f_before));
  }
  return best;
}

std::vector<double> brute_bh_q(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<double> q(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    // rank of p[i]: number of p values strictly smaller, plus ties before i
    double best = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (p[j] < p[i] || (p[j] == p[i] && j < i)) continue;
      std::size_t rank = 0;
      for (std::size_t k = 0; k < m; ++k) {
        if (p[k] < p[j] || (p[k] == p[j] && k <= j)) ++rank;
      }
      best = std::min(best, static_cast<double>(m) * p[j] / static_cast<double>(rank));
    }
    q[i] = best;
  }
  return q;
}

std::vector<bool> brute_bh_reject(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  std::size_t k_max = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / static_cast<double>(m)) k_max = k;
  }
  std::vector<bool> reject(m, false);
  if (k_max == 0) return reject;
  const double cutoff = sorted[k_max - 1];
  for (std::size_t i = 0; i < m; ++i) reject[i] = p[i] <= cutoff;
  return reject;
}

BruteMetrics brute_binary(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1 && y_true[i] == 1) tp += 1;
    if (y_pred[i] == 1 && y_true[i] != 1) fp += 1;
    if (y_pred[i] != 1 && y_true[i] == 1) fn += 1;
  }
  BruteMetrics m;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

std::pair<double, double> brute_multiclass(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                           const std::vector<int>& classes) {
  double weighted = 0, macro = 0;
  for (int c : classes) {
    std::vector<int> t, p;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      t.push_back(y_true[i] == c ? 1 : 0);
      p.push_back(y_pred[i] == c ? 1 : 0);
    }
    const double f1 = brute_binary(t, p).f1;
    const double support = static_cast<double>(std::count(y_true.begin(), y_true.end(), c));
    weighted += f1 * support;
    macro += f1;
  }
  return {y_true.empty() ? 0.0 : weighted / static_cast<double>(y_true.size()),
          macro / static_cast<double>(classes.size())};
}

bool in_convex_hull(const std::vector<std::pair<double, double>>& points, std::pair<double, double> q, double tol) {
  auto pts = points;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](std::pair<double, double> o, std::pair<double, double> a, std::pair<double, double> b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  if (pts.size() == 1) return std::hypot(q.first - pts[0].first, q.second - pts[0].second) <= tol;
  std::vector<std::pair<double, double>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    // segment: collinear and between the endpoints
    const auto a = hull.front(), b = hull.back();
    const double len = std::hypot(b.first - a.first, b.second - a.second);
    if (std::abs(cross(a, b, q)) > tol * std::max(1.0, len)) return false;
    const double dot = (q.first - a.first) * (b.first - a.first) + (q.second - a.second) * (b.second - a.second);
    return dot >= -tol && dot <= len * len + tol;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.first - a.first, b.second - a.second);
    if (cross(a, b, q) < -tol * std::max(1.0, len)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Leakage

std::vector<IssueRecord> truncate_corpus(const std::vector<IssueRecord>& corpus, Timestamp t) {
  std::vector<IssueRecord> out;
  for (const auto& issue : corpus) {
    if (issue.created_at >= t) continue;
    IssueRecord copy = issue;
    std::erase_if(copy.comments, [t](const CommentRecord& c) { return c.timestamp >= t; });
    std::erase_if(copy.history, [t](const ChangeItem& h) { return h.timestamp >= t; });
    out.push_back(std::move(copy));
  }
  return out;
}

LeakageReport check_leakage(const std::vector<IssueRecord>& corpus, std::size_t max_rows) {
  LeakageReport report;
  const FeatureConfig fc;
  const auto p1 = build_phase1_dataset(corpus);
  for (const auto& row : p1) {
    ++report.phase1_rows;
    if (!row.snapshot.comments_before().empty() || !row.snapshot.history_before().empty()) {
      ++report.phase1_violations;
      if (report.first_violation.empty()) report.first_violation = "phase 1 row " + row.issue_key + " has events";
    }
  }
  const auto rows = build_phase2_dataset(corpus);
  const FeatureSchema schema = make_schema(Phase::II, corpus, fc);
  const FeatureExtractor full(corpus, fc);
  std::vector<std::size_t> picks(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) picks[i] = i;
  if (picks.size() > max_rows) picks.resize(max_rows);
  std::vector<int> bad(picks.size(), 0);
  std::vector<std::string> detail(picks.size());
  parallel_for(picks.size(), [&](std::size_t i) {
    const Phase2Row& row = rows[picks[i]];
    const FeatureRow a = full.phase2_row(row.snapshot, schema);
    const std::vector<IssueRecord> cut = truncate_corpus(corpus, row.event.event_time);
    const FeatureExtractor truncated(cut, fc);
    const FeatureRow b = truncated.phase2_row(row.snapshot, schema);
    for (std::size_t c = 0; c < a.values.size(); ++c) {
      if (a.values[c] != b.values[c]) {
        bad[i] = 1;
        detail[i] = row.issue_key + "#" + std::to_string(row.event.ordinal) + " column " + a.names[c] + ": " +
                    std::to_string(a.values[c]) + " vs " + std::to_string(b.values[c]);
        break;
      }
    }
  });
  report.rows_checked = picks.size();
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if (!bad[i]) continue;
    ++report.phase2_violations;
    if (report.first_violation.empty()) report.first_violation = detail[i];
  }
  return report;
}

CorpusConfig small_corpus(std::size_t projects, std::size_t bugs, std::uint64_t seed) {
  CorpusConfig c;
  c.n_projects = projects;
  c.bugs_per_project = bugs;
  c.reporters_per_project = 20;
  c.developers_per_project = 6;
  c.seed = seed;
  return c;
}

}  // namespace priodrift::testing
