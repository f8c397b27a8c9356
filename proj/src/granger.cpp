#include "priodrift/granger.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>

namespace priodrift {

std::string_view to_string(SeriesFeature f) {
  switch (f) {
    case SeriesFeature::CommentCount: return "comment_count";
    case SeriesFeature::CommentAuthors: return "comment_authors";
    case SeriesFeature::CommentLength: return "comment_length";
    case SeriesFeature::HistoryItems: return "history_items";
    case SeriesFeature::HistoryAuthors: return "history_authors";
    case SeriesFeature::HistoryFields: return "history_fields";
  }
  return "unknown";
}

std::vector<SeriesFeature> all_series_features() {
  return {SeriesFeature::CommentCount, SeriesFeature::CommentAuthors, SeriesFeature::CommentLength,
          SeriesFeature::HistoryItems, SeriesFeature::HistoryAuthors, SeriesFeature::HistoryFields};
}

namespace {

struct Point {
  Timestamp time;
  const std::string* key;
  double magnitude;
};

Timestamp window_start(const Phase2Row& row) {
  Timestamp start = row.snapshot.base.created_at;
  for (const auto& item : row.snapshot.history_before()) {
    if (is_priority_field(item.field) && item.timestamp < row.event.event_time) start = std::max(start, item.timestamp);
  }
  return start;
}

std::vector<Point> points_for(const Phase2Row& row, SeriesFeature f) {
  std::vector<Point> out;
  const bool comments = f == SeriesFeature::CommentCount || f == SeriesFeature::CommentAuthors ||
                        f == SeriesFeature::CommentLength;
  if (comments) {
    for (const auto& c : row.snapshot.comments_before()) {
      out.push_back({c.timestamp, &c.author_id, f == SeriesFeature::CommentLength ? static_cast<double>(c.body_length) : 1.0});
    }
  } else {
    for (const auto& h : row.snapshot.history_before()) {
      out.push_back({h.timestamp, f == SeriesFeature::HistoryFields ? &h.field : &h.author_id, 1.0});
    }
  }
  return out;
}

}  // namespace

SeriesBuild build_event_series(const std::vector<Phase2Row>& rows, SeriesFeature feature, const SeriesConfig& config) {
  if (config.slices < 1 || config.lead > config.slices) throw Error(ErrorKind::InvalidConfig, "lead slices exceed slices");
  SeriesBuild out;
  const bool distinct = feature == SeriesFeature::CommentAuthors || feature == SeriesFeature::HistoryAuthors ||
                        feature == SeriesFeature::HistoryFields;
  const auto N = config.slices;
  for (const auto& row : rows) {
    const Timestamp start = window_start(row);
    const Timestamp end = row.event.event_time;
    if (end - start < static_cast<Timestamp>(N) * config.min_slice_seconds || end <= start) {
      ++out.dropped;
      continue;
    }
    const double width = static_cast<double>(end - start) / static_cast<double>(N);
    std::vector<double> values(N, 0.0);
    std::vector<std::set<std::string>> keys(N);
    for (const auto& p : points_for(row, feature)) {
      if (p.time < start || p.time >= end) continue;
      auto s = static_cast<std::size_t>(static_cast<double>(p.time - start) / width);
      s = std::min(s, N - 1);
      if (distinct) keys[s].insert(*p.key);
      else values[s] += p.magnitude;
    }
    if (distinct) {
      for (std::size_t s = 0; s < N; ++s) values[s] = static_cast<double>(keys[s].size());
    }
    EventSeries es;
    es.event_id = row.issue_key + "#" + std::to_string(row.event.ordinal);
    es.values = std::move(values);
    es.label.assign(N, 0.0);
    for (std::size_t s = N - config.lead; s < N; ++s) es.label[s] = 1.0;
    out.series.push_back(std::move(es));
  }
  return out;
}

namespace {

struct Fit {
  bool full_rank = false;
  double rss = 0.0;
};

Fit least_squares(const Matrix& A, const Vector& b) {
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-10);
  Fit f;
  f.full_rank = qr.rank() == A.cols();
  if (!f.full_rank) return f;
  const Vector beta = qr.solve(b);
  f.rss = (A * beta - b).squaredNorm();
  return f;
}

}  // namespace

GrangerResult granger_test(const std::vector<double>& x, const std::vector<double>& y, int max_lag) {
  if (x.size() != y.size()) throw Error(ErrorKind::SchemaMismatch, "granger series differ in length");
  if (max_lag < 1) throw Error(ErrorKind::InvalidConfig, "max_lag must be at least 1");
  GrangerResult best;
  best.error = ErrorKind::DegenerateInput;
  const auto T = static_cast<long>(y.size());
  bool any_singular = false;
  for (int L = 1; L <= max_lag; ++L) {
    const long n = T - L;
    const long df2 = n - 2 * L - 1;
    if (df2 <= 0) continue;
    Matrix R(n, 1 + L), U(n, 1 + 2 * L);
    Vector b(n);
    for (long t = L; t < T; ++t) {
      const long r = t - L;
      b(r) = y[static_cast<std::size_t>(t)];
      R(r, 0) = U(r, 0) = 1.0;
      for (int l = 1; l <= L; ++l) {
        R(r, l) = U(r, l) = y[static_cast<std::size_t>(t - l)];
        U(r, L + l) = x[static_cast<std::size_t>(t - l)];
      }
    }
    const Fit fu = least_squares(U, b);
    if (!fu.full_rank) {
      any_singular = true;
      continue;
    }
    const Fit fr = least_squares(R, b);
    const double rss_r = std::max(fr.rss, fu.rss);
    double F, p;
    if (rss_r <= 1e-300) {
      continue;
    } else if (fu.rss <= 1e-300 * rss_r) {
      F = std::numeric_limits<double>::infinity();
      p = 0.0;
    } else {
      F = ((rss_r - fu.rss) / L) / (fu.rss / static_cast<double>(df2));
      const boost::math::fisher_f dist(static_cast<double>(L), static_cast<double>(df2));
      p = boost::math::cdf(boost::math::complement(dist, F));
    }
    if (!best.testable || p < best.p) {
      best.testable = true;
      best.error.reset();
      best.best_lag = L;
      best.F = F;
      best.p = p;
    }
  }
  if (!best.testable && any_singular) best.error = ErrorKind::SingularDesign;
  return best;
}

BhResult bh_fdr(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  BhResult out;
  out.q.assign(m, 1.0);
  out.significant.assign(m, false);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const std::size_t i = order[r];
    running = std::min(running, p[i] * static_cast<double>(m) / static_cast<double>(r + 1));
    out.q[i] = std::min(running, 1.0);
  }
  for (std::size_t i = 0; i < m; ++i) out.significant[i] = out.q[i] < alpha;
  return out;
}

std::vector<GrangerRow> aggregate(const std::vector<FeatureTests>& tests, double alpha) {
  std::vector<double> pooled;
  for (const auto& t : tests) {
    for (const auto& r : t.results) {
      if (r.testable) pooled.push_back(r.p);
    }
  }
  const BhResult bh = bh_fdr(pooled, alpha);
  std::vector<GrangerRow> rows;
  std::size_t cursor = 0;
  for (const auto& t : tests) {
    GrangerRow row;
    row.feature = t.feature;
    std::vector<double> lags, Fs, qs;
    for (const auto& r : t.results) {
      if (!r.testable) {
        ++row.n_untestable;
        continue;
      }
      ++row.n_tested;
      lags.push_back(r.best_lag);
      Fs.push_back(r.F);
      qs.push_back(bh.q[cursor]);
      if (bh.significant[cursor]) ++row.n_significant;
      ++cursor;
    }
    if (row.n_tested > 0) {
      row.pct_significant = 100.0 * static_cast<double>(row.n_significant) / static_cast<double>(row.n_tested);
      row.median_lag = median(lags);
      row.median_F = median(Fs);
      row.median_q = median(qs);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

GrangerAnalysis granger_analysis(const std::vector<Phase2Row>& rows, const SeriesConfig& config, int max_lag,
                                 double alpha) {
  GrangerAnalysis out;
  std::vector<FeatureTests> tests;
  for (SeriesFeature f : all_series_features()) {
    const SeriesBuild build = build_event_series(rows, f, config);
    out.dropped_windows = build.dropped;
    FeatureTests ft;
    ft.feature = std::string(to_string(f));
    ft.results.resize(build.series.size());
    parallel_for(build.series.size(), [&](std::size_t i) {
      ft.results[i] = granger_test(build.series[i].values, build.series[i].label, max_lag);
    });
    tests.push_back(std::move(ft));
  }
  out.rows = aggregate(tests, alpha);
  return out;
}

void write_granger_csv(const std::vector<GrangerRow>& rows, const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "feature,pct_significant,median_lag,median_F,median_q,n_tested,n_untestable\n";
  out << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.feature << ',' << r.pct_significant << ',' << r.median_lag << ',' << r.median_F << ',' << r.median_q << ','
        << r.n_tested << ',' << r.n_untestable << '\n';
  }
}

}  // namespace priodrift
