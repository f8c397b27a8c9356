#include "priodrift/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace priodrift {

BinaryMetrics binary_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorKind::SchemaMismatch, "metric inputs differ in length");
  BinaryMetrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] != 0, p = y_pred[i] != 0;
    if (t && p) ++m.tp;
    else if (!t && p) ++m.fp;
    else if (t && !p) ++m.fn;
    else ++m.tn;
  }
  const double tp = static_cast<double>(m.tp);
  if (m.tp + m.fp > 0) m.precision = tp / static_cast<double>(m.tp + m.fp); else m.zero_division = true;
  if (m.tp + m.fn > 0) m.recall = tp / static_cast<double>(m.tp + m.fn); else m.zero_division = true;
  if (m.precision + m.recall > 0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.zero_division = true;
  }
  return m;
}

ConfusionMatrix ConfusionMatrix::build(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                       const std::vector<int>& classes) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorKind::SchemaMismatch, "metric inputs differ in length");
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  auto index = [&](int y) {
    auto it = std::find(classes.begin(), classes.end(), y);
    if (it == classes.end()) throw Error(ErrorKind::ClassListMismatch, "label " + std::to_string(y) + " is not a declared class");
    return static_cast<std::size_t>(it - classes.begin());
  };
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[index(y_true[i])][index(y_pred[i])];
  return cm;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (const auto& row : counts) s += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes != classes) throw Error(ErrorKind::ClassListMismatch, "confusion matrices with different classes");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < counts.size(); ++j) counts[i][j] += other.counts[i][j];
  }
  return *this;
}

F1Averages average_f1(const std::vector<double>& per_class_f1, const std::vector<std::size_t>& support) {
  if (per_class_f1.size() != support.size())
    throw Error(ErrorKind::ClassListMismatch, "per-class F1 and support sizes differ");
  const std::size_t C = per_class_f1.size();
  std::size_t total = 0;
  for (std::size_t s : support) total += s;
  F1Averages a;
  for (std::size_t c = 0; c < C; ++c) {
    a.macro += per_class_f1[c] / static_cast<double>(C);
    if (total > 0) a.weighted += static_cast<double>(support[c]) / static_cast<double>(total) * per_class_f1[c];
  }
  return a;
}

MulticlassMetrics multiclass_metrics(const ConfusionMatrix& cm) {
  const std::size_t C = cm.classes.size();
  MulticlassMetrics m;
  m.per_class_f1.assign(C, 0.0);
  m.precision.assign(C, 0.0);
  m.recall.assign(C, 0.0);
  m.support.assign(C, 0);
  m.flagged.assign(C, false);
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t predicted = 0;
    for (std::size_t r = 0; r < C; ++r) {
      m.support[c] += cm.counts[c][r];
      predicted += cm.counts[r][c];
    }
    const auto tp = static_cast<double>(cm.counts[c][c]);
    if (predicted > 0) m.precision[c] = tp / static_cast<double>(predicted); else m.flagged[c] = true;
    if (m.support[c] > 0) m.recall[c] = tp / static_cast<double>(m.support[c]); else m.flagged[c] = true;
    const double denom = m.precision[c] + m.recall[c];
    if (denom > 0) m.per_class_f1[c] = 2.0 * m.precision[c] * m.recall[c] / denom; else m.flagged[c] = true;
  }
  const F1Averages avg = average_f1(m.per_class_f1, m.support);
  m.f1_weighted = avg.weighted;
  m.f1_macro = avg.macro;
  return m;
}

MulticlassMetrics multiclass_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                     const std::vector<int>& classes) {
  return multiclass_metrics(ConfusionMatrix::build(y_true, y_pred, classes));
}

Split split_80_20(const std::vector<int>& strata, std::uint64_t seed, double test_fraction) {
  if (strata.size() < 5) throw Error(ErrorKind::DegenerateInput, "an 80/20 split needs at least 5 rows");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);
  Split s;
  std::vector<std::size_t> pool;
  auto take = [&](std::vector<std::size_t> rows, std::uint64_t sseed) {
    Rng rng(sseed);
    rng.shuffle(rows);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    for (std::size_t k = 0; k < rows.size(); ++k) (k < n_test ? s.test : s.train).push_back(rows[k]);
  };
  for (auto& [label, rows] : groups) {
    if (rows.size() < 2) {
      s.warnings.push_back("StratumTooSmall: stratum " + std::to_string(label) + " has " +
                           std::to_string(rows.size()) + " row(s); split unstratified");
      pool.insert(pool.end(), rows.begin(), rows.end());
      continue;
    }
    take(rows, derive_seed(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(label))));
  }
  if (!pool.empty()) take(pool, derive_seed(seed, "pool"));
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<GroupBreakdown> per_priority_breakdown(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                                   const std::vector<int>& groups, const std::vector<int>& classes) {
  if (y_true.size() != groups.size() || y_pred.size() != groups.size()) {
    throw Error(ErrorKind::SchemaMismatch, "breakdown inputs differ in length");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  std::vector<GroupBreakdown> out;
  const bool binary = classes.size() == 2 && classes[0] == 0 && classes[1] == 1;
  for (const auto& [g, rows] : members) {
    std::vector<int> t, p;
    for (std::size_t r : rows) {
      t.push_back(y_true[r]);
      p.push_back(y_pred[r]);
    }
    GroupBreakdown b;
    b.group = g;
    b.n = rows.size();
    b.confusion = ConfusionMatrix::build(t, p, classes);
    b.metrics = multiclass_metrics(b.confusion);
    if (binary) {
      b.binary = binary_metrics(t, p);
      b.flagged = b.binary.tp + b.binary.fn == 0;
    } else {
      // Phase II groups by target: the group's own class must be present.
      auto it = std::find(classes.begin(), classes.end(), g);
      b.flagged = it == classes.end() || b.metrics.support[static_cast<std::size_t>(it - classes.begin())] == 0;
    }
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

Summary describe(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::DegenerateInput, "spearman needs two equal-length series");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

CrossProjectReport cross_project_eval(const std::vector<std::string>& row_projects, const FoldFunction& fold) {
  const std::set<std::string> distinct(row_projects.begin(), row_projects.end());
  if (distinct.size() < 2) throw Error(ErrorKind::DegenerateInput, "cross-project evaluation needs at least two projects");
  const std::vector<std::string> projects(distinct.begin(), distinct.end());
  CrossProjectReport report;
  report.folds.resize(projects.size());
  parallel_for(projects.size(), [&](std::size_t p) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < row_projects.size(); ++i) (row_projects[i] == projects[p] ? test : train).push_back(i);
    FoldRow& row = report.folds[p];
    row.project = projects[p];
    row.n_train = train.size();
    row.n_test = test.size();
    row.metrics = fold(train, test, projects[p]);
  });
  std::map<std::string, std::vector<double>> columns;
  for (const auto& f : report.folds) {
    for (const auto& [k, v] : f.metrics) columns[k].push_back(v);
  }
  for (auto& [k, v] : columns) report.stats[k] = describe(v);
  return report;
}

}  // namespace priodrift
