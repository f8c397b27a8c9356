#include "priodrift/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace priodrift {

std::size_t Tree::leaf_of(const Matrix& X, Eigen::Index row) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(X(row, feature[node]) <= threshold[node] ? left[node] : right[node]);
  }
  return node;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(feature.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    best = std::max(best, d[i]);
    if (feature[i] >= 0) {
      d[static_cast<std::size_t>(left[i])] = d[i] + 1;
      d[static_cast<std::size_t>(right[i])] = d[i] + 1;
    }
  }
  return best;
}

namespace {

double sum_sq_ratio(const std::vector<long>& counts, long n) {
  double s = 0.0;
  for (long c : counts) s += static_cast<double>(c) * static_cast<double>(c);
  return s / static_cast<double>(n);
}

struct GiniBuilder {
  const Matrix& X;
  const std::vector<std::size_t>& y;
  std::size_t n_classes;
  const ForestParams& params;
  Rng& rng;
  Tree tree;
  std::vector<std::vector<double>> values;

  std::size_t leaf(const std::vector<long>& counts, long n) {
    const std::size_t id = tree.feature.size();
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    std::vector<double> dist(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) dist[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
    values.push_back(std::move(dist));
    return id;
  }

  std::vector<std::size_t> candidates() {
    const auto d = static_cast<std::size_t>(X.cols());
    std::size_t m = params.max_features == 0 ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))))
                                             : params.max_features;
    m = std::clamp<std::size_t>(m, 1, d);
    std::vector<std::size_t> f(d);
    std::iota(f.begin(), f.end(), 0);
    if (m < d) {
      for (std::size_t i = 0; i < m; ++i) std::swap(f[i], f[i + rng.index(d - i)]);
      f.resize(m);
      std::sort(f.begin(), f.end());
    }
    return f;
  }

  std::size_t build(std::vector<std::size_t> rows, int depth) {
    const auto n = static_cast<long>(rows.size());
    std::vector<long> counts(n_classes, 0);
    for (std::size_t r : rows) ++counts[y[r]];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }) <= 1;
    if (pure || rows.size() < params.min_split || (params.max_depth >= 0 && depth >= params.max_depth)) {
      return leaf(counts, n);
    }
    const double parent = sum_sq_ratio(counts, n);
    double best_score = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    const auto min_leaf = static_cast<long>(std::max<std::size_t>(params.min_leaf, 1));

    std::vector<std::pair<double, std::size_t>> col(rows.size());
    for (std::size_t f : candidates()) {
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {X(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), y[rows[i]]};
      std::sort(col.begin(), col.end());
      std::vector<long> lc(n_classes, 0), rc = counts;
      for (long i = 1; i < n; ++i) {
        const std::size_t cls = col[static_cast<std::size_t>(i - 1)].second;
        ++lc[cls];
        --rc[cls];
        const double lo = col[static_cast<std::size_t>(i - 1)].first;
        const double hi = col[static_cast<std::size_t>(i)].first;
        if (!(lo < hi) || i < min_leaf || n - i < min_leaf) continue;
        const double score = sum_sq_ratio(lc, i) + sum_sq_ratio(rc, n - i);
        if (score > best_score + 1e-12 * static_cast<double>(n)) {
          best_score = score;
          best_feature = static_cast<int>(f);
          const double mid = 0.5 * (lo + hi);
          best_threshold = (mid < hi) ? mid : lo;
        }
      }
    }
    if (best_feature < 0) return leaf(counts, n);

    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      (X(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t id = leaf(counts, n);
    tree.feature[id] = best_feature;
    tree.threshold[id] = best_threshold;
    const std::size_t l = build(std::move(lrows), depth + 1);
    const std::size_t r = build(std::move(rrows), depth + 1);
    tree.left[id] = static_cast<int>(l);
    tree.right[id] = static_cast<int>(r);
    return id;
  }
};

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t width) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace

void write_tree(ModelWriter& w, const Tree& t) {
  w.integers("feature", std::vector<long long>(t.feature.begin(), t.feature.end()));
  w.reals("threshold", t.threshold);
  w.integers("left", std::vector<long long>(t.left.begin(), t.left.end()));
  w.integers("right", std::vector<long long>(t.right.begin(), t.right.end()));
  w.matrix("value", t.value);
}

Tree load_tree(ModelReader& r) {
  Tree t;
  for (long long v : r.integers("feature")) t.feature.push_back(static_cast<int>(v));
  t.threshold = r.reals("threshold");
  for (long long v : r.integers("left")) t.left.push_back(static_cast<int>(v));
  for (long long v : r.integers("right")) t.right.push_back(static_cast<int>(v));
  t.value = r.matrix("value");
  return t;
}

Tree fit_gini_tree(const Matrix& X, const std::vector<std::size_t>& y, std::size_t n_classes,
                   const std::vector<std::size_t>& rows, const ForestParams& params, Rng& rng) {
  if (rows.empty()) throw Error(ErrorKind::EmptyTrainingSet, "decision tree");
  GiniBuilder b{X, y, n_classes, params, rng, {}, {}};
  b.build(rows, 0);
  b.tree.value = to_matrix(b.values, n_classes);
  return std::move(b.tree);
}

std::vector<std::size_t> ForestModel::bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t t, Rng* rest) {
  Rng rng(derive_seed(seed, t));
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.index(n);
  if (rest != nullptr) *rest = rng;
  return rows;
}

std::unique_ptr<ForestModel> ForestModel::fit(const Matrix& X, const std::vector<int>& y, const ForestParams& params,
                                              std::uint64_t seed) {
  if (X.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "random forest");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(ErrorKind::SchemaMismatch, "forest: rows and labels differ");
  auto m = std::unique_ptr<ForestModel>(new ForestModel());
  m->classes_ = class_list(y);
  const auto targets = class_indices(y, m->classes_);
  const auto n = static_cast<std::size_t>(X.rows());
  m->trees_.resize(std::max<std::size_t>(params.trees, 1));
  parallel_for(m->trees_.size(), [&](std::size_t t) {
    Rng rng(0);
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      rows = bootstrap_rows(n, seed, t, &rng);
    } else {
      rng = Rng(derive_seed(seed, t));
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    m->trees_[t] = fit_gini_tree(X, targets, m->classes_.size(), rows, params, rng);
  });
  return m;
}

Matrix ForestModel::predict_proba(const Matrix& X) const {
  const auto C = static_cast<Eigen::Index>(classes_.size());
  Matrix P = Matrix::Zero(X.rows(), C);
  parallel_for(static_cast<std::size_t>(X.rows()), [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (const Tree& t : trees_) P.row(r) += t.value.row(static_cast<Eigen::Index>(t.leaf_of(X, r)));
    P.row(r) /= P.row(r).sum();
  });
  return P;
}

void ForestModel::save_body(ModelWriter& w) const {
  w.integer("trees", static_cast<long long>(trees_.size()));
  for (const Tree& t : trees_) write_tree(w, t);
}

std::unique_ptr<ForestModel> ForestModel::load_body(ModelReader& r) {
  auto m = std::unique_ptr<ForestModel>(new ForestModel());
  const auto n = r.integer("trees");
  for (long long i = 0; i < n; ++i) m->trees_.push_back(load_tree(r));
  return m;
}

}  // namespace priodrift
