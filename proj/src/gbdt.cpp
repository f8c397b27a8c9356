#include "priodrift/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace priodrift {

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double log_loss(const std::vector<double>& margin, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // log(1 + e^m) - y m, stable in both tails
    const double m = margin[i];
    s += (m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m))) - y[i] * m;
  }
  return s / static_cast<double>(y.size());
}

struct NodeStats {
  double G = 0.0, H = 0.0;
};

/// Level-wise exact greedy tree on presorted columns.
Tree grow(const Matrix& X, const std::vector<std::vector<std::size_t>>& sorted, const std::vector<std::size_t>& cols,
          const std::vector<double>& g, const std::vector<double>& h, const GbdtParams& p) {
  const std::size_t n = g.size();
  Tree t;
  auto add_node = [&]() {
    t.feature.push_back(-1);
    t.threshold.push_back(0.0);
    t.left.push_back(-1);
    t.right.push_back(-1);
    return static_cast<int>(t.feature.size() - 1);
  };
  std::vector<NodeStats> stats;
  std::vector<int> node_of(n, 0);
  add_node();
  stats.push_back({});
  for (std::size_t i = 0; i < n; ++i) {
    stats[0].G += g[i];
    stats[0].H += h[i];
  }
  std::vector<int> frontier = {0};

  for (int depth = 0; !frontier.empty() && (p.max_depth < 0 || depth < p.max_depth); ++depth) {
    const std::size_t nf = frontier.size();
    std::vector<int> slot_of(t.feature.size(), -1);
    for (std::size_t s = 0; s < nf; ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    std::vector<double> best_gain(nf, 0.0), best_thr(nf, 0.0);
    std::vector<int> best_feat(nf, -1);

    for (std::size_t f : cols) {
      std::vector<NodeStats> left(nf);
      std::vector<double> last(nf, 0.0);
      std::vector<char> seen(nf, 0);
      for (std::size_t r : sorted[f]) {
        const int node = node_of[r];
        if (node < 0) continue;
        const int s = slot_of[static_cast<std::size_t>(node)];
        if (s < 0) continue;
        const auto su = static_cast<std::size_t>(s);
        const double v = X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
        if (seen[su] && v > last[su]) {
          const NodeStats& tot = stats[static_cast<std::size_t>(node)];
          const double GL = left[su].G, HL = left[su].H;
          const double GR = tot.G - GL, HR = tot.H - HL;
          if (HL >= p.min_child_weight && HR >= p.min_child_weight) {
            const double gain = 0.5 * (GL * GL / (HL + p.lambda) + GR * GR / (HR + p.lambda) -
                                       tot.G * tot.G / (tot.H + p.lambda));
            if (gain > best_gain[su] + 1e-12) {
              best_gain[su] = gain;
              best_feat[su] = static_cast<int>(f);
              const double mid = 0.5 * (last[su] + v);
              best_thr[su] = mid < v ? mid : last[su];
            }
          }
        }
        left[su].G += g[r];
        left[su].H += h[r];
        last[su] = v;
        seen[su] = 1;
      }
    }

    std::vector<int> next;
    std::vector<int> child_left(nf, -1), child_right(nf, -1);
    for (std::size_t s = 0; s < nf; ++s) {
      if (best_feat[s] < 0) continue;
      const auto node = static_cast<std::size_t>(frontier[s]);
      t.feature[node] = best_feat[s];
      t.threshold[node] = best_thr[s];
      child_left[s] = add_node();
      child_right[s] = add_node();
      t.left[node] = child_left[s];
      t.right[node] = child_right[s];
      stats.resize(t.feature.size());
      next.push_back(child_left[s]);
      next.push_back(child_right[s]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of[i];
      if (node < 0) continue;
      const int s = slot_of[static_cast<std::size_t>(node)];
      if (s < 0 || best_feat[static_cast<std::size_t>(s)] < 0) {
        node_of[i] = -1;  // settled in a leaf
        continue;
      }
      const auto su = static_cast<std::size_t>(s);
      const int child = X(static_cast<Eigen::Index>(i), best_feat[su]) <= best_thr[su] ? child_left[su] : child_right[su];
      node_of[i] = child;
      stats[static_cast<std::size_t>(child)].G += g[i];
      stats[static_cast<std::size_t>(child)].H += h[i];
    }
    frontier = std::move(next);
  }

  t.value = Matrix::Zero(static_cast<Eigen::Index>(t.feature.size()), 1);
  for (std::size_t k = 0; k < t.feature.size(); ++k) {
    if (t.feature[k] < 0) t.value(static_cast<Eigen::Index>(k), 0) = -stats[k].G / (stats[k].H + p.lambda);
  }
  return t;
}

}  // namespace

std::unique_ptr<GbdtModel> GbdtModel::fit(const Matrix& X, const std::vector<int>& y, const GbdtParams& params,
                                          std::uint64_t seed) {
  if (X.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "gbdt");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(ErrorKind::SchemaMismatch, "gbdt: rows and labels differ");
  auto m = std::unique_ptr<GbdtModel>(new GbdtModel());
  m->classes_ = class_list(y);
  if (m->classes_.size() > 2) throw Error(ErrorKind::NonBinaryLabels, "gbdt handles two classes only");
  if (m->classes_.size() < 2) throw Error(ErrorKind::DegenerateLabels, "gbdt needs both classes in the training set");
  m->eta_ = params.eta;
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = y[i] == m->classes_[1] ? 1.0 : 0.0;
  const double rate = std::clamp(std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  m->base_ = std::log(rate / (1.0 - rate));

  std::vector<std::vector<std::size_t>> sorted(d);
  parallel_for(d, [&](std::size_t f) {
    auto& s = sorted[f];
    s.resize(n);
    std::iota(s.begin(), s.end(), 0);
    std::stable_sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) {
      return X(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(f)) < X(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f));
    });
  });

  std::vector<double> margin(n, m->base_), g(n), h(n);
  m->loss_trace_.push_back(log_loss(margin, target));
  const std::size_t n_cols = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(params.colsample * static_cast<double>(d))), 1, std::max<std::size_t>(d, 1));
  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pr = sigmoid(margin[i]);
      g[i] = pr - target[i];
      h[i] = std::max(pr * (1.0 - pr), 1e-16);
    }
    Rng rng(derive_seed(seed, round));
    std::vector<std::size_t> cols(d);
    std::iota(cols.begin(), cols.end(), 0);
    for (std::size_t i = 0; i < n_cols; ++i) std::swap(cols[i], cols[i + rng.index(d - i)]);
    cols.resize(n_cols);
    std::sort(cols.begin(), cols.end());
    Tree tree = grow(X, sorted, cols, g, h, params);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += params.eta * tree.value(static_cast<Eigen::Index>(tree.leaf_of(X, static_cast<Eigen::Index>(i))), 0);
    }
    m->trees_.push_back(std::move(tree));
    m->loss_trace_.push_back(log_loss(margin, target));
  }
  return m;
}

Vector GbdtModel::margin(const Matrix& X) const {
  Vector out = Vector::Constant(X.rows(), base_);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (const Tree& t : trees_) out(r) += eta_ * t.value(static_cast<Eigen::Index>(t.leaf_of(X, r)), 0);
  }
  return out;
}

Matrix GbdtModel::predict_proba(const Matrix& X) const {
  const Vector m = margin(X);
  Matrix P(X.rows(), 2);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    P(r, 1) = sigmoid(m(r));
    P(r, 0) = 1.0 - P(r, 1);
  }
  return P;
}

void GbdtModel::save_body(ModelWriter& w) const {
  w.real("base", base_);
  w.real("eta", eta_);
  w.reals("loss_trace", loss_trace_);
  w.integer("trees", static_cast<long long>(trees_.size()));
  for (const Tree& t : trees_) write_tree(w, t);
}

std::unique_ptr<GbdtModel> GbdtModel::load_body(ModelReader& r) {
  auto m = std::unique_ptr<GbdtModel>(new GbdtModel());
  m->base_ = r.real("base");
  m->eta_ = r.real("eta");
  m->loss_trace_ = r.reals("loss_trace");
  const auto n = r.integer("trees");
  for (long long i = 0; i < n; ++i) m->trees_.push_back(load_tree(r));
  return m;
}

}  // namespace priodrift
