#include "priodrift/imbalance.hpp"

#include "priodrift/standardize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace priodrift {

namespace {

std::vector<std::size_t> distance_columns(const std::vector<ColumnKind>& kinds, Eigen::Index width) {
  std::vector<std::size_t> cols;
  for (Eigen::Index c = 0; c < width; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (kinds.empty() || kinds[i] != ColumnKind::Categorical) cols.push_back(i);
  }
  return cols;
}

ColumnKind kind_at(const std::vector<ColumnKind>& kinds, Eigen::Index c) {
  return kinds.empty() ? ColumnKind::Continuous : kinds[static_cast<std::size_t>(c)];
}

struct Restart {
  Matrix centroids;  // standardized space
  std::vector<std::size_t> assignment;
  std::vector<double> trace;
  double sse = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
};

Matrix plus_plus_init(const Matrix& Z, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(Z.rows());
  Matrix C(static_cast<Eigen::Index>(k), Z.cols());
  std::vector<char> chosen(n, 0);
  std::size_t first = rng.index(n);
  C.row(0) = Z.row(static_cast<Eigen::Index>(first));
  chosen[first] = 1;
  Vector d2 = (Z.rowwise() - C.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2(static_cast<Eigen::Index>(i));
    std::size_t pick = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        r -= d2(static_cast<Eigen::Index>(i));
        pick = i;
        if (r < 0.0) break;
      }
    } else {
      // Every remaining point coincides with a centre: take one uniformly.
      std::vector<std::size_t> open;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) open.push_back(i);
      }
      pick = open[rng.index(open.size())];
    }
    chosen[pick] = 1;
    C.row(static_cast<Eigen::Index>(c)) = Z.row(static_cast<Eigen::Index>(pick));
    d2 = d2.cwiseMin((Z.rowwise() - C.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
  }
  return C;
}

double exact_d2(const Matrix& Z, std::size_t i, const Matrix& C, std::size_t c) {
  return (Z.row(static_cast<Eigen::Index>(i)) - C.row(static_cast<Eigen::Index>(c))).squaredNorm();
}

/// Nearest-centre step. A point only moves when the new centre is strictly
/// closer by exact distance, so the SSE can never rise through rounding.
bool assign(const Matrix& Z, const Matrix& C, std::vector<std::size_t>& a, bool first,
            double& sse) {
  const auto n = static_cast<std::size_t>(Z.rows());
  const Vector c_norms = C.rowwise().squaredNorm();
  const Matrix cross = Z * C.transpose();
  bool changed = false;
  sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::Index best = 0;
    (c_norms.transpose() - 2.0 * cross.row(ii)).minCoeff(&best);
    const auto cand = static_cast<std::size_t>(best);
    double d = exact_d2(Z, i, C, cand);
    if (first) {
      a[i] = cand;
      changed = true;
    } else if (cand != a[i]) {
      const double cur = exact_d2(Z, i, C, a[i]);
      if (d < cur) {
        a[i] = cand;
        changed = true;
      } else {
        d = cur;
      }
    }
    sse += d;
  }
  return changed;
}

/// Means of the assigned points. An empty cluster takes the point farthest
/// from its centre.
Matrix update(const Matrix& Z, std::vector<std::size_t>& a, std::size_t k) {
  const auto n = static_cast<std::size_t>(Z.rows());
  Matrix C = Matrix::Zero(static_cast<Eigen::Index>(k), Z.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    C.row(static_cast<Eigen::Index>(a[i])) += Z.row(static_cast<Eigen::Index>(i));
    ++counts[a[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) C.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    std::size_t far = n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[a[i]] < 2) continue;
      const double d = exact_d2(Z, i, C, a[i]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == n) continue;
    const std::size_t donor = a[far];
    const auto df = static_cast<double>(counts[donor]);
    C.row(static_cast<Eigen::Index>(donor)) =
        (C.row(static_cast<Eigen::Index>(donor)) * df - Z.row(static_cast<Eigen::Index>(far))) / (df - 1.0);
    --counts[donor];
    a[far] = c;
    counts[c] = 1;
    C.row(static_cast<Eigen::Index>(c)) = Z.row(static_cast<Eigen::Index>(far));
  }
  return C;
}

Restart lloyd(const Matrix& Z, std::size_t k, std::uint64_t seed, const KMeansConfig& config, double tol_abs) {
  Rng rng(seed);
  Restart r;
  r.centroids = plus_plus_init(Z, k, rng);
  r.assignment.assign(static_cast<std::size_t>(Z.rows()), 0);
  double sse = 0.0;
  for (std::size_t it = 0; it < std::max<std::size_t>(config.max_iter, 1); ++it) {
    const bool changed = assign(Z, r.centroids, r.assignment, it == 0, sse);
    r.trace.push_back(sse);
    if (it > 0 && !changed) break;
    Matrix next = update(Z, r.assignment, k);
    const double shift = (next - r.centroids).squaredNorm();
    r.centroids = std::move(next);
    ++r.iterations;
    if (shift <= tol_abs) {
      assign(Z, r.centroids, r.assignment, false, sse);
      r.trace.push_back(sse);
      break;
    }
  }
  r.sse = r.trace.back();
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, const std::vector<ColumnKind>& kinds,
                    const KMeansConfig& config) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (k < 1) throw Error(ErrorKind::DegenerateInput, "k-means needs at least one cluster");
  if (k > n) {
    throw Error(ErrorKind::DegenerateInput,
                "k-means asked for " + std::to_string(k) + " clusters from " + std::to_string(n) + " rows");
  }
  if (!kinds.empty() && kinds.size() != static_cast<std::size_t>(X.cols())) {
    throw Error(ErrorKind::SchemaMismatch, "column kinds do not match the matrix width");
  }
  const Matrix Z = Standardizer::fit(select_columns(X, distance_columns(kinds, X.cols()))).apply(
      select_columns(X, distance_columns(kinds, X.cols())));
  double mean_var = 0.0;
  if (Z.cols() > 0) {
    mean_var = ((Z.rowwise() - Z.colwise().mean()).array().square().colwise().mean()).mean();
  }
  const double tol_abs = config.tol * mean_var;

  const std::size_t restarts = std::max<std::size_t>(config.n_init, 1);
  std::vector<Restart> runs(restarts);
  parallel_for(restarts, [&](std::size_t r) { runs[r] = lloyd(Z, k, derive_seed(seed, r), config, tol_abs); });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].sse < runs[best].sse) best = r;
  }

  KMeansResult out;
  out.assignment = std::move(runs[best].assignment);
  out.sse = runs[best].sse;
  out.sse_trace = std::move(runs[best].trace);
  out.iterations = runs[best].iterations;
  out.centroids = Matrix::Zero(static_cast<Eigen::Index>(k), X.cols());
  std::vector<std::size_t> counts(k, 0);
  std::vector<std::map<double, std::size_t>> modes(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = out.assignment[i];
    ++counts[c];
    out.centroids.row(static_cast<Eigen::Index>(c)) += X.row(static_cast<Eigen::Index>(i));
  }
  // Members of each cluster ordered by distance to its centre; ties between
  // modal categories go to the nearest member's value.
  std::vector<std::vector<std::size_t>> members(k);
  bool any_categorical = false;
  for (Eigen::Index col = 0; col < X.cols(); ++col) any_categorical |= kind_at(kinds, col) == ColumnKind::Categorical;
  if (any_categorical) {
    Matrix centre = Matrix::Zero(static_cast<Eigen::Index>(k), Z.cols());
    for (std::size_t i = 0; i < n; ++i) centre.row(static_cast<Eigen::Index>(out.assignment[i])) += Z.row(static_cast<Eigen::Index>(i));
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) centre.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
    }
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      members[out.assignment[i]].push_back(i);
      dist[i] = (Z.row(static_cast<Eigen::Index>(i)) - centre.row(static_cast<Eigen::Index>(out.assignment[i]))).squaredNorm();
    }
    for (auto& m : members) {
      std::stable_sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    }
  }
  for (Eigen::Index col = 0; col < X.cols(); ++col) {
    if (kind_at(kinds, col) != ColumnKind::Categorical) continue;
    for (auto& m : modes) m.clear();
    for (std::size_t i = 0; i < n; ++i) ++modes[out.assignment[i]][X(static_cast<Eigen::Index>(i), col)];
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t best_count = 0;
      for (const auto& [v, cnt] : modes[c]) best_count = std::max(best_count, cnt);
      double value = 0.0;
      for (std::size_t i : members[c]) {
        const double v = X(static_cast<Eigen::Index>(i), col);
        if (modes[c][v] == best_count) {
          value = v;
          break;
        }
      }
      out.centroids(static_cast<Eigen::Index>(c), col) = value * static_cast<double>(counts[c]);
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) out.centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }
  return out;
}

Matrix kmeans_undersample(const Matrix& X, std::size_t target_n, std::uint64_t seed,
                          const std::vector<ColumnKind>& kinds, const KMeansConfig& config) {
  if (target_n < 1) throw Error(ErrorKind::DegenerateInput, "undersampling target must be at least 1");
  return kmeans(X, target_n, seed, kinds, config).centroids;
}

// ---------------------------------------------------------------------------

namespace {

class NeighborSearch {
 public:
  NeighborSearch(const Matrix& Z, std::vector<std::size_t> pool, std::size_t k) : Z_(Z), pool_(std::move(pool)), k_(k) {}

  /// k nearest members of the pool to row i, excluding i itself.
  const std::vector<std::size_t>& of(std::size_t i) {
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second;
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(pool_.size());
    for (std::size_t j : pool_) {
      if (j == i) continue;
      d.emplace_back((Z_.row(static_cast<Eigen::Index>(j)) - Z_.row(static_cast<Eigen::Index>(i))).squaredNorm(), j);
    }
    const std::size_t kk = std::min(k_, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < kk; ++q) out.push_back(d[q].second);
    return cache_.emplace(i, std::move(out)).first->second;
  }

 private:
  const Matrix& Z_;
  std::vector<std::size_t> pool_;
  std::size_t k_;
  std::map<std::size_t, std::vector<std::size_t>> cache_;
};

Matrix distance_space(const Matrix& X, const std::vector<ColumnKind>& kinds) {
  const auto cols = distance_columns(kinds, X.cols());
  const Matrix D = select_columns(X, cols);
  return Standardizer::fit(D).apply(D);
}

/// Seeds drawn from `seeds`, neighbours from `pool` in the space `Z`.
void smote_into(const Matrix& X, const Matrix& Z, const std::vector<std::size_t>& seeds,
                const std::vector<std::size_t>& pool, std::size_t n_new, std::size_t k, Rng& rng,
                const std::vector<ColumnKind>& kinds, SmoteResult& out, Eigen::Index& row) {
  NeighborSearch search(Z, pool, std::max<std::size_t>(k, 1));
  for (std::size_t s = 0; s < n_new; ++s, ++row) {
    const std::size_t base = seeds[rng.index(seeds.size())];
    const auto& nbrs = search.of(base);
    const std::size_t nb = nbrs.empty() ? base : nbrs[rng.index(nbrs.size())];
    const double u = rng.uniform();
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const double a = X(static_cast<Eigen::Index>(base), c);
      const double b = X(static_cast<Eigen::Index>(nb), c);
      switch (kind_at(kinds, c)) {
        case ColumnKind::Categorical: out.rows(row, c) = a; break;
        case ColumnKind::Boolean: out.rows(row, c) = (a + u * (b - a)) >= 0.5 ? 1.0 : 0.0; break;
        case ColumnKind::Continuous: out.rows(row, c) = a + u * (b - a); break;
      }
    }
    out.seed_rows.push_back(base);
    out.neighbor_rows.push_back(nb);
  }
}

}  // namespace

SmoteResult smote_oversample(const Matrix& X, std::size_t n_new, std::size_t k, Rng& rng,
                             const std::vector<ColumnKind>& kinds) {
  SmoteResult out;
  out.rows.resize(static_cast<Eigen::Index>(n_new), X.cols());
  if (n_new == 0) return out;
  if (X.rows() < 2) throw Error(ErrorKind::DegenerateInput, "SMOTE needs at least two rows in the class");
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Matrix Z = distance_space(X, kinds);
  Eigen::Index row = 0;
  smote_into(X, Z, all, all, n_new, std::min(k, n - 1), rng, kinds, out, row);
  return out;
}

SmoteResult smote_oversample(const Matrix& X, std::size_t n_new, std::size_t k, std::uint64_t seed,
                             const std::vector<ColumnKind>& kinds) {
  Rng rng(seed);
  return smote_oversample(X, n_new, k, rng, kinds);
}

std::vector<std::size_t> random_undersample(std::size_t n, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw Error(ErrorKind::InvalidConfig, "undersampling rate must be in [0, 1]");
  const auto remove = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n - std::min(remove, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> random_oversample(std::size_t n, double rate, std::uint64_t seed) {
  if (rate < 0.0) throw Error(ErrorKind::InvalidConfig, "oversampling rate must be non-negative");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n == 0) return idx;
  const auto extra = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  Rng rng(seed);
  for (std::size_t i = 0; i < extra; ++i) idx.push_back(rng.index(n));
  return idx;
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t total) {
  std::vector<std::size_t> out(weights.size(), 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (sum <= 0.0 || total == 0) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(quota));
    assigned += out[i];
    remainders.emplace_back(quota - std::floor(quota), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) ++out[remainders[r].second];
  return out;
}

// ---------------------------------------------------------------------------

SamplingPlan SamplingPlan::reference_default() {
  SamplingPlan p;
  p.per_class[slot(Priority::Blocker)] = {SampleAction::Oversample, 0.15};
  p.per_class[slot(Priority::Critical)] = {SampleAction::Oversample, 0.15};
  p.per_class[slot(Priority::Major)] = {SampleAction::Undersample, 0.10};
  p.per_class[slot(Priority::Minor)] = {SampleAction::Oversample, 0.65};
  p.per_class[slot(Priority::Trivial)] = {SampleAction::Oversample, 0.80};
  return p;
}

bool SamplingPlan::is_identity() const {
  return std::all_of(per_class.begin(), per_class.end(),
                     [](const ClassPlan& c) { return c.action == SampleAction::None || c.rate == 0.0; });
}

SamplingPlan parse_sampling_plan(std::string_view text) {
  SamplingPlan plan;
  std::string s(text);
  if (s.empty() || s == "none") return plan;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::ConfigError, "sampling plan entry '" + item + "'");
    Priority p;
    try {
      p = encode_priority(item.substr(0, colon));
    } catch (const Error&) {
      throw Error(ErrorKind::ConfigError, "sampling plan names unknown class '" + item.substr(0, colon) + "'");
    }
    double rate = 0.0;
    try {
      rate = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, "sampling plan rate in '" + item + "'");
    }
    if (rate > 0) {
      plan.per_class[slot(p)] = {SampleAction::Oversample, rate};
    } else if (rate < 0) {
      if (rate < -1.0) throw Error(ErrorKind::ConfigError, "undersampling below -1 in '" + item + "'");
      plan.per_class[slot(p)] = {SampleAction::Undersample, -rate};
    }
  }
  return plan;
}

std::string format_sampling_plan(const SamplingPlan& plan) {
  std::string out;
  char buf[64];
  for (Priority p : kAllPriorities) {
    const ClassPlan& c = plan.per_class[slot(p)];
    if (c.action == SampleAction::None) continue;
    std::string name(priority_name(p));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    std::snprintf(buf, sizeof buf, "%s:%+.6g", name.c_str(), c.action == SampleAction::Oversample ? c.rate : -c.rate);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out.empty() ? "none" : out;
}

SampledSet conditional_mixed_sample(const Matrix& X, const std::vector<int>& initial, const std::vector<int>& labels,
                                    const SamplingPlan& plan, std::uint64_t seed,
                                    const std::vector<ColumnKind>& kinds, bool skip_absent) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (initial.size() != n || labels.size() != n) throw Error(ErrorKind::SchemaMismatch, "sampling inputs differ in length");

  // cells[initial slot][target slot] = row indices in input order
  std::array<std::array<std::vector<std::size_t>, 5>, 5> cells;
  std::array<std::vector<std::size_t>, 5> classes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = slot(priority_from_code(initial[i]));
    const std::size_t b = slot(priority_from_code(labels[i]));
    cells[a][b].push_back(i);
    classes[a].push_back(i);
  }

  std::vector<char> keep(n, 1);
  struct Pending {
    std::vector<std::size_t> seeds, pool;
    std::size_t count;
    int initial, label;  // label 0: copy from the seed row
  };
  std::vector<Pending> pending;

  for (Priority p : kAllPriorities) {
    const std::size_t c = slot(p);
    const ClassPlan& cp = plan.per_class[c];
    const std::size_t n_c = classes[c].size();
    if (cp.action == SampleAction::None || cp.rate == 0.0) continue;
    std::vector<double> cell_sizes;
    for (const auto& cell : cells[c]) cell_sizes.push_back(static_cast<double>(cell.size()));

    if (cp.action == SampleAction::Undersample) {
      const auto remove = static_cast<std::size_t>(std::llround(std::min(cp.rate, 1.0) * static_cast<double>(n_c)));
      if (plan.conditional) {
        const auto per_cell = largest_remainder(cell_sizes, remove);
        for (std::size_t t = 0; t < 5; ++t) {
          if (per_cell[t] == 0) continue;
          const double rate = static_cast<double>(per_cell[t]) / static_cast<double>(cells[c][t].size());
          std::vector<char> kept(cells[c][t].size(), 0);
          for (std::size_t j : random_undersample(cells[c][t].size(), rate, derive_seed(seed, "under/" + std::to_string(c) + "/" + std::to_string(t)))) kept[j] = 1;
          for (std::size_t j = 0; j < kept.size(); ++j) {
            if (!kept[j]) keep[cells[c][t][j]] = 0;
          }
        }
      } else if (n_c > 0) {
        const double rate = static_cast<double>(remove) / static_cast<double>(n_c);
        std::vector<char> kept(n_c, 0);
        for (std::size_t j : random_undersample(n_c, rate, derive_seed(seed, "under/" + std::to_string(c)))) kept[j] = 1;
        for (std::size_t j = 0; j < n_c; ++j) {
          if (!kept[j]) keep[classes[c][j]] = 0;
        }
      }
      continue;
    }

    if (n_c == 0) {
      if (skip_absent) continue;
      throw Error(ErrorKind::EmptyTransitionRow,
                  std::string(priority_name(p)) + " is slated for oversampling but has no observed transitions");
    }
    const auto n_new = static_cast<std::size_t>(std::llround(cp.rate * static_cast<double>(n_c)));
    if (!plan.conditional) {
      pending.push_back({classes[c], classes[c], n_new, code(p), 0});
      continue;
    }
    const auto per_target = largest_remainder(cell_sizes, n_new);
    for (std::size_t t = 0; t < 5; ++t) {
      if (per_target[t] == 0) continue;
      const auto& cell = cells[c][t];
      pending.push_back({cell, cell.size() >= 2 ? cell : classes[c], per_target[t], code(p),
                         code(kAllPriorities[t])});
    }
  }

  std::size_t n_synth = 0;
  for (const auto& job : pending) n_synth += job.count;
  std::size_t n_kept = 0;
  for (char k : keep) n_kept += k ? 1 : 0;

  SampledSet out;
  out.values.resize(static_cast<Eigen::Index>(n_kept + n_synth), X.cols());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    out.values.row(row++) = X.row(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    out.initial.push_back(initial[i]);
    out.source.push_back(static_cast<long>(i));
  }
  if (n_synth == 0) return out;

  const Matrix Z = distance_space(X, kinds);
  for (std::size_t j = 0; j < pending.size(); ++j) {
    const Pending& job = pending[j];
    Rng rng(derive_seed(seed, "smote/" + std::to_string(job.initial) + "/" + std::to_string(job.label)));
    SmoteResult part;
    part.rows.resize(static_cast<Eigen::Index>(job.count), X.cols());
    Eigen::Index local = 0;
    smote_into(X, Z, job.seeds, job.pool, job.count, plan.smote_k, rng, kinds, part, local);
    for (std::size_t s = 0; s < job.count; ++s) {
      out.values.row(row++) = part.rows.row(static_cast<Eigen::Index>(s));
      out.labels.push_back(job.label != 0 ? job.label : labels[part.seed_rows[s]]);
      out.initial.push_back(job.initial);
      out.source.push_back(-1);
    }
  }
  return out;
}

std::vector<double> class_weights(const std::vector<int>& labels, const std::vector<int>& classes) {
  std::vector<double> counts(classes.size(), 0.0);
  double total = 0.0;
  for (int y : labels) {
    auto it = std::find(classes.begin(), classes.end(), y);
    if (it == classes.end()) continue;
    counts[static_cast<std::size_t>(it - classes.begin())] += 1.0;
    total += 1.0;
  }
  std::vector<double> w(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (counts[i] == 0.0) throw Error(ErrorKind::AbsentClass, "class " + std::to_string(classes[i]) + " has no samples");
    w[i] = total / counts[i];
  }
  return w;
}

}  // namespace priodrift
