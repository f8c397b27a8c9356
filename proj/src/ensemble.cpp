#include "priodrift/ensemble.hpp"

#include "priodrift/eval.hpp"

#include <algorithm>
#include <cmath>

namespace priodrift {

Matrix soft_vote(const std::vector<Matrix>& probabilities, const std::vector<int>& weights) {
  if (probabilities.empty() || probabilities.size() != weights.size()) {
    throw Error(ErrorKind::ClassListMismatch, "soft vote needs one weight per model");
  }
  Matrix out = Matrix::Zero(probabilities[0].rows(), probabilities[0].cols());
  double total = 0.0;
  for (std::size_t m = 0; m < probabilities.size(); ++m) {
    if (probabilities[m].rows() != out.rows() || probabilities[m].cols() != out.cols()) {
      throw Error(ErrorKind::ClassListMismatch, "soft vote inputs differ in shape");
    }
    if (weights[m] < 0) throw Error(ErrorKind::InvalidConfig, "vote weights must be non-negative");
    out += static_cast<double>(weights[m]) * probabilities[m];
    total += weights[m];
  }
  if (total <= 0.0) throw Error(ErrorKind::InvalidConfig, "vote weights sum to zero");
  return out / total;
}

Matrix soft_vote(const std::vector<const ProbModel*>& models, const std::vector<int>& weights, const Matrix& X) {
  std::vector<Matrix> probs;
  for (const ProbModel* m : models) {
    if (m->classes() != models.front()->classes()) {
      throw Error(ErrorKind::ClassListMismatch, m->kind() + " has a different class list from " + models.front()->kind());
    }
    probs.push_back(m->predict_proba(X));
  }
  return soft_vote(probs, weights);
}

std::vector<std::vector<int>> enumerate_weight_vectors(std::size_t parts, int total, int lo, int hi, int step) {
  std::vector<std::vector<int>> out;
  if (parts == 0 || step < 1) return out;
  std::vector<int> cur(parts, lo);
  auto rec = [&](auto&& self, std::size_t i, int remaining) -> void {
    if (i + 1 == parts) {
      if (remaining >= lo && remaining <= hi && (remaining - lo) % step == 0) {
        cur[i] = remaining;
        out.push_back(cur);
      }
      return;
    }
    for (int w = lo; w <= hi; w += step) {
      cur[i] = w;
      self(self, i + 1, remaining - w);
    }
  };
  rec(rec, 0, total);
  return out;
}

GridSearchResult grid_search_weights(const std::vector<Matrix>& probs, const std::vector<int>& classes,
                                     const std::vector<int>& y_true, int total, int lo, int hi, int step) {
  const auto candidates = enumerate_weight_vectors(probs.size(), total, lo, hi, step);
  if (candidates.empty()) throw Error(ErrorKind::InvalidConfig, "no weight vector satisfies the grid constraints");
  const int positive = classes.size() > 1 ? classes[1] : classes[0];
  std::vector<double> scores(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    const Matrix P = soft_vote(probs, candidates[c]);
    std::vector<int> pred(static_cast<std::size_t>(P.rows()));
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
      Eigen::Index best = 0;
      P.row(r).maxCoeff(&best);
      pred[static_cast<std::size_t>(r)] = classes[static_cast<std::size_t>(best)] == positive ? 1 : 0;
    }
    std::vector<int> truth(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) truth[i] = y_true[i] == positive ? 1 : 0;
    scores[c] = binary_metrics(truth, pred).f1;
  });
  GridSearchResult best;
  best.evaluated = candidates.size();
  best.score = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (scores[c] > best.score) {
      best.score = scores[c];
      best.weights = candidates[c];
    }
  }
  return best;
}

SoftVoteModel::SoftVoteModel(std::vector<std::unique_ptr<ProbModel>> models, std::vector<int> weights)
    : models_(std::move(models)), weights_(std::move(weights)) {
  if (models_.empty() || models_.size() != weights_.size()) {
    throw Error(ErrorKind::ClassListMismatch, "soft vote needs one weight per model");
  }
  classes_ = models_.front()->classes();
  for (const auto& m : models_) {
    if (m->classes() != classes_) throw Error(ErrorKind::ClassListMismatch, m->kind() + " class list differs");
  }
}

Matrix SoftVoteModel::predict_proba(const Matrix& X) const {
  std::vector<const ProbModel*> ptrs;
  for (const auto& m : models_) ptrs.push_back(m.get());
  return soft_vote(ptrs, weights_, X);
}

void SoftVoteModel::save_body(ModelWriter& w) const {
  w.integers("weights", std::vector<long long>(weights_.begin(), weights_.end()));
  for (const auto& m : models_) m->save(w);
}

std::unique_ptr<SoftVoteModel> SoftVoteModel::load_body(ModelReader& r) {
  const auto w = r.integers("weights");
  std::vector<std::unique_ptr<ProbModel>> models;
  for (std::size_t i = 0; i < w.size(); ++i) models.push_back(load_model(r));
  return std::make_unique<SoftVoteModel>(std::move(models), std::vector<int>(w.begin(), w.end()));
}

// ---------------------------------------------------------------------------

TransitionMatrix TransitionMatrix::from_pairs(const std::vector<int>& initial, const std::vector<int>& target) {
  if (initial.size() != target.size()) throw Error(ErrorKind::SchemaMismatch, "transition pairs differ in length");
  TransitionMatrix t;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const auto a = static_cast<Eigen::Index>(slot(priority_from_code(initial[i])));
    const auto b = static_cast<Eigen::Index>(slot(priority_from_code(target[i])));
    if (a != b) t.counts(a, b) += 1.0;
  }
  for (Eigen::Index a = 0; a < 5; ++a) {
    const double row = t.counts.row(a).sum();
    t.observed[static_cast<std::size_t>(a)] = row > 0.0;
    if (row > 0.0) t.probs.row(a) = t.counts.row(a) / row;
  }
  const double all = t.counts.sum();
  if (all > 0.0) t.marginal = t.counts.colwise().sum().transpose() / all;
  return t;
}

Eigen::Matrix<double, 5, 1> TransitionMatrix::distribution(int current) const {
  const auto a = static_cast<Eigen::Index>(slot(priority_from_code(current)));
  if (observed[static_cast<std::size_t>(a)]) return probs.row(a).transpose();
  Eigen::Matrix<double, 5, 1> d = marginal;
  d(a) = 0.0;
  if (d.sum() <= 0.0) {
    d.setOnes();
    d(a) = 0.0;
  }
  return d / d.sum();
}

namespace {

int sample_code(const Eigen::Matrix<double, 5, 1>& dist, double u) {
  double acc = 0.0;
  int last = 0;
  for (int k = 0; k < 5; ++k) {
    if (dist(k) <= 0.0) continue;
    acc += dist(k);
    last = k;
    if (u < acc) return k + 1;
  }
  return last + 1;
}

int column_code(const Matrix& X, Eigen::Index r, std::size_t col) {
  return std::clamp(static_cast<int>(std::lround(X(r, static_cast<Eigen::Index>(col)))), 1, 5);
}

}  // namespace

BaselinePhase1::BaselinePhase1(const std::vector<int>& initial, const std::vector<int>& labels,
                               std::size_t priority_column)
    : column_(priority_column) {
  if (initial.size() != labels.size()) throw Error(ErrorKind::SchemaMismatch, "baseline inputs differ in length");
  if (initial.empty()) throw Error(ErrorKind::EmptyTrainingSet, "phase I baseline");
  classes_ = {0, 1};
  std::array<double, 5> n{}, pos{};
  double all_pos = 0.0;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const std::size_t s = slot(priority_from_code(initial[i]));
    n[s] += 1.0;
    pos[s] += labels[i] != 0 ? 1.0 : 0.0;
    all_pos += labels[i] != 0 ? 1.0 : 0.0;
  }
  overall_ = all_pos / static_cast<double>(initial.size());
  for (std::size_t s = 0; s < 5; ++s) {
    seen_[s] = n[s] > 0.0;
    rate_[s] = seen_[s] ? pos[s] / n[s] : overall_;
  }
}

double BaselinePhase1::rate(int initial) const { return rate_[slot(priority_from_code(initial))]; }

int BaselinePhase1::draw(int initial, std::uint64_t seed) const {
  Rng rng(seed);
  return rng.uniform() < rate(initial) ? 1 : 0;
}

std::vector<int> BaselinePhase1::draw_all(const Matrix& X, std::uint64_t seed) const {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = draw(column_code(X, r, column_), derive_seed(seed, static_cast<std::uint64_t>(r)));
  }
  return out;
}

Matrix BaselinePhase1::predict_proba(const Matrix& X) const {
  Matrix P(X.rows(), 2);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    P(r, 1) = rate(column_code(X, r, column_));
    P(r, 0) = 1.0 - P(r, 1);
  }
  return P;
}

void BaselinePhase1::save_body(ModelWriter& w) const {
  w.integer("column", static_cast<long long>(column_));
  w.reals("rate", std::vector<double>(rate_.begin(), rate_.end()));
  w.real("overall", overall_);
}

std::unique_ptr<BaselinePhase1> BaselinePhase1::load_body(ModelReader& r) {
  auto m = std::unique_ptr<BaselinePhase1>(new BaselinePhase1());
  m->column_ = static_cast<std::size_t>(r.integer("column"));
  const auto rates = r.reals("rate");
  if (rates.size() != 5) throw Error(ErrorKind::SchemaMismatch, "baseline rates");
  std::copy(rates.begin(), rates.end(), m->rate_.begin());
  m->overall_ = r.real("overall");
  return m;
}

BaselinePhase2::BaselinePhase2(const std::vector<int>& initial, const std::vector<int>& targets,
                               std::size_t priority_column)
    : tm_(TransitionMatrix::from_pairs(initial, targets)), column_(priority_column) {
  classes_ = {1, 2, 3, 4, 5};
}

int BaselinePhase2::draw(int current, std::uint64_t seed) const {
  Rng rng(seed);
  return sample_code(tm_.distribution(current), rng.uniform());
}

std::vector<int> BaselinePhase2::draw_all(const Matrix& X, std::uint64_t seed) const {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = draw(column_code(X, r, column_), derive_seed(seed, static_cast<std::uint64_t>(r)));
  }
  return out;
}

Matrix BaselinePhase2::predict_proba(const Matrix& X) const {
  Matrix P(X.rows(), 5);
  for (Eigen::Index r = 0; r < X.rows(); ++r) P.row(r) = tm_.distribution(column_code(X, r, column_)).transpose();
  return P;
}

void BaselinePhase2::save_body(ModelWriter& w) const {
  w.integer("column", static_cast<long long>(column_));
  w.matrix("counts", tm_.counts);
}

std::unique_ptr<BaselinePhase2> BaselinePhase2::load_body(ModelReader& r) {
  auto m = std::unique_ptr<BaselinePhase2>(new BaselinePhase2());
  m->column_ = static_cast<std::size_t>(r.integer("column"));
  const Matrix counts = r.matrix("counts");
  if (counts.rows() != 5 || counts.cols() != 5) throw Error(ErrorKind::SchemaMismatch, "transition counts");
  std::vector<int> a, b;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      for (int c = 0; c < static_cast<int>(counts(i, j)); ++c) {
        a.push_back(i + 1);
        b.push_back(j + 1);
      }
    }
  }
  m->tm_ = TransitionMatrix::from_pairs(a, b);
  return m;
}

Matrix mask_current(const Matrix& P, const std::vector<int>& classes, const std::vector<int>& current) {
  Matrix out = P;
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    auto it = std::find(classes.begin(), classes.end(), current[static_cast<std::size_t>(r)]);
    if (it == classes.end()) continue;
    const auto c = static_cast<Eigen::Index>(it - classes.begin());
    out(r, c) = 0.0;
    const double s = out.row(r).sum();
    if (s > 0.0) {
      out.row(r) /= s;
    } else if (out.cols() > 1) {
      out.row(r).setConstant(1.0 / static_cast<double>(out.cols() - 1));
      out(r, c) = 0.0;
    }
  }
  return out;
}

MaskedModel::MaskedModel(std::unique_ptr<ProbModel> inner, std::size_t priority_column)
    : inner_(std::move(inner)), column_(priority_column) {
  classes_ = inner_->classes();
  fingerprint_ = inner_->fingerprint();
}

Matrix MaskedModel::predict_proba(const Matrix& X) const {
  std::vector<int> current(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) current[static_cast<std::size_t>(r)] = column_code(X, r, column_);
  return mask_current(inner_->predict_proba(X), classes_, current);
}

void MaskedModel::save_body(ModelWriter& w) const {
  w.integer("column", static_cast<long long>(column_));
  inner_->save(w);
}

std::unique_ptr<MaskedModel> MaskedModel::load_body(ModelReader& r) {
  const auto column = static_cast<std::size_t>(r.integer("column"));
  return std::make_unique<MaskedModel>(load_model(r), column);
}

// ---------------------------------------------------------------------------

std::unique_ptr<ProbModel> load_model(ModelReader& r) {
  const std::string kind = r.text("model");
  const std::string fingerprint = r.text("fingerprint");
  const auto classes = r.integers("classes");
  std::unique_ptr<ProbModel> m;
  if (kind == "knn") m = KnnModel::load_body(r);
  else if (kind == "forest") m = ForestModel::load_body(r);
  else if (kind == "svm") m = SvmModel::load_body(r);
  else if (kind == "gbdt") m = GbdtModel::load_body(r);
  else if (kind == "mlp") m = MlpModel::load_body(r);
  else if (kind == "softvote") m = SoftVoteModel::load_body(r);
  else if (kind == "baseline1") m = BaselinePhase1::load_body(r);
  else if (kind == "baseline2") m = BaselinePhase2::load_body(r);
  else if (kind == "masked") m = MaskedModel::load_body(r);
  else throw Error(ErrorKind::SchemaMismatch, "unknown model kind '" + kind + "'");
  m->classes_.assign(classes.begin(), classes.end());
  m->fingerprint_ = fingerprint;
  if (r.text("end") != kind) throw Error(ErrorKind::SchemaMismatch, "model '" + kind + "' is not terminated");
  return m;
}

}  // namespace priodrift
