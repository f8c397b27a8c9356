#include "priodrift/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace priodrift {

std::vector<int> ProbModel::predict(const Matrix& X) const {
  const Matrix P = predict_proba(X);
  std::vector<int> out(static_cast<std::size_t>(P.rows()));
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    Eigen::Index best = 0;
    P.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

void ProbModel::save(ModelWriter& w) const {
  w.text("model", kind());
  w.text("fingerprint", fingerprint_);
  w.integers("classes", std::vector<long long>(classes_.begin(), classes_.end()));
  save_body(w);
  w.text("end", kind());
}

void save_model(const ProbModel& model, std::ostream& out) {
  ModelWriter w(out);
  model.save(w);
}

void save_model_file(const ProbModel& model, const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write model " + path);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  save_model(model, out);
}

std::unique_ptr<ProbModel> load_model(std::istream& in) {
  // Skip comment header lines.
  while (in.peek() == '#') {
    std::string line;
    std::getline(in, line);
  }
  ModelReader r(in);
  return load_model(r);
}

std::unique_ptr<ProbModel> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "model file " + path);
  return load_model(in);
}

std::vector<int> class_list(const std::vector<int>& labels) {
  std::vector<int> c = labels;
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

std::vector<std::size_t> class_indices(const std::vector<int>& labels, const std::vector<int>& classes) {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int y : labels) {
    auto it = std::lower_bound(classes.begin(), classes.end(), y);
    if (it == classes.end() || *it != y) {
      throw Error(ErrorKind::ClassListMismatch, "label " + std::to_string(y) + " is not in the class list");
    }
    out.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// KNN

std::unique_ptr<KnnModel> KnnModel::fit(const Matrix& X, const std::vector<int>& y, const KnnParams& params) {
  if (X.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "knn");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(ErrorKind::SchemaMismatch, "knn: rows and labels differ");
  if (params.k < 1) throw Error(ErrorKind::InvalidConfig, "knn: k must be at least 1");
  auto m = std::unique_ptr<KnnModel>(new KnnModel());
  m->params_ = params;
  m->classes_ = class_list(y);
  m->scaler_ = Standardizer::fit(X);
  m->train_ = m->scaler_.apply(X);
  m->targets_ = class_indices(y, m->classes_);
  return m;
}

Matrix KnnModel::predict_proba(const Matrix& X) const {
  const Matrix Q = scaler_.apply(X);
  const std::size_t n = static_cast<std::size_t>(train_.rows());
  const std::size_t k = std::min(params_.k, n);
  const std::size_t C = classes_.size();
  Matrix P = Matrix::Zero(Q.rows(), static_cast<Eigen::Index>(C));
  parallel_for(static_cast<std::size_t>(Q.rows()), [&](std::size_t q) {
    const auto qi = static_cast<Eigen::Index>(q);
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = {(train_.row(static_cast<Eigen::Index>(i)) - Q.row(qi)).cwiseAbs().sum(), i};
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    const bool exact = d[0].first == 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double w = 1.0;
      if (params_.weighting == Weighting::Distance) {
        if (exact) {
          if (d[j].first != 0.0) break;
        } else {
          w = 1.0 / d[j].first;
        }
      }
      P(qi, static_cast<Eigen::Index>(targets_[d[j].second])) += w;
    }
    P.row(qi) /= P.row(qi).sum();
  });
  return P;
}

void KnnModel::save_body(ModelWriter& w) const {
  w.integer("k", static_cast<long long>(params_.k));
  w.text("weighting", params_.weighting == Weighting::Distance ? "distance" : "uniform");
  w.vector("mean", scaler_.mean());
  w.vector("scale", scaler_.scale());
  w.matrix("train", train_);
  w.integers("targets", std::vector<long long>(targets_.begin(), targets_.end()));
}

std::unique_ptr<KnnModel> KnnModel::load_body(ModelReader& r) {
  auto m = std::unique_ptr<KnnModel>(new KnnModel());
  m->params_.k = static_cast<std::size_t>(r.integer("k"));
  m->params_.weighting = r.text("weighting") == "uniform" ? Weighting::Uniform : Weighting::Distance;
  Vector mean = r.vector("mean");
  Vector scale = r.vector("scale");
  m->scaler_ = Standardizer::from_parts(std::move(mean), std::move(scale));
  m->train_ = r.matrix("train");
  for (long long t : r.integers("targets")) m->targets_.push_back(static_cast<std::size_t>(t));
  return m;
}

}  // namespace priodrift
