#include "priodrift/learners.hpp"

#include <cmath>
#include <numeric>

namespace priodrift {

namespace {

void softmax_rows(Matrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - mx).exp();
    logits.row(r) /= logits.row(r).sum();
  }
}

struct Gradients {
  std::vector<Matrix> W;
  std::vector<Vector> b;
};

}  // namespace

std::unique_ptr<MlpModel> MlpModel::init(std::size_t inputs, const std::vector<int>& classes, const MlpParams& params,
                                         std::uint64_t seed) {
  auto m = std::unique_ptr<MlpModel>(new MlpModel());
  m->classes_ = classes;
  m->scaler_ = Standardizer::from_parts(Vector::Zero(static_cast<Eigen::Index>(inputs)),
                                        Vector::Ones(static_cast<Eigen::Index>(inputs)));
  Rng rng(seed);
  std::vector<std::size_t> sizes = {inputs};
  sizes.insert(sizes.end(), params.hidden.begin(), params.hidden.end());
  sizes.push_back(classes.size());
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const double sd = std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(sizes[l - 1], 1)));
    Matrix W(static_cast<Eigen::Index>(sizes[l]), static_cast<Eigen::Index>(sizes[l - 1]));
    for (Eigen::Index c = 0; c < W.cols(); ++c) {
      for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = sd * rng.normal();
    }
    m->weights_.push_back(std::move(W));
    m->biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(sizes[l])));
  }
  return m;
}

Matrix MlpModel::forward(const Matrix& Z) const {
  Matrix A = Z;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix H = (A * weights_[l].transpose()).rowwise() + biases_[l].transpose();
    if (l + 1 < weights_.size()) H = H.cwiseMax(0.0);
    A = std::move(H);
  }
  softmax_rows(A);
  return A;
}

namespace {

double weighted_ce(const Matrix& P, const std::vector<std::size_t>& targets, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const double cw = w.empty() ? 1.0 : w[targets[j]];
    s -= cw * std::log(P(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(targets[j])));
  }
  return s / static_cast<double>(targets.size());
}

}  // namespace

double MlpModel::loss(const Matrix& Z, const std::vector<std::size_t>& targets,
                      const std::vector<double>& class_weights) const {
  return weighted_ce(forward(Z), targets, class_weights);
}

namespace {

double backprop(const std::vector<Matrix>& W, const std::vector<Vector>& b, const Matrix& Z,
                const std::vector<std::size_t>& targets, const std::vector<double>& cw, Gradients& grad) {
  const std::size_t L = W.size();
  std::vector<Matrix> acts = {Z};
  for (std::size_t l = 0; l < L; ++l) {
    Matrix H = (acts.back() * W[l].transpose()).rowwise() + b[l].transpose();
    if (l + 1 < L) H = H.cwiseMax(0.0);
    acts.push_back(std::move(H));
  }
  Matrix P = acts.back();
  softmax_rows(P);
  const double loss = weighted_ce(P, targets, cw);
  const auto B = static_cast<double>(targets.size());
  Matrix delta = P;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    delta(r, static_cast<Eigen::Index>(targets[j])) -= 1.0;
    delta.row(r) *= (cw.empty() ? 1.0 : cw[targets[j]]) / B;
  }
  grad.W.resize(L);
  grad.b.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    grad.W[l] = delta.transpose() * acts[l];
    grad.b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix back = delta * W[l];
      delta = back.array() * (acts[l].array() > 0.0).cast<double>();
    }
  }
  return loss;
}

}  // namespace

Vector MlpModel::gradient(const Matrix& Z, const std::vector<std::size_t>& targets,
                          const std::vector<double>& class_weights) const {
  Gradients g;
  backprop(weights_, biases_, Z, targets, class_weights, g);
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.insert(flat.end(), g.W[l].data(), g.W[l].data() + g.W[l].size());
    flat.insert(flat.end(), g.b[l].data(), g.b[l].data() + g.b[l].size());
  }
  return Eigen::Map<Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

Vector MlpModel::parameters() const {
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.insert(flat.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
    flat.insert(flat.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
  }
  return Eigen::Map<Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void MlpModel::set_parameters(const Vector& theta) {
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index i = 0; i < weights_[l].size(); ++i) weights_[l].data()[i] = theta(k++);
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l](i) = theta(k++);
  }
  if (k != theta.size()) throw Error(ErrorKind::SchemaMismatch, "mlp parameter vector has the wrong length");
}

std::unique_ptr<MlpModel> MlpModel::fit(const Matrix& X, const std::vector<int>& y, const MlpParams& params,
                                        std::uint64_t seed) {
  if (X.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "mlp");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(ErrorKind::SchemaMismatch, "mlp: rows and labels differ");
  const std::vector<int> classes = class_list(y);
  if (!params.class_weights.empty() && params.class_weights.size() != classes.size()) {
    throw Error(ErrorKind::ClassListMismatch, "mlp: class weights must cover every training class");
  }
  auto m = init(static_cast<std::size_t>(X.cols()), classes, params, derive_seed(seed, "init"));
  m->scaler_ = Standardizer::fit(X);
  const Matrix Z = m->scaler_.apply(X);
  const auto targets = class_indices(y, classes);
  const std::size_t n = targets.size();
  const std::size_t batch = std::max<std::size_t>(params.batch, 1);

  std::vector<Matrix> vW;
  std::vector<Vector> vb;
  for (std::size_t l = 0; l < m->weights_.size(); ++l) {
    vW.push_back(Matrix::Zero(m->weights_[l].rows(), m->weights_[l].cols()));
    vb.push_back(Vector::Zero(m->biases_[l].size()));
  }
  Rng rng(derive_seed(seed, "shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Gradients g;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<std::size_t> t;
      for (std::size_t r : rows) t.push_back(targets[r]);
      const double l = backprop(m->weights_, m->biases_, select_rows(Z, rows), t, params.class_weights, g);
      if (!std::isfinite(l)) {
        throw Error(ErrorKind::DivergenceDetected, "mlp loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      total += l;
      ++batches;
      for (std::size_t k = 0; k < m->weights_.size(); ++k) {
        vW[k] = params.momentum * vW[k] - params.learning_rate * g.W[k];
        vb[k] = params.momentum * vb[k] - params.learning_rate * g.b[k];
        m->weights_[k] += vW[k];
        m->biases_[k] += vb[k];
      }
    }
    m->epoch_losses_.push_back(total / static_cast<double>(std::max<std::size_t>(batches, 1)));
  }
  return m;
}

Matrix MlpModel::predict_proba(const Matrix& X) const { return forward(scaler_.apply(X)); }

void MlpModel::save_body(ModelWriter& w) const {
  w.vector("mean", scaler_.mean());
  w.vector("scale", scaler_.scale());
  w.integer("layers", static_cast<long long>(weights_.size()));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    w.matrix("W", weights_[l]);
    w.vector("b", biases_[l]);
  }
  w.reals("epoch_losses", epoch_losses_);
}

std::unique_ptr<MlpModel> MlpModel::load_body(ModelReader& r) {
  auto m = std::unique_ptr<MlpModel>(new MlpModel());
  Vector mean = r.vector("mean");
  Vector scale = r.vector("scale");
  m->scaler_ = Standardizer::from_parts(std::move(mean), std::move(scale));
  const auto layers = r.integer("layers");
  for (long long l = 0; l < layers; ++l) {
    m->weights_.push_back(r.matrix("W"));
    m->biases_.push_back(r.vector("b"));
  }
  m->epoch_losses_ = r.reals("epoch_losses");
  return m;
}

}  // namespace priodrift
