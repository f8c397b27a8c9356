#pragma once

#include "priodrift/model_io.hpp"
#include "priodrift/standardize.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace priodrift {

/// Common contract: class list fixed at fit time (ascending), probability
/// rows summing to one.
class ProbModel {
 public:
  virtual ~ProbModel() = default;

  virtual std::string kind() const = 0;
  virtual Matrix predict_proba(const Matrix& X) const = 0;

  /// Argmax class label per row (first class on ties).
  std::vector<int> predict(const Matrix& X) const;

  const std::vector<int>& classes() const { return classes_; }
  const std::string& fingerprint() const { return fingerprint_; }
  void set_fingerprint(std::string f) { fingerprint_ = std::move(f); }

  void save(ModelWriter& w) const;

 protected:
  virtual void save_body(ModelWriter& w) const = 0;

  std::vector<int> classes_;
  std::string fingerprint_;

  friend std::unique_ptr<ProbModel> load_model(ModelReader& r);
};

void save_model(const ProbModel& model, std::ostream& out);
void save_model_file(const ProbModel& model, const std::string& path, const std::string& header_comment = {});
std::unique_ptr<ProbModel> load_model(ModelReader& r);
std::unique_ptr<ProbModel> load_model(std::istream& in);
std::unique_ptr<ProbModel> load_model_file(const std::string& path);

/// Sorted distinct labels.
std::vector<int> class_list(const std::vector<int>& labels);
/// Position of each label in `classes`; throws ClassListMismatch on strangers.
std::vector<std::size_t> class_indices(const std::vector<int>& labels, const std::vector<int>& classes);

// ---------------------------------------------------------------------------
// KNN

enum class Weighting { Distance, Uniform };

struct KnnParams {
  std::size_t k = 385;
  Weighting weighting = Weighting::Distance;
};

class KnnModel final : public ProbModel {
 public:
  static std::unique_ptr<KnnModel> fit(const Matrix& X, const std::vector<int>& y, const KnnParams& params = {});
  std::string kind() const override { return "knn"; }
  Matrix predict_proba(const Matrix& X) const override;
  static std::unique_ptr<KnnModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;

  KnnParams params_;
  Standardizer scaler_;
  Matrix train_;  // standardized
  std::vector<std::size_t> targets_;
};

// ---------------------------------------------------------------------------
// Trees

struct Tree {
  std::vector<int> feature;       ///< -1 at leaves
  std::vector<double> threshold;  ///< go left when x <= threshold
  std::vector<int> left, right;
  Matrix value;                   ///< per node: class distribution (forest) or a single score (boosting)

  std::size_t leaf_of(const Matrix& X, Eigen::Index row) const;
  std::size_t size() const { return feature.size(); }
  std::size_t depth() const;
};

void write_tree(ModelWriter& w, const Tree& t);
Tree load_tree(ModelReader& r);

struct ForestParams {
  std::size_t trees = 280;
  int max_depth = 10;           ///< negative: unlimited
  std::size_t min_split = 5;
  std::size_t min_leaf = 2;
  std::size_t max_features = 0; ///< 0: floor(sqrt(d)), otherwise capped at d
  bool bootstrap = true;
};

/// Gini CART tree over `rows` (with repetition). Candidates at each node are
/// scanned in ascending feature order and ascending threshold; the first
/// strictly best split wins.
Tree fit_gini_tree(const Matrix& X, const std::vector<std::size_t>& y, std::size_t n_classes,
                   const std::vector<std::size_t>& rows, const ForestParams& params, Rng& rng);

class ForestModel final : public ProbModel {
 public:
  static std::unique_ptr<ForestModel> fit(const Matrix& X, const std::vector<int>& y, const ForestParams& params,
                                          std::uint64_t seed);
  /// Rows drawn for tree t (the first draws of that tree's generator).
  static std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t t, Rng* rest = nullptr);

  std::string kind() const override { return "forest"; }
  Matrix predict_proba(const Matrix& X) const override;
  const std::vector<Tree>& trees() const { return trees_; }
  static std::unique_ptr<ForestModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;
  std::vector<Tree> trees_;
};

// ---------------------------------------------------------------------------
// SVM

struct SvmParams {
  double C = 1.0;
  double gamma = 0.0;  ///< <= 0: "scale", 1 / (d * var(X))
  double tol = 1e-3;
  double calibration_fraction = 0.2;
};

/// Binary RBF SVM fitted by SMO with second-order working-set selection.
class SvmModel final : public ProbModel {
 public:
  static std::unique_ptr<SvmModel> fit(const Matrix& X, const std::vector<int>& y, const SvmParams& params,
                                       std::uint64_t seed);
  std::string kind() const override { return "svm"; }
  Matrix predict_proba(const Matrix& X) const override;
  /// Signed distance; positive favours classes()[1].
  Vector decision_function(const Matrix& X) const;
  double gamma() const { return gamma_; }
  std::size_t n_support() const { return static_cast<std::size_t>(support_.rows()); }
  double platt_a() const { return platt_a_; }
  double platt_b() const { return platt_b_; }
  static std::unique_ptr<SvmModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;
  Vector decision_standardized(const Matrix& Z) const;

  Standardizer scaler_;
  double gamma_ = 1.0;
  Matrix support_;  // standardized support vectors
  Vector coef_;     // alpha_i * y_i
  double rho_ = 0.0;
  double platt_a_ = -1.0, platt_b_ = 0.0;
};

/// Platt sigmoid P(y=1|f) = 1 / (1 + exp(A f + B)) by Newton's method with
/// regularised targets.
std::pair<double, double> fit_platt(const std::vector<double>& decision, const std::vector<int>& positive);

// ---------------------------------------------------------------------------
// Gradient boosting

struct GbdtParams {
  std::size_t rounds = 95;
  int max_depth = 9;
  double eta = 0.01;
  double colsample = 0.5;
  double lambda = 1e-6;
  double min_child_weight = 1.0;
};

class GbdtModel final : public ProbModel {
 public:
  static std::unique_ptr<GbdtModel> fit(const Matrix& X, const std::vector<int>& y, const GbdtParams& params,
                                        std::uint64_t seed);
  std::string kind() const override { return "gbdt"; }
  Matrix predict_proba(const Matrix& X) const override;
  Vector margin(const Matrix& X) const;
  /// Mean training log-loss before the first round and after each round.
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  double base_score() const { return base_; }
  static std::unique_ptr<GbdtModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;

  double base_ = 0.0;
  double eta_ = 0.0;
  std::vector<Tree> trees_;
  std::vector<double> loss_trace_;
};

// ---------------------------------------------------------------------------
// MLP

struct MlpParams {
  std::vector<std::size_t> hidden = {32, 32, 32};
  std::size_t epochs = 86;
  std::size_t batch = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  /// Per class in ascending class order; empty means all ones.
  std::vector<double> class_weights;
};

/// ReLU hidden layers, softmax output, weighted categorical cross-entropy.
class MlpModel final : public ProbModel {
 public:
  static std::unique_ptr<MlpModel> fit(const Matrix& X, const std::vector<int>& y, const MlpParams& params,
                                       std::uint64_t seed);
  /// He-initialised network on already standardized inputs.
  static std::unique_ptr<MlpModel> init(std::size_t inputs, const std::vector<int>& classes, const MlpParams& params,
                                        std::uint64_t seed);

  std::string kind() const override { return "mlp"; }
  Matrix predict_proba(const Matrix& X) const override;

  /// Works on standardized inputs; `targets` index into classes().
  Matrix forward(const Matrix& Z) const;
  double loss(const Matrix& Z, const std::vector<std::size_t>& targets, const std::vector<double>& class_weights) const;
  Vector gradient(const Matrix& Z, const std::vector<std::size_t>& targets,
                  const std::vector<double>& class_weights) const;
  Vector parameters() const;
  void set_parameters(const Vector& theta);

  const std::vector<double>& epoch_losses() const { return epoch_losses_; }
  static std::unique_ptr<MlpModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;

  Standardizer scaler_;
  std::vector<Matrix> weights_;  // layer l: out x in
  std::vector<Vector> biases_;
  std::vector<double> epoch_losses_;
};

}  // namespace priodrift
