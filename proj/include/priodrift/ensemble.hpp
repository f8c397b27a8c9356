#pragma once

#include "priodrift/issue_model.hpp"
#include "priodrift/learners.hpp"

#include <array>
#include <memory>
#include <vector>

namespace priodrift {

// ---------------------------------------------------------------------------
// Soft voting

/// sum_m w_m P_m / sum_m w_m.
Matrix soft_vote(const std::vector<Matrix>& probabilities, const std::vector<int>& weights);
/// Checks that every model shares the class list.
Matrix soft_vote(const std::vector<const ProbModel*>& models, const std::vector<int>& weights, const Matrix& X);

/// Integer vectors of length `parts`, each entry in [lo, hi] on the step grid,
/// summing to `total`, in lexicographic order.
std::vector<std::vector<int>> enumerate_weight_vectors(std::size_t parts, int total, int lo, int hi, int step = 1);

struct GridSearchResult {
  std::vector<int> weights;
  double score = 0.0;
  std::size_t evaluated = 0;
};

/// Maximises positive-class F1 on the validation probabilities; the
/// lexicographically smallest vector wins ties.
GridSearchResult grid_search_weights(const std::vector<Matrix>& validation_probabilities, const std::vector<int>& classes,
                                     const std::vector<int>& y_true, int total = 10, int lo = 1, int hi = 7,
                                     int step = 1);

class SoftVoteModel final : public ProbModel {
 public:
  SoftVoteModel(std::vector<std::unique_ptr<ProbModel>> models, std::vector<int> weights);

  std::string kind() const override { return "softvote"; }
  Matrix predict_proba(const Matrix& X) const override;
  const std::vector<int>& weights() const { return weights_; }
  const std::vector<std::unique_ptr<ProbModel>>& members() const { return models_; }
  static std::unique_ptr<SoftVoteModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;
  std::vector<std::unique_ptr<ProbModel>> models_;
  std::vector<int> weights_;
};

// ---------------------------------------------------------------------------
// Baselines

/// Counts of (initial -> target) with the diagonal dropped; rows normalised.
struct TransitionMatrix {
  Eigen::Matrix<double, 5, 5> counts = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 5> probs = Eigen::Matrix<double, 5, 5>::Zero();
  std::array<bool, 5> observed{};
  Eigen::Matrix<double, 5, 1> marginal = Eigen::Matrix<double, 5, 1>::Zero();

  static TransitionMatrix from_pairs(const std::vector<int>& initial, const std::vector<int>& target);
  /// Row for `current`, or the marginal with `current` removed when unobserved.
  Eigen::Matrix<double, 5, 1> distribution(int current) const;
};

/// Phase I heuristic: change with the historical rate of the initial priority.
class BaselinePhase1 final : public ProbModel {
 public:
  BaselinePhase1(const std::vector<int>& initial, const std::vector<int>& labels, std::size_t priority_column);

  std::string kind() const override { return "baseline1"; }
  /// Columns (no change, change) at the class rate.
  Matrix predict_proba(const Matrix& X) const override;
  double rate(int initial) const;
  int draw(int initial, std::uint64_t seed) const;
  /// One seeded draw per row, seed derived from (seed, row index).
  std::vector<int> draw_all(const Matrix& X, std::uint64_t seed) const;
  static std::unique_ptr<BaselinePhase1> load_body(ModelReader& r);

 private:
  BaselinePhase1() = default;
  void save_body(ModelWriter& w) const override;
  std::array<double, 5> rate_{};
  std::array<bool, 5> seen_{};
  double overall_ = 0.0;
  std::size_t column_ = 0;
};

/// Phase II heuristic: target drawn from the training transition matrix.
class BaselinePhase2 final : public ProbModel {
 public:
  BaselinePhase2(const std::vector<int>& initial, const std::vector<int>& targets, std::size_t priority_column);

  std::string kind() const override { return "baseline2"; }
  Matrix predict_proba(const Matrix& X) const override;
  int draw(int current, std::uint64_t seed) const;
  std::vector<int> draw_all(const Matrix& X, std::uint64_t seed) const;
  const TransitionMatrix& transitions() const { return tm_; }
  static std::unique_ptr<BaselinePhase2> load_body(ModelReader& r);

 private:
  BaselinePhase2() = default;
  void save_body(ModelWriter& w) const override;
  TransitionMatrix tm_;
  std::size_t column_ = 0;
};

/// Zeroes each row's current class and renormalises (uniform over the rest
/// when nothing is left).
Matrix mask_current(const Matrix& P, const std::vector<int>& classes, const std::vector<int>& current);

/// Phase II wrapper that applies mask_current using the current-priority column.
class MaskedModel final : public ProbModel {
 public:
  MaskedModel(std::unique_ptr<ProbModel> inner, std::size_t priority_column);
  std::string kind() const override { return "masked"; }
  Matrix predict_proba(const Matrix& X) const override;
  const ProbModel& inner() const { return *inner_; }
  static std::unique_ptr<MaskedModel> load_body(ModelReader& r);

 private:
  void save_body(ModelWriter& w) const override;
  std::unique_ptr<ProbModel> inner_;
  std::size_t column_ = 0;
};

}  // namespace priodrift
