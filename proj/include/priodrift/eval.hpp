#pragma once

#include "priodrift/core.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace priodrift {

struct BinaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_division = false;  ///< some ratio had an empty denominator and was set to 0
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Positive class is 1.
BinaryMetrics binary_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct ConfusionMatrix {
  std::vector<int> classes;
  std::vector<std::vector<std::size_t>> counts;  ///< [true][predicted]

  static ConfusionMatrix build(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                               const std::vector<int>& classes);
  std::size_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix& other) const = default;
};

struct MulticlassMetrics {
  double f1_weighted = 0.0;
  double f1_macro = 0.0;
  std::vector<double> per_class_f1;
  std::vector<double> precision, recall;
  std::vector<std::size_t> support;
  std::vector<bool> flagged;  ///< zero-division on that class
};

struct F1Averages {
  double weighted = 0.0;
  double macro = 0.0;
};

/// Support-weighted and unweighted means of per-class F1 over the declared classes.
F1Averages average_f1(const std::vector<double>& per_class_f1, const std::vector<std::size_t>& support);

MulticlassMetrics multiclass_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                     const std::vector<int>& classes);
MulticlassMetrics multiclass_metrics(const ConfusionMatrix& cm);

struct Split {
  std::vector<std::size_t> train, test;  ///< sorted row indices
  std::vector<std::string> warnings;
};

/// Stratified on `strata`; each stratum sends llround(fraction * size) rows to
/// test. Strata with fewer than two rows are pooled and split unstratified.
Split split_80_20(const std::vector<int>& strata, std::uint64_t seed, double test_fraction = 0.2);

struct GroupBreakdown {
  int group = 0;
  std::size_t n = 0;
  ConfusionMatrix confusion;
  MulticlassMetrics metrics;
  BinaryMetrics binary;     ///< filled for binary class lists
  bool flagged = false;     ///< no true members of the target class in the group
};

/// Metrics within each group (initial priority for Phase I, target priority
/// for Phase II), groups sorted ascending.
std::vector<GroupBreakdown> per_priority_breakdown(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                                   const std::vector<int>& groups, const std::vector<int>& classes);

struct Summary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

/// Quartiles by linear interpolation between order statistics.
Summary describe(std::vector<double> values);

/// Rank correlation with averaged ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct FoldRow {
  std::string project;
  std::size_t n_train = 0, n_test = 0;
  std::map<std::string, double> metrics;
};

struct CrossProjectReport {
  std::vector<FoldRow> folds;
  std::map<std::string, Summary> stats;
};

using FoldFunction = std::function<std::map<std::string, double>(
    const std::vector<std::size_t>& train, const std::vector<std::size_t>& test, const std::string& project)>;

/// Leave-one-project-out: for every distinct project, train on all other rows
/// and evaluate on that project's rows. Folds run in parallel.
CrossProjectReport cross_project_eval(const std::vector<std::string>& row_projects, const FoldFunction& fold);

}  // namespace priodrift
