#pragma once

#include "priodrift/config.hpp"
#include "priodrift/eval.hpp"

#include <memory>
#include <string>
#include <vector>

namespace priodrift {

struct IngestOutput {
  std::vector<SchemaIssue> schema_errors;
  CorrectionResult corrected;
  std::vector<Phase1Row> phase1;
  std::vector<Phase2Row> phase2;
  std::vector<ProjectStats> stats;
};

/// Correction plus labelled datasets. Parse rejections are merged into the
/// removal list.
IngestOutput ingest_corpus(ParseResult parsed, const RunConfig& config);

struct FeatureSet {
  FeatureMatrix phase1;
  FeatureMatrix phase2;
};

FeatureSet featurize(const std::vector<IssueRecord>& corrected, const EventKeySet& batch_events,
                     const RunConfig& config);

/// Stratified 80/20 split on the label, then a stratified validation split
/// of the training part for vote-weight search.
struct ThreeWaySplit {
  std::vector<std::size_t> fit, validation, test;
  std::vector<std::string> warnings;
};

ThreeWaySplit split_rows(const std::vector<int>& labels, const RunConfig& config, std::uint64_t seed);
/// Fit/validation split of an existing training list.
ThreeWaySplit split_training(const std::vector<std::size_t>& train, const std::vector<int>& labels,
                             const RunConfig& config, std::uint64_t seed);

struct TrainingSet {
  Matrix X;
  std::vector<int> y;
};

/// Balances the binary training rows with the configured Phase I sampler.
TrainingSet sample_phase1(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema,
                          const RunConfig& config, std::uint64_t seed);
/// Conditional mixed sampling keyed on the current-priority column.
SampledSet sample_phase2(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema,
                         const RunConfig& config, std::uint64_t seed);

struct Phase1Fit {
  std::unique_ptr<SoftVoteModel> ensemble;
  GridSearchResult search;  ///< evaluated == 0 when the weights were fixed
};

/// KNN, forest, SVM and GBDT on the sampled rows; vote weights searched on
/// the untouched validation rows unless fixed in the config.
Phase1Fit fit_phase1(const TrainingSet& train, const Matrix& X_val, const std::vector<int>& y_val,
                     const FeatureSchema& schema, const RunConfig& config, std::uint64_t seed);

/// Cost-sensitive MLP, wrapped in a current-priority mask when configured.
std::unique_ptr<ProbModel> fit_phase2(const SampledSet& train, const FeatureSchema& schema, const RunConfig& config,
                                      std::uint64_t seed, bool mask_current);

std::unique_ptr<BaselinePhase1> fit_baseline1(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema);
std::unique_ptr<BaselinePhase2> fit_baseline2(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema);

struct MetricLine {
  int phase = 1;
  std::string model;
  std::string group;  ///< "all" or "priority=<code>"
  std::string metric;
  double value = 0.0;
};

struct EvaluationReport {
  std::vector<MetricLine> lines;
  std::vector<std::string> notes;

  double value(int phase, const std::string& model, const std::string& metric, const std::string& group = "all") const;
};

void evaluate_phase1(const SoftVoteModel& ensemble, const BaselinePhase1& baseline, const Matrix& X,
                     const std::vector<int>& y, const FeatureSchema& schema, std::uint64_t seed,
                     EvaluationReport& report);
void evaluate_phase2(const ProbModel& model, const BaselinePhase2& baseline, const Matrix& X, const std::vector<int>& y,
                     const FeatureSchema& schema, std::uint64_t seed, EvaluationReport& report);

/// Every stage in memory, from raw issues to the evaluation report.
EvaluationReport run_pipeline(ParseResult parsed, const RunConfig& config);

struct CrossProjectResult {
  CrossProjectReport report;
  std::map<std::string, double> change_probability;
  double spearman_phase1 = 0.0;  ///< change probability vs Phase I F1
};

CrossProjectResult cross_project(const FeatureSet& features, const std::vector<ProjectStats>& stats,
                                 const RunConfig& config);

void write_report_csv(const EvaluationReport& report, const std::string& path, const std::string& config_hash);
void write_report_md(const EvaluationReport& report, const std::string& path, const std::string& config_hash);
void write_crossproject_csv(const CrossProjectResult& result, const std::string& path, const std::string& config_hash);
void write_crossproject_md(const CrossProjectResult& result, const std::string& path, const std::string& config_hash);

/// Fixed six-decimal rendering used in every report.
std::string format_metric(double v);

}  // namespace priodrift
