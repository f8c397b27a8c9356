#include "priodrift/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace priodrift {

IngestOutput ingest_corpus(ParseResult parsed, const RunConfig& config) {
  IngestOutput out;
  out.schema_errors = std::move(parsed.errors);
  out.corrected = correct_issues(std::move(parsed.issues), config.correction());
  out.corrected.removed.insert(out.corrected.removed.begin(), parsed.rejected.begin(), parsed.rejected.end());
  out.phase1 = build_phase1_dataset(out.corrected.issues);
  out.phase2 = build_phase2_dataset(out.corrected.issues, out.corrected.batch_events);
  out.stats = project_stats(out.corrected.issues);
  return out;
}

FeatureSet featurize(const std::vector<IssueRecord>& corrected, const EventKeySet& batch_events,
                     const RunConfig& config) {
  FeatureConfig fc = config.features();
  if (fc.text_mode == TextMode::Imported) {
    const std::string& path = config.get("paths.embeddings");
    if (path.empty()) throw Error(ErrorKind::ConfigError, "features.text_mode = imported needs paths.embeddings");
    fc.embeddings = std::make_shared<EmbeddingStore>(EmbeddingStore::load_csv(path));
  }
  const FeatureExtractor extractor(corrected, fc);
  FeatureSet out;
  const auto p1 = build_phase1_dataset(corrected);
  const auto p2 = build_phase2_dataset(corrected, batch_events);
  out.phase1 = extractor.phase1_matrix(p1, make_schema(Phase::I, corrected, fc));
  out.phase2 = extractor.phase2_matrix(p2, make_schema(Phase::II, corrected, fc));
  return out;
}

ThreeWaySplit split_training(const std::vector<std::size_t>& train, const std::vector<int>& labels,
                             const RunConfig& config, std::uint64_t seed) {
  ThreeWaySplit out;
  std::vector<int> strata;
  for (std::size_t r : train) strata.push_back(labels[r]);
  const Split inner = split_80_20(strata, derive_seed(seed, "validation"), config.real("split.validation_fraction"));
  for (std::size_t i : inner.train) out.fit.push_back(train[i]);
  for (std::size_t i : inner.test) out.validation.push_back(train[i]);
  std::sort(out.fit.begin(), out.fit.end());
  std::sort(out.validation.begin(), out.validation.end());
  out.warnings = inner.warnings;
  return out;
}

ThreeWaySplit split_rows(const std::vector<int>& labels, const RunConfig& config, std::uint64_t seed) {
  const Split outer = split_80_20(labels, derive_seed(seed, "test"), config.real("split.test_fraction"));
  ThreeWaySplit out = split_training(outer.train, labels, config, seed);
  out.test = outer.test;
  out.warnings.insert(out.warnings.begin(), outer.warnings.begin(), outer.warnings.end());
  return out;
}

namespace {

Matrix rows_of(const Matrix& X, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> column_codes(const Matrix& X, std::size_t column) {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[static_cast<std::size_t>(r)] = static_cast<int>(std::lround(X(r, static_cast<Eigen::Index>(column))));
  return out;
}

}  // namespace

TrainingSet sample_phase1(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema,
                          const RunConfig& config, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
  TrainingSet out;
  const Phase1Sampler sampler = config.phase1_sampler();
  if (sampler == Phase1Sampler::None || pos.empty() || neg.empty() || pos.size() == neg.size()) {
    out.X = X;
    out.y = y;
    return out;
  }
  const bool pos_major = pos.size() > neg.size();
  const auto& major = pos_major ? pos : neg;
  const auto& minor = pos_major ? neg : pos;
  const int major_label = pos_major ? 1 : 0;
  const int minor_label = 1 - major_label;
  std::vector<std::size_t> keep_major = major, keep_minor = minor;
  Matrix centroids;
  switch (sampler) {
    case Phase1Sampler::KMeans:
      centroids = kmeans_undersample(rows_of(X, major), minor.size(), derive_seed(seed, "kmeans"),
                                     schema.kinds, config.kmeans());
      keep_major.clear();
      break;
    case Phase1Sampler::RandomUnder: {
      const double rate = 1.0 - static_cast<double>(minor.size()) / static_cast<double>(major.size());
      keep_major.clear();
      for (std::size_t i : random_undersample(major.size(), rate, derive_seed(seed, "under"))) keep_major.push_back(major[i]);
      break;
    }
    case Phase1Sampler::RandomOver: {
      const double rate = static_cast<double>(major.size()) / static_cast<double>(minor.size()) - 1.0;
      keep_minor.clear();
      for (std::size_t i : random_oversample(minor.size(), rate, derive_seed(seed, "over"))) keep_minor.push_back(minor[i]);
      break;
    }
    case Phase1Sampler::None: break;
  }
  const auto n = static_cast<Eigen::Index>(keep_minor.size() + keep_major.size()) + centroids.rows();
  out.X.resize(n, X.cols());
  Eigen::Index r = 0;
  for (std::size_t i : keep_minor) {
    out.X.row(r++) = X.row(static_cast<Eigen::Index>(i));
    out.y.push_back(minor_label);
  }
  for (std::size_t i : keep_major) {
    out.X.row(r++) = X.row(static_cast<Eigen::Index>(i));
    out.y.push_back(major_label);
  }
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    out.X.row(r++) = centroids.row(c);
    out.y.push_back(major_label);
  }
  return out;
}

SampledSet sample_phase2(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema,
                         const RunConfig& config, std::uint64_t seed) {
  const std::vector<int> current = column_codes(X, schema.column("CurPri"));
  return conditional_mixed_sample(X, current, y, config.sampling_plan(), derive_seed(seed, "conditional"), schema.kinds,
                                  true);
}

Phase1Fit fit_phase1(const TrainingSet& train, const Matrix& X_val, const std::vector<int>& y_val,
                     const FeatureSchema& schema, const RunConfig& config, std::uint64_t seed) {
  std::vector<std::unique_ptr<ProbModel>> members(4);
  parallel_for(4, [&](std::size_t m) {
    switch (m) {
      case 0: members[m] = KnnModel::fit(train.X, train.y, config.knn()); break;
      case 1: members[m] = ForestModel::fit(train.X, train.y, config.forest(), derive_seed(seed, "forest")); break;
      case 2: members[m] = SvmModel::fit(train.X, train.y, config.svm(), derive_seed(seed, "svm")); break;
      default: members[m] = GbdtModel::fit(train.X, train.y, config.gbdt(), derive_seed(seed, "gbdt")); break;
    }
    members[m]->set_fingerprint(schema.fingerprint());
  });
  Phase1Fit out;
  std::vector<int> weights = config.fixed_weights();
  if (weights.empty()) {
    std::vector<Matrix> probs;
    for (const auto& m : members) probs.push_back(m->predict_proba(X_val));
    out.search = grid_search_weights(probs, members.front()->classes(), y_val,
                                     static_cast<int>(config.integer("phase1.weight_total")),
                                     static_cast<int>(config.integer("phase1.weight_min")),
                                     static_cast<int>(config.integer("phase1.weight_max")));
    weights = out.search.weights;
  } else {
    out.search.weights = weights;
  }
  out.ensemble = std::make_unique<SoftVoteModel>(std::move(members), weights);
  out.ensemble->set_fingerprint(schema.fingerprint());
  return out;
}

std::unique_ptr<ProbModel> fit_phase2(const SampledSet& train, const FeatureSchema& schema, const RunConfig& config,
                                      std::uint64_t seed, bool mask_current) {
  MlpParams params = config.mlp();
  if (config.flag("phase2.cost_sensitive")) params.class_weights = class_weights(train.labels, class_list(train.labels));
  std::unique_ptr<ProbModel> model = MlpModel::fit(train.values, train.labels, params, derive_seed(seed, "mlp"));
  model->set_fingerprint(schema.fingerprint());
  if (!mask_current) return model;
  auto masked = std::make_unique<MaskedModel>(std::move(model), schema.column("CurPri"));
  masked->set_fingerprint(schema.fingerprint());
  return masked;
}

std::unique_ptr<BaselinePhase1> fit_baseline1(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema) {
  const std::size_t col = schema.column("CurPri");
  auto b = std::make_unique<BaselinePhase1>(column_codes(X, col), y, col);
  b->set_fingerprint(schema.fingerprint());
  return b;
}

std::unique_ptr<BaselinePhase2> fit_baseline2(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema) {
  const std::size_t col = schema.column("CurPri");
  auto b = std::make_unique<BaselinePhase2>(column_codes(X, col), y, col);
  b->set_fingerprint(schema.fingerprint());
  return b;
}

// ---------------------------------------------------------------------------
// Evaluation

double EvaluationReport::value(int phase, const std::string& model, const std::string& metric,
                               const std::string& group) const {
  for (const auto& l : lines) {
    if (l.phase == phase && l.model == model && l.metric == metric && l.group == group) return l.value;
  }
  throw Error(ErrorKind::MissingArtifact, "report has no " + model + "/" + metric + " for phase " + std::to_string(phase));
}

namespace {

void add_binary(EvaluationReport& report, const std::string& model, const std::string& group, const BinaryMetrics& m) {
  report.lines.push_back({1, model, group, "precision", m.precision});
  report.lines.push_back({1, model, group, "recall", m.recall});
  report.lines.push_back({1, model, group, "f1", m.f1});
}

void add_multiclass(EvaluationReport& report, const std::string& model, const std::string& group,
                    const MulticlassMetrics& m, const std::vector<int>& classes) {
  report.lines.push_back({2, model, group, "f1_weighted", m.f1_weighted});
  report.lines.push_back({2, model, group, "f1_macro", m.f1_macro});
  if (group != "all") return;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    report.lines.push_back({2, model, group, "f1_" + std::string(priority_name(priority_from_code(classes[c]))),
                            m.per_class_f1[c]});
  }
}

const std::vector<int> kPriorityClasses = {1, 2, 3, 4, 5};

}  // namespace

void evaluate_phase1(const SoftVoteModel& ensemble, const BaselinePhase1& baseline, const Matrix& X,
                     const std::vector<int>& y, const FeatureSchema& schema, std::uint64_t seed,
                     EvaluationReport& report) {
  const std::vector<int> pred = ensemble.predict(X);
  add_binary(report, "ensemble", "all", binary_metrics(y, pred));
  static const char* names[] = {"knn", "forest", "svm", "gbdt"};
  for (std::size_t m = 0; m < ensemble.members().size(); ++m) {
    add_binary(report, m < 4 ? names[m] : ensemble.members()[m]->kind(), "all",
               binary_metrics(y, ensemble.members()[m]->predict(X)));
  }
  const std::vector<int> base = baseline.draw_all(X, derive_seed(seed, "baseline1"));
  add_binary(report, "baseline", "all", binary_metrics(y, base));
  const std::vector<int> initial = column_codes(X, schema.column("CurPri"));
  for (const auto& g : per_priority_breakdown(y, pred, initial, {0, 1})) {
    add_binary(report, "ensemble", "priority=" + std::to_string(g.group), g.binary);
  }
  std::string weights;
  for (int w : ensemble.weights()) weights += (weights.empty() ? "" : ",") + std::to_string(w);
  report.notes.push_back("phase 1 vote weights (knn, forest, svm, gbdt): " + weights);
}

void evaluate_phase2(const ProbModel& model, const BaselinePhase2& baseline, const Matrix& X, const std::vector<int>& y,
                     const FeatureSchema&, std::uint64_t seed, EvaluationReport& report) {
  const std::vector<int> pred = model.predict(X);
  add_multiclass(report, "mlp", "all", multiclass_metrics(y, pred, kPriorityClasses), kPriorityClasses);
  const std::vector<int> base = baseline.draw_all(X, derive_seed(seed, "baseline2"));
  add_multiclass(report, "baseline", "all", multiclass_metrics(y, base, kPriorityClasses), kPriorityClasses);
  for (const auto& g : per_priority_breakdown(y, pred, y, kPriorityClasses)) {
    add_multiclass(report, "mlp", "priority=" + std::to_string(g.group), g.metrics, kPriorityClasses);
    if (g.flagged) report.notes.push_back("phase 2 target " + std::to_string(g.group) + " has no test members");
  }
}

EvaluationReport run_pipeline(ParseResult parsed, const RunConfig& config) {
  const IngestOutput ingested = ingest_corpus(std::move(parsed), config);
  const FeatureSet features = featurize(ingested.corrected.issues, ingested.corrected.batch_events, config);
  EvaluationReport report;

  const FeatureMatrix& f1 = features.phase1;
  const ThreeWaySplit s1 = split_rows(f1.labels, config, config.stage_seed("split/1"));
  auto labels_of = [](const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    for (std::size_t r : rows) out.push_back(m.labels[r]);
    return out;
  };
  {
    const Matrix X_fit = rows_of(f1.values, s1.fit);
    const std::vector<int> y_fit = labels_of(f1, s1.fit);
    const TrainingSet sampled = sample_phase1(X_fit, y_fit, f1.schema, config, config.stage_seed("sample/1"));
    const Phase1Fit fit = fit_phase1(sampled, rows_of(f1.values, s1.validation), labels_of(f1, s1.validation),
                                     f1.schema, config, config.stage_seed("train/1"));
    std::vector<std::size_t> train = s1.fit;
    train.insert(train.end(), s1.validation.begin(), s1.validation.end());
    std::sort(train.begin(), train.end());
    const auto baseline = fit_baseline1(rows_of(f1.values, train), labels_of(f1, train), f1.schema);
    evaluate_phase1(*fit.ensemble, *baseline, rows_of(f1.values, s1.test), labels_of(f1, s1.test), f1.schema,
                    config.stage_seed("evaluate"), report);
  }
  const FeatureMatrix& f2 = features.phase2;
  const ThreeWaySplit s2 = split_rows(f2.labels, config, config.stage_seed("split/2"));
  {
    std::vector<std::size_t> train = s2.fit;
    train.insert(train.end(), s2.validation.begin(), s2.validation.end());
    std::sort(train.begin(), train.end());
    const Matrix X_train = rows_of(f2.values, train);
    const std::vector<int> y_train = labels_of(f2, train);
    const SampledSet sampled = sample_phase2(X_train, y_train, f2.schema, config, config.stage_seed("sample/2"));
    const auto model = fit_phase2(sampled, f2.schema, config, config.stage_seed("train/2"),
                                  config.flag("phase2.mask_current"));
    const auto baseline = fit_baseline2(X_train, y_train, f2.schema);
    evaluate_phase2(*model, *baseline, rows_of(f2.values, s2.test), labels_of(f2, s2.test), f2.schema,
                    config.stage_seed("evaluate"), report);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Cross-project

CrossProjectResult cross_project(const FeatureSet& features, const std::vector<ProjectStats>& stats,
                                 const RunConfig& config) {
  std::set<int> phases;
  for (double p : config.reals("crossproject.phases")) phases.insert(static_cast<int>(p));
  CrossProjectResult out;
  for (const auto& s : stats) {
    if (s.project_id != kAllProjects) out.change_probability[s.project_id] = s.change_probability;
  }
  const FeatureMatrix& f1 = features.phase1;
  const FeatureMatrix& f2 = features.phase2;
  std::vector<std::string> projects1;
  for (const auto& r : f1.rows) projects1.push_back(r.project);
  auto labels_of = [](const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
    std::vector<int> v;
    for (std::size_t r : rows) v.push_back(m.labels[r]);
    return v;
  };

  out.report = cross_project_eval(projects1, [&](const std::vector<std::size_t>& train,
                                                 const std::vector<std::size_t>& test, const std::string& project) {
    std::map<std::string, double> metrics;
    const std::uint64_t seed = derive_seed(config.seed(), "crossproject/" + project);
    if (phases.count(1)) {
      const ThreeWaySplit s = split_training(train, f1.labels, config, seed);
      const TrainingSet sampled =
          sample_phase1(rows_of(f1.values, s.fit), labels_of(f1, s.fit), f1.schema, config, derive_seed(seed, "sample/1"));
      const Phase1Fit fit = fit_phase1(sampled, rows_of(f1.values, s.validation), labels_of(f1, s.validation),
                                       f1.schema, config, derive_seed(seed, "train/1"));
      const Matrix X_test = rows_of(f1.values, test);
      const std::vector<int> y_test = labels_of(f1, test);
      const BinaryMetrics m = binary_metrics(y_test, fit.ensemble->predict(X_test));
      metrics["phase1_precision"] = m.precision;
      metrics["phase1_recall"] = m.recall;
      metrics["phase1_f1"] = m.f1;
      const auto baseline = fit_baseline1(rows_of(f1.values, train), labels_of(f1, train), f1.schema);
      metrics["baseline1_f1"] = binary_metrics(y_test, baseline->draw_all(X_test, derive_seed(seed, "baseline1"))).f1;
    }
    if (phases.count(2)) {
      std::vector<std::size_t> train2, test2;
      for (std::size_t r = 0; r < f2.rows.size(); ++r) (f2.rows[r].project == project ? test2 : train2).push_back(r);
      if (!test2.empty() && !train2.empty()) {
        const Matrix X_train = rows_of(f2.values, train2);
        const std::vector<int> y_train = labels_of(f2, train2);
        const SampledSet sampled = sample_phase2(X_train, y_train, f2.schema, config, derive_seed(seed, "sample/2"));
        const auto model = fit_phase2(sampled, f2.schema, config, derive_seed(seed, "train/2"),
                                      config.flag("phase2.mask_current"));
        const Matrix X_test = rows_of(f2.values, test2);
        const std::vector<int> y_test = labels_of(f2, test2);
        const MulticlassMetrics m = multiclass_metrics(y_test, model->predict(X_test), kPriorityClasses);
        metrics["phase2_f1_weighted"] = m.f1_weighted;
        metrics["phase2_f1_macro"] = m.f1_macro;
        const auto baseline = fit_baseline2(X_train, y_train, f2.schema);
        metrics["baseline2_f1_weighted"] =
            multiclass_metrics(y_test, baseline->draw_all(X_test, derive_seed(seed, "baseline2")), kPriorityClasses)
                .f1_weighted;
      }
    }
    return metrics;
  });
  if (phases.count(1) && out.report.folds.size() >= 2) {
    std::vector<double> rate, f1s;
    for (const auto& fold : out.report.folds) {
      rate.push_back(out.change_probability.at(fold.project));
      f1s.push_back(fold.metrics.at("phase1_f1"));
    }
    out.spearman_phase1 = spearman(rate, f1s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write " + path);
  return out;
}

const std::vector<std::string> kFoldColumns = {"phase1_precision",   "phase1_recall",   "phase1_f1",
                                               "baseline1_f1",       "phase2_f1_weighted", "phase2_f1_macro",
                                               "baseline2_f1_weighted"};

std::string cell(const std::map<std::string, double>& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? "" : format_metric(it->second);
}

}  // namespace

void write_report_csv(const EvaluationReport& report, const std::string& path, const std::string& config_hash) {
  auto out = open_output(path);
  out << "# config_hash=" << config_hash << '\n';
  out << "phase,model,group,metric,value\n";
  for (const auto& l : report.lines) {
    out << l.phase << ',' << l.model << ',' << l.group << ',' << l.metric << ',' << format_metric(l.value) << '\n';
  }
}

void write_report_md(const EvaluationReport& report, const std::string& path, const std::string& config_hash) {
  auto out = open_output(path);
  out << "<!-- config_hash=" << config_hash << " -->\n";
  out << "# Evaluation report\n\n";
  for (int phase : {1, 2}) {
    out << "## Phase " << (phase == 1 ? "I: will the priority change" : "II: new priority level") << "\n\n";
    out << "| model | group | metric | value |\n|---|---|---|---|\n";
    for (const auto& l : report.lines) {
      if (l.phase != phase) continue;
      out << "| " << l.model << " | " << l.group << " | " << l.metric << " | " << format_metric(l.value) << " |\n";
    }
    out << '\n';
  }
  if (!report.notes.empty()) {
    out << "## Notes\n\n";
    for (const auto& n : report.notes) out << "- " << n << '\n';
  }
}

void write_crossproject_csv(const CrossProjectResult& result, const std::string& path, const std::string& config_hash) {
  auto out = open_output(path);
  out << "# config_hash=" << config_hash << '\n';
  out << "project,change_probability,n_train,n_test";
  for (const auto& c : kFoldColumns) out << ',' << c;
  out << '\n';
  for (const auto& f : result.report.folds) {
    out << f.project << ',' << format_metric(result.change_probability.at(f.project)) << ',' << f.n_train << ','
        << f.n_test;
    for (const auto& c : kFoldColumns) out << ',' << cell(f.metrics, c);
    out << '\n';
  }
  for (const char* stat : {"min", "q1", "median", "q3", "max", "mean"}) {
    out << stat << ",,,";
    for (const auto& c : kFoldColumns) {
      out << ',';
      auto it = result.report.stats.find(c);
      if (it == result.report.stats.end()) continue;
      const Summary& s = it->second;
      const std::string name = stat;
      const double v = name == "min" ? s.min : name == "q1" ? s.q1 : name == "median" ? s.median
                     : name == "q3" ? s.q3 : name == "max" ? s.max : s.mean;
      out << format_metric(v);
    }
    out << '\n';
  }
  out << "spearman_change_probability_phase1_f1," << format_metric(result.spearman_phase1) << '\n';
}

void write_crossproject_md(const CrossProjectResult& result, const std::string& path, const std::string& config_hash) {
  auto out = open_output(path);
  out << "<!-- config_hash=" << config_hash << " -->\n";
  out << "# Leave-one-project-out evaluation\n\n| project | change probability | n_train | n_test";
  for (const auto& c : kFoldColumns) out << " | " << c;
  out << " |\n|---|---|---|---";
  for (std::size_t i = 0; i < kFoldColumns.size(); ++i) out << "|---";
  out << "|\n";
  for (const auto& f : result.report.folds) {
    out << "| " << f.project << " | " << format_metric(result.change_probability.at(f.project)) << " | " << f.n_train
        << " | " << f.n_test;
    for (const auto& c : kFoldColumns) out << " | " << cell(f.metrics, c);
    out << " |\n";
  }
  out << "\n| metric | min | q1 | median | q3 | max | mean |\n|---|---|---|---|---|---|---|\n";
  for (const auto& [metric, s] : result.report.stats) {
    out << "| " << metric << " | " << format_metric(s.min) << " | " << format_metric(s.q1) << " | "
        << format_metric(s.median) << " | " << format_metric(s.q3) << " | " << format_metric(s.max) << " | "
        << format_metric(s.mean) << " |\n";
  }
  out << "\nSpearman rank correlation between project change probability and Phase I F1: "
      << format_metric(result.spearman_phase1) << '\n';
}

}  // namespace priodrift
