#include "priodrift/stages.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace priodrift {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot read " + path.string());
  return in;
}

std::string meta_line(const std::string& hash) { return Json{{"_meta", {{"config_hash", hash}}}}.dump(); }

Matrix rows_of(const Matrix& X, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<int> labels_of(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(m.labels[r]);
  return out;
}

std::vector<std::size_t> merged(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

FeatureSchema read_schema(const fs::path& path) {
  const Json j = Json::parse(read_file(path.string()));
  return FeatureSchema::from_json(j.at("schema"));
}

void write_schema(const FeatureSchema& schema, const fs::path& path, const std::string& hash) {
  auto out = open_output(path);
  out << Json{{"_meta", {{"config_hash", hash}}}, {"schema", schema.to_json()}}.dump(2) << '\n';
}

/// Training rows packed as a feature CSV; keys name the source row.
FeatureMatrix packed(const Matrix& X, const std::vector<int>& y, const FeatureSchema& schema,
                     const std::vector<RowKey>& keys) {
  FeatureMatrix m;
  m.schema = schema;
  m.values = X;
  m.labels = y;
  m.rows = keys;
  return m;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidConfig:
    case ErrorKind::MissingArtifact:
      return 2;
    case ErrorKind::DivergenceDetected:
      return 4;
    default:
      return 3;
  }
}

void write_event_keys(const EventKeySet& keys, std::ostream& out, const std::string& config_hash) {
  out << meta_line(config_hash) << '\n';
  for (const auto& [key, ordinal] : keys) out << Json{{"issue_key", key}, {"ordinal", ordinal}}.dump() << '\n';
}

EventKeySet read_event_keys(std::istream& in) {
  EventKeySet keys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    if (j.contains("_meta")) continue;
    keys.emplace(j.at("issue_key").get<std::string>(), j.at("ordinal").get<int>());
  }
  return keys;
}

void write_split_csv(const ThreeWaySplit& split, const std::string& path, const std::string& config_hash) {
  std::vector<std::pair<std::size_t, const char*>> roles;
  for (std::size_t r : split.fit) roles.emplace_back(r, "fit");
  for (std::size_t r : split.validation) roles.emplace_back(r, "validation");
  for (std::size_t r : split.test) roles.emplace_back(r, "test");
  std::sort(roles.begin(), roles.end());
  auto out = open_output(path);
  out << "# config_hash=" << config_hash << '\n' << "row,role\n";
  for (const auto& [r, role] : roles) out << r << ',' << role << '\n';
}

StoredSplit read_split_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  StoredSplit s;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::SchemaMismatch, path + ": malformed row '" + line + "'");
    const std::size_t row = std::stoul(line.substr(0, comma));
    const std::string role = line.substr(comma + 1);
    if (role == "fit") {
      s.fit.push_back(row);
    } else if (role == "validation") {
      s.validation.push_back(row);
    } else if (role == "test") {
      s.test.push_back(row);
    } else {
      throw Error(ErrorKind::SchemaMismatch, path + ": unknown role '" + role + "'");
    }
  }
  return s;
}

StageRunner::StageRunner(RunConfig config, fs::path work_dir, std::ostream& log)
    : config_(std::move(config)), work_(std::move(work_dir)), log_(log), hash_(config_.hash()) {
  std::error_code ec;
  fs::create_directories(work_, ec);
  if (ec) throw Error(ErrorKind::ConfigError, "cannot create work directory " + work_.string() + ": " + ec.message());
}

std::string StageRunner::header() const { return "config_hash=" + hash_; }

std::string StageRunner::require(const std::string& name) const {
  const fs::path p = work_ / name;
  if (!fs::exists(p)) throw Error(ErrorKind::MissingArtifact, p.string() + " not found; run the stage that produces it first");
  return p.string();
}

std::string StageRunner::stamp_key(const std::string& stage, const std::vector<std::string>& inputs,
                                   const std::string& extra) const {
  std::uint64_t h = fnv1a64(stage);
  h = fnv1a64(hash_, h);
  h = fnv1a64(extra, h);
  for (const auto& name : inputs) {
    h = fnv1a64(name, h);
    h = fnv1a64(hex64(fnv1a64(read_file(require(name)))), h);
  }
  return hex64(h);
}

bool StageRunner::up_to_date(const std::string& stage, const std::vector<std::string>& inputs,
                             const std::vector<std::string>& outputs, const std::string& extra) {
  cached_ = false;
  const fs::path stamp_path = work_ / (stage + ".stamp");
  if (!fs::exists(stamp_path)) return false;
  for (const auto& o : outputs) {
    if (!fs::exists(work_ / o)) return false;
  }
  std::string stored = read_file(stamp_path.string());
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (stored != stamp_key(stage, inputs, extra)) return false;
  log_ << "[" << stage << "] cache hit (config_hash=" << hash_ << "); nothing to do\n";
  cached_ = true;
  return true;
}

void StageRunner::stamp(const std::string& stage, const std::vector<std::string>& inputs, const std::string& extra) {
  auto out = open_output(work_ / (stage + ".stamp"));
  out << stamp_key(stage, inputs, extra) << '\n';
}

void StageRunner::synth() {
  const std::vector<std::string> outputs = {"issues.jsonl", "groundtruth.jsonl"};
  if (up_to_date("synth", {}, outputs)) return;
  SyntheticCorpus corpus = generate_corpus(config_.corpus());
  corpus.issues = inject_noise(std::move(corpus.issues), config_.noise(), corpus.truth);
  {
    auto out = open_output(path("issues.jsonl"));
    write_issue_jsonl(corpus.issues, out, hash_);
  }
  {
    auto out = open_output(path("groundtruth.jsonl"));
    out << meta_line(hash_) << '\n';
    corpus.truth.write_jsonl(out);
  }
  stamp("synth", {});
  log_ << "[synth] " << corpus.issues.size() << " issues, " << corpus.truth.changes.size() << " planted changes, "
       << corpus.truth.noise.size() << " noise injections\n";
}

void StageRunner::fetch() {
  // The remote tracker is not a file input, so fetch always runs.
  cached_ = false;
  const FetchConfig fc = config_.fetch();
  if (fc.project.empty()) throw Error(ErrorKind::ConfigError, "fetch.project is empty");
  std::unique_ptr<Transport> owned;
  const std::string& fixtures = config_.get("fetch.fixture_dir");
  if (!fixtures.empty()) {
    if (!fs::is_directory(fixtures)) throw Error(ErrorKind::MissingArtifact, "fetch.fixture_dir " + fixtures + " is not a directory");
    owned = std::make_unique<FixtureTransport>(fixtures);
  } else {
    const std::string& endpoint = config_.get("fetch.endpoint");
    if (endpoint.empty()) throw Error(ErrorKind::ConfigError, "set fetch.endpoint or fetch.fixture_dir");
    const char* token = std::getenv("PRIO_DRIFT_TOKEN");
    owned = make_http_transport(endpoint, token ? token : "");
  }
  Transport* transport = owned.get();
  std::unique_ptr<RecordingTransport> recorder;
  const std::string& record = config_.get("fetch.record_dir");
  if (!record.empty()) {
    fs::create_directories(record);
    recorder = std::make_unique<RecordingTransport>(*owned, record);
    transport = recorder.get();
  }
  std::vector<Json> documents;
  const FetchStats stats = fetch_issues(*transport, fc, [&](const Json& doc) { documents.push_back(doc); },
                                        [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });
  auto out = open_output(path("issues.jsonl"));
  out << meta_line(hash_) << '\n';
  for (const auto& d : documents) out << d.dump() << '\n';
  log_ << "[fetch] " << stats.documents << " documents in " << stats.requests << " requests (" << stats.retries
       << " retries, " << stats.restarts << " restarts)\n";
}

void StageRunner::ingest(const std::string& input) {
  const std::vector<std::string> outputs = {"corrected.jsonl", "removed.jsonl", "batch_events.jsonl",
                                            "phase1.jsonl",    "phase2.jsonl",  "stats.csv"};
  std::string source = input;
  std::vector<std::string> inputs;
  std::string extra;
  if (source.empty()) {
    inputs = {"issues.jsonl"};
    source = require("issues.jsonl");
  } else {
    if (!fs::exists(source)) throw Error(ErrorKind::MissingArtifact, "input " + source + " not found");
    extra = source + ":" + hex64(fnv1a64(read_file(source)));
  }
  if (up_to_date("ingest", inputs, outputs, extra)) return;
  auto in = open_input(source);
  const IngestOutput result = ingest_corpus(parse_issue_dump(in), config_);
  if (result.corrected.issues.empty()) {
    throw Error(ErrorKind::DataError, "no issues left after correction of " + source);
  }
  {
    auto out = open_output(path("corrected.jsonl"));
    write_issue_jsonl(result.corrected.issues, out, hash_);
  }
  {
    auto out = open_output(path("removed.jsonl"));
    out << meta_line(hash_) << '\n';
    for (const auto& e : result.schema_errors) {
      out << Json{{"issue_key", e.issue_key}, {"stage", "schema"}, {"reason", e.message},
                  {"document_index", e.document_index}}.dump()
          << '\n';
    }
    for (const auto& r : result.corrected.removed) {
      out << Json{{"issue_key", r.issue_key}, {"stage", r.stage}, {"reason", r.reason}}.dump() << '\n';
    }
  }
  {
    auto out = open_output(path("batch_events.jsonl"));
    write_event_keys(result.corrected.batch_events, out, hash_);
  }
  std::map<std::string, std::string> project_of;
  for (const auto& issue : result.corrected.issues) project_of[issue.issue_key] = issue.project_id;
  {
    auto out = open_output(path("phase1.jsonl"));
    out << meta_line(hash_) << '\n';
    for (const auto& r : result.phase1) out << phase1_row_json(r, project_of.at(r.issue_key)).dump() << '\n';
  }
  {
    auto out = open_output(path("phase2.jsonl"));
    out << meta_line(hash_) << '\n';
    for (const auto& r : result.phase2) out << phase2_row_json(r, project_of.at(r.issue_key)).dump() << '\n';
  }
  {
    auto out = open_output(path("stats.csv"));
    out << "# " << header() << '\n' << "project,n_bugs,n_bugs_with_change,change_probability\n";
    for (const auto& s : result.stats) {
      out << s.project_id << ',' << s.n_bugs << ',' << s.n_bugs_with_change << ','
          << format_metric(s.change_probability) << '\n';
    }
  }
  stamp("ingest", inputs, extra);
  log_ << "[ingest] " << result.corrected.issues.size() << " issues kept, " << result.corrected.removed.size()
       << " removed, " << result.schema_errors.size() << " schema errors; " << result.phase1.size()
       << " phase 1 rows, " << result.phase2.size() << " phase 2 rows\n";
}

namespace {

struct CorrectedCorpus {
  std::vector<IssueRecord> issues;
  EventKeySet batch_events;
};

CorrectedCorpus load_corrected(const std::string& corrected, const std::string& batch) {
  CorrectedCorpus c;
  std::ifstream in(corrected, std::ios::binary);
  ParseResult parsed = parse_issue_dump(in);
  if (!parsed.errors.empty()) {
    throw Error(ErrorKind::SchemaError, corrected + ": " + parsed.errors.front().message);
  }
  c.issues = std::move(parsed.issues);
  std::ifstream bin(batch, std::ios::binary);
  c.batch_events = read_event_keys(bin);
  return c;
}

}  // namespace

void StageRunner::featurize() {
  const std::vector<std::string> inputs = {"corrected.jsonl", "batch_events.jsonl"};
  const std::vector<std::string> outputs = {"features_phase1.csv", "features_phase2.csv", "schema_phase1.json",
                                            "schema_phase2.json"};
  const std::string embeddings = config_.get("paths.embeddings");
  const std::string extra = embeddings.empty() || !fs::exists(embeddings)
                                ? embeddings
                                : embeddings + ":" + hex64(fnv1a64(read_file(embeddings)));
  if (up_to_date("featurize", inputs, outputs, extra)) return;
  const CorrectedCorpus corpus = load_corrected(require(inputs[0]), require(inputs[1]));
  const FeatureSet features = priodrift::featurize(corpus.issues, corpus.batch_events, config_);
  write_feature_csv(features.phase1, path(outputs[0]).string(), header());
  write_feature_csv(features.phase2, path(outputs[1]).string(), header());
  write_schema(features.phase1.schema, path(outputs[2]), hash_);
  write_schema(features.phase2.schema, path(outputs[3]), hash_);
  stamp("featurize", inputs, extra);
  log_ << "[featurize] phase 1: " << features.phase1.values.rows() << " x " << features.phase1.values.cols()
       << ", phase 2: " << features.phase2.values.rows() << " x " << features.phase2.values.cols() << '\n';
}

namespace {

FeatureMatrix load_features(const StageRunner& s, int phase) {
  const std::string n = std::to_string(phase);
  const fs::path schema = s.path("schema_phase" + n + ".json");
  const fs::path values = s.path("features_phase" + n + ".csv");
  for (const auto& p : {schema, values}) {
    if (!fs::exists(p)) throw Error(ErrorKind::MissingArtifact, p.string() + " not found; run featurize first");
  }
  return read_feature_csv(values.string(), read_schema(schema));
}

}  // namespace

void StageRunner::sample() {
  const std::vector<std::string> inputs = {"features_phase1.csv", "features_phase2.csv", "schema_phase1.json",
                                           "schema_phase2.json"};
  const std::vector<std::string> outputs = {"split_phase1.csv", "split_phase2.csv", "sampled_phase1.csv",
                                            "sampled_phase2.csv"};
  if (up_to_date("sample", inputs, outputs)) return;
  const FeatureMatrix f1 = load_features(*this, 1);
  const ThreeWaySplit s1 = split_rows(f1.labels, config_, config_.stage_seed("split/1"));
  for (const auto& w : s1.warnings) log_ << "[sample] phase 1: " << w << '\n';
  write_split_csv(s1, path(outputs[0]).string(), hash_);
  const TrainingSet t1 =
      sample_phase1(rows_of(f1.values, s1.fit), labels_of(f1, s1.fit), f1.schema, config_, config_.stage_seed("sample/1"));
  {
    std::vector<RowKey> keys;
    for (std::size_t i = 0; i < t1.y.size(); ++i) keys.push_back({"sampled" + std::to_string(i), "-", 0});
    write_feature_csv(packed(t1.X, t1.y, f1.schema, keys), path(outputs[2]).string(), header());
  }

  const FeatureMatrix f2 = load_features(*this, 2);
  const ThreeWaySplit s2 = split_rows(f2.labels, config_, config_.stage_seed("split/2"));
  for (const auto& w : s2.warnings) log_ << "[sample] phase 2: " << w << '\n';
  write_split_csv(s2, path(outputs[1]).string(), hash_);
  const std::vector<std::size_t> train2 = merged(s2.fit, s2.validation);
  const SampledSet t2 =
      sample_phase2(rows_of(f2.values, train2), labels_of(f2, train2), f2.schema, config_, config_.stage_seed("sample/2"));
  {
    std::vector<RowKey> keys;
    for (std::size_t i = 0; i < t2.labels.size(); ++i) {
      if (t2.source[i] < 0) {
        keys.push_back({"synthetic" + std::to_string(i), "-", 0});
      } else {
        keys.push_back(f2.rows[train2[static_cast<std::size_t>(t2.source[i])]]);
      }
    }
    write_feature_csv(packed(t2.values, t2.labels, f2.schema, keys), path(outputs[3]).string(), header());
  }
  stamp("sample", inputs);
  log_ << "[sample] phase 1: " << t1.y.size() << " balanced training rows (" << s1.validation.size()
       << " validation, " << s1.test.size() << " test); phase 2: " << t2.labels.size() << " training rows ("
       << s2.test.size() << " test)\n";
}

void StageRunner::train() {
  const std::vector<std::string> inputs = {"features_phase1.csv", "features_phase2.csv", "schema_phase1.json",
                                           "schema_phase2.json",  "split_phase1.csv",    "split_phase2.csv",
                                           "sampled_phase1.csv",  "sampled_phase2.csv"};
  const std::vector<std::string> outputs = {"model_phase1.txt", "model_phase2.txt", "baseline_phase1.txt",
                                            "baseline_phase2.txt"};
  if (up_to_date("train", inputs, outputs)) return;
  const FeatureMatrix f1 = load_features(*this, 1);
  const StoredSplit s1 = read_split_csv(require("split_phase1.csv"));
  const FeatureMatrix sampled1 = read_feature_csv(require("sampled_phase1.csv"), f1.schema);
  const Phase1Fit fit = fit_phase1(TrainingSet{sampled1.values, sampled1.labels}, rows_of(f1.values, s1.validation),
                                   labels_of(f1, s1.validation), f1.schema, config_, config_.stage_seed("train/1"));
  save_model_file(*fit.ensemble, path(outputs[0]).string(), header());
  const std::vector<std::size_t> train1 = merged(s1.fit, s1.validation);
  save_model_file(*fit_baseline1(rows_of(f1.values, train1), labels_of(f1, train1), f1.schema),
                  path(outputs[2]).string(), header());

  const FeatureMatrix f2 = load_features(*this, 2);
  const StoredSplit s2 = read_split_csv(require("split_phase2.csv"));
  const FeatureMatrix sampled2 = read_feature_csv(require("sampled_phase2.csv"), f2.schema);
  SampledSet t2;
  t2.values = sampled2.values;
  t2.labels = sampled2.labels;
  const auto mlp = fit_phase2(t2, f2.schema, config_, config_.stage_seed("train/2"), false);
  save_model_file(*mlp, path(outputs[1]).string(), header());
  const std::vector<std::size_t> train2 = merged(s2.fit, s2.validation);
  save_model_file(*fit_baseline2(rows_of(f2.values, train2), labels_of(f2, train2), f2.schema),
                  path(outputs[3]).string(), header());
  stamp("train", inputs);
  std::string weights;
  for (int w : fit.ensemble->weights()) weights += (weights.empty() ? "" : ",") + std::to_string(w);
  log_ << "[train] phase 1 ensemble weights " << weights;
  if (fit.search.evaluated > 0) log_ << " (searched " << fit.search.evaluated << " candidates)";
  log_ << "; phase 2 MLP on " << t2.labels.size() << " rows\n";
}

namespace {

std::unique_ptr<ProbModel> load_phase2_model(const std::string& path, const FeatureSchema& schema, bool mask) {
  std::unique_ptr<ProbModel> model = load_model_file(path);
  if (!mask) return model;
  auto masked = std::make_unique<MaskedModel>(std::move(model), schema.column("CurPri"));
  masked->set_fingerprint(schema.fingerprint());
  return masked;
}

template <typename T>
std::unique_ptr<T> load_as(const std::string& path) {
  std::unique_ptr<ProbModel> m = load_model_file(path);
  T* typed = dynamic_cast<T*>(m.get());
  if (typed == nullptr) throw Error(ErrorKind::SchemaMismatch, path + " holds a " + m->kind() + " model");
  m.release();
  return std::unique_ptr<T>(typed);
}

void check_fingerprint(const ProbModel& model, const FeatureSchema& schema, const std::string& path) {
  if (!model.fingerprint().empty() && model.fingerprint() != schema.fingerprint()) {
    throw Error(ErrorKind::SchemaMismatch, path + " was trained on a different feature schema");
  }
}

}  // namespace

void StageRunner::predict(int phase, bool mask_current) {
  if (phase != 1 && phase != 2) throw Error(ErrorKind::ConfigError, "--phase must be 1 or 2");
  const std::string n = std::to_string(phase);
  const std::vector<std::string> inputs = {"features_phase" + n + ".csv", "schema_phase" + n + ".json",
                                           "split_phase" + n + ".csv", "model_phase" + n + ".txt"};
  const std::string out_name = "predictions_phase" + n + ".csv";
  const std::string extra = phase == 2 ? std::string("mask=") + (mask_current ? "on" : "off") : std::string();
  if (up_to_date("predict_phase" + n, inputs, {out_name}, extra)) return;
  const FeatureMatrix f = load_features(*this, phase);
  const StoredSplit split = read_split_csv(require(inputs[2]));
  const std::string model_path = require(inputs[3]);
  const std::unique_ptr<ProbModel> model =
      phase == 1 ? load_model_file(model_path) : load_phase2_model(model_path, f.schema, mask_current);
  check_fingerprint(*model, f.schema, model_path);
  const Matrix X = rows_of(f.values, split.test);
  const Matrix P = model->predict_proba(X);
  const std::vector<int> pred = model->predict(X);
  const std::size_t cur = f.schema.column("CurPri");
  auto out = open_output(path(out_name));
  out << "# " << header() << '\n' << "issue_key,cut_time,current,label,predicted";
  for (int c : model->classes()) out << ",p_" << c;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const std::size_t r = split.test[i];
    const auto ri = static_cast<Eigen::Index>(i);
    out << f.rows[r].issue_key << ',' << f.rows[r].cut_time << ','
        << std::lround(f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cur))) << ',' << f.labels[r]
        << ',' << pred[i];
    for (Eigen::Index c = 0; c < P.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9f", P(ri, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  stamp("predict_phase" + n, inputs, extra);
  log_ << "[predict] phase " << phase << ": " << split.test.size() << " test rows written to " << out_name << '\n';
}

void StageRunner::evaluate() {
  const std::vector<std::string> inputs = {"features_phase1.csv", "features_phase2.csv", "schema_phase1.json",
                                           "schema_phase2.json",  "split_phase1.csv",    "split_phase2.csv",
                                           "model_phase1.txt",    "model_phase2.txt",    "baseline_phase1.txt",
                                           "baseline_phase2.txt"};
  const std::vector<std::string> outputs = {"report.csv", "report.md"};
  if (up_to_date("evaluate", inputs, outputs)) return;
  EvaluationReport report;
  {
    const FeatureMatrix f1 = load_features(*this, 1);
    const StoredSplit s1 = read_split_csv(require("split_phase1.csv"));
    const auto ensemble = load_as<SoftVoteModel>(require("model_phase1.txt"));
    const auto baseline = load_as<BaselinePhase1>(require("baseline_phase1.txt"));
    check_fingerprint(*ensemble, f1.schema, "model_phase1.txt");
    evaluate_phase1(*ensemble, *baseline, rows_of(f1.values, s1.test), labels_of(f1, s1.test), f1.schema,
                    config_.stage_seed("evaluate"), report);
  }
  {
    const FeatureMatrix f2 = load_features(*this, 2);
    const StoredSplit s2 = read_split_csv(require("split_phase2.csv"));
    const auto model = load_phase2_model(require("model_phase2.txt"), f2.schema, config_.flag("phase2.mask_current"));
    const auto baseline = load_as<BaselinePhase2>(require("baseline_phase2.txt"));
    check_fingerprint(*model, f2.schema, "model_phase2.txt");
    evaluate_phase2(*model, *baseline, rows_of(f2.values, s2.test), labels_of(f2, s2.test), f2.schema,
                    config_.stage_seed("evaluate"), report);
  }
  write_report_csv(report, path(outputs[0]).string(), hash_);
  write_report_md(report, path(outputs[1]).string(), hash_);
  stamp("evaluate", inputs);
  log_ << "[evaluate] phase 1 F1 " << format_metric(report.value(1, "ensemble", "f1")) << " (baseline "
       << format_metric(report.value(1, "baseline", "f1")) << "); phase 2 F1-weighted "
       << format_metric(report.value(2, "mlp", "f1_weighted")) << " (baseline "
       << format_metric(report.value(2, "baseline", "f1_weighted")) << ")\n";
}

void StageRunner::crossproject() {
  const std::vector<std::string> inputs = {"features_phase1.csv", "features_phase2.csv", "schema_phase1.json",
                                           "schema_phase2.json",  "corrected.jsonl"};
  const std::vector<std::string> outputs = {"crossproject.csv", "crossproject.md"};
  if (up_to_date("crossproject", inputs, outputs)) return;
  FeatureSet features{load_features(*this, 1), load_features(*this, 2)};
  std::vector<IssueRecord> issues;
  {
    auto in = open_input(require("corrected.jsonl"));
    issues = parse_issue_dump(in).issues;
  }
  const CrossProjectResult result = cross_project(features, project_stats(issues), config_);
  write_crossproject_csv(result, path(outputs[0]).string(), hash_);
  write_crossproject_md(result, path(outputs[1]).string(), hash_);
  stamp("crossproject", inputs);
  log_ << "[crossproject] " << result.report.folds.size() << " folds; spearman(change probability, phase 1 F1) = "
       << format_metric(result.spearman_phase1) << '\n';
}

void StageRunner::granger() {
  const std::vector<std::string> inputs = {"corrected.jsonl", "batch_events.jsonl"};
  const std::vector<std::string> outputs = {"granger_report.csv"};
  if (up_to_date("granger", inputs, outputs)) return;
  const CorrectedCorpus corpus = load_corrected(require(inputs[0]), require(inputs[1]));
  const auto rows = build_phase2_dataset(corpus.issues, corpus.batch_events);
  const GrangerAnalysis analysis = granger_analysis(rows, config_.series(),
                                                    static_cast<int>(config_.integer("granger.max_lag")),
                                                    config_.real("granger.alpha"));
  write_granger_csv(analysis.rows, path(outputs[0]).string(), header());
  stamp("granger", inputs);
  log_ << "[granger] " << rows.size() << " change events, " << analysis.dropped_windows << " windows dropped\n";
  for (const auto& r : analysis.rows) {
    log_ << "[granger] " << r.feature << ": " << format_metric(r.pct_significant) << "% significant of "
         << r.n_tested << '\n';
  }
}

}  // namespace priodrift
