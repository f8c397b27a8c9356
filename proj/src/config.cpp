#include "priodrift/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace priodrift {

const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"run.seed", "42"},
      {"run.threads", ""},
      {"paths.work_dir", "run"},
      {"paths.embeddings", ""},
      {"paths.revisions", ""},
      {"synth.n_projects", "5"},
      {"synth.bugs_per_project", "2000"},
      {"synth.reporters_per_project", "60"},
      {"synth.developers_per_project", "12"},
      {"synth.initial_marginal", "0.04,0.08,0.65,0.18,0.05"},
      {"synth.change_probability", "0.15,0.12,0.08,0.06,0.06"},
      {"synth.scale_projects", "true"},
      {"synth.project_rate_min", "0.05"},
      {"synth.project_rate_max", "0.25"},
      {"synth.transitions", "reference"},
      {"synth.repeat_probability", "0.13"},
      {"synth.max_changes", "3"},
      {"synth.comment_rate", "0.3"},
      {"synth.history_rate", "0.2"},
      {"synth.burst_multiplier", "8"},
      {"synth.burst_window_days", "2"},
      {"synth.burst_fraction", "1"},
      {"synth.target_token_rate", "0.5"},
      {"synth.mean_lifetime_days", "30"},
      {"synth.span_days", "730"},
      {"synth.vague_fraction", "0.2"},
      {"synth.vague_risk", "20"},
      {"synth.volatile_reporter_fraction", "0.2"},
      {"synth.volatile_risk", "3"},
      {"synth.rapid_edit_rate", "0"},
      {"synth.alias_rate", "0"},
      {"ingest.threshold_minutes", "5"},
      {"ingest.batch_filter", "true"},
      {"ingest.batch_min_issues", "5"},
      {"ingest.batch_window_seconds", "60"},
      {"features.text_mode", "hashed"},
      {"features.text_width", "64"},
      {"split.test_fraction", "0.2"},
      {"split.validation_fraction", "0.2"},
      {"phase1.sampler", "kmeans"},
      {"phase1.kmeans_n_init", "10"},
      {"phase1.kmeans_max_iter", "300"},
      {"phase1.kmeans_tol", "0.0001"},
      {"phase1.weights", "search"},
      {"phase1.weight_total", "10"},
      {"phase1.weight_min", "1"},
      {"phase1.weight_max", "7"},
      {"knn.k", "385"},
      {"forest.trees", "280"},
      {"forest.max_depth", "10"},
      {"forest.min_split", "5"},
      {"forest.min_leaf", "2"},
      {"svm.C", "1"},
      {"svm.gamma", "scale"},
      {"gbdt.rounds", "95"},
      {"gbdt.max_depth", "9"},
      {"gbdt.eta", "0.01"},
      {"gbdt.colsample", "0.5"},
      {"phase2.sampling_plan", "blocker:+0.15,critical:+0.15,major:-0.10,minor:+0.65,trivial:+0.80"},
      {"phase2.conditional", "true"},
      {"phase2.cost_sensitive", "true"},
      {"phase2.mask_current", "true"},
      {"mlp.hidden", "32,32,32"},
      {"mlp.epochs", "86"},
      {"mlp.batch", "64"},
      {"mlp.learning_rate", "0.001"},
      {"mlp.momentum", "0.9"},
      {"crossproject.phases", "1,2"},
      {"granger.slices", "10"},
      {"granger.lead", "2"},
      {"granger.max_lag", "3"},
      {"granger.alpha", "0.05"},
      {"granger.min_slice_seconds", "60"},
      {"fetch.endpoint", ""},
      {"fetch.project", ""},
      {"fetch.page_size", "100"},
      {"fetch.fixture_dir", ""},
      {"fetch.record_dir", ""},
  };
  return defaults;
}

namespace {

bool semantic(const std::string& key) { return key != "run.threads" && key.rfind("paths.", 0) != 0 &&
                                               key != "fetch.fixture_dir" && key != "fetch.record_dir"; }

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(ErrorKind::ConfigError, "field '" + key + "' = '" + value + "': expected " + expected);
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [k, v] : config_defaults()) values_[k] = v;
}

RunConfig RunConfig::load(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::ConfigError, path + ": key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) {
      try {
        config.set(section + "." + key, value.data());
      } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, path + ": " + e.what());
      }
    }
  }
  return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::ConfigError, "unknown field '" + key + "'");
  it->second = trim(value);
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::ConfigError, "unknown field '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) bad_value(key, v, "a finite number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

long RunConfig::integer(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const long n = std::stol(v, &used);
    if (used != v.size()) bad_value(key, v, "an integer");
    return n;
  } catch (const std::logic_error&) {
    bad_value(key, v, "an integer");
  }
}

std::size_t RunConfig::count(const std::string& key) const {
  const long n = integer(key);
  if (n < 0) bad_value(key, get(key), "a non-negative integer");
  return static_cast<std::size_t>(n);
}

bool RunConfig::flag(const std::string& key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  bad_value(key, get(key), "on/off");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      bad_value(key, get(key), "a comma-separated list of numbers");
    }
  }
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = fnv1a64("priodrift-config-v1");
  for (const auto& [k, v] : values_) {
    if (!semantic(k)) continue;
    h = fnv1a64(k + "=" + v + "\n", h);
  }
  return hex64(h);
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [k, v] : values_) {
    const auto dot = k.find('.');
    const std::string s = k.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << k.substr(dot + 1) << " = " << v << '\n';
  }
  return out.str();
}

namespace {

std::array<double, 5> five(const RunConfig& c, const std::string& key) {
  const auto v = c.reals(key);
  if (v.size() != 5) bad_value(key, c.get(key), "five comma-separated numbers");
  return {v[0], v[1], v[2], v[3], v[4]};
}

}  // namespace

CorpusConfig RunConfig::corpus() const {
  CorpusConfig c;
  c.n_projects = count("synth.n_projects");
  c.bugs_per_project = count("synth.bugs_per_project");
  c.reporters_per_project = count("synth.reporters_per_project");
  c.developers_per_project = count("synth.developers_per_project");
  c.initial_marginal = five(*this, "synth.initial_marginal");
  c.change_probability = five(*this, "synth.change_probability");
  c.scale_projects = flag("synth.scale_projects");
  c.project_rate_min = real("synth.project_rate_min");
  c.project_rate_max = real("synth.project_rate_max");
  if (get("synth.transitions") != "reference") {
    const auto v = reals("synth.transitions");
    if (v.size() != 25) bad_value("synth.transitions", get("synth.transitions"), "'reference' or 25 numbers");
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) c.transitions[i][j] = v[5 * i + j];
    }
  }
  c.repeat_probability = real("synth.repeat_probability");
  c.max_changes = count("synth.max_changes");
  c.comment_rate = real("synth.comment_rate");
  c.history_rate = real("synth.history_rate");
  c.burst_multiplier = real("synth.burst_multiplier");
  c.burst_window_days = real("synth.burst_window_days");
  c.burst_fraction = real("synth.burst_fraction");
  c.target_token_rate = real("synth.target_token_rate");
  c.mean_lifetime_days = real("synth.mean_lifetime_days");
  c.span_days = real("synth.span_days");
  c.vague_fraction = real("synth.vague_fraction");
  c.vague_risk = real("synth.vague_risk");
  c.volatile_reporter_fraction = real("synth.volatile_reporter_fraction");
  c.volatile_risk = real("synth.volatile_risk");
  c.seed = stage_seed("synth");
  return c;
}

NoiseConfig RunConfig::noise() const {
  NoiseConfig n;
  n.rapid_edit_rate = real("synth.rapid_edit_rate");
  n.alias_rate = real("synth.alias_rate");
  n.seed = stage_seed("noise");
  return n;
}

CorrectionConfig RunConfig::correction() const {
  CorrectionConfig c;
  c.short_interval.threshold_seconds = static_cast<Timestamp>(std::llround(real("ingest.threshold_minutes") * 60.0));
  c.batch_filter = flag("ingest.batch_filter");
  c.batch.min_issues = count("ingest.batch_min_issues");
  c.batch.window_seconds = integer("ingest.batch_window_seconds");
  return c;
}

FeatureConfig RunConfig::features() const {
  FeatureConfig f;
  try {
    f.text_mode = text_mode_from_string(get("features.text_mode"));
  } catch (const Error&) {
    bad_value("features.text_mode", get("features.text_mode"), "hashed, imported or none");
  }
  f.text_width = count("features.text_width");
  return f;
}

KMeansConfig RunConfig::kmeans() const {
  KMeansConfig k;
  k.n_init = count("phase1.kmeans_n_init");
  k.max_iter = count("phase1.kmeans_max_iter");
  k.tol = real("phase1.kmeans_tol");
  if (k.n_init < 1) bad_value("phase1.kmeans_n_init", get("phase1.kmeans_n_init"), "at least 1");
  return k;
}

Phase1Sampler RunConfig::phase1_sampler() const {
  const std::string& v = get("phase1.sampler");
  if (v == "kmeans") return Phase1Sampler::KMeans;
  if (v == "random_under") return Phase1Sampler::RandomUnder;
  if (v == "random_over") return Phase1Sampler::RandomOver;
  if (v == "none") return Phase1Sampler::None;
  bad_value("phase1.sampler", v, "kmeans, random_under, random_over or none");
}

KnnParams RunConfig::knn() const {
  KnnParams p;
  p.k = count("knn.k");
  if (p.k < 1) bad_value("knn.k", get("knn.k"), "at least 1");
  return p;
}

ForestParams RunConfig::forest() const {
  ForestParams p;
  p.trees = count("forest.trees");
  p.max_depth = static_cast<int>(integer("forest.max_depth"));
  p.min_split = count("forest.min_split");
  p.min_leaf = count("forest.min_leaf");
  return p;
}

SvmParams RunConfig::svm() const {
  SvmParams p;
  p.C = real("svm.C");
  p.gamma = get("svm.gamma") == "scale" ? 0.0 : real("svm.gamma");
  return p;
}

GbdtParams RunConfig::gbdt() const {
  GbdtParams p;
  p.rounds = count("gbdt.rounds");
  p.max_depth = static_cast<int>(integer("gbdt.max_depth"));
  p.eta = real("gbdt.eta");
  p.colsample = real("gbdt.colsample");
  return p;
}

MlpParams RunConfig::mlp() const {
  MlpParams p;
  p.hidden.clear();
  for (double h : reals("mlp.hidden")) {
    if (h < 1 || h != std::floor(h)) bad_value("mlp.hidden", get("mlp.hidden"), "positive layer widths");
    p.hidden.push_back(static_cast<std::size_t>(h));
  }
  p.epochs = count("mlp.epochs");
  p.batch = count("mlp.batch");
  p.learning_rate = real("mlp.learning_rate");
  p.momentum = real("mlp.momentum");
  return p;
}

SamplingPlan RunConfig::sampling_plan() const {
  SamplingPlan plan;
  try {
    plan = get("phase2.sampling_plan") == "none" ? SamplingPlan{} : parse_sampling_plan(get("phase2.sampling_plan"));
  } catch (const Error& e) {
    bad_value("phase2.sampling_plan", get("phase2.sampling_plan"), "class:+rate entries (" + std::string(e.what()) + ")");
  }
  plan.conditional = flag("phase2.conditional");
  return plan;
}

SeriesConfig RunConfig::series() const {
  SeriesConfig s;
  s.slices = count("granger.slices");
  s.lead = count("granger.lead");
  s.min_slice_seconds = integer("granger.min_slice_seconds");
  return s;
}

FetchConfig RunConfig::fetch() const {
  FetchConfig f;
  f.project = get("fetch.project");
  f.page_size = count("fetch.page_size");
  return f;
}

std::vector<int> RunConfig::fixed_weights() const {
  if (get("phase1.weights") == "search") return {};
  std::vector<int> w;
  for (double v : reals("phase1.weights")) {
    if (v < 0 || v != std::floor(v)) bad_value("phase1.weights", get("phase1.weights"), "'search' or integer weights");
    w.push_back(static_cast<int>(v));
  }
  if (w.size() != 4) bad_value("phase1.weights", get("phase1.weights"), "four weights (knn, forest, svm, gbdt)");
  return w;
}

}  // namespace priodrift
