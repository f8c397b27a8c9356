#include "priodrift/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace priodrift {

// ---------------------------------------------------------------------------
// Frequency change

namespace {

std::vector<TimedEvent> sorted_events(std::vector<TimedEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const TimedEvent& a, const TimedEvent& b) { return a.time < b.time; });
  return events;
}

}  // namespace

std::vector<double> frequency_diffs(const std::vector<TimedEvent>& input, double start, double end, Measure measure) {
  std::vector<double> diffs;
  if (input.size() < 2) return diffs;
  const std::vector<TimedEvent> events = sorted_events(input);
  const std::size_t n = events.size();

  // measure over [0, s) and [s, n) for every s
  std::vector<double> prefix(n + 1, 0.0), suffix(n + 1, 0.0);
  if (measure == Measure::DistinctKeys) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
      seen.insert(events[i].key);
      prefix[i + 1] = static_cast<double>(seen.size());
    }
    seen.clear();
    for (std::size_t i = n; i-- > 0;) {
      seen.insert(events[i].key);
      suffix[i] = static_cast<double>(seen.size());
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      prefix[i + 1] = prefix[i] + (measure == Measure::Count ? 1.0 : events[i].magnitude);
    }
    for (std::size_t i = 0; i <= n; ++i) suffix[i] = prefix[n] - prefix[i];
  }

  for (std::size_t k = 1; k < n; ++k) {
    const double mid = 0.5 * (events[k - 1].time + events[k].time);
    const auto split = static_cast<std::size_t>(
        std::lower_bound(events.begin(), events.end(), mid,
                         [](const TimedEvent& e, double t) { return e.time < t; }) -
        events.begin());
    const double before_days = to_days(mid - start);
    const double after_days = to_days(end - mid);
    if (before_days <= 0.0 || after_days <= 0.0) continue;
    const double f_before = prefix[split] / before_days;
    if (f_before <= 0.0) continue;
    const double f_after = suffix[split] / after_days;
    diffs.push_back((f_after - f_before) / f_before);
  }
  return diffs;
}

double max_freq_change(const std::vector<TimedEvent>& events, double start, double end, Measure measure) {
  double best = 0.0;
  for (double d : frequency_diffs(events, start, end, measure)) best = std::max(best, std::abs(d));
  return best;
}

CommentChange comment_change_features(const IssueSnapshot& snapshot) {
  std::vector<TimedEvent> events;
  for (const auto& c : snapshot.comments_before()) {
    events.push_back({static_cast<double>(c.timestamp), c.author_id, static_cast<double>(c.body_length)});
  }
  const auto start = static_cast<double>(snapshot.base.created_at);
  const auto end = static_cast<double>(snapshot.cut_time);
  return {max_freq_change(events, start, end, Measure::Count),
          max_freq_change(events, start, end, Measure::DistinctKeys),
          max_freq_change(events, start, end, Measure::Magnitude)};
}

HistoryChange history_change_features(const IssueSnapshot& snapshot) {
  std::vector<TimedEvent> by_author, by_field;
  for (const auto& h : snapshot.history_before()) {
    by_author.push_back({static_cast<double>(h.timestamp), h.author_id, 1.0});
    by_field.push_back({static_cast<double>(h.timestamp), h.field, 1.0});
  }
  const auto start = static_cast<double>(snapshot.base.created_at);
  const auto end = static_cast<double>(snapshot.cut_time);
  return {max_freq_change(by_author, start, end, Measure::Count),
          max_freq_change(by_author, start, end, Measure::DistinctKeys),
          max_freq_change(by_field, start, end, Measure::DistinctKeys)};
}

// ---------------------------------------------------------------------------
// Reporter

double reporter_weight(double t_i, double t_c, double horizon) {
  if (horizon <= 0.0) return 1.0;
  return std::exp(-std::abs(t_i - t_c) / horizon);
}

PriorityTrail::PriorityTrail(const IssueRecord& issue) : created(issue.created_at), initial(code(issue.initial_priority)) {
  for (const auto& h : issue.history) {
    if (is_priority_field(h.field)) changes.emplace_back(h.timestamp, code(encode_priority(h.to_value)));
  }
}

int PriorityTrail::as_of(Timestamp t) const {
  const std::size_t n = changes_before(t);
  return n == 0 ? initial : changes[n - 1].second;
}

std::size_t PriorityTrail::changes_before(Timestamp t) const {
  return static_cast<std::size_t>(
      std::lower_bound(changes.begin(), changes.end(), t,
                       [](const std::pair<Timestamp, int>& c, Timestamp v) { return c.first < v; }) -
      changes.begin());
}

ReporterHistory::ReporterHistory(const std::vector<IssueRecord>& corpus) {
  for (const auto& issue : corpus) by_reporter_[issue.reporter_id].push_back({issue.issue_key, PriorityTrail(issue)});
  for (auto& [_, entries] : by_reporter_) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.trail.created < b.trail.created; });
  }
}

ReporterFeatures ReporterHistory::query(const std::string& reporter, Timestamp cut, const std::string& self_key) const {
  ReporterFeatures out;
  auto it = by_reporter_.find(reporter);
  if (it == by_reporter_.end()) return out;
  std::vector<const Entry*> prior;
  for (const Entry& e : it->second) {
    if (e.trail.created >= cut) break;
    if (e.key != self_key) prior.push_back(&e);
  }
  if (prior.empty()) return out;
  const double horizon = static_cast<double>(cut - prior.front()->trail.created);
  double w_sum = 0.0, wp_sum = 0.0, w_changed = 0.0, wr_sum = 0.0;
  std::size_t ups = 0;
  std::vector<double> priorities;
  for (const Entry* e : prior) {
    const double w = reporter_weight(static_cast<double>(e->trail.created), static_cast<double>(cut), horizon);
    w_sum += w;
    wp_sum += w * e->trail.initial;
    priorities.push_back(e->trail.initial);
    if (e->trail.changes_before(cut) > 0) {
      ++out.changed_count;
      const int current = e->trail.as_of(cut);
      if (current < e->trail.initial) ++ups;
      w_changed += w;
      wr_sum += w * std::abs(current - e->trail.initial);
    }
  }
  out.bug_count = prior.size();
  out.rep_ave = wp_sum / w_sum;
  out.rep_med = median(priorities);
  if (out.changed_count > 0) {
    out.rep_up = static_cast<double>(ups) / static_cast<double>(out.changed_count);
    out.rep_ave_rg = wr_sum / w_changed;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Project

namespace {

bool is_resolution(const std::string& status) {
  return is_field(status, "resolved") || is_field(status, "closed");
}

}  // namespace

ProjectIndex::ProjectIndex(const std::vector<IssueRecord>& corpus) {
  for (const auto& issue : corpus) {
    Project& p = projects_[issue.project_id];
    int pri = code(issue.initial_priority);
    bool open = true;
    p.deltas.push_back({issue.created_at, 1, pri});
    p.created.push_back(issue.created_at);
    auto& own = own_resolutions_[issue.issue_key];
    for (const auto& h : issue.history) {
      if (is_field(h.field, "status")) {
        if (is_resolution(h.to_value)) {
          if (open) {
            p.deltas.push_back({h.timestamp, -1, -pri});
            open = false;
          }
          p.resolved.push_back(h.timestamp);
          own.push_back(h.timestamp);
        } else if (!open) {
          p.deltas.push_back({h.timestamp, 1, pri});
          open = true;
        }
      } else if (is_priority_field(h.field)) {
        const int next = code(encode_priority(h.to_value));
        if (open) p.deltas.push_back({h.timestamp, 0, next - pri});
        pri = next;
      }
    }
  }
  for (auto& [_, p] : projects_) {
    std::stable_sort(p.deltas.begin(), p.deltas.end(), [](const Delta& a, const Delta& b) { return a.time < b.time; });
    p.count_prefix.assign(p.deltas.size() + 1, 0);
    p.sum_prefix.assign(p.deltas.size() + 1, 0);
    for (std::size_t i = 0; i < p.deltas.size(); ++i) {
      p.count_prefix[i + 1] = p.count_prefix[i] + p.deltas[i].count;
      p.sum_prefix[i + 1] = p.sum_prefix[i] + p.deltas[i].priority_sum;
    }
    std::sort(p.created.begin(), p.created.end());
    std::sort(p.resolved.begin(), p.resolved.end());
  }
}

ProjectState ProjectIndex::state_at(const std::string& project, Timestamp t) const {
  ProjectState out;
  auto it = projects_.find(project);
  if (it == projects_.end()) return out;
  const Project& p = it->second;
  const auto idx = static_cast<std::size_t>(
      std::lower_bound(p.deltas.begin(), p.deltas.end(), t, [](const Delta& d, Timestamp v) { return d.time < v; }) -
      p.deltas.begin());
  out.open_count = static_cast<double>(p.count_prefix[idx]);
  if (p.count_prefix[idx] > 0) {
    out.average_priority = static_cast<double>(p.sum_prefix[idx]) / static_cast<double>(p.count_prefix[idx]);
  }
  return out;
}

ProjectFlow ProjectIndex::flow(const std::string& project, Timestamp from, Timestamp to,
                               const std::string& self_key) const {
  ProjectFlow out;
  auto it = projects_.find(project);
  if (it == projects_.end() || to <= from) return out;
  const Project& p = it->second;
  auto in_range = [&](const std::vector<Timestamp>& v) {
    return static_cast<double>(std::lower_bound(v.begin(), v.end(), to) - std::lower_bound(v.begin(), v.end(), from));
  };
  // The bug under consideration was reported at `from` and is not counted.
  out.new_count = std::max(0.0, in_range(p.created) - 1.0);
  double own = 0.0;
  auto own_it = own_resolutions_.find(self_key);
  if (own_it != own_resolutions_.end()) {
    for (Timestamp t : own_it->second) own += (t >= from && t < to) ? 1.0 : 0.0;
  }
  out.close_count = in_range(p.resolved) - own;
  return out;
}

// ---------------------------------------------------------------------------
// Related bugs

namespace {
enum RelationKind { kComponent = 0, kAffects = 1, kFix = 2, kLabel = 3, kAttachment = 4 };
}

CorpusIndex::CorpusIndex(const std::vector<IssueRecord>& corpus) {
  corpus_.reserve(corpus.size());
  trails_.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const IssueRecord& issue = corpus[i];
    corpus_.push_back(&issue);
    trails_.emplace_back(issue);
    by_key_[issue.issue_key] = i;
    auto add = [&](int kind, const std::set<std::string>& values) {
      for (const auto& v : values) by_value_[{issue.project_id, kind, v}].push_back(i);
    };
    add(kComponent, issue.components);
    add(kAffects, issue.affects_versions);
    add(kFix, issue.fix_versions);
    add(kLabel, issue.labels);
    add(kAttachment, issue.attachment_names);
  }
  for (auto& [_, list] : by_value_) {
    std::stable_sort(list.begin(), list.end(),
                     [&](std::size_t a, std::size_t b) { return corpus_[a]->created_at < corpus_[b]->created_at; });
  }
}

std::vector<std::size_t> CorpusIndex::related(const IssueRecord& issue, Timestamp cut) const {
  std::vector<std::size_t> out;
  auto collect = [&](int kind, const std::set<std::string>& values) {
    for (const auto& v : values) {
      auto it = by_value_.find({issue.project_id, kind, v});
      if (it == by_value_.end()) continue;
      for (std::size_t j : it->second) {
        if (corpus_[j]->created_at >= cut) break;
        if (corpus_[j]->issue_key != issue.issue_key) out.push_back(j);
      }
    }
  };
  collect(kComponent, issue.components);
  collect(kAffects, issue.affects_versions);
  collect(kFix, issue.fix_versions);
  collect(kLabel, issue.labels);
  collect(kAttachment, issue.attachment_names);
  for (const auto& k : issue.linked_issue_keys) {
    auto it = by_key_.find(k);
    if (it != by_key_.end() && corpus_[it->second]->created_at < cut && k != issue.issue_key) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::set<std::string> CorpusIndex::related_keys(const IssueRecord& issue, Timestamp cut) const {
  std::set<std::string> keys;
  for (std::size_t j : related(issue, cut)) keys.insert(corpus_[j]->issue_key);
  return keys;
}

RelatedFeatures related_features(const CorpusIndex& index, const IssueRecord& issue, Timestamp cut) {
  RelatedFeatures out;
  const auto related = index.related(issue, cut);
  out.count = static_cast<double>(related.size());
  if (related.empty()) return out;
  std::vector<double> priorities;
  priorities.reserve(related.size());
  double changed = 0.0, ups = 0.0, range = 0.0, sum = 0.0;
  for (std::size_t j : related) {
    const PriorityTrail& trail = index.trail(j);
    const int current = trail.as_of(cut);
    const std::size_t n_changes = trail.changes_before(cut);
    out.change_count += static_cast<double>(n_changes);
    priorities.push_back(current);
    sum += current;
    if (n_changes > 0) {
      changed += 1.0;
      if (current < trail.initial) ups += 1.0;
      range += std::abs(current - trail.initial);
    }
  }
  out.ave = sum / static_cast<double>(related.size());
  out.med = median(std::move(priorities));
  if (changed > 0.0) {
    out.up = ups / changed;
    out.range = range / changed;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text

std::string_view to_string(TextMode mode) {
  switch (mode) {
    case TextMode::Hashed: return "hashed";
    case TextMode::Imported: return "imported";
    case TextMode::None: return "none";
  }
  return "hashed";
}

TextMode text_mode_from_string(std::string_view s) {
  if (s == "hashed") return TextMode::Hashed;
  if (s == "imported") return TextMode::Imported;
  if (s == "none") return TextMode::None;
  throw Error(ErrorKind::ConfigError, "unknown text mode '" + std::string(s) + "'");
}

EmbeddingStore EmbeddingStore::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "embedding file " + path);
  EmbeddingStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string key, cut, cell;
    std::getline(ss, key, ',');
    std::getline(ss, cut, ',');
    if (key == "issue_key") continue;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::strtod(cell.c_str(), nullptr));
    store.insert(key, std::stoll(cut), std::move(values));
  }
  return store;
}

void EmbeddingStore::insert(const std::string& key, Timestamp cut, std::vector<double> values) {
  if (width_ == 0) width_ = values.size();
  if (values.size() != width_) throw Error(ErrorKind::SchemaMismatch, "embedding width for " + key);
  table_[{key, cut}] = std::move(values);
}

const std::vector<double>& EmbeddingStore::lookup(const std::string& key, Timestamp cut) const {
  auto it = table_.find({key, cut});
  if (it == table_.end()) {
    throw Error(ErrorKind::MissingEmbedding, key + " at " + std::to_string(cut));
  }
  return it->second;
}

namespace {

void hash_tokens(std::string_view text, std::vector<double>& counts) {
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      counts[fnv1a64(token) % counts.size()] += 1.0;
      token.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '_') {
      token += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
}

}  // namespace

std::vector<double> hashed_text_features(std::string_view summary, std::string_view comments, std::size_t width) {
  std::vector<double> counts(width, 0.0);
  if (width == 0) return counts;
  hash_tokens(summary, counts);
  hash_tokens(comments, counts);
  for (double& v : counts) v = std::log1p(v);
  return counts;
}

// ---------------------------------------------------------------------------
// Schema

double Vocabulary::index_of(const std::string& v) const {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  if (it == values.end() || *it != v) return -1.0;
  return static_cast<double>(it - values.begin());
}

namespace {

const std::vector<std::string>& evolution_columns(Phase phase) {
  static const std::vector<std::string> one = {"N", "ProjAvePri", "RepAve", "RepMed"};
  static const std::vector<std::string> two = {"NewN",        "CloseN",      "RepAve",      "RepMed",
                                               "RepUp",       "RepAveRg",    "maxNumDiff",  "maxPersDiff",
                                               "maxLenDiff",  "maxItemDiff", "maxAuthorDiff", "maxFieldDiff"};
  return phase == Phase::I ? one : two;
}

const std::vector<std::string>& basic_columns(Phase phase) {
  static const std::vector<std::string> one = {"ProjId", "SmyLen",    "DesLen",   "RelNum",
                                               "RelPCNum", "RelAve",  "RelMed",   "RepId",
                                               "RepBugNum", "RepPCNum", "CurPri"};
  static const std::vector<std::string> two = [] {
    std::vector<std::string> v = one;
    for (const char* c : {"SmyChanged", "DesChanged", "RelUp", "RelRange", "Changed", "PCNum", "PCDir", "PCRange"}) {
      v.emplace_back(c);
    }
    return v;
  }();
  return phase == Phase::I ? one : two;
}

ColumnKind kind_of(const std::string& name) {
  if (name == "ProjId" || name == "RepId") return ColumnKind::Categorical;
  if (name == "SmyChanged" || name == "DesChanged" || name == "Changed") return ColumnKind::Boolean;
  return ColumnKind::Continuous;
}

std::string_view kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Continuous: return "continuous";
    case ColumnKind::Boolean: return "boolean";
    case ColumnKind::Categorical: return "categorical";
  }
  return "continuous";
}

ColumnKind kind_from(std::string_view s) {
  if (s == "boolean") return ColumnKind::Boolean;
  if (s == "categorical") return ColumnKind::Categorical;
  return ColumnKind::Continuous;
}

}  // namespace

FeatureSchema make_schema(Phase phase, const std::vector<IssueRecord>& corpus, const FeatureConfig& config) {
  FeatureSchema s;
  s.phase = phase;
  s.text_mode = config.text_mode;
  s.text_width = config.text_width;
  if (config.text_mode == TextMode::Imported) {
    if (!config.embeddings) throw Error(ErrorKind::ConfigError, "imported text mode needs an embedding file");
    s.text_width = config.embeddings->width();
  }
  if (config.text_mode == TextMode::None) s.text_width = 0;
  for (const auto& c : evolution_columns(phase)) s.names.push_back(c);
  for (const auto& c : basic_columns(phase)) s.names.push_back(c);
  for (std::size_t i = 0; i < s.text_width; ++i) s.names.push_back("text_" + std::to_string(i));
  for (const auto& n : s.names) s.kinds.push_back(kind_of(n));
  std::set<std::string> projects, reporters;
  for (const auto& issue : corpus) {
    projects.insert(issue.project_id);
    reporters.insert(issue.reporter_id);
  }
  s.projects.values.assign(projects.begin(), projects.end());
  s.reporters.values.assign(reporters.begin(), reporters.end());
  return s;
}

std::string FeatureSchema::fingerprint() const {
  std::uint64_t h = fnv1a64(std::to_string(static_cast<int>(phase)));
  for (std::size_t i = 0; i < names.size(); ++i) {
    h = fnv1a64(names[i], h);
    h = fnv1a64(kind_name(kinds[i]), h);
  }
  h = fnv1a64(to_string(text_mode), h);
  h = fnv1a64(std::to_string(text_width), h);
  for (const auto& v : projects.values) h = fnv1a64(v, fnv1a64("p", h));
  for (const auto& v : reporters.values) h = fnv1a64(v, fnv1a64("r", h));
  return hex64(h);
}

Json FeatureSchema::to_json() const {
  Json j;
  j["phase"] = static_cast<int>(phase);
  j["columns"] = names;
  Json kinds_json = Json::array();
  for (auto k : kinds) kinds_json.push_back(kind_name(k));
  j["kinds"] = kinds_json;
  j["text_mode"] = to_string(text_mode);
  j["text_width"] = text_width;
  j["vocab"] = {{"projects", projects.values},
                {"reporters", reporters.values},
                {"projects_hash", hex64([&] {
                   std::uint64_t h = fnv1a64("");
                   for (const auto& v : projects.values) h = fnv1a64(v, h);
                   return h;
                 }())},
                {"reporters_hash", hex64([&] {
                   std::uint64_t h = fnv1a64("");
                   for (const auto& v : reporters.values) h = fnv1a64(v, h);
                   return h;
                 }())}};
  j["fingerprint"] = fingerprint();
  return j;
}

FeatureSchema FeatureSchema::from_json(const Json& j) {
  FeatureSchema s;
  try {
    s.phase = j.at("phase").get<int>() == 1 ? Phase::I : Phase::II;
    s.names = j.at("columns").get<std::vector<std::string>>();
    for (const auto& k : j.at("kinds")) s.kinds.push_back(kind_from(k.get<std::string>()));
    s.text_mode = text_mode_from_string(j.at("text_mode").get<std::string>());
    s.text_width = j.at("text_width").get<std::size_t>();
    s.projects.values = j.at("vocab").at("projects").get<std::vector<std::string>>();
    s.reporters.values = j.at("vocab").at("reporters").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("schema manifest: ") + e.what());
  }
  if (s.kinds.size() != s.names.size()) throw Error(ErrorKind::SchemaMismatch, "schema manifest kinds/columns");
  if (j.contains("fingerprint") && j["fingerprint"].get<std::string>() != s.fingerprint()) {
    throw Error(ErrorKind::SchemaMismatch, "schema manifest fingerprint does not match its content");
  }
  return s;
}

std::vector<std::size_t> FeatureSchema::columns_of_kind(ColumnKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == kind) out.push_back(i);
  }
  return out;
}

std::size_t FeatureSchema::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::SchemaMismatch, "no column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

// ---------------------------------------------------------------------------
// Rows

std::vector<std::pair<std::string, double>> basic_features(const IssueSnapshot& snapshot, const CorpusIndex& index,
                                                           const ReporterHistory& reporters,
                                                           const FeatureSchema& schema) {
  const IssueRecord& base = snapshot.base;
  const Timestamp cut = snapshot.cut_time;
  const RelatedFeatures rel = related_features(index, base, cut);
  const ReporterFeatures rep = reporters.query(base.reporter_id, cut, base.issue_key);
  const int current = code(snapshot.current_priority);
  const int initial = code(base.initial_priority);

  std::vector<std::pair<std::string, double>> out = {
      {"ProjId", schema.projects.index_of(base.project_id)},
      {"SmyLen", static_cast<double>(snapshot.current_summary_text.size())},
      {"DesLen", static_cast<double>(snapshot.current_description_text.size())},
      {"RelNum", rel.count},
      {"RelPCNum", rel.change_count},
      {"RelAve", rel.ave},
      {"RelMed", rel.med},
      {"RepId", schema.reporters.index_of(base.reporter_id)},
      {"RepBugNum", static_cast<double>(rep.bug_count)},
      {"RepPCNum", static_cast<double>(rep.changed_count)},
      {"CurPri", static_cast<double>(current)},
  };
  if (schema.phase == Phase::II) {
    bool summary_changed = false, description_changed = false;
    double pc_num = 0.0;
    for (const auto& h : snapshot.history_before()) {
      summary_changed = summary_changed || is_field(h.field, "summary");
      description_changed = description_changed || is_field(h.field, "description");
      if (is_priority_field(h.field)) pc_num += 1.0;
    }
    const double direction = current < initial ? 1.0 : (current > initial ? -1.0 : 0.0);
    out.insert(out.end(), {
                              {"SmyChanged", summary_changed ? 1.0 : 0.0},
                              {"DesChanged", description_changed ? 1.0 : 0.0},
                              {"RelUp", rel.up},
                              {"RelRange", rel.range},
                              {"Changed", pc_num > 0.0 ? 1.0 : 0.0},
                              {"PCNum", pc_num},
                              {"PCDir", direction},
                              {"PCRange", static_cast<double>(std::abs(current - initial))},
                          });
  }
  return out;
}

FeatureExtractor::FeatureExtractor(const std::vector<IssueRecord>& corpus, FeatureConfig config)
    : config_(std::move(config)), project_index_(corpus), reporter_history_(corpus), corpus_index_(corpus) {}

std::vector<double> FeatureExtractor::text_vector(const IssueSnapshot& snapshot, const FeatureSchema& schema) const {
  switch (schema.text_mode) {
    case TextMode::None: return {};
    case TextMode::Imported: {
      if (!config_.embeddings) throw Error(ErrorKind::MissingEmbedding, "no embedding store loaded");
      return config_.embeddings->lookup(snapshot.base.issue_key, snapshot.cut_time);
    }
    case TextMode::Hashed: {
      std::string comments;
      for (const auto& c : snapshot.comments_before()) {
        comments += c.body_text;
        comments += '\n';
      }
      return hashed_text_features(snapshot.current_summary_text, comments, schema.text_width);
    }
  }
  return {};
}

FeatureRow FeatureExtractor::phase1_row(const IssueSnapshot& snapshot, const FeatureSchema& schema) const {
  FeatureRow row;
  row.issue_key = snapshot.base.issue_key;
  row.project = snapshot.base.project_id;
  row.cut_time = snapshot.cut_time;
  row.phase = Phase::I;
  const ProjectState state = project_index_.state_at(snapshot.base.project_id, snapshot.base.created_at);
  const ReporterFeatures rep =
      reporter_history_.query(snapshot.base.reporter_id, snapshot.cut_time, snapshot.base.issue_key);
  std::vector<std::pair<std::string, double>> named = {
      {"N", state.open_count}, {"ProjAvePri", state.average_priority}, {"RepAve", rep.rep_ave}, {"RepMed", rep.rep_med}};
  for (auto& kv : basic_features(snapshot, corpus_index_, reporter_history_, schema)) named.push_back(std::move(kv));
  const auto text = text_vector(snapshot, schema);
  for (std::size_t i = 0; i < text.size(); ++i) named.emplace_back("text_" + std::to_string(i), text[i]);
  for (auto& [n, v] : named) {
    row.names.push_back(std::move(n));
    row.values.push_back(v);
  }
  return row;
}

FeatureRow FeatureExtractor::phase2_row(const IssueSnapshot& snapshot, const FeatureSchema& schema) const {
  FeatureRow row;
  const IssueRecord& base = snapshot.base;
  row.issue_key = base.issue_key;
  row.project = base.project_id;
  row.cut_time = snapshot.cut_time;
  row.phase = Phase::II;
  const ProjectFlow flow = project_index_.flow(base.project_id, base.created_at, snapshot.cut_time, base.issue_key);
  const ReporterFeatures rep = reporter_history_.query(base.reporter_id, snapshot.cut_time, base.issue_key);
  const CommentChange cmt = comment_change_features(snapshot);
  const HistoryChange hist = history_change_features(snapshot);
  std::vector<std::pair<std::string, double>> named = {
      {"NewN", flow.new_count},
      {"CloseN", flow.close_count},
      {"RepAve", rep.rep_ave},
      {"RepMed", rep.rep_med},
      {"RepUp", rep.rep_up},
      {"RepAveRg", rep.rep_ave_rg},
      {"maxNumDiff", cmt.max_num_diff},
      {"maxPersDiff", cmt.max_pers_diff},
      {"maxLenDiff", cmt.max_len_diff},
      {"maxItemDiff", hist.max_item_diff},
      {"maxAuthorDiff", hist.max_author_diff},
      {"maxFieldDiff", hist.max_field_diff},
  };
  for (auto& kv : basic_features(snapshot, corpus_index_, reporter_history_, schema)) named.push_back(std::move(kv));
  const auto text = text_vector(snapshot, schema);
  for (std::size_t i = 0; i < text.size(); ++i) named.emplace_back("text_" + std::to_string(i), text[i]);
  for (auto& [n, v] : named) {
    row.names.push_back(std::move(n));
    row.values.push_back(v);
  }
  return row;
}

FeatureMatrix FeatureExtractor::phase1_matrix(const std::vector<Phase1Row>& rows, const FeatureSchema& schema) const {
  std::vector<FeatureRow> out(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    out[i] = phase1_row(rows[i].snapshot, schema);
    out[i].label = rows[i].label;
  });
  return assemble_vectors(out, schema);
}

FeatureMatrix FeatureExtractor::phase2_matrix(const std::vector<Phase2Row>& rows, const FeatureSchema& schema) const {
  std::vector<FeatureRow> out(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    out[i] = phase2_row(rows[i].snapshot, schema);
    out[i].label = code(rows[i].label);
  });
  return assemble_vectors(out, schema);
}

FeatureMatrix assemble_vectors(const std::vector<FeatureRow>& rows, const FeatureSchema& schema) {
  FeatureMatrix m;
  m.schema = schema;
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.width()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const FeatureRow& row = rows[r];
    if (row.phase != schema.phase || row.names != schema.names || row.values.size() != schema.width()) {
      throw Error(ErrorKind::SchemaMismatch, "row " + row.issue_key + " does not match the schema manifest");
    }
    for (std::size_t c = 0; c < row.values.size(); ++c) {
      if (!std::isfinite(row.values[c])) {
        throw Error(ErrorKind::SchemaMismatch, "non-finite " + schema.names[c] + " in row " + row.issue_key);
      }
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.values[c];
    }
    m.rows.push_back({row.issue_key, row.project, row.cut_time});
    m.labels.push_back(row.label);
  }
  return m;
}

void write_feature_csv(const FeatureMatrix& m, const std::string& path, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingArtifact, "cannot write " + path);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "issue_key,project,cut_time,label";
  for (const auto& n : m.schema.names) out << ',' << n;
  out << '\n';
  char buf[40];
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    const auto& key = m.rows[static_cast<std::size_t>(r)];
    out << key.issue_key << ',' << key.project << ',' << key.cut_time << ',' << m.labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingArtifact, "feature file " + path);
  FeatureMatrix m;
  m.schema = schema;
  std::string line;
  bool header_seen = false;
  std::vector<std::vector<double>> values;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header_seen) {
      header_seen = true;
      std::vector<std::string> expected = {"issue_key", "project", "cut_time", "label"};
      expected.insert(expected.end(), schema.names.begin(), schema.names.end());
      if (cells != expected) throw Error(ErrorKind::SchemaMismatch, path + " header does not match the schema manifest");
      continue;
    }
    if (cells.size() != schema.width() + 4) throw Error(ErrorKind::SchemaMismatch, path + ": ragged row");
    m.rows.push_back({cells[0], cells[1], std::stoll(cells[2])});
    m.labels.push_back(std::stoi(cells[3]));
    std::vector<double> row;
    row.reserve(schema.width());
    for (std::size_t c = 4; c < cells.size(); ++c) row.push_back(std::strtod(cells[c].c_str(), nullptr));
    values.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(schema.width()));
  for (std::size_t r = 0; r < values.size(); ++r) {
    for (std::size_t c = 0; c < schema.width(); ++c) {
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r][c];
    }
  }
  return m;
}

}  // namespace priodrift
