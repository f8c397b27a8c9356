#pragma once

#include "priodrift/ingest.hpp"
#include "priodrift/issue_model.hpp"

#include <map>
#include <set>
#include <tuple>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace priodrift {

enum class Phase { I = 1, II = 2 };

// ---------------------------------------------------------------------------
// Frequency-change measure

/// One timestamped event with the quantities the three measures need.
struct TimedEvent {
  double time = 0.0;       ///< seconds
  std::string key;         ///< author or field, for distinct-count measures
  double magnitude = 1.0;  ///< e.g. comment length in bytes
};

enum class Measure { Count, DistinctKeys, Magnitude };

/// Sorted split points and per-split relative frequency change, in
/// fractional days. Splits where the earlier segment has zero frequency
/// (or a segment has zero length) are skipped.
std::vector<double> frequency_diffs(const std::vector<TimedEvent>& events, double start, double end, Measure measure);

/// max |Diff_k| over the splits between consecutive events; 0 with < 2 events.
double max_freq_change(const std::vector<TimedEvent>& events, double start, double end, Measure measure);

struct CommentChange {
  double max_num_diff = 0.0;
  double max_pers_diff = 0.0;
  double max_len_diff = 0.0;
};

struct HistoryChange {
  double max_item_diff = 0.0;
  double max_author_diff = 0.0;
  double max_field_diff = 0.0;
};

CommentChange comment_change_features(const IssueSnapshot& snapshot);
HistoryChange history_change_features(const IssueSnapshot& snapshot);

// ---------------------------------------------------------------------------
// Reporter and project state

/// exp(-(t_c - t_i) / T), and 1 when T == 0.
double reporter_weight(double t_i, double t_c, double horizon);

/// Compact priority trail of one issue: initial priority at creation, then
/// each change, sorted by time.
struct PriorityTrail {
  Timestamp created = 0;
  int initial = 3;
  std::vector<std::pair<Timestamp, int>> changes;

  explicit PriorityTrail(const IssueRecord& issue);
  PriorityTrail() = default;
  /// Priority code in effect just before t.
  int as_of(Timestamp t) const;
  /// Number of changes strictly before t.
  std::size_t changes_before(Timestamp t) const;
};

struct ReporterFeatures {
  double rep_ave = 3.0;
  double rep_med = 3.0;
  double rep_up = 0.5;
  double rep_ave_rg = 0.0;
  std::size_t bug_count = 0;
  std::size_t changed_count = 0;
};

class ReporterHistory {
 public:
  explicit ReporterHistory(const std::vector<IssueRecord>& corpus);

  /// Bugs by `reporter` reported strictly before `cut`, excluding `self_key`.
  ReporterFeatures query(const std::string& reporter, Timestamp cut, const std::string& self_key) const;

 private:
  struct Entry {
    std::string key;
    PriorityTrail trail;
  };
  std::unordered_map<std::string, std::vector<Entry>> by_reporter_;
};

struct ProjectState {
  double open_count = 0.0;
  double average_priority = 3.0;
};

struct ProjectFlow {
  double new_count = 0.0;
  double close_count = 0.0;
};

class ProjectIndex {
 public:
  explicit ProjectIndex(const std::vector<IssueRecord>& corpus);

  /// Unresolved bugs and their mean current priority, from events before t.
  ProjectState state_at(const std::string& project, Timestamp t) const;
  /// Reports and resolutions of other bugs in [from, to).
  ProjectFlow flow(const std::string& project, Timestamp from, Timestamp to, const std::string& self_key) const;

 private:
  struct Delta {
    Timestamp time;
    int count;
    int priority_sum;
  };
  struct Project {
    std::vector<Delta> deltas;              // sorted; prefix sums below
    std::vector<long> count_prefix, sum_prefix;
    std::vector<Timestamp> created;         // sorted
    std::vector<Timestamp> resolved;        // sorted
  };
  std::unordered_map<std::string, Project> projects_;
  std::unordered_map<std::string, std::vector<Timestamp>> own_resolutions_;
};

// ---------------------------------------------------------------------------
// Related bugs

class CorpusIndex {
 public:
  explicit CorpusIndex(const std::vector<IssueRecord>& corpus);

  /// Keys of issues created before `cut` sharing a component, affects
  /// version, fix version, label or attachment filename with `issue`, or
  /// listed in its links. Never contains the issue itself.
  std::vector<std::size_t> related(const IssueRecord& issue, Timestamp cut) const;
  std::set<std::string> related_keys(const IssueRecord& issue, Timestamp cut) const;

  const IssueRecord& issue(std::size_t i) const { return *corpus_[i]; }
  const PriorityTrail& trail(std::size_t i) const { return trails_[i]; }

 private:
  std::vector<const IssueRecord*> corpus_;
  std::vector<PriorityTrail> trails_;
  std::map<std::tuple<std::string, int, std::string>, std::vector<std::size_t>> by_value_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

// ---------------------------------------------------------------------------
// Text

enum class TextMode { Hashed, Imported, None };

std::string_view to_string(TextMode mode);
TextMode text_mode_from_string(std::string_view s);

/// Precomputed embeddings keyed by (issue_key, cut_time). CSV layout:
/// issue_key,cut_time,v0,v1,...
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  static EmbeddingStore load_csv(const std::string& path);
  void insert(const std::string& key, Timestamp cut, std::vector<double> values);
  const std::vector<double>& lookup(const std::string& key, Timestamp cut) const;
  std::size_t width() const { return width_; }

 private:
  std::map<std::pair<std::string, Timestamp>, std::vector<double>> table_;
  std::size_t width_ = 0;
};

/// log(1 + count) of hashed lowercase alphanumeric tokens.
std::vector<double> hashed_text_features(std::string_view summary, std::string_view comments, std::size_t width);

// ---------------------------------------------------------------------------
// Schema and assembly

enum class ColumnKind { Continuous, Boolean, Categorical };

struct Vocabulary {
  std::vector<std::string> values;  // sorted
  double index_of(const std::string& v) const;  // -1 when unseen
};

struct FeatureSchema {
  Phase phase = Phase::I;
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  TextMode text_mode = TextMode::Hashed;
  std::size_t text_width = 64;
  Vocabulary projects;
  Vocabulary reporters;

  std::size_t width() const { return names.size(); }
  std::string fingerprint() const;
  Json to_json() const;
  static FeatureSchema from_json(const Json& j);
  std::vector<std::size_t> columns_of_kind(ColumnKind kind) const;
  std::size_t column(const std::string& name) const;
};

struct FeatureConfig {
  TextMode text_mode = TextMode::Hashed;
  std::size_t text_width = 64;
  std::shared_ptr<const EmbeddingStore> embeddings;
};

/// Builds the column layout [evolution | basic | text] for a phase, with
/// vocabularies taken from `corpus`.
FeatureSchema make_schema(Phase phase, const std::vector<IssueRecord>& corpus, const FeatureConfig& config);

struct FeatureRow {
  std::string issue_key;
  std::string project;
  Timestamp cut_time = 0;
  Phase phase = Phase::I;
  int label = 0;
  std::vector<std::string> names;
  std::vector<double> values;
};

struct RowKey {
  std::string issue_key;
  std::string project;
  Timestamp cut_time = 0;
};

struct FeatureMatrix {
  FeatureSchema schema;
  Matrix values;
  std::vector<RowKey> rows;
  /// Phase I: 0/1 change label. Phase II: target priority code.
  std::vector<int> labels;
};

/// Computes feature rows against one corpus. The corpus must outlive it.
class FeatureExtractor {
 public:
  FeatureExtractor(const std::vector<IssueRecord>& corpus, FeatureConfig config);

  FeatureRow phase1_row(const IssueSnapshot& snapshot, const FeatureSchema& schema) const;
  FeatureRow phase2_row(const IssueSnapshot& snapshot, const FeatureSchema& schema) const;

  FeatureMatrix phase1_matrix(const std::vector<Phase1Row>& rows, const FeatureSchema& schema) const;
  FeatureMatrix phase2_matrix(const std::vector<Phase2Row>& rows, const FeatureSchema& schema) const;

  const CorpusIndex& corpus_index() const { return corpus_index_; }

 private:
  std::vector<double> text_vector(const IssueSnapshot& snapshot, const FeatureSchema& schema) const;

  FeatureConfig config_;
  ProjectIndex project_index_;
  ReporterHistory reporter_history_;
  CorpusIndex corpus_index_;
};

struct RelatedFeatures {
  double count = 0, change_count = 0, ave = 3.0, med = 3.0, up = 0.5, range = 0.0;
};

RelatedFeatures related_features(const CorpusIndex& index, const IssueRecord& issue, Timestamp cut);

/// Named basic features for a snapshot (Phase II adds the change columns).
std::vector<std::pair<std::string, double>> basic_features(const IssueSnapshot& snapshot, const CorpusIndex& index,
                                                           const ReporterHistory& reporters,
                                                           const FeatureSchema& schema);

/// Stacks rows into a matrix, checking every row against the schema.
FeatureMatrix assemble_vectors(const std::vector<FeatureRow>& rows, const FeatureSchema& schema);

// CSV and manifest persistence.
void write_feature_csv(const FeatureMatrix& m, const std::string& path, const std::string& header_comment);
FeatureMatrix read_feature_csv(const std::string& path, const FeatureSchema& schema);

}  // namespace priodrift
