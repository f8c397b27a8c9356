#pragma once

#include "priodrift/ingest.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace priodrift {

using TransitionRows = std::array<std::array<double, 5>, 5>;

/// Row-normalised transition counts published for the Apache corpus.
TransitionRows reference_transitions();

struct CorpusConfig {
  std::size_t n_projects = 5;
  std::size_t bugs_per_project = 2000;
  std::size_t reporters_per_project = 60;
  std::size_t developers_per_project = 12;
  std::array<double, 5> initial_marginal = {0.04, 0.08, 0.65, 0.18, 0.05};
  /// P(change | initial priority) before project scaling.
  std::array<double, 5> change_probability = {0.15, 0.12, 0.08, 0.06, 0.06};
  /// When set, each project's expected change rate is spread linearly over
  /// [rate_min, rate_max] by rescaling change_probability.
  bool scale_projects = true;
  double project_rate_min = 0.05;
  double project_rate_max = 0.25;
  TransitionRows transitions = reference_transitions();
  /// Extra changes after the first: geometric with this continuation probability.
  double repeat_probability = 0.13;
  std::size_t max_changes = 3;
  double comment_rate = 0.3;  ///< per day
  double history_rate = 0.2;  ///< per day
  double burst_multiplier = 8.0;
  double burst_window_days = 2.0;
  /// Fraction of change events preceded by a burst.
  double burst_fraction = 1.0;
  /// Probability that a burst comment names the coming priority.
  double target_token_rate = 0.5;
  double mean_lifetime_days = 30.0;
  double span_days = 730.0;
  /// Bugs flagged vague carry a hedge word and a short description.
  double vague_fraction = 0.2;
  double vague_risk = 20.0;
  double volatile_reporter_fraction = 0.2;
  double volatile_risk = 3.0;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig.
  void validate() const;
  /// Per-project expected change rate.
  std::vector<double> project_rates() const;
};

struct BugTruth {
  std::string issue_key;
  std::string project_id;
  int initial = 3;
  double change_probability = 0.0;
  bool vague = false;
  bool volatile_reporter = false;
  Timestamp created_at = 0;
  Timestamp resolved_at = 0;
  std::size_t n_changes = 0;
};

struct ChangeTruth {
  std::string issue_key;
  int ordinal = 0;
  Timestamp time = 0;
  int from = 3;
  int to = 3;
  std::string author_id;
  bool burst = false;
  Timestamp burst_start = 0;
};

struct ProjectTruth {
  std::string project_id;
  double planted_rate = 0.0;
  std::size_t n_bugs = 0;
  std::size_t n_changed = 0;
};

struct NoiseTruth {
  std::string kind;  ///< "rapid_edit" or "alias"
  std::string issue_key;
  std::string author_id;
  std::vector<Timestamp> times;  ///< rapid edits: the two item times
  std::string location;          ///< alias: "initial" or "history:<index>:from|to"
  std::string alias;
  int canonical = 0;
};

struct GroundTruth {
  std::vector<ProjectTruth> projects;
  std::vector<BugTruth> bugs;
  std::vector<ChangeTruth> changes;
  std::vector<NoiseTruth> noise;

  void write_jsonl(std::ostream& out) const;
  static GroundTruth read_jsonl(std::istream& in);
};

struct SyntheticCorpus {
  std::vector<IssueRecord> issues;  ///< sorted by (project_id, issue_key)
  GroundTruth truth;
};

SyntheticCorpus generate_corpus(const CorpusConfig& config);

struct NoiseConfig {
  double rapid_edit_rate = 0.0;  ///< per bug
  double alias_rate = 0.0;       ///< per priority string
  std::uint64_t seed = 7;
};

/// Adds sub-threshold round-trip edits by fresh users and replaces priority
/// strings with aliases, logging every injection in `truth`.
std::vector<IssueRecord> inject_noise(std::vector<IssueRecord> corpus, const NoiseConfig& config, GroundTruth& truth);

/// Issue documents as JSONL, one per line, preceded by an optional meta line.
void write_issue_jsonl(const std::vector<IssueRecord>& issues, std::ostream& out, const std::string& config_hash);

}  // namespace priodrift
