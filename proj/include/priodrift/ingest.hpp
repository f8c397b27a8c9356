#pragma once

#include "priodrift/issue_model.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace priodrift {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Parsing

struct SchemaIssue {
  std::size_t document_index = 0;
  std::string issue_key;  ///< empty when the key itself is missing
  std::string message;
};

struct RemovedIssue {
  std::string issue_key;
  std::string stage;
  std::string reason;
};

struct ParseResult {
  std::vector<IssueRecord> issues;
  std::vector<SchemaIssue> errors;
  std::vector<RemovedIssue> rejected;  ///< well-formed but final status not Resolved/Closed
};

/// Maps one tracker document (flat or nested changelog layout) to an IssueRecord.
/// Throws SchemaError naming the index and the missing path.
IssueRecord parse_issue_document(const Json& doc, std::size_t index);

/// Reads JSONL. Lines starting with {"_meta": ...} and blank lines are skipped.
/// Malformed documents end up in `errors`, never silently dropped.
ParseResult parse_issue_dump(std::istream& in);
ParseResult parse_issue_dump(const std::vector<Json>& documents);

/// Inverse of parse_issue_document: flat-layout document with the current
/// priority in fields.priority and the full changelog.
Json to_document(const IssueRecord& issue);

// ---------------------------------------------------------------------------
// Correction pipeline

/// Lowercased alias → canonical priority.
using AliasTable = std::map<std::string, Priority>;
AliasTable default_alias_table();

/// Canonical name lookup via case folding, then the alias table.
std::optional<Priority> resolve_priority(std::string_view raw, const AliasTable& aliases);

struct NormalizeOutcome {
  IssueRecord issue;
  std::optional<std::string> removed_reason;
};

NormalizeOutcome normalize_priority_trail(const IssueRecord& issue, const AliasTable& aliases);

struct ShortIntervalRules {
  Timestamp threshold_seconds = 5 * 60;
};

/// Applies the reporter-window (a), round-trip (b) and merge (c) rules in
/// order and re-scans until nothing changes.
IssueRecord apply_short_interval_rules(const IssueRecord& issue, const ShortIntervalRules& rules = {});

struct BatchEditRule {
  std::size_t min_issues = 5;
  Timestamp window_seconds = 60;
};

/// (issue_key, event ordinal) pairs whose change belongs to a batch edit.
using EventKeySet = std::set<std::pair<std::string, int>>;

EventKeySet flag_batch_edits(const std::vector<IssueRecord>& issues, const BatchEditRule& rule = {});

struct CorrectionConfig {
  AliasTable aliases = default_alias_table();
  ShortIntervalRules short_interval;
  BatchEditRule batch;
  bool batch_filter = true;
};

struct CorrectionResult {
  std::vector<IssueRecord> issues;  ///< sorted by (project_id, issue_key)
  std::vector<RemovedIssue> removed;
  EventKeySet batch_events;
};

/// Status filter, normalization, short-interval rules and trail validation.
CorrectionResult correct_issues(std::vector<IssueRecord> issues, const CorrectionConfig& config = {});

// ---------------------------------------------------------------------------
// Labelled datasets

struct Phase1Row {
  std::string issue_key;
  int label = 0;
  IssueSnapshot snapshot;
};

struct Phase2Row {
  std::string issue_key;
  PriorityChangeEvent event;
  IssueSnapshot snapshot;
  Priority label = Priority::Major;
};

std::vector<Phase1Row> build_phase1_dataset(const std::vector<IssueRecord>& issues);
std::vector<Phase2Row> build_phase2_dataset(const std::vector<IssueRecord>& issues,
                                            const EventKeySet& excluded = {});

struct ProjectStats {
  std::string project_id;
  std::size_t n_bugs = 0;
  std::size_t n_bugs_with_change = 0;
  double change_probability = 0.0;
};

inline constexpr std::string_view kAllProjects = "ALL";

/// One row per project, sorted, then a corpus-total row keyed "ALL".
std::vector<ProjectStats> project_stats(const std::vector<IssueRecord>& issues);

struct SelectionCriteria {
  double min_age_years = 5.0;
  std::size_t min_revisions = 3000;
  std::size_t min_changed_bugs = 150;
};

struct ProjectSelection {
  std::string project_id;
  bool all_levels = false;    ///< C1
  bool old_enough = false;    ///< C2
  bool active_enough = false; ///< C3, needs a supplied revision count
  bool enough_changes = false;///< C4
  bool selected() const { return all_levels && old_enough && active_enough && enough_changes; }
};

std::vector<ProjectSelection> select_projects(const std::vector<IssueRecord>& issues,
                                              const std::map<std::string, std::size_t>& revisions,
                                              const SelectionCriteria& criteria = {});

// Row serialisation for phase1.jsonl / phase2.jsonl.
Json phase1_row_json(const Phase1Row& row, const std::string& project);
Json phase2_row_json(const Phase2Row& row, const std::string& project);

}  // namespace priodrift
