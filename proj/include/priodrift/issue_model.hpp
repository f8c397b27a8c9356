#pragma once

#include "priodrift/core.hpp"

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace priodrift {

/// Five-level urgency scale. Smaller code means more urgent.
enum class Priority : int { Blocker = 1, Critical = 2, Major = 3, Minor = 4, Trivial = 5 };

inline constexpr std::array<Priority, 5> kAllPriorities = {
    Priority::Blocker, Priority::Critical, Priority::Major, Priority::Minor, Priority::Trivial};

inline int code(Priority p) { return static_cast<int>(p); }
/// 0-based position for array indexing.
inline std::size_t slot(Priority p) { return static_cast<std::size_t>(code(p) - 1); }
Priority priority_from_code(int code);

/// Case-insensitive, whitespace-trimmed lookup of the canonical names.
Priority encode_priority(std::string_view name);
std::string_view priority_name(Priority p);

enum class FinalStatus { Resolved, Closed };

struct CommentRecord {
  std::string author_id;
  Timestamp timestamp = 0;
  std::size_t body_length = 0;
  std::string body_text;
};

struct ChangeItem {
  std::string author_id;
  Timestamp timestamp = 0;
  std::string field;
  std::string from_value;
  std::string to_value;
};

inline constexpr std::string_view kPriorityField = "priority";

/// True for the priority field regardless of tracker capitalization.
bool is_priority_field(std::string_view field);
bool is_field(std::string_view field, std::string_view name);

struct IssueRecord {
  std::string project_id;
  std::string issue_key;
  std::string reporter_id;
  Timestamp created_at = 0;
  Priority initial_priority = Priority::Major;
  /// Priority string as ingested, before alias normalization.
  std::string raw_initial_priority;
  FinalStatus final_status = FinalStatus::Resolved;
  std::string summary_text;
  std::string description_text;
  std::set<std::string> components;
  std::set<std::string> affects_versions;
  std::set<std::string> fix_versions;
  std::set<std::string> labels;
  std::set<std::string> attachment_names;
  std::set<std::string> linked_issue_keys;
  std::vector<CommentRecord> comments;
  std::vector<ChangeItem> history;
};

struct PriorityChangeEvent {
  std::string issue_key;
  Timestamp event_time = 0;
  Priority old_priority = Priority::Major;
  Priority new_priority = Priority::Major;
  std::string author_id;
  int ordinal = 0;
};

/// Leakage-safe view of an issue: nothing at or after `cut_time` is visible.
struct IssueSnapshot {
  IssueRecord base;  ///< comments/history already truncated to the prefix before cut_time
  Timestamp cut_time = 0;
  Priority current_priority = Priority::Major;
  std::string current_summary_text;
  std::string current_description_text;
  /// Set when a text field was rolled back through a later change item.
  bool text_reconstructed = false;

  const std::vector<CommentRecord>& comments_before() const { return base.comments; }
  const std::vector<ChangeItem>& history_before() const { return base.history; }
};

std::vector<PriorityChangeEvent> extract_priority_changes(const IssueRecord& issue);

IssueSnapshot snapshot_at(const IssueRecord& issue, Timestamp cut_time);

/// Priority in effect just before `t` (changes at exactly `t` are not applied).
Priority priority_as_of(const IssueRecord& issue, Timestamp t);

/// Sorts comments and history by timestamp (stable).
void sort_events(IssueRecord& issue);

}  // namespace priodrift
