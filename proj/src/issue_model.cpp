#include "priodrift/issue_model.hpp"

#include <algorithm>
#include <cctype>

namespace priodrift {

namespace {

std::string fold(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) out += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  return out;
}

}  // namespace

Priority priority_from_code(int c) {
  if (c < 1 || c > 5) throw Error(ErrorKind::UnknownPriority, "priority code " + std::to_string(c));
  return static_cast<Priority>(c);
}

Priority encode_priority(std::string_view name) {
  const std::string key = fold(name);
  for (Priority p : kAllPriorities) {
    if (fold(priority_name(p)) == key) return p;
  }
  throw Error(ErrorKind::UnknownPriority, "'" + std::string(name) + "'");
}

std::string_view priority_name(Priority p) {
  switch (p) {
    case Priority::Blocker: return "Blocker";
    case Priority::Critical: return "Critical";
    case Priority::Major: return "Major";
    case Priority::Minor: return "Minor";
    case Priority::Trivial: return "Trivial";
  }
  return "Major";
}

bool is_field(std::string_view field, std::string_view name) { return fold(field) == fold(name); }

bool is_priority_field(std::string_view field) { return is_field(field, kPriorityField); }

std::vector<PriorityChangeEvent> extract_priority_changes(const IssueRecord& issue) {
  std::vector<PriorityChangeEvent> events;
  Priority current = issue.initial_priority;
  for (const ChangeItem& item : issue.history) {
    if (!is_priority_field(item.field)) continue;
    const Priority from = encode_priority(item.from_value);
    const Priority to = encode_priority(item.to_value);
    if (from != current) {
      throw Error(ErrorKind::InconsistentTrail,
                  issue.issue_key + ": change at " + format_timestamp(item.timestamp) + " starts from " +
                      std::string(priority_name(from)) + " but trail implies " +
                      std::string(priority_name(current)));
    }
    current = to;
    if (from == to) continue;
    PriorityChangeEvent e;
    e.issue_key = issue.issue_key;
    e.event_time = item.timestamp;
    e.old_priority = from;
    e.new_priority = to;
    e.author_id = item.author_id;
    e.ordinal = static_cast<int>(events.size()) + 1;
    events.push_back(std::move(e));
  }
  return events;
}

Priority priority_as_of(const IssueRecord& issue, Timestamp t) {
  Priority current = issue.initial_priority;
  for (const ChangeItem& item : issue.history) {
    if (item.timestamp >= t) break;
    if (is_priority_field(item.field)) current = encode_priority(item.to_value);
  }
  return current;
}

IssueSnapshot snapshot_at(const IssueRecord& issue, Timestamp cut_time) {
  if (cut_time < issue.created_at) {
    throw Error(ErrorKind::CutBeforeCreation, issue.issue_key + ": cut " + format_timestamp(cut_time) +
                                                  " precedes creation " + format_timestamp(issue.created_at));
  }
  IssueSnapshot snap;
  snap.cut_time = cut_time;
  snap.base = issue;
  snap.base.comments.clear();
  snap.base.history.clear();
  for (const CommentRecord& c : issue.comments) {
    if (c.timestamp < cut_time) snap.base.comments.push_back(c);
  }
  for (const ChangeItem& h : issue.history) {
    if (h.timestamp < cut_time) snap.base.history.push_back(h);
  }
  snap.current_priority = priority_as_of(issue, cut_time);

  // The first change at or after the cut carries the value that was current at the cut.
  snap.current_summary_text = issue.summary_text;
  snap.current_description_text = issue.description_text;
  bool summary_done = false, description_done = false;
  for (const ChangeItem& h : issue.history) {
    if (h.timestamp < cut_time) continue;
    if (!summary_done && is_field(h.field, "summary")) {
      snap.current_summary_text = h.from_value;
      summary_done = true;
      snap.text_reconstructed = true;
    } else if (!description_done && is_field(h.field, "description")) {
      snap.current_description_text = h.from_value;
      description_done = true;
      snap.text_reconstructed = true;
    }
  }
  snap.base.summary_text = snap.current_summary_text;
  snap.base.description_text = snap.current_description_text;
  return snap;
}

void sort_events(IssueRecord& issue) {
  std::stable_sort(issue.comments.begin(), issue.comments.end(),
                   [](const CommentRecord& a, const CommentRecord& b) { return a.timestamp < b.timestamp; });
  std::stable_sort(issue.history.begin(), issue.history.end(),
                   [](const ChangeItem& a, const ChangeItem& b) { return a.timestamp < b.timestamp; });
}

}  // namespace priodrift
