#include "priodrift/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>

namespace priodrift {

namespace {

std::string fold(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) out += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  return out;
}

[[noreturn]] void schema_fail(std::size_t index, const std::string& key, const std::string& path) {
  std::string where = "document " + std::to_string(index);
  if (!key.empty()) where += " (" + key + ")";
  throw Error(ErrorKind::SchemaError, where + ": missing or invalid '" + path + "'");
}

/// Trackers emit either plain strings or objects such as {"name": ...}.
std::optional<std::string> scalar_name(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_object()) {
    for (const char* k : {"name", "key", "value", "accountId", "displayName", "filename"}) {
      auto it = v.find(k);
      if (it != v.end() && it->is_string()) return it->get<std::string>();
    }
  }
  return std::nullopt;
}

std::string required_name(const Json& obj, const char* field, std::size_t index, const std::string& key,
                          const std::string& path) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) schema_fail(index, key, path);
  auto v = scalar_name(*it);
  if (!v) schema_fail(index, key, path);
  return *v;
}

std::string optional_text(const Json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  return {};
}

std::set<std::string> name_set(const Json& fields, const char* field, std::size_t index, const std::string& key,
                               const char* member = nullptr) {
  std::set<std::string> out;
  auto it = fields.find(field);
  if (it == fields.end() || it->is_null()) return out;
  if (!it->is_array()) schema_fail(index, key, std::string("fields.") + field + "[]");
  for (const Json& v : *it) {
    if (member != nullptr && v.is_object() && v.contains(member)) {
      auto name = scalar_name(v.at(member));
      if (name) out.insert(*name);
      continue;
    }
    auto name = scalar_name(v);
    if (!name) schema_fail(index, key, std::string("fields.") + field + "[]");
    out.insert(*name);
  }
  return out;
}

std::set<std::string> link_keys(const Json& fields, std::size_t index, const std::string& key) {
  std::set<std::string> out;
  auto it = fields.find("issuelinks");
  if (it == fields.end() || it->is_null()) return out;
  if (!it->is_array()) schema_fail(index, key, "fields.issuelinks[]");
  for (const Json& link : *it) {
    if (link.is_string()) {
      out.insert(link.get<std::string>());
    } else if (link.is_object()) {
      if (link.contains("key") && link["key"].is_string()) {
        out.insert(link["key"].get<std::string>());
      } else {
        for (const char* side : {"outwardIssue", "inwardIssue"}) {
          if (link.contains(side) && link[side].is_object() && link[side].contains("key")) {
            out.insert(link[side]["key"].get<std::string>());
          }
        }
      }
    }
  }
  return out;
}

Timestamp required_time(const Json& obj, const char* field, std::size_t index, const std::string& key,
                        const std::string& path) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) schema_fail(index, key, path);
  try {
    return parse_timestamp(it->get<std::string>());
  } catch (const Error&) {
    schema_fail(index, key, path);
  }
}

std::string author_of(const Json& obj, std::size_t index, const std::string& key, const std::string& path) {
  auto it = obj.find("author");
  if (it == obj.end() || it->is_null()) schema_fail(index, key, path);
  auto name = scalar_name(*it);
  if (!name) schema_fail(index, key, path);
  return *name;
}

std::string value_or_empty(const Json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return {};
  auto v = scalar_name(*it);
  return v ? *v : std::string{};
}

}  // namespace

IssueRecord parse_issue_document(const Json& doc, std::size_t index) {
  if (!doc.is_object()) schema_fail(index, "", "<document>");
  auto key_it = doc.find("key");
  if (key_it == doc.end() || !key_it->is_string()) schema_fail(index, "", "key");
  IssueRecord issue;
  issue.issue_key = key_it->get<std::string>();
  const std::string& key = issue.issue_key;

  auto fields_it = doc.find("fields");
  if (fields_it == doc.end() || !fields_it->is_object()) schema_fail(index, key, "fields");
  const Json& fields = *fields_it;
  issue.project_id = required_name(fields, "project", index, key, "fields.project");
  issue.reporter_id = required_name(fields, "reporter", index, key, "fields.reporter");
  issue.created_at = required_time(fields, "created", index, key, "fields.created");
  const std::string current_priority = required_name(fields, "priority", index, key, "fields.priority");
  const std::string status = required_name(fields, "status", index, key, "fields.status");
  if (!fields.contains("summary") || !(fields["summary"].is_string() || fields["summary"].is_null())) {
    schema_fail(index, key, "fields.summary");
  }
  issue.summary_text = optional_text(fields, "summary");
  issue.description_text = optional_text(fields, "description");
  issue.components = name_set(fields, "components", index, key);
  issue.affects_versions = name_set(fields, "versions", index, key);
  issue.fix_versions = name_set(fields, "fixVersions", index, key);
  issue.labels = name_set(fields, "labels", index, key);
  issue.attachment_names = name_set(fields, "attachment", index, key, "filename");
  issue.linked_issue_keys = link_keys(fields, index, key);

  // Comments: flat top-level array or the nested fields.comment.comments form.
  const Json* comments = nullptr;
  if (doc.contains("comment") && doc["comment"].is_array()) {
    comments = &doc["comment"];
  } else if (fields.contains("comment") && fields["comment"].is_object() && fields["comment"].contains("comments")) {
    comments = &fields["comment"]["comments"];
  }
  if (comments != nullptr) {
    for (std::size_t i = 0; i < comments->size(); ++i) {
      const Json& c = (*comments)[i];
      const std::string path = "comment[" + std::to_string(i) + "]";
      if (!c.is_object()) schema_fail(index, key, path);
      CommentRecord rec;
      rec.author_id = author_of(c, index, key, path + ".author");
      rec.timestamp = required_time(c, "created", index, key, path + ".created");
      rec.body_text = optional_text(c, "body");
      rec.body_length = rec.body_text.size();
      issue.comments.push_back(std::move(rec));
    }
  }

  if (doc.contains("changelog")) {
    const Json& log = doc["changelog"];
    if (log.is_array()) {
      for (std::size_t i = 0; i < log.size(); ++i) {
        const Json& h = log[i];
        const std::string path = "changelog[" + std::to_string(i) + "]";
        if (!h.is_object()) schema_fail(index, key, path);
        ChangeItem item;
        item.author_id = author_of(h, index, key, path + ".author");
        item.timestamp = required_time(h, "created", index, key, path + ".created");
        item.field = value_or_empty(h, "field");
        if (item.field.empty()) schema_fail(index, key, path + ".field");
        item.from_value = value_or_empty(h, "fromString");
        item.to_value = value_or_empty(h, "toString");
        issue.history.push_back(std::move(item));
      }
    } else if (log.is_object() && log.contains("histories")) {
      const Json& histories = log["histories"];
      for (std::size_t i = 0; i < histories.size(); ++i) {
        const Json& h = histories[i];
        const std::string path = "changelog.histories[" + std::to_string(i) + "]";
        const std::string author = author_of(h, index, key, path + ".author");
        const Timestamp when = required_time(h, "created", index, key, path + ".created");
        if (!h.contains("items") || !h["items"].is_array()) schema_fail(index, key, path + ".items");
        for (const Json& it : h["items"]) {
          ChangeItem item;
          item.author_id = author;
          item.timestamp = when;
          item.field = value_or_empty(it, "field");
          if (item.field.empty()) schema_fail(index, key, path + ".items[].field");
          item.from_value = value_or_empty(it, "fromString");
          item.to_value = value_or_empty(it, "toString");
          issue.history.push_back(std::move(item));
        }
      }
    } else if (!log.is_null()) {
      schema_fail(index, key, "changelog");
    }
  }
  sort_events(issue);

  for (const auto& c : issue.comments) {
    if (c.timestamp < issue.created_at) schema_fail(index, key, "comment[].created (before creation)");
  }
  for (const auto& h : issue.history) {
    if (h.timestamp < issue.created_at) schema_fail(index, key, "changelog[].created (before creation)");
  }

  issue.raw_initial_priority = current_priority;
  for (const auto& h : issue.history) {
    if (is_priority_field(h.field)) {
      issue.raw_initial_priority = h.from_value;
      break;
    }
  }
  try {
    issue.initial_priority = encode_priority(issue.raw_initial_priority);
  } catch (const Error&) {
    issue.initial_priority = Priority::Major;  // resolved or removed by normalization
  }

  const std::string folded_status = fold(status);
  if (folded_status == "resolved") {
    issue.final_status = FinalStatus::Resolved;
  } else if (folded_status == "closed") {
    issue.final_status = FinalStatus::Closed;
  } else {
    throw Error(ErrorKind::DataError, "final status '" + status + "'");
  }
  return issue;
}

namespace {

void parse_one(const Json& doc, std::size_t index, ParseResult& out) {
  try {
    out.issues.push_back(parse_issue_document(doc, index));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DataError) {
      out.rejected.push_back({doc.value("key", std::string{}), "parse", e.what()});
    } else {
      std::string key = doc.is_object() && doc.contains("key") && doc["key"].is_string() ? doc["key"].get<std::string>() : "";
      out.errors.push_back({index, key, e.what()});
    }
  }
}

}  // namespace

ParseResult parse_issue_dump(std::istream& in) {
  ParseResult out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json doc;
    try {
      doc = Json::parse(line);
    } catch (const Json::parse_error& e) {
      out.errors.push_back({index++, "", std::string("SchemaError: invalid JSON: ") + e.what()});
      continue;
    }
    if (doc.is_object() && doc.contains("_meta")) continue;
    parse_one(doc, index++, out);
  }
  return out;
}

ParseResult parse_issue_dump(const std::vector<Json>& documents) {
  ParseResult out;
  for (std::size_t i = 0; i < documents.size(); ++i) parse_one(documents[i], i, out);
  return out;
}

Json to_document(const IssueRecord& issue) {
  Json fields;
  fields["project"] = issue.project_id;
  fields["reporter"] = issue.reporter_id;
  fields["created"] = format_timestamp(issue.created_at);
  std::string current = issue.raw_initial_priority.empty() ? std::string(priority_name(issue.initial_priority))
                                                           : issue.raw_initial_priority;
  for (const auto& h : issue.history) {
    if (is_priority_field(h.field)) current = h.to_value;
  }
  fields["priority"] = current;
  fields["status"] = issue.final_status == FinalStatus::Resolved ? "Resolved" : "Closed";
  fields["summary"] = issue.summary_text;
  fields["description"] = issue.description_text;
  auto names = [](const std::set<std::string>& s) {
    Json arr = Json::array();
    for (const auto& v : s) arr.push_back(Json{{"name", v}});
    return arr;
  };
  fields["components"] = names(issue.components);
  fields["versions"] = names(issue.affects_versions);
  fields["fixVersions"] = names(issue.fix_versions);
  fields["labels"] = Json(std::vector<std::string>(issue.labels.begin(), issue.labels.end()));
  Json attachments = Json::array();
  for (const auto& a : issue.attachment_names) attachments.push_back(Json{{"filename", a}});
  fields["attachment"] = attachments;
  Json links = Json::array();
  for (const auto& k : issue.linked_issue_keys) links.push_back(Json{{"key", k}});
  fields["issuelinks"] = links;

  Json comments = Json::array();
  for (const auto& c : issue.comments) {
    comments.push_back(Json{{"author", c.author_id}, {"created", format_timestamp(c.timestamp)}, {"body", c.body_text}});
  }
  Json changelog = Json::array();
  for (const auto& h : issue.history) {
    changelog.push_back(Json{{"author", h.author_id},
                             {"created", format_timestamp(h.timestamp)},
                             {"field", h.field},
                             {"fromString", h.from_value},
                             {"toString", h.to_value}});
  }
  Json doc;
  doc["key"] = issue.issue_key;
  doc["fields"] = fields;
  doc["comment"] = comments;
  doc["changelog"] = changelog;
  return doc;
}

// ---------------------------------------------------------------------------

AliasTable default_alias_table() {
  return {
      {"urgent", Priority::Blocker},   {"highest", Priority::Blocker}, {"showstopper", Priority::Blocker},
      {"high", Priority::Critical},    {"medium", Priority::Major},    {"normal", Priority::Major},
      {"low", Priority::Minor},        {"lowest", Priority::Trivial},
  };
}

std::optional<Priority> resolve_priority(std::string_view raw, const AliasTable& aliases) {
  try {
    return encode_priority(raw);
  } catch (const Error&) {
  }
  auto it = aliases.find(fold(raw));
  if (it != aliases.end()) return it->second;
  return std::nullopt;
}

NormalizeOutcome normalize_priority_trail(const IssueRecord& issue, const AliasTable& aliases) {
  NormalizeOutcome out{issue, std::nullopt};
  auto initial = resolve_priority(issue.raw_initial_priority.empty() ? priority_name(issue.initial_priority)
                                                                     : std::string_view(issue.raw_initial_priority),
                                  aliases);
  if (!initial) {
    out.removed_reason = "unmappable priority '" + issue.raw_initial_priority + "'";
    return out;
  }
  out.issue.initial_priority = *initial;
  out.issue.raw_initial_priority = std::string(priority_name(*initial));
  for (ChangeItem& item : out.issue.history) {
    if (!is_priority_field(item.field)) continue;
    item.field = "priority";
    for (std::string* value : {&item.from_value, &item.to_value}) {
      auto p = resolve_priority(*value, aliases);
      if (!p) {
        out.removed_reason = "unmappable priority '" + *value + "'";
        return out;
      }
      *value = std::string(priority_name(*p));
    }
  }
  return out;
}

namespace {

struct TrailItem {
  ChangeItem item;
  std::size_t position;  // original index in history, for stable re-merge
};

bool rule_a(IssueRecord& issue, std::vector<TrailItem>& trail, Timestamp threshold) {
  bool changed = false;
  while (!trail.empty() && trail.front().item.author_id == issue.reporter_id &&
         trail.front().item.timestamp - issue.created_at <= threshold) {
    issue.initial_priority = encode_priority(trail.front().item.to_value);
    issue.raw_initial_priority = trail.front().item.to_value;
    trail.erase(trail.begin());
    changed = true;
  }
  return changed;
}

bool rule_b(std::vector<TrailItem>& trail, Timestamp threshold) {
  for (std::size_t i = 0; i < trail.size(); ++i) {
    for (std::size_t j = i + 1; j < trail.size(); ++j) {
      const auto& first = trail[i].item;
      const auto& cur = trail[j].item;
      if (cur.author_id != first.author_id || cur.timestamp - first.timestamp > threshold) break;
      if (cur.to_value == first.from_value) {
        trail.erase(trail.begin() + static_cast<std::ptrdiff_t>(i), trail.begin() + static_cast<std::ptrdiff_t>(j + 1));
        return true;
      }
    }
  }
  return false;
}

bool rule_c(std::vector<TrailItem>& trail, Timestamp threshold) {
  for (std::size_t i = 0; i + 1 < trail.size(); ++i) {
    auto& first = trail[i];
    auto& second = trail[i + 1];
    if (first.item.author_id != second.item.author_id) continue;
    if (second.item.timestamp - first.item.timestamp > threshold) continue;
    second.item.from_value = first.item.from_value;
    trail.erase(trail.begin() + static_cast<std::ptrdiff_t>(i));
    if (trail[i].item.from_value == trail[i].item.to_value) trail.erase(trail.begin() + static_cast<std::ptrdiff_t>(i));
    return true;
  }
  return false;
}

}  // namespace

IssueRecord apply_short_interval_rules(const IssueRecord& issue, const ShortIntervalRules& rules) {
  IssueRecord out = issue;
  std::vector<TrailItem> trail;
  std::vector<ChangeItem> others;
  std::vector<std::size_t> other_pos;
  for (std::size_t i = 0; i < issue.history.size(); ++i) {
    if (is_priority_field(issue.history[i].field)) {
      trail.push_back({issue.history[i], i});
    } else {
      others.push_back(issue.history[i]);
      other_pos.push_back(i);
    }
  }
  const Timestamp thr = rules.threshold_seconds;
  for (;;) {
    if (rule_a(out, trail, thr)) continue;
    if (rule_b(trail, thr)) continue;
    if (rule_c(trail, thr)) continue;
    break;
  }
  // Rebuild the history in original relative order; merged items keep the
  // position of their later half, so timestamps stay sorted.
  std::vector<std::pair<std::size_t, ChangeItem>> merged;
  for (std::size_t i = 0; i < others.size(); ++i) merged.emplace_back(other_pos[i], others[i]);
  for (auto& t : trail) merged.emplace_back(t.position, t.item);
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.history.clear();
  for (auto& m : merged) out.history.push_back(std::move(m.second));
  return out;
}

EventKeySet flag_batch_edits(const std::vector<IssueRecord>& issues, const BatchEditRule& rule) {
  // (author, window) → issue keys and events touched.
  std::map<std::pair<std::string, Timestamp>, std::set<std::string>> touched;
  std::map<std::pair<std::string, Timestamp>, std::vector<std::pair<std::string, int>>> events;
  for (const auto& issue : issues) {
    for (const auto& e : extract_priority_changes(issue)) {
      Timestamp bucket = e.event_time >= 0 ? e.event_time / rule.window_seconds
                                           : -((-e.event_time + rule.window_seconds - 1) / rule.window_seconds);
      auto k = std::make_pair(e.author_id, bucket);
      touched[k].insert(issue.issue_key);
      events[k].emplace_back(issue.issue_key, e.ordinal);
    }
  }
  EventKeySet flagged;
  for (const auto& [k, keys] : touched) {
    if (keys.size() >= rule.min_issues) {
      for (const auto& ev : events[k]) flagged.insert(ev);
    }
  }
  return flagged;
}

CorrectionResult correct_issues(std::vector<IssueRecord> issues, const CorrectionConfig& config) {
  CorrectionResult result;
  for (auto& issue : issues) {
    NormalizeOutcome norm = normalize_priority_trail(issue, config.aliases);
    if (norm.removed_reason) {
      result.removed.push_back({issue.issue_key, "normalize", *norm.removed_reason});
      continue;
    }
    IssueRecord corrected = apply_short_interval_rules(norm.issue, config.short_interval);
    try {
      (void)extract_priority_changes(corrected);
    } catch (const Error& e) {
      result.removed.push_back({issue.issue_key, "trail", e.what()});
      continue;
    }
    result.issues.push_back(std::move(corrected));
  }
  std::sort(result.issues.begin(), result.issues.end(), [](const IssueRecord& a, const IssueRecord& b) {
    return std::tie(a.project_id, a.issue_key) < std::tie(b.project_id, b.issue_key);
  });
  if (config.batch_filter) result.batch_events = flag_batch_edits(result.issues, config.batch);
  return result;
}

std::vector<Phase1Row> build_phase1_dataset(const std::vector<IssueRecord>& issues) {
  std::vector<Phase1Row> rows;
  rows.reserve(issues.size());
  for (const auto& issue : issues) {
    Phase1Row row;
    row.issue_key = issue.issue_key;
    row.label = extract_priority_changes(issue).empty() ? 0 : 1;
    row.snapshot = snapshot_at(issue, issue.created_at);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Phase2Row> build_phase2_dataset(const std::vector<IssueRecord>& issues, const EventKeySet& excluded) {
  std::vector<Phase2Row> rows;
  for (const auto& issue : issues) {
    for (const auto& e : extract_priority_changes(issue)) {
      if (excluded.count({issue.issue_key, e.ordinal}) != 0) continue;
      Phase2Row row;
      row.issue_key = issue.issue_key;
      row.event = e;
      row.snapshot = snapshot_at(issue, e.event_time);
      row.label = e.new_priority;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ProjectStats> project_stats(const std::vector<IssueRecord>& issues) {
  std::map<std::string, ProjectStats> by_project;
  ProjectStats total{std::string(kAllProjects)};
  for (const auto& issue : issues) {
    auto& s = by_project[issue.project_id];
    s.project_id = issue.project_id;
    const bool changed = !extract_priority_changes(issue).empty();
    ++s.n_bugs;
    ++total.n_bugs;
    if (changed) {
      ++s.n_bugs_with_change;
      ++total.n_bugs_with_change;
    }
  }
  std::vector<ProjectStats> out;
  for (auto& [_, s] : by_project) out.push_back(s);
  out.push_back(total);
  for (auto& s : out) {
    s.change_probability = s.n_bugs == 0 ? 0.0 : static_cast<double>(s.n_bugs_with_change) / static_cast<double>(s.n_bugs);
  }
  return out;
}

std::vector<ProjectSelection> select_projects(const std::vector<IssueRecord>& issues,
                                              const std::map<std::string, std::size_t>& revisions,
                                              const SelectionCriteria& criteria) {
  struct Acc {
    std::set<Priority> levels;
    Timestamp first = 0, last = 0;
    bool any = false;
    std::size_t changed = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& issue : issues) {
    Acc& a = acc[issue.project_id];
    a.levels.insert(issue.initial_priority);
    for (const auto& e : extract_priority_changes(issue)) a.levels.insert(e.new_priority);
    if (!a.any || issue.created_at < a.first) a.first = issue.created_at;
    if (!a.any || issue.created_at > a.last) a.last = issue.created_at;
    a.any = true;
    if (!extract_priority_changes(issue).empty()) ++a.changed;
  }
  std::vector<ProjectSelection> out;
  for (const auto& [project, a] : acc) {
    ProjectSelection s;
    s.project_id = project;
    s.all_levels = a.levels.size() == kAllPriorities.size();
    s.old_enough = to_days(static_cast<double>(a.last - a.first)) / 365.25 > criteria.min_age_years;
    auto rev = revisions.find(project);
    s.active_enough = rev != revisions.end() && rev->second > criteria.min_revisions;
    s.enough_changes = a.changed >= criteria.min_changed_bugs;
    out.push_back(s);
  }
  return out;
}

Json phase1_row_json(const Phase1Row& row, const std::string& project) {
  return Json{{"issue_key", row.issue_key},
              {"project", project},
              {"cut_time", row.snapshot.cut_time},
              {"label", row.label}};
}

Json phase2_row_json(const Phase2Row& row, const std::string& project) {
  return Json{{"issue_key", row.issue_key},
              {"project", project},
              {"cut_time", row.snapshot.cut_time},
              {"ordinal", row.event.ordinal},
              {"old", priority_name(row.event.old_priority)},
              {"new", priority_name(row.event.new_priority)},
              {"label", code(row.label)}};
}

}  // namespace priodrift
