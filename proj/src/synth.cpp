#include "priodrift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace priodrift {

TransitionRows reference_transitions() {
  const double counts[5][5] = {{0, 1019, 1480, 298, 29},
                               {1419, 0, 1789, 370, 19},
                               {3755, 4266, 0, 4383, 342},
                               {209, 312, 988, 0, 168},
                               {15, 15, 72, 267, 0}};
  TransitionRows rows{};
  for (std::size_t i = 0; i < 5; ++i) {
    double total = 0.0;
    for (double c : counts[i]) total += c;
    for (std::size_t j = 0; j < 5; ++j) rows[i][j] = counts[i][j] / total;
  }
  return rows;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, message);
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void CorpusConfig::validate() const {
  require(n_projects >= 1, "n_projects must be at least 1");
  require(bugs_per_project >= 1, "bugs_per_project must be at least 1");
  require(reporters_per_project >= 1, "reporters_per_project must be at least 1");
  require(developers_per_project >= 1, "developers_per_project must be at least 1");
  double marginal = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    require(is_probability(initial_marginal[i]), "initial_marginal entries must lie in [0,1]");
    require(is_probability(change_probability[i]), "change_probability entries must lie in [0,1]");
    marginal += initial_marginal[i];
    double row = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      require(is_probability(transitions[i][j]), "transition entries must lie in [0,1]");
      row += transitions[i][j];
    }
    require(transitions[i][i] == 0.0, "transition diagonal must be 0");
    require(std::abs(row - 1.0) < 1e-6, "transition row " + std::to_string(i + 1) + " must sum to 1");
  }
  require(std::abs(marginal - 1.0) < 1e-6, "initial_marginal must sum to 1");
  require(!scale_projects || (is_probability(project_rate_min) && is_probability(project_rate_max) &&
                              project_rate_min <= project_rate_max),
          "project rates must satisfy 0 <= min <= max <= 1");
  require(is_probability(repeat_probability) && repeat_probability < 1.0, "repeat_probability must lie in [0,1)");
  require(max_changes >= 1, "max_changes must be at least 1");
  for (double r : {comment_rate, history_rate, burst_multiplier, burst_window_days}) {
    require(std::isfinite(r) && r >= 0.0, "rates and burst parameters must be non-negative");
  }
  require(mean_lifetime_days > 0.0 && span_days > 0.0, "lifetime and span must be positive");
  for (double p : {burst_fraction, target_token_rate, vague_fraction, volatile_reporter_fraction}) {
    require(is_probability(p), "fractions must lie in [0,1]");
  }
  require(vague_risk > 0.0 && volatile_risk > 0.0, "risk multipliers must be positive");
}

std::vector<double> CorpusConfig::project_rates() const {
  std::vector<double> rates(n_projects);
  double base = 0.0;
  for (std::size_t i = 0; i < 5; ++i) base += initial_marginal[i] * change_probability[i];
  for (std::size_t p = 0; p < n_projects; ++p) {
    if (!scale_projects) {
      rates[p] = base;
    } else if (n_projects == 1) {
      rates[p] = 0.5 * (project_rate_min + project_rate_max);
    } else {
      rates[p] = project_rate_min +
                 (project_rate_max - project_rate_min) * static_cast<double>(p) / static_cast<double>(n_projects - 1);
    }
  }
  return rates;
}

namespace {

constexpr Timestamp kOrigin = 1420070400;  // 2015-01-01T00:00:00Z
constexpr Timestamp kHour = 3600;

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "broker",  "queue",   "consumer", "producer", "session",  "connection", "timeout", "thread",  "pool",
      "config",  "startup", "shutdown", "memory",   "leak",     "index",      "query",   "cache",   "storage",
      "network", "socket",  "client",   "server",   "parser",   "schema",     "message", "topic",   "partition",
      "replica", "leader",  "offset",   "commit",   "rollback", "transaction", "lock",   "deadlock", "null",
      "pointer", "crash",   "error",    "warning",  "log",      "metric",     "plugin",  "build",   "test",
      "upgrade", "version", "docs",     "javadoc",  "api"};
  return words;
}

const std::vector<std::string>& history_fields() {
  static const std::vector<std::string> fields = {"assignee", "labels", "Component", "Fix Version", "environment"};
  return fields;
}

const std::array<std::string, 5>& target_tokens() {
  static const std::array<std::string, 5> tokens = {"escalateblocker", "escalatecritical", "settlemajor",
                                                    "relaxminor", "relaxtrivial"};
  return tokens;
}

const std::string kHedgeWord = "sometimes";

std::string words(Rng& rng, std::size_t n) {
  const auto& v = vocabulary();
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += v[rng.index(v.size())];
  }
  return out;
}

int draw_category(Rng& rng, const std::array<double, 5>& weights) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < 5; ++i) {
    if (weights[static_cast<std::size_t>(i)] <= 0.0) continue;
    last = i;
    acc += weights[static_cast<std::size_t>(i)];
    if (u < acc) return i;
  }
  return last;
}

/// Poisson arrivals at `rate_per_day` on [from, to).
std::vector<Timestamp> arrivals(Rng& rng, double rate_per_day, Timestamp from, Timestamp to) {
  std::vector<Timestamp> out;
  if (rate_per_day <= 0.0 || to <= from) return out;
  const double rate = rate_per_day / kSecondsPerDay;
  double t = static_cast<double>(from);
  while (true) {
    t += rng.exponential(rate);
    if (t >= static_cast<double>(to)) break;
    out.push_back(static_cast<Timestamp>(t));
  }
  return out;
}

struct Window {
  Timestamp from, to;
  int target;
};

/// Baseline process with the burst multiplier applied inside the windows.
std::vector<std::pair<Timestamp, int>> modulated(Rng& rng, double rate, double multiplier, Timestamp from, Timestamp to,
                                                 const std::vector<Window>& windows) {
  auto window_of = [&](Timestamp t) {
    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (t >= windows[w].from && t < windows[w].to) return static_cast<int>(w);
    }
    return -1;
  };
  std::vector<std::pair<Timestamp, int>> out;
  for (Timestamp t : arrivals(rng, rate, from, to)) {
    const int w = window_of(t);
    if (w >= 0 && multiplier < 1.0 && rng.uniform() >= multiplier) continue;
    out.emplace_back(t, w);
  }
  if (multiplier > 1.0) {
    for (std::size_t w = 0; w < windows.size(); ++w) {
      for (Timestamp t : arrivals(rng, rate * (multiplier - 1.0), windows[w].from, windows[w].to)) {
        out.emplace_back(t, static_cast<int>(w));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ProjectSetup {
  std::string id;
  double scale = 1.0;
  double rate = 0.0;
  std::vector<std::string> reporters;
  std::vector<bool> volatile_reporter;
  std::vector<std::string> developers;
  std::vector<Timestamp> created;
};

struct BugOutput {
  IssueRecord issue;
  BugTruth truth;
  std::vector<ChangeTruth> changes;
};

BugOutput generate_bug(const CorpusConfig& c, const ProjectSetup& project, std::size_t index, double risk_norm) {
  BugOutput out;
  IssueRecord& issue = out.issue;
  issue.project_id = project.id;
  issue.issue_key = project.id + "-" + std::to_string(index + 1);
  Rng rng(derive_seed(c.seed, issue.issue_key));

  issue.created_at = project.created[index];
  const int initial = draw_category(rng, c.initial_marginal) + 1;
  issue.initial_priority = priority_from_code(initial);
  issue.raw_initial_priority = std::string(priority_name(issue.initial_priority));
  const std::size_t reporter = rng.index(project.reporters.size());
  issue.reporter_id = project.reporters[reporter];
  const bool vague = rng.uniform() < c.vague_fraction;
  const bool volatile_rep = project.volatile_reporter[reporter];
  issue.final_status = rng.uniform() < 0.6 ? FinalStatus::Resolved : FinalStatus::Closed;

  double risk = (vague ? c.vague_risk : 1.0) * (volatile_rep ? c.volatile_risk : 1.0) / risk_norm;
  const double p_change = std::clamp(c.change_probability[static_cast<std::size_t>(initial - 1)] * project.scale * risk, 0.0, 1.0);
  const bool changed = rng.uniform() < p_change;
  std::size_t n_changes = 0;
  if (changed) {
    n_changes = 1;
    while (n_changes < c.max_changes && rng.uniform() < c.repeat_probability) ++n_changes;
  }

  auto lifetime = static_cast<Timestamp>((1.0 + rng.exponential(1.0 / c.mean_lifetime_days)) * kSecondsPerDay);
  lifetime = std::max<Timestamp>(lifetime, 6 * kHour + static_cast<Timestamp>(n_changes) * 2 * kHour + kHour);
  Timestamp resolved = issue.created_at + lifetime;

  // Change times: uniform after a six hour grace period, at least an hour apart.
  std::vector<Timestamp> change_times;
  for (std::size_t k = 0; k < n_changes; ++k) {
    change_times.push_back(issue.created_at + 6 * kHour +
                           static_cast<Timestamp>(rng.uniform() * static_cast<double>(lifetime - 7 * kHour)));
  }
  std::sort(change_times.begin(), change_times.end());
  for (std::size_t k = 1; k < change_times.size(); ++k) {
    change_times[k] = std::max(change_times[k], change_times[k - 1] + kHour);
  }
  if (!change_times.empty()) resolved = std::max(resolved, change_times.back() + kHour);

  std::vector<Window> windows;
  int current = initial;
  const auto burst_seconds = static_cast<Timestamp>(c.burst_window_days * kSecondsPerDay);
  std::vector<ChangeItem> priority_items;
  for (std::size_t k = 0; k < n_changes; ++k) {
    const int target = draw_category(rng, c.transitions[static_cast<std::size_t>(current - 1)]) + 1;
    ChangeTruth ct;
    ct.issue_key = issue.issue_key;
    ct.ordinal = static_cast<int>(k) + 1;
    ct.time = change_times[k];
    ct.from = current;
    ct.to = target;
    ct.author_id = project.developers[rng.index(project.developers.size())];
    ct.burst = rng.uniform() < c.burst_fraction;
    const Timestamp boundary = k == 0 ? issue.created_at : change_times[k - 1];
    ct.burst_start = std::max(boundary, ct.time - burst_seconds);
    if (ct.burst) windows.push_back({ct.burst_start, ct.time, target});
    priority_items.push_back({ct.author_id, ct.time, std::string(kPriorityField),
                              std::string(priority_name(priority_from_code(current))),
                              std::string(priority_name(priority_from_code(target)))});
    out.changes.push_back(std::move(ct));
    current = target;
  }

  const auto& tokens = target_tokens();
  for (const auto& [t, w] : modulated(rng, c.comment_rate, c.burst_multiplier, issue.created_at, resolved, windows)) {
    CommentRecord cm;
    cm.timestamp = t;
    cm.author_id = rng.uniform() < 0.3 ? issue.reporter_id : project.developers[rng.index(project.developers.size())];
    cm.body_text = words(rng, 3 + rng.index(25));
    if (w >= 0 && rng.uniform() < c.target_token_rate) {
      cm.body_text += ' ' + tokens[static_cast<std::size_t>(windows[static_cast<std::size_t>(w)].target - 1)];
    }
    cm.body_length = cm.body_text.size();
    issue.comments.push_back(std::move(cm));
  }
  const auto& fields = history_fields();
  for (const auto& [t, w] : modulated(rng, c.history_rate, c.burst_multiplier, issue.created_at, resolved, windows)) {
    ChangeItem item;
    item.timestamp = t;
    item.author_id = project.developers[rng.index(project.developers.size())];
    item.field = fields[rng.index(fields.size())];
    item.from_value = "v" + std::to_string(rng.index(10));
    item.to_value = "v" + std::to_string(rng.index(10));
    issue.history.push_back(std::move(item));
  }
  for (auto& item : priority_items) issue.history.push_back(std::move(item));
  issue.history.push_back({project.developers[rng.index(project.developers.size())], resolved, "status", "Open",
                           issue.final_status == FinalStatus::Resolved ? "Resolved" : "Closed"});
  sort_events(issue);

  issue.summary_text = words(rng, 4 + rng.index(6));
  if (vague) issue.summary_text += ' ' + kHedgeWord;
  issue.description_text = vague ? words(rng, 3 + rng.index(6)) : words(rng, 20 + rng.index(40));
  issue.components.insert("comp" + std::to_string(rng.index(8)));
  const auto version = static_cast<std::size_t>(static_cast<double>(issue.created_at - kOrigin) / (c.span_days * kSecondsPerDay) * 10.0);
  issue.affects_versions.insert("1." + std::to_string(std::min<std::size_t>(version, 9)));
  if (rng.uniform() < 0.5) issue.fix_versions.insert("1." + std::to_string(std::min<std::size_t>(version + 1, 10)));
  if (rng.uniform() < 0.3) issue.labels.insert("label" + std::to_string(rng.index(6)));
  if (rng.uniform() < 0.1) issue.attachment_names.insert("patch" + std::to_string(rng.index(40)) + ".diff");
  if (index > 0 && rng.uniform() < 0.1) {
    issue.linked_issue_keys.insert(project.id + "-" + std::to_string(rng.index(index) + 1));
  }

  BugTruth& bt = out.truth;
  bt.issue_key = issue.issue_key;
  bt.project_id = project.id;
  bt.initial = initial;
  bt.change_probability = p_change;
  bt.vague = vague;
  bt.volatile_reporter = volatile_rep;
  bt.created_at = issue.created_at;
  bt.resolved_at = resolved;
  bt.n_changes = n_changes;
  return out;
}

}  // namespace

SyntheticCorpus generate_corpus(const CorpusConfig& config) {
  config.validate();
  const std::vector<double> rates = config.project_rates();
  double base = 0.0;
  for (std::size_t i = 0; i < 5; ++i) base += config.initial_marginal[i] * config.change_probability[i];
  const double risk_norm =
      (config.vague_fraction * config.vague_risk + 1.0 - config.vague_fraction) *
      (config.volatile_reporter_fraction * config.volatile_risk + 1.0 - config.volatile_reporter_fraction);

  SyntheticCorpus corpus;
  for (std::size_t p = 0; p < config.n_projects; ++p) {
    ProjectSetup project;
    project.id = "SYN" + std::to_string(p + 1);
    project.rate = rates[p];
    project.scale = config.scale_projects ? (base > 0.0 ? rates[p] / base : 0.0) : 1.0;
    Rng rng(derive_seed(config.seed, "project/" + project.id));
    for (std::size_t r = 0; r < config.reporters_per_project; ++r) {
      project.reporters.push_back(project.id + "-rep" + std::to_string(r));
      project.volatile_reporter.push_back(rng.uniform() < config.volatile_reporter_fraction);
    }
    for (std::size_t d = 0; d < config.developers_per_project; ++d) {
      project.developers.push_back(project.id + "-dev" + std::to_string(d));
    }
    for (std::size_t b = 0; b < config.bugs_per_project; ++b) {
      project.created.push_back(kOrigin + static_cast<Timestamp>(rng.uniform() * config.span_days * kSecondsPerDay));
    }
    std::sort(project.created.begin(), project.created.end());

    std::vector<BugOutput> bugs(config.bugs_per_project);
    parallel_for(bugs.size(), [&](std::size_t b) { bugs[b] = generate_bug(config, project, b, risk_norm); });

    ProjectTruth pt{project.id, project.rate, bugs.size(), 0};
    for (auto& b : bugs) {
      if (b.truth.n_changes > 0) ++pt.n_changed;
      corpus.issues.push_back(std::move(b.issue));
      corpus.truth.bugs.push_back(std::move(b.truth));
      for (auto& ch : b.changes) corpus.truth.changes.push_back(std::move(ch));
    }
    corpus.truth.projects.push_back(pt);
  }
  std::vector<std::size_t> order(corpus.issues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = corpus.issues[a];
    const auto& y = corpus.issues[b];
    return std::tie(x.project_id, x.issue_key) < std::tie(y.project_id, y.issue_key);
  });
  std::vector<IssueRecord> issues;
  std::vector<BugTruth> truths;
  for (std::size_t i : order) {
    issues.push_back(std::move(corpus.issues[i]));
    truths.push_back(std::move(corpus.truth.bugs[i]));
  }
  corpus.issues = std::move(issues);
  corpus.truth.bugs = std::move(truths);
  std::stable_sort(corpus.truth.changes.begin(), corpus.truth.changes.end(), [](const ChangeTruth& a, const ChangeTruth& b) {
    return std::tie(a.issue_key, a.ordinal) < std::tie(b.issue_key, b.ordinal);
  });
  return corpus;
}

// ---------------------------------------------------------------------------
// Noise

namespace {

const std::vector<std::string>& aliases_for(Priority p) {
  static const std::array<std::vector<std::string>, 5> table = {
      std::vector<std::string>{"urgent", "highest", "showstopper", " BLOCKER "},
      std::vector<std::string>{"high", " critical"},
      std::vector<std::string>{"medium", "normal", "MAJOR"},
      std::vector<std::string>{"low", "minor "},
      std::vector<std::string>{"lowest", "TRIVIAL"}};
  return table[slot(p)];
}

bool clear_of_priority_items(const IssueRecord& issue, Timestamp from, Timestamp to, Timestamp margin) {
  for (const auto& h : issue.history) {
    if (is_priority_field(h.field) && h.timestamp > from - margin && h.timestamp < to + margin) return false;
  }
  return true;
}

}  // namespace

std::vector<IssueRecord> inject_noise(std::vector<IssueRecord> corpus, const NoiseConfig& config, GroundTruth& truth) {
  if (config.rapid_edit_rate <= 0.0 && config.alias_rate <= 0.0) return corpus;
  for (auto& issue : corpus) {
    Rng rng(derive_seed(config.seed, issue.issue_key));
    Timestamp end = issue.created_at;
    for (const auto& h : issue.history) end = std::max(end, h.timestamp);
    if (config.rapid_edit_rate > 0.0 && rng.uniform() < config.rapid_edit_rate && end - issue.created_at > 3 * kHour) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const Timestamp t = issue.created_at + kHour +
                            static_cast<Timestamp>(rng.uniform() * static_cast<double>(end - issue.created_at - 2 * kHour));
        const Timestamp back = t + 30 + static_cast<Timestamp>(rng.index(240));
        if (!clear_of_priority_items(issue, t, back, 10 * 60)) continue;
        const Priority p = priority_as_of(issue, t);
        Priority q = p;
        while (q == p) q = priority_from_code(static_cast<int>(rng.index(5)) + 1);
        const std::string author = "noise-" + issue.issue_key;
        issue.history.push_back({author, t, std::string(kPriorityField), std::string(priority_name(p)),
                                 std::string(priority_name(q))});
        issue.history.push_back({author, back, std::string(kPriorityField), std::string(priority_name(q)),
                                 std::string(priority_name(p))});
        sort_events(issue);
        NoiseTruth nt;
        nt.kind = "rapid_edit";
        nt.issue_key = issue.issue_key;
        nt.author_id = author;
        nt.times = {t, back};
        truth.noise.push_back(std::move(nt));
        break;
      }
    }
    if (config.alias_rate > 0.0) {
      auto maybe_alias = [&](std::string& value, const std::string& location) {
        if (rng.uniform() >= config.alias_rate) return;
        const Priority canonical = encode_priority(value);
        const auto& options = aliases_for(canonical);
        value = options[rng.index(options.size())];
        truth.noise.push_back({"alias", issue.issue_key, "", {}, location, value, code(canonical)});
      };
      bool has_priority_items = false;
      for (std::size_t i = 0; i < issue.history.size(); ++i) {
        auto& h = issue.history[i];
        if (!is_priority_field(h.field)) continue;
        if (!has_priority_items) {
          has_priority_items = true;
          maybe_alias(h.from_value, "history:" + std::to_string(i) + ":from");
          issue.raw_initial_priority = h.from_value;
        }
        maybe_alias(h.to_value, "history:" + std::to_string(i) + ":to");
      }
      if (!has_priority_items) maybe_alias(issue.raw_initial_priority, "initial");
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Serialisation

void GroundTruth::write_jsonl(std::ostream& out) const {
  for (const auto& p : projects) {
    out << Json{{"type", "project"}, {"project", p.project_id}, {"planted_rate", p.planted_rate},
                {"n_bugs", p.n_bugs}, {"n_changed", p.n_changed}}.dump()
        << '\n';
  }
  for (const auto& b : bugs) {
    out << Json{{"type", "bug"},
                {"issue_key", b.issue_key},
                {"project", b.project_id},
                {"initial", b.initial},
                {"change_probability", b.change_probability},
                {"vague", b.vague},
                {"volatile_reporter", b.volatile_reporter},
                {"created", b.created_at},
                {"resolved", b.resolved_at},
                {"n_changes", b.n_changes}}
               .dump()
        << '\n';
  }
  for (const auto& c : changes) {
    out << Json{{"type", "change"}, {"issue_key", c.issue_key}, {"ordinal", c.ordinal}, {"time", c.time},
                {"from", c.from}, {"to", c.to}, {"author", c.author_id}, {"burst", c.burst},
                {"burst_start", c.burst_start}}
               .dump()
        << '\n';
  }
  for (const auto& n : noise) {
    out << Json{{"type", "noise"}, {"kind", n.kind}, {"issue_key", n.issue_key}, {"author", n.author_id},
                {"times", n.times}, {"location", n.location}, {"alias", n.alias}, {"canonical", n.canonical}}
               .dump()
        << '\n';
  }
}

GroundTruth GroundTruth::read_jsonl(std::istream& in) {
  GroundTruth g;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::SchemaError, "groundtruth line " + std::to_string(number) + ": " + e.what());
    }
    if (j.contains("_meta")) continue;
    const std::string type = j.value("type", "");
    if (type == "project") {
      g.projects.push_back({j.at("project"), j.at("planted_rate"), j.at("n_bugs"), j.at("n_changed")});
    } else if (type == "bug") {
      BugTruth b;
      b.issue_key = j.at("issue_key");
      b.project_id = j.at("project");
      b.initial = j.at("initial");
      b.change_probability = j.at("change_probability");
      b.vague = j.at("vague");
      b.volatile_reporter = j.at("volatile_reporter");
      b.created_at = j.at("created");
      b.resolved_at = j.at("resolved");
      b.n_changes = j.at("n_changes");
      g.bugs.push_back(std::move(b));
    } else if (type == "change") {
      ChangeTruth c;
      c.issue_key = j.at("issue_key");
      c.ordinal = j.at("ordinal");
      c.time = j.at("time");
      c.from = j.at("from");
      c.to = j.at("to");
      c.author_id = j.at("author");
      c.burst = j.at("burst");
      c.burst_start = j.at("burst_start");
      g.changes.push_back(std::move(c));
    } else if (type == "noise") {
      NoiseTruth n;
      n.kind = j.at("kind");
      n.issue_key = j.at("issue_key");
      n.author_id = j.at("author");
      n.times = j.at("times").get<std::vector<Timestamp>>();
      n.location = j.at("location");
      n.alias = j.at("alias");
      n.canonical = j.at("canonical");
      g.noise.push_back(std::move(n));
    } else {
      throw Error(ErrorKind::SchemaError, "groundtruth line " + std::to_string(number) + ": unknown type '" + type + "'");
    }
  }
  return g;
}

void write_issue_jsonl(const std::vector<IssueRecord>& issues, std::ostream& out, const std::string& config_hash) {
  if (!config_hash.empty()) out << Json{{"_meta", {{"config_hash", config_hash}}}}.dump() << '\n';
  for (const auto& issue : issues) out << to_document(issue).dump() << '\n';
}

}  // namespace priodrift
