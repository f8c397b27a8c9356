#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <thread>

using namespace priodrift;
using namespace priodrift::testing;

namespace {

/// In-memory search endpoint with scripted failures and total drift.
class FakeTracker : public Transport {
 public:
  explicit FakeTracker(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      IssueRecord issue = make_issue("F-" + std::to_string(i + 1), 1'400'000'000 + static_cast<Timestamp>(i));
      add_resolution(issue, 1'400'100'000);
      docs.push_back(to_document(issue));
    }
  }

  HttpResponse get(const std::string& path, const QueryParams& params) override {
    ++calls;
    last_path = path;
    for (const auto& [k, v] : params) last_params[k] = v;
    if (!failures.empty()) {
      const int status = failures.front();
      failures.erase(failures.begin());
      return {status, "busy"};
    }
    const std::size_t start = std::stoul(last_params["startAt"]);
    const std::size_t size = std::stoul(last_params["maxResults"]);
    std::size_t total = docs.size();
    if (drift_pages > 0) {
      --drift_pages;
      total += static_cast<std::size_t>(calls);  // a different total on every call
    }
    Json issues = Json::array();
    for (std::size_t i = start; i < std::min(docs.size(), start + size); ++i) issues.push_back(docs[i]);
    return {200, Json{{"startAt", start}, {"maxResults", size}, {"total", total}, {"issues", issues}}.dump()};
  }

  std::vector<Json> docs;
  std::vector<int> failures;
  int drift_pages = 0;
  int calls = 0;
  std::string last_path;
  std::map<std::string, std::string> last_params;
};

FetchConfig fetch_config() {
  FetchConfig c;
  c.project = "F";
  c.page_size = 100;
  return c;
}

}  // namespace

TEST_CASE("fetch pagination") {
  std::vector<std::chrono::milliseconds> sleeps;
  auto sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };

  SUBCASE("no matching issues") {
    FakeTracker t(0);
    std::vector<Json> got;
    const FetchStats s = fetch_issues(t, fetch_config(), [&](const Json& d) { got.push_back(d); }, sleep);
    CHECK(got.empty());
    CHECK(s.requests == 1);
  }
  SUBCASE("250 issues in pages of 100") {
    FakeTracker t(250);
    std::vector<Json> got;
    const FetchStats s = fetch_issues(t, fetch_config(), [&](const Json& d) { got.push_back(d); }, sleep);
    CHECK(s.requests == 3);
    CHECK(got.size() == 250);
    CHECK(got.back()["key"] == "F-250");
    CHECK(t.last_params["expand"] == "changelog");
    CHECK(t.last_params["jql"].find("status in (Resolved, Closed)") != std::string::npos);
    CHECK(t.last_path == "/rest/api/2/search");
  }
  SUBCASE("429 then 200 is one retry") {
    FakeTracker t(20);
    t.failures = {429};
    std::vector<Json> got;
    const FetchStats s = fetch_issues(t, fetch_config(), [&](const Json& d) { got.push_back(d); }, sleep);
    CHECK(s.retries == 1);
    CHECK(got.size() == 20);
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0] == std::chrono::milliseconds(200));
  }
  SUBCASE("backoff is capped and attempts are bounded") {
    FakeTracker t(5);
    t.failures = {503, 503, 503, 503, 503};
    FetchConfig c = fetch_config();
    c.max_backoff = std::chrono::milliseconds(500);
    try {
      fetch_issues(t, c, [](const Json&) {}, sleep);
      FAIL("expected TransportError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TransportError);
    }
    CHECK(t.calls == 5);
    REQUIRE(sleeps.size() == 4);
    CHECK(sleeps[0].count() == 200);
    CHECK(sleeps[1].count() == 400);
    CHECK(sleeps[2].count() == 500);
    CHECK(sleeps[3].count() == 500);
  }
  SUBCASE("client errors are not retried") {
    FakeTracker t(5);
    t.failures = {401};
    CHECK_THROWS_AS(fetch_issues(t, fetch_config(), [](const Json&) {}, sleep), Error);
    CHECK(t.calls == 1);
  }
  SUBCASE("a changing total restarts the crawl and delivers each document once") {
    FakeTracker t(250);
    t.drift_pages = 2;
    std::vector<Json> got;
    const FetchStats s = fetch_issues(t, fetch_config(), [&](const Json& d) { got.push_back(d); }, sleep);
    CHECK(s.restarts == 1);
    CHECK(got.size() == 250);
  }
  SUBCASE("persistent drift fails") {
    FakeTracker t(250);
    t.drift_pages = 1000;
    try {
      fetch_issues(t, fetch_config(), [](const Json&) {}, sleep);
      FAIL("expected PaginationDrift");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::PaginationDrift);
    }
  }
}

TEST_CASE("recorded pages replay through the fixture transport") {
  const auto dir = std::filesystem::temp_directory_path() / "priodrift_fetch_fixture";
  std::filesystem::remove_all(dir);
  FakeTracker live(130);
  RecordingTransport recorder(live, dir.string());
  std::vector<Json> first, second;
  fetch_issues(recorder, fetch_config(), [&](const Json& d) { first.push_back(d); });
  FixtureTransport replay(dir.string());
  fetch_issues(replay, fetch_config(), [&](const Json& d) { second.push_back(d); });
  CHECK(first == second);
  CHECK(parse_issue_dump(second).issues.size() == 130);
  std::filesystem::remove_all(dir);
}

TEST_CASE("HTTP transport against a local server") {
  FakeTracker backing(120);
  httplib::Server server;
  std::mutex mu;
  int hits = 0;
  server.Get("/rest/api/2/search", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mu);
    QueryParams params;
    for (const auto& [k, v] : req.params) params.emplace_back(k, v);
    if (hits++ == 0) {
      res.status = 500;
      return;
    }
    const HttpResponse r = backing.get(req.path, params);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  auto transport = make_http_transport("http://127.0.0.1:" + std::to_string(port));
  std::vector<Json> got;
  const FetchStats s = fetch_issues(*transport, fetch_config(), [&](const Json& d) { got.push_back(d); },
                                    [](std::chrono::milliseconds) {});
  server.stop();
  worker.join();
  CHECK(got.size() == 120);
  CHECK(s.retries == 1);
  CHECK(s.requests == 3);
}
