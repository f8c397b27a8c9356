#pragma once

#include "priodrift/ingest.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace priodrift {

using QueryParams = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;  ///< 0 when the request never completed
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const std::string& path, const QueryParams& params) = 0;
};

/// Plain HTTP client against "http://host:port".
std::unique_ptr<Transport> make_http_transport(const std::string& endpoint, const std::string& bearer_token = "");

/// Replays pages saved as <dir>/page_<startAt>.json; a missing page is a 404.
class FixtureTransport : public Transport {
 public:
  explicit FixtureTransport(std::string directory) : directory_(std::move(directory)) {}
  HttpResponse get(const std::string& path, const QueryParams& params) override;

 private:
  std::string directory_;
};

/// Forwards to `inner` and saves every successful page for later replay.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(Transport& inner, std::string directory);
  HttpResponse get(const std::string& path, const QueryParams& params) override;

 private:
  Transport& inner_;
  std::string directory_;
};

struct FetchConfig {
  std::string search_path = "/rest/api/2/search";
  std::string project;
  std::size_t page_size = 100;
  int max_attempts = 5;
  std::chrono::milliseconds base_backoff{200};
  std::chrono::milliseconds max_backoff{5000};
  /// Full restarts allowed when the reported total changes mid-crawl.
  int max_restarts = 3;
};

struct FetchStats {
  std::size_t requests = 0;
  std::size_t retries = 0;
  std::size_t restarts = 0;
  std::size_t documents = 0;
};

using SleepFunction = std::function<void(std::chrono::milliseconds)>;
using DocumentSink = std::function<void(const Json&)>;

/// Search query for resolved or closed bugs of one project.
std::string bug_query(const std::string& project);

/// Pages through the search endpoint until exhaustion. Transient failures
/// (no response, 429, 5xx) are retried with capped exponential backoff; a
/// changed total restarts the crawl and documents are delivered only once
/// the crawl completes without drift.
FetchStats fetch_issues(Transport& transport, const FetchConfig& config, const DocumentSink& sink,
                        const SleepFunction& sleep = {});

}  // namespace priodrift
