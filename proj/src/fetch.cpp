#include "priodrift/fetch.hpp"

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace priodrift {

namespace {

class HttpTransport : public Transport {
 public:
  HttpTransport(const std::string& endpoint, const std::string& token) : client_(endpoint) {
    client_.set_connection_timeout(10, 0);
    client_.set_read_timeout(60, 0);
    if (!token.empty()) client_.set_bearer_token_auth(token);
  }

  HttpResponse get(const std::string& path, const QueryParams& params) override {
    httplib::Params p;
    for (const auto& [k, v] : params) p.emplace(k, v);
    auto result = client_.Get(path, p, httplib::Headers{{"Accept", "application/json"}});
    if (!result) return {0, httplib::to_string(result.error())};
    return {result->status, result->body};
  }

 private:
  httplib::Client client_;
};

std::string param(const QueryParams& params, const std::string& key) {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return "0";
}

std::string page_file(const std::string& directory, const QueryParams& params) {
  return (std::filesystem::path(directory) / ("page_" + param(params, "startAt") + ".json")).string();
}

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& endpoint, const std::string& bearer_token) {
  return std::make_unique<HttpTransport>(endpoint, bearer_token);
}

HttpResponse FixtureTransport::get(const std::string&, const QueryParams& params) {
  std::ifstream in(page_file(directory_, params), std::ios::binary);
  if (!in) return {404, ""};
  std::ostringstream body;
  body << in.rdbuf();
  return {200, body.str()};
}

RecordingTransport::RecordingTransport(Transport& inner, std::string directory)
    : inner_(inner), directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

HttpResponse RecordingTransport::get(const std::string& path, const QueryParams& params) {
  HttpResponse r = inner_.get(path, params);
  if (r.status == 200) {
    std::ofstream out(page_file(directory_, params), std::ios::binary);
    out << r.body;
  }
  return r;
}

std::string bug_query(const std::string& project) {
  return "project = \"" + project + "\" AND issuetype = Bug AND status in (Resolved, Closed) ORDER BY key ASC";
}

FetchStats fetch_issues(Transport& transport, const FetchConfig& config, const DocumentSink& sink,
                        const SleepFunction& sleep) {
  if (config.page_size == 0) throw Error(ErrorKind::InvalidConfig, "page_size must be positive");
  const SleepFunction pause = sleep ? sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  FetchStats stats;

  auto request_page = [&](std::size_t start_at) {
    const QueryParams params = {{"jql", bug_query(config.project)},
                                {"startAt", std::to_string(start_at)},
                                {"maxResults", std::to_string(config.page_size)},
                                {"expand", "changelog"},
                                {"fields", "*all"}};
    std::chrono::milliseconds backoff = config.base_backoff;
    for (int attempt = 1;; ++attempt) {
      ++stats.requests;
      const HttpResponse r = transport.get(config.search_path, params);
      if (r.status == 200) {
        try {
          return Json::parse(r.body);
        } catch (const Json::exception& e) {
          throw Error(ErrorKind::SchemaError, "page at startAt=" + std::to_string(start_at) + ": " + e.what());
        }
      }
      const bool transient = r.status == 0 || r.status == 429 || r.status >= 500;
      if (!transient || attempt >= config.max_attempts) {
        throw Error(ErrorKind::TransportError, "GET " + config.search_path + " startAt=" + std::to_string(start_at) +
                                                   " failed with status " + std::to_string(r.status) + " after " +
                                                   std::to_string(attempt) + " attempt(s)");
      }
      ++stats.retries;
      pause(backoff);
      backoff = std::min(backoff * 2, config.max_backoff);
    }
  };

  for (int restart = 0;; ++restart) {
    std::vector<Json> documents;
    std::size_t start_at = 0;
    std::optional<std::size_t> total;
    bool drifted = false;
    while (true) {
      const Json page = request_page(start_at);
      if (!page.contains("issues") || !page["issues"].is_array() || !page.contains("total")) {
        throw Error(ErrorKind::SchemaError, "page at startAt=" + std::to_string(start_at) + " lacks issues/total");
      }
      const auto page_total = page["total"].get<std::size_t>();
      if (total && *total != page_total) {
        drifted = true;
        break;
      }
      total = page_total;
      const auto& issues = page["issues"];
      for (const auto& doc : issues) documents.push_back(doc);
      start_at += issues.size();
      if (issues.empty() || start_at >= *total) break;
    }
    if (!drifted) {
      for (const auto& doc : documents) sink(doc);
      stats.documents = documents.size();
      return stats;
    }
    if (restart >= config.max_restarts) {
      throw Error(ErrorKind::PaginationDrift, "result total kept changing after " + std::to_string(restart) + " restart(s)");
    }
    ++stats.restarts;
  }
}

}  // namespace priodrift
