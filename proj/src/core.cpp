#include "priodrift/core.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <thread>

namespace priodrift {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownPriority: return "UnknownPriority";
    case ErrorKind::InconsistentTrail: return "InconsistentTrail";
    case ErrorKind::CutBeforeCreation: return "CutBeforeCreation";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::PaginationDrift: return "PaginationDrift";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::EmptyTransitionRow: return "EmptyTransitionRow";
    case ErrorKind::AbsentClass: return "AbsentClass";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::NonBinaryLabels: return "NonBinaryLabels";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::ClassListMismatch: return "ClassListMismatch";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::DataError: return "DataError";
  }
  return "Error";
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  // Lemire's nearly-divisionless bounded draw.
  const std::uint64_t bound = n;
  unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  // Box-Muller, one variate per call.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::exponential(double rate) {
  double u = uniform();
  return -std::log1p(-u) / rate;
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 60.0) {
    const double draw = std::round(mean + std::sqrt(mean) * normal());
    return draw < 0.0 ? 0 : static_cast<std::uint64_t>(draw);
  }
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double product = uniform();
  while (product > limit) {
    ++k;
    product *= uniform();
  }
  return k;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  return splitmix64(master ^ fnv1a64(key));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {
std::atomic<std::size_t> g_threads{1};
thread_local bool t_in_parallel = false;
}

void set_thread_count(std::size_t n) { g_threads = std::max<std::size_t>(1, n); }

std::size_t thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  // Nested regions run inline on the calling worker.
  const std::size_t workers = t_in_parallel ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      t_in_parallel = true;
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed) return;
        try {
          body(i);
        } catch (...) {
          bool expected = false;
          if (failed.compare_exchange_strong(expected, true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Timestamp parse_timestamp(std::string_view text) {
  std::string s(text);
  int year = 0, month = 0, day = 0, hour = 0, minute = 0;
  double second = 0.0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &year, &month, &day, &consumed) != 3) {
    throw Error(ErrorKind::SchemaError, "unparseable timestamp '" + s + "'");
  }
  std::size_t pos = static_cast<std::size_t>(consumed);
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    int n = 0;
    if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d%n", &hour, &minute, &n) != 2) {
      throw Error(ErrorKind::SchemaError, "unparseable timestamp '" + s + "'");
    }
    pos += 1 + static_cast<std::size_t>(n);
    if (pos < s.size() && s[pos] == ':') {
      char* end = nullptr;
      second = std::strtod(s.c_str() + pos + 1, &end);
      pos = static_cast<std::size_t>(end - s.c_str());
    }
  }
  long offset_seconds = 0;
  if (pos < s.size()) {
    const char sign = s[pos];
    if (sign == 'Z') {
      ++pos;
    } else if (sign == '+' || sign == '-') {
      std::string digits;
      for (std::size_t i = pos + 1; i < s.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i];
      }
      if (digits.size() != 4) throw Error(ErrorKind::SchemaError, "bad UTC offset in '" + s + "'");
      offset_seconds = (std::stol(digits.substr(0, 2)) * 60 + std::stol(digits.substr(2, 2))) * 60;
      if (sign == '-') offset_seconds = -offset_seconds;
      pos = s.size();
    }
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second >= 61) {
    throw Error(ErrorKind::SchemaError, "timestamp out of range '" + s + "'");
  }
  std::tm tm{};
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = minute;
  tm.tm_sec = static_cast<int>(second);
  return static_cast<Timestamp>(timegm(&tm)) - offset_seconds;
}

std::string format_timestamp(Timestamp t) {
  const std::time_t raw = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&raw, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S.000+0000", &tm);
  return buf;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace priodrift
