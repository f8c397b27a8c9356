#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace priodrift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// UTC epoch seconds.
using Timestamp = std::int64_t;

inline constexpr double kSecondsPerDay = 86400.0;

inline double to_days(double seconds) { return seconds / kSecondsPerDay; }

enum class ErrorKind {
  UnknownPriority,
  InconsistentTrail,
  CutBeforeCreation,
  SchemaError,
  TransportError,
  PaginationDrift,
  MissingEmbedding,
  SchemaMismatch,
  DegenerateInput,
  EmptyTransitionRow,
  AbsentClass,
  EmptyTrainingSet,
  NonBinaryLabels,
  DegenerateLabels,
  DivergenceDetected,
  ClassListMismatch,
  SingularDesign,
  InvalidConfig,
  ConfigError,
  MissingArtifact,
  DataError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Deterministic randomness. The standard distributions are implementation
// defined, so sampling is built directly on the 64-bit engine output.

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  double normal();
  double exponential(double rate);
  std::uint64_t poisson(double mean);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
std::string hex64(std::uint64_t value);

// ---------------------------------------------------------------------------
// Threading. Work is always split by index so results never depend on the
// number of threads.

void set_thread_count(std::size_t n);
std::size_t thread_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Time

/// Parses ISO-8601 timestamps as emitted by issue trackers, e.g.
/// "2014-11-11T10:18:00.000+0000", "2014-11-11T10:18:00Z", "2014-11-11 10:18".
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

// ---------------------------------------------------------------------------
// Small statistics helpers shared across modules.

double median(std::vector<double> values);

}  // namespace priodrift
