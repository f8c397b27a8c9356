#pragma once

#include "priodrift/features.hpp"
#include "priodrift/issue_model.hpp"

#include <array>
#include <optional>
#include <vector>

namespace priodrift {

// ---------------------------------------------------------------------------
// K-means

struct KMeansConfig {
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;  ///< on squared centroid shift, relative to mean column variance
};

struct KMeansResult {
  Matrix centroids;                 ///< raw feature space
  std::vector<std::size_t> assignment;
  double sse = 0.0;                 ///< in the standardized distance space
  std::vector<double> sse_trace;    ///< of the winning restart, one entry per assignment step
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding and `n_init` restarts (lowest SSE
/// wins). Distances are Euclidean over standardized non-categorical columns;
/// categorical centroid entries take the cluster mode. Empty `kinds` means
/// every column is continuous.
KMeansResult kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, const std::vector<ColumnKind>& kinds = {},
                    const KMeansConfig& config = {});

/// The k = target_n centroids of X as representative rows.
Matrix kmeans_undersample(const Matrix& X, std::size_t target_n, std::uint64_t seed,
                          const std::vector<ColumnKind>& kinds = {}, const KMeansConfig& config = {});

// ---------------------------------------------------------------------------
// SMOTE and random samplers

struct SmoteResult {
  Matrix rows;
  std::vector<std::size_t> seed_rows;      ///< index into the input per synthetic row
  std::vector<std::size_t> neighbor_rows;
};

/// `n_new` synthetic rows, each x + u (neighbour - x) with u ~ U[0, 1) and the
/// neighbour drawn from the k nearest rows of X. Categorical columns are
/// copied from the seed row, boolean columns thresholded at 0.5.
SmoteResult smote_oversample(const Matrix& X, std::size_t n_new, std::size_t k, Rng& rng,
                             const std::vector<ColumnKind>& kinds = {});
SmoteResult smote_oversample(const Matrix& X, std::size_t n_new, std::size_t k, std::uint64_t seed,
                             const std::vector<ColumnKind>& kinds = {});

/// Indices (sorted) of the rows kept after removing llround(rate * n) rows.
std::vector<std::size_t> random_undersample(std::size_t n, double rate, std::uint64_t seed);
/// All input indices followed by llround(rate * n) duplicates drawn with replacement.
std::vector<std::size_t> random_oversample(std::size_t n, double rate, std::uint64_t seed);

/// Largest-remainder apportionment of `total` proportionally to `weights`.
/// Ties on the remainder go to the lower index.
std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t total);

// ---------------------------------------------------------------------------
// Conditional mixed sampling

enum class SampleAction { None, Oversample, Undersample };

struct ClassPlan {
  SampleAction action = SampleAction::None;
  double rate = 0.0;
};

struct SamplingPlan {
  std::array<ClassPlan, 5> per_class{};  ///< indexed by slot(initial priority)
  bool conditional = true;
  std::size_t smote_k = 5;

  /// Blocker +15%, Critical +15%, Major -10%, Minor +65%, Trivial +80%.
  static SamplingPlan reference_default();
  bool is_identity() const;
};

/// Parses "blocker:+0.15,major:-0.10,..." (unlisted classes are None).
SamplingPlan parse_sampling_plan(std::string_view text);
std::string format_sampling_plan(const SamplingPlan& plan);

struct SampledSet {
  Matrix values;
  std::vector<int> labels;    ///< target priority codes
  std::vector<int> initial;   ///< initial priority codes
  std::vector<long> source;   ///< input row, or -1 for synthetic rows
};

/// Rows are partitioned by initial priority. Oversampled classes receive
/// SMOTE rows whose target labels follow the class's empirical transition
/// distribution via largest remainder; each synthetic row is seeded from a
/// row of its own (initial, target) cell. Undersampled classes lose rows in
/// the same proportions. Throws EmptyTransitionRow when an oversampled class
/// has no rows, unless `skip_absent` is set.
SampledSet conditional_mixed_sample(const Matrix& X, const std::vector<int>& initial, const std::vector<int>& labels,
                                    const SamplingPlan& plan, std::uint64_t seed,
                                    const std::vector<ColumnKind>& kinds = {}, bool skip_absent = false);

/// N_total / N_i for each declared class. Throws AbsentClass on a zero count.
std::vector<double> class_weights(const std::vector<int>& labels, const std::vector<int>& classes);

}  // namespace priodrift
