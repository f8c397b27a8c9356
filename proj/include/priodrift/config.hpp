#pragma once

#include "priodrift/ensemble.hpp"
#include "priodrift/features.hpp"
#include "priodrift/fetch.hpp"
#include "priodrift/granger.hpp"
#include "priodrift/imbalance.hpp"
#include "priodrift/ingest.hpp"
#include "priodrift/learners.hpp"
#include "priodrift/synth.hpp"

#include <map>
#include <string>
#include <vector>

namespace priodrift {

enum class Phase1Sampler { KMeans, RandomUnder, RandomOver, None };

/// Declarative run configuration: "section.key" entries with defaults, read
/// from an INI file and overridable one field at a time.
class RunConfig {
 public:
  RunConfig();
  /// Throws ConfigError naming the file and the offending key.
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;

  /// Hash over semantic fields; threads and paths are excluded.
  std::string hash() const;
  /// Canonical INI text of every field.
  std::string dump() const;

  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("run.seed")); }
  std::uint64_t stage_seed(std::string_view stage) const { return derive_seed(seed(), stage); }

  CorpusConfig corpus() const;
  NoiseConfig noise() const;
  CorrectionConfig correction() const;
  FeatureConfig features() const;
  KMeansConfig kmeans() const;
  Phase1Sampler phase1_sampler() const;
  KnnParams knn() const;
  ForestParams forest() const;
  SvmParams svm() const;
  GbdtParams gbdt() const;
  MlpParams mlp() const;
  SamplingPlan sampling_plan() const;
  SeriesConfig series() const;
  FetchConfig fetch() const;
  /// Empty when the weights are grid-searched.
  std::vector<int> fixed_weights() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Keys known to the configuration with their defaults, in canonical order.
const std::vector<std::pair<std::string, std::string>>& config_defaults();

}  // namespace priodrift
