#pragma once

#include "priodrift/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace priodrift {

/// One pipeline stage run against a work directory. Each stage reads the
/// files of earlier stages, writes its own, and leaves a stamp recording the
/// config hash and input digests; a matching stamp skips the work.
class StageRunner {
 public:
  StageRunner(RunConfig config, std::filesystem::path work_dir, std::ostream& log);

  void synth();
  void fetch();
  /// `input` overrides the default issues.jsonl.
  void ingest(const std::string& input = {});
  void featurize();
  void sample();
  void train();
  /// Predictions for the test rows of one phase.
  void predict(int phase, bool mask_current);
  void evaluate();
  void crossproject();
  void granger();

  const RunConfig& config() const { return config_; }
  std::filesystem::path path(const std::string& name) const { return work_ / name; }
  /// True when the last stage call was skipped by its stamp.
  bool last_was_cached() const { return cached_; }

 private:
  /// Returns true (and logs a cache hit) when the stamp matches.
  bool up_to_date(const std::string& stage, const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs, const std::string& extra = {});
  void stamp(const std::string& stage, const std::vector<std::string>& inputs, const std::string& extra = {});
  std::string stamp_key(const std::string& stage, const std::vector<std::string>& inputs,
                        const std::string& extra) const;
  std::string require(const std::string& name) const;
  std::string header() const;

  RunConfig config_;
  std::filesystem::path work_;
  std::ostream& log_;
  std::string hash_;
  bool cached_ = false;
};

/// Batch-edit event keys as JSONL ({"issue_key", "ordinal"} per line).
void write_event_keys(const EventKeySet& keys, std::ostream& out, const std::string& config_hash);
EventKeySet read_event_keys(std::istream& in);

/// Row roles from split_phase<N>.csv: "fit", "validation" or "test".
struct StoredSplit {
  std::vector<std::size_t> fit, validation, test;
};

void write_split_csv(const ThreeWaySplit& split, const std::string& path, const std::string& config_hash);
StoredSplit read_split_csv(const std::string& path);

/// Maps an error kind to the process exit status: 2 config, 3 data, 4 divergence.
int exit_code_for(ErrorKind kind);

}  // namespace priodrift
