#pragma once

#include "priodrift/ingest.hpp"

#include <optional>
#include <string>
#include <vector>

namespace priodrift {

/// The six pre-change activity series tested individually.
enum class SeriesFeature { CommentCount, CommentAuthors, CommentLength, HistoryItems, HistoryAuthors, HistoryFields };

inline constexpr std::size_t kSeriesFeatureCount = 6;
std::string_view to_string(SeriesFeature f);
std::vector<SeriesFeature> all_series_features();

struct SeriesConfig {
  std::size_t slices = 10;
  std::size_t lead = 2;
  /// Windows shorter than slices * min_slice_seconds are dropped.
  Timestamp min_slice_seconds = 60;
};

struct EventSeries {
  std::string event_id;  ///< issue_key#ordinal
  std::vector<double> values;
  std::vector<double> label;  ///< zeros, then `lead` trailing ones
};

struct SeriesBuild {
  std::vector<EventSeries> series;
  std::size_t dropped = 0;
};

/// Splits each pre-change window (creation or the previous priority change,
/// up to the event) into equal relative slices holding the feature's
/// incremental measure within the slice.
SeriesBuild build_event_series(const std::vector<Phase2Row>& rows, SeriesFeature feature,
                               const SeriesConfig& config = {});

struct GrangerResult {
  bool testable = false;
  std::optional<ErrorKind> error;  ///< SingularDesign or DegenerateInput when untestable
  int best_lag = 0;
  double F = 0.0;
  double p = 1.0;
};

/// Does x help predict y beyond y's own lags? Fits intercept + own lags with
/// and without x lags for every L in 1..max_lag over the T − L usable rows;
/// lags without residual degrees of freedom are skipped. Returns the lag with
/// the smallest p.
GrangerResult granger_test(const std::vector<double>& x, const std::vector<double>& y, int max_lag = 3);

struct BhResult {
  std::vector<double> q;
  std::vector<bool> significant;
};

/// Benjamini-Hochberg step-up adjusted values.
BhResult bh_fdr(const std::vector<double>& p, double alpha = 0.05);

struct GrangerRow {
  std::string feature;
  double pct_significant = 0.0;
  double median_lag = 0.0;
  double median_F = 0.0;
  double median_q = 0.0;
  std::size_t n_tested = 0;
  std::size_t n_untestable = 0;
  std::size_t n_significant = 0;
};

struct FeatureTests {
  std::string feature;
  std::vector<GrangerResult> results;
};

/// BH is applied jointly over every testable result of every feature;
/// untestable results are counted separately and never enter denominators.
std::vector<GrangerRow> aggregate(const std::vector<FeatureTests>& tests, double alpha = 0.05);

struct GrangerAnalysis {
  std::vector<GrangerRow> rows;
  std::size_t dropped_windows = 0;
};

GrangerAnalysis granger_analysis(const std::vector<Phase2Row>& rows, const SeriesConfig& config = {},
                                 int max_lag = 3, double alpha = 0.05);

void write_granger_csv(const std::vector<GrangerRow>& rows, const std::string& path, const std::string& header_comment);

}  // namespace priodrift
