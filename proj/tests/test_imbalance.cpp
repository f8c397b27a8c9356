#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace priodrift;
using namespace priodrift::testing;

namespace {

Matrix uniform_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform();
  return X;
}

std::vector<std::vector<double>> sorted_rows(const Matrix& X) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> r;
    for (Eigen::Index j = 0; j < X.cols(); ++j) r.push_back(X(i, j));
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

/// Rows sharing an initial priority with the given target counts per code.
void append_class(Matrix& X, std::vector<int>& initial, std::vector<int>& labels, int from,
                  const std::map<int, std::size_t>& target_counts, Rng& rng) {
  std::size_t add = 0;
  for (const auto& [_, n] : target_counts) add += n;
  const Eigen::Index start = X.rows();
  X.conservativeResize(start + static_cast<Eigen::Index>(add), 3);
  Eigen::Index r = start;
  for (const auto& [to, n] : target_counts) {
    for (std::size_t i = 0; i < n; ++i, ++r) {
      X(r, 0) = rng.uniform() + to;
      X(r, 1) = rng.uniform();
      X(r, 2) = from;
      initial.push_back(from);
      labels.push_back(to);
    }
  }
}

std::size_t count_synthetic(const SampledSet& s, int initial, int label) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.labels.size(); ++i)
    if (s.source[i] < 0 && s.initial[i] == initial && s.labels[i] == label) ++n;
  return n;
}

}  // namespace

TEST_CASE("k-means undersampling") {
  SUBCASE("k equal to n reproduces the input") {
    const Matrix X = uniform_matrix(12, 3, 1);
    const Matrix C = kmeans_undersample(X, 12, 7);
    REQUIRE(C.rows() == 12);
    const auto a = sorted_rows(X), b = sorted_rows(C);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(b[i][j] == doctest::Approx(a[i][j]).epsilon(1e-12));
  }
  SUBCASE("k = 1 gives the global mean") {
    const Matrix X = uniform_matrix(50, 4, 2);
    const Matrix C = kmeans_undersample(X, 1, 3);
    REQUIRE(C.rows() == 1);
    CHECK((C.row(0) - X.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("two separated blobs give the blob means") {
    Matrix X = uniform_matrix(60, 2, 4);
    X.bottomRows(30).array() += 100.0;
    const Matrix C = kmeans_undersample(X, 2, 5);
    const Eigen::RowVectorXd m0 = X.topRows(30).colwise().mean(), m1 = X.bottomRows(30).colwise().mean();
    const bool order = C(0, 0) < C(1, 0);
    CHECK((C.row(order ? 0 : 1) - m0).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((C.row(order ? 1 : 0) - m1).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("output size and monotone SSE") {
    const Matrix X = uniform_matrix(400, 5, 6);
    for (std::size_t k : {3, 17, 40}) {
      const KMeansResult r = kmeans(X, k, 11);
      CHECK(static_cast<std::size_t>(r.centroids.rows()) == k);
      CHECK(r.assignment.size() == 400);
      for (std::size_t i = 1; i < r.sse_trace.size(); ++i) CHECK(r.sse_trace[i] <= r.sse_trace[i - 1] * (1 + 1e-12));
      CHECK(kmeans_undersample(X, k, 11) == kmeans_undersample(X, k, 11));
    }
  }
  SUBCASE("degenerate targets") {
    const Matrix X = uniform_matrix(5, 2, 1);
    CHECK_THROWS_AS(kmeans_undersample(X, 0, 1), Error);
    CHECK_THROWS_AS(kmeans_undersample(X, 6, 1), Error);
  }
}

TEST_CASE("SMOTE") {
  SUBCASE("two points give rows on their segment") {
    Matrix X(2, 2);
    X << 0, 0, 3, 1;
    const SmoteResult r = smote_oversample(X, 50, 5, 9);
    REQUIRE(r.rows.rows() == 50);
    for (Eigen::Index i = 0; i < r.rows.rows(); ++i) {
      const double t = r.rows(i, 0) / 3.0;
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
      CHECK(std::abs(r.rows(i, 1) - t) < 1e-12);
    }
  }
  SUBCASE("zero new rows") { CHECK(smote_oversample(uniform_matrix(10, 2, 1), 0, 5, 1).rows.rows() == 0); }
  SUBCASE("rows stay inside the convex hull") {
    const Matrix X = uniform_matrix(100, 2, 3);
    std::vector<std::pair<double, double>> pts;
    for (Eigen::Index i = 0; i < X.rows(); ++i) pts.emplace_back(X(i, 0), X(i, 1));
    const SmoteResult r = smote_oversample(X, 500, 5, 4);
    std::size_t outside = 0;
    for (Eigen::Index i = 0; i < r.rows.rows(); ++i) outside += in_convex_hull(pts, {r.rows(i, 0), r.rows(i, 1)}) ? 0 : 1;
    CHECK(outside == 0);
  }
  SUBCASE("categorical columns copy the seed row") {
    Matrix X = uniform_matrix(20, 2, 5);
    for (Eigen::Index i = 0; i < 20; ++i) X(i, 1) = static_cast<double>(i % 4);
    const SmoteResult r = smote_oversample(X, 40, 5, 6, {ColumnKind::Continuous, ColumnKind::Categorical});
    for (Eigen::Index i = 0; i < r.rows.rows(); ++i) CHECK(r.rows(i, 1) == X(static_cast<Eigen::Index>(r.seed_rows[i]), 1));
  }
  SUBCASE("a single row is degenerate") { CHECK_THROWS_AS(smote_oversample(uniform_matrix(1, 2, 1), 3, 5, 1), Error); }
}

TEST_CASE("random samplers") {
  const auto under = random_undersample(100, 0.2, 3);
  CHECK(under.size() == 80);
  CHECK(std::is_sorted(under.begin(), under.end()));
  CHECK(std::adjacent_find(under.begin(), under.end()) == under.end());
  CHECK(under == random_undersample(100, 0.2, 3));
  const auto over = random_oversample(50, 1.0, 3);
  CHECK(over.size() == 100);
  for (std::size_t i = 0; i < 50; ++i) CHECK(over[i] == i);
  for (std::size_t i = 50; i < 100; ++i) CHECK(over[i] < 50);
}

TEST_CASE("largest remainder apportionment") {
  CHECK(largest_remainder({15, 15, 72, 267}, 295) == std::vector<std::size_t>{12, 12, 58, 213});
  CHECK(largest_remainder({1, 1, 1}, 2) == std::vector<std::size_t>{1, 1, 0});
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(1 + rng.index(5));
    double sum = 0;
    for (auto& x : w) sum += (x = static_cast<double>(rng.index(50)) + 1);
    const std::size_t total = rng.index(300);
    const auto got = largest_remainder(w, total);
    std::size_t s = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      s += got[i];
      CHECK(std::abs(static_cast<double>(got[i]) - w[i] / sum * static_cast<double>(total)) < 1.0);
    }
    CHECK(s == total);
  }
}

TEST_CASE("conditional mixed sampling") {
  Rng rng(5);
  SUBCASE("Blocker class oversampled by half keeps its 20% Critical share") {
    Matrix X(0, 3);
    std::vector<int> initial, labels;
    append_class(X, initial, labels, 1, {{2, 200}, {3, 800}}, rng);
    const SampledSet s = conditional_mixed_sample(X, initial, labels, parse_sampling_plan("blocker:+0.5"), 1);
    CHECK(s.values.rows() == 1500);
    CHECK(count_synthetic(s, 1, 2) == 100);
    CHECK(count_synthetic(s, 1, 3) == 400);
  }
  SUBCASE("the Trivial row of the published transition counts") {
    Matrix X(0, 3);
    std::vector<int> initial, labels;
    append_class(X, initial, labels, 5, {{1, 15}, {2, 15}, {3, 72}, {4, 267}}, rng);
    const SampledSet s = conditional_mixed_sample(X, initial, labels, parse_sampling_plan("trivial:+0.80"), 1);
    CHECK(s.values.rows() == 369 + 295);
    CHECK(count_synthetic(s, 5, 4) == 213);
    CHECK(count_synthetic(s, 5, 3) == 58);
    CHECK(count_synthetic(s, 5, 1) == 12);
  }
  SUBCASE("identity plan returns the input") {
    Matrix X(0, 3);
    std::vector<int> initial, labels;
    append_class(X, initial, labels, 3, {{1, 10}, {4, 20}}, rng);
    append_class(X, initial, labels, 4, {{3, 15}}, rng);
    SamplingPlan plan;
    CHECK(plan.is_identity());
    const SampledSet s = conditional_mixed_sample(X, initial, labels, plan, 1);
    CHECK(s.values == X);
    CHECK(s.labels == labels);
    CHECK(s.initial == initial);
  }
  SUBCASE("the default plan on a mixed set") {
    Matrix X(0, 3);
    std::vector<int> initial, labels;
    append_class(X, initial, labels, 1, {{2, 30}, {3, 11}}, rng);
    append_class(X, initial, labels, 2, {{1, 20}, {3, 25}}, rng);
    append_class(X, initial, labels, 3, {{1, 50}, {2, 60}, {4, 70}, {5, 9}}, rng);
    append_class(X, initial, labels, 4, {{3, 40}, {2, 7}}, rng);
    append_class(X, initial, labels, 5, {{4, 13}, {3, 6}}, rng);
    const SamplingPlan plan = SamplingPlan::reference_default();
    const SampledSet s = conditional_mixed_sample(X, initial, labels, plan, 8, {ColumnKind::Continuous,
      ColumnKind::Continuous, ColumnKind::Categorical});
    const SampledSet again = conditional_mixed_sample(X, initial, labels, plan, 8, {ColumnKind::Continuous,
      ColumnKind::Continuous, ColumnKind::Categorical});
    CHECK(again.values == s.values);
    CHECK(again.labels == s.labels);
    for (int from = 1; from <= 5; ++from) {
      std::map<int, std::size_t> in_cell;
      std::size_t n_class = 0, n_synth = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (initial[i] == from) ++in_cell[labels[i]], ++n_class;
      for (std::size_t i = 0; i < s.labels.size(); ++i) n_synth += (s.initial[i] == from && s.source[i] < 0) ? 1 : 0;
      for (const auto& [to, n] : in_cell) {
        const double expected = static_cast<double>(n) / n_class * static_cast<double>(n_synth);
        CHECK(std::abs(static_cast<double>(count_synthetic(s, from, to)) - expected) <= 1.0);
      }
    }
    // synthetic rows keep the categorical column of their class; real rows are input rows
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      CHECK(s.values(static_cast<Eigen::Index>(i), 2) == s.initial[i]);
      if (s.source[i] >= 0) {
        CHECK(s.values.row(static_cast<Eigen::Index>(i)) == X.row(s.source[i]));
        CHECK(s.labels[i] == labels[static_cast<std::size_t>(s.source[i])]);
      }
    }
    // Major lost 10% of 189 rows
    std::size_t major = 0;
    for (int v : s.initial) major += v == 3 ? 1 : 0;
    CHECK(major == 189 - 19);
  }
  SUBCASE("oversampling an absent class") {
    Matrix X(0, 3);
    std::vector<int> initial, labels;
    append_class(X, initial, labels, 3, {{1, 10}}, rng);
    try {
      conditional_mixed_sample(X, initial, labels, parse_sampling_plan("blocker:+0.5"), 1);
      FAIL("expected EmptyTransitionRow");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyTransitionRow);
    }
    CHECK(conditional_mixed_sample(X, initial, labels, parse_sampling_plan("blocker:+0.5"), 1, {}, true).values == X);
  }
  SUBCASE("plan text round trips") {
    const SamplingPlan p = SamplingPlan::reference_default();
    const SamplingPlan back = parse_sampling_plan(format_sampling_plan(p));
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(back.per_class[i].action == p.per_class[i].action);
      CHECK(back.per_class[i].rate == doctest::Approx(p.per_class[i].rate));
    }
  }
}

TEST_CASE("class weights") {
  std::vector<int> balanced;
  for (int c = 1; c <= 5; ++c) balanced.insert(balanced.end(), 7, c);
  for (double w : class_weights(balanced, {1, 2, 3, 4, 5})) CHECK(w == 5.0);
  CHECK(class_weights({0, 1, 0, 1}, {0, 1}) == std::vector<double>{2.0, 2.0});
  std::vector<int> skewed(90, 0);
  skewed.insert(skewed.end(), 10, 1);
  const auto w = class_weights(skewed, {0, 1});
  CHECK(w[0] == doctest::Approx(100.0 / 90.0));
  CHECK(w[1] == doctest::Approx(10.0));
  try {
    class_weights({0, 0}, {0, 1});
    FAIL("expected AbsentClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AbsentClass);
  }
}
