#pragma once

#include "priodrift/core.hpp"

#include <vector>

namespace priodrift {

/// Column-wise z-scoring fitted on training rows. Zero-variance columns pass
/// through unchanged.
class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(const Matrix& X);

  Matrix apply(const Matrix& X) const;
  std::size_t width() const { return static_cast<std::size_t>(mean_.size()); }

  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }
  static Standardizer from_parts(Vector mean, Vector scale);

 private:
  Vector mean_;
  Vector scale_;  // 1 for zero-variance columns, and their mean is 0
};

/// Submatrix with the given columns, in order.
Matrix select_columns(const Matrix& X, const std::vector<std::size_t>& columns);
Matrix select_rows(const Matrix& X, const std::vector<std::size_t>& rows);

}  // namespace priodrift
