#include "priodrift/standardize.hpp"

#include <cmath>

namespace priodrift {

Standardizer Standardizer::fit(const Matrix& X) {
  if (X.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "standardizer needs at least one row");
  Standardizer s;
  s.mean_ = X.colwise().mean().transpose();
  s.scale_.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.mean_(c)).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::max(1.0, std::abs(s.mean_(c)))) {
      s.scale_(c) = sd;
    } else {
      s.mean_(c) = 0.0;
      s.scale_(c) = 1.0;
    }
  }
  return s;
}

Standardizer Standardizer::from_parts(Vector mean, Vector scale) {
  if (mean.size() != scale.size()) throw Error(ErrorKind::SchemaMismatch, "standardizer parts differ in width");
  Standardizer s;
  s.mean_ = std::move(mean);
  s.scale_ = std::move(scale);
  return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
  if (X.cols() != mean_.size()) {
    throw Error(ErrorKind::SchemaMismatch, "standardizer fitted on " + std::to_string(mean_.size()) +
                                               " columns, got " + std::to_string(X.cols()));
  }
  return (X.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

Matrix select_columns(const Matrix& X, const std::vector<std::size_t>& columns) {
  Matrix out(X.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(columns[j]));
  return out;
}

Matrix select_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace priodrift
