#pragma once

#include "priodrift/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace priodrift {

/// Line-oriented, field-tagged model text. Reals are written as hexfloats so
/// a reload reproduces every bit.
class ModelWriter {
 public:
  explicit ModelWriter(std::ostream& out) : out_(out) {}

  void text(const std::string& key, const std::string& value);
  void integer(const std::string& key, long long value);
  void real(const std::string& key, double value);
  void integers(const std::string& key, const std::vector<long long>& values);
  void reals(const std::string& key, const std::vector<double>& values);
  void vector(const std::string& key, const Vector& v);
  void matrix(const std::string& key, const Matrix& m);

 private:
  std::ostream& out_;
};

/// Reads fields back in the order they were written; any other key or type is
/// a SchemaMismatch.
class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::string text(const std::string& key);
  long long integer(const std::string& key);
  double real(const std::string& key);
  std::vector<long long> integers(const std::string& key);
  std::vector<double> reals(const std::string& key);
  Vector vector(const std::string& key);
  Matrix matrix(const std::string& key);
  /// Key of the next field without consuming it.
  std::string peek_key();

 private:
  std::vector<std::string> next(const std::string& key, const std::string& type);
  std::istream& in_;
  std::vector<std::string> pending_;
};

std::string format_hex(double v);
double parse_real(const std::string& token);

}  // namespace priodrift
