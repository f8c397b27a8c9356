#include "priodrift/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace priodrift {

std::string format_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_real(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw Error(ErrorKind::SchemaMismatch, "bad real '" + token + "'");
  return v;
}

void ModelWriter::text(const std::string& key, const std::string& value) {
  if (value.find_first_of(" \t\n") != std::string::npos) {
    throw Error(ErrorKind::SchemaMismatch, "model text field '" + key + "' contains whitespace");
  }
  out_ << key << " s " << (value.empty() ? "-" : value) << '\n';
}

void ModelWriter::integer(const std::string& key, long long value) { out_ << key << " i " << value << '\n'; }

void ModelWriter::real(const std::string& key, double value) { out_ << key << " r " << format_hex(value) << '\n'; }

void ModelWriter::integers(const std::string& key, const std::vector<long long>& values) {
  out_ << key << " I " << values.size();
  for (long long v : values) out_ << ' ' << v;
  out_ << '\n';
}

void ModelWriter::reals(const std::string& key, const std::vector<double>& values) {
  out_ << key << " R " << values.size();
  for (double v : values) out_ << ' ' << format_hex(v);
  out_ << '\n';
}

void ModelWriter::vector(const std::string& key, const Vector& v) {
  reals(key, std::vector<double>(v.data(), v.data() + v.size()));
}

void ModelWriter::matrix(const std::string& key, const Matrix& m) {
  out_ << key << " M " << m.rows() << ' ' << m.cols();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out_ << ' ' << format_hex(m(r, c));
  }
  out_ << '\n';
}

std::string ModelReader::peek_key() {
  if (pending_.empty()) {
    std::string line;
    if (!std::getline(in_, line)) return {};
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) pending_.push_back(tok);
  }
  return pending_.empty() ? std::string() : pending_[0];
}

std::vector<std::string> ModelReader::next(const std::string& key, const std::string& type) {
  if (peek_key() != key) {
    throw Error(ErrorKind::SchemaMismatch, "model file: expected field '" + key + "', found '" + peek_key() + "'");
  }
  std::vector<std::string> toks = std::move(pending_);
  pending_.clear();
  if (toks.size() < 3 || toks[1] != type) throw Error(ErrorKind::SchemaMismatch, "model file: field '" + key + "' has the wrong type");
  return {toks.begin() + 2, toks.end()};
}

std::string ModelReader::text(const std::string& key) {
  auto t = next(key, "s");
  return t[0] == "-" ? std::string() : t[0];
}

long long ModelReader::integer(const std::string& key) { return std::stoll(next(key, "i")[0]); }

double ModelReader::real(const std::string& key) { return parse_real(next(key, "r")[0]); }

std::vector<long long> ModelReader::integers(const std::string& key) {
  auto t = next(key, "I");
  const auto n = std::stoull(t[0]);
  if (t.size() != n + 1) throw Error(ErrorKind::SchemaMismatch, "model file: field '" + key + "' is truncated");
  std::vector<long long> out;
  for (std::size_t i = 1; i < t.size(); ++i) out.push_back(std::stoll(t[i]));
  return out;
}

std::vector<double> ModelReader::reals(const std::string& key) {
  auto t = next(key, "R");
  const auto n = std::stoull(t[0]);
  if (t.size() != n + 1) throw Error(ErrorKind::SchemaMismatch, "model file: field '" + key + "' is truncated");
  std::vector<double> out;
  for (std::size_t i = 1; i < t.size(); ++i) out.push_back(parse_real(t[i]));
  return out;
}

Vector ModelReader::vector(const std::string& key) {
  const auto v = reals(key);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix ModelReader::matrix(const std::string& key) {
  auto t = next(key, "M");
  const auto rows = std::stoll(t[0]);
  const auto cols = std::stoll(t[1]);
  if (static_cast<long long>(t.size()) != rows * cols + 2) {
    throw Error(ErrorKind::SchemaMismatch, "model file: matrix '" + key + "' is truncated");
  }
  Matrix m(rows, cols);
  std::size_t k = 2;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = parse_real(t[k++]);
  }
  return m;
}

}  // namespace priodrift
