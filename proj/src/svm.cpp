#include "priodrift/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace priodrift {

namespace {

class RbfKernel {
 public:
  RbfKernel(const Matrix& Z, double gamma) : Z_(Z), gamma_(gamma), norms_(Z.rowwise().squaredNorm()) {
    const auto n = static_cast<std::size_t>(Z.rows());
    cache_rows_ = n <= 8000;
    if (cache_rows_) rows_.resize(n);
  }

  double diag(std::size_t) const { return 1.0; }

  const std::vector<double>& row(std::size_t i) {
    if (cache_rows_ && !rows_[i].empty()) return rows_[i];
    std::vector<double>& out = cache_rows_ ? rows_[i] : scratch_[scratch_slot_ ^= 1];
    const Vector dots = Z_ * Z_.row(static_cast<Eigen::Index>(i)).transpose();
    out.resize(static_cast<std::size_t>(Z_.rows()));
    for (Eigen::Index j = 0; j < Z_.rows(); ++j) {
      const double d2 = std::max(0.0, norms_(static_cast<Eigen::Index>(i)) + norms_(j) - 2.0 * dots(j));
      out[static_cast<std::size_t>(j)] = std::exp(-gamma_ * d2);
    }
    return out;
  }

 private:
  const Matrix& Z_;
  double gamma_;
  Vector norms_;
  bool cache_rows_ = true;
  std::vector<std::vector<double>> rows_;
  std::vector<double> scratch_[2];
  int scratch_slot_ = 0;
};

struct SmoSolution {
  std::vector<double> alpha;
  double rho = 0.0;
};

/// Dual of the C-SVM, y in {-1, +1}, second-order working set selection.
SmoSolution solve_smo(const Matrix& Z, const std::vector<double>& y, double C, double gamma, double eps) {
  const std::size_t n = y.size();
  RbfKernel K(Z, gamma);
  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  const std::size_t max_iter = std::max<std::size_t>(10000000, 100 * n);
  constexpr double tau = 1e-12;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if ((y[t] > 0 && !upper(t)) || (y[t] < 0 && !lower(t))) {
        if (-y[t] * G[t] >= gmax) {
          gmax = -y[t] * G[t];
          i = t;
        }
      }
    }
    if (i == n) break;
    const std::vector<double>& Ki = K.row(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if ((y[t] > 0 && !lower(t)) || (y[t] < 0 && !upper(t))) {
        const double yg = y[t] * G[t];
        gmax2 = std::max(gmax2, yg);
        const double b = gmax + yg;
        if (b > 0.0) {
          double a = K.diag(i) + K.diag(t) - 2.0 * y[i] * y[t] * (y[i] * y[t] * Ki[t]);
          if (a <= 0.0) a = tau;
          if (-(b * b) / a <= obj_min) {
            obj_min = -(b * b) / a;
            j = t;
          }
        }
      }
    }
    if (gmax + gmax2 < eps || j == n) break;

    std::vector<double> Ki_copy = Ki;  // row i may be evicted by the next call
    const std::vector<double>& Kj = K.row(j);
    const double Qij = y[i] * y[j] * Ki_copy[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * Qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0 && alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = diff;
      } else if (diff <= 0 && alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0 && alpha[i] > C) {
        alpha[i] = C;
        alpha[j] = C - diff;
      } else if (diff <= 0 && alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * Qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C && alpha[i] > C) {
        alpha[i] = C;
        alpha[j] = sum - C;
      } else if (sum <= C && alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C && alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = sum - C;
      } else if (sum <= C && alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      G[t] += y[t] * (y[i] * Ki_copy[t] * dai + y[j] * Kj[t] * daj);
    }
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  SmoSolution s;
  s.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  s.alpha = std::move(alpha);
  return s;
}

struct Fitted {
  Matrix support;
  Vector coef;
  double rho = 0.0;
};

Fitted fit_raw(const Matrix& Z, const std::vector<double>& y, double C, double gamma, double eps) {
  const SmoSolution s = solve_smo(Z, y, C, gamma, eps);
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (s.alpha[t] > 0.0) sv.push_back(t);
  }
  Fitted f;
  f.support = select_rows(Z, sv);
  f.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) f.coef(static_cast<Eigen::Index>(k)) = s.alpha[sv[k]] * y[sv[k]];
  f.rho = s.rho;
  return f;
}

Vector decide(const Fitted& f, double gamma, const Matrix& Z) {
  Vector out(Z.rows());
  const Vector sn = f.support.rowwise().squaredNorm();
  const Vector zn = Z.rowwise().squaredNorm();
  const Matrix dots = Z * f.support.transpose();
  for (Eigen::Index r = 0; r < Z.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < f.support.rows(); ++k) {
      const double d2 = std::max(0.0, zn(r) + sn(k) - 2.0 * dots(r, k));
      s += f.coef(k) * std::exp(-gamma * d2);
    }
    out(r) = s - f.rho;
  }
  return out;
}

}  // namespace

std::pair<double, double> fit_platt(const std::vector<double>& dec, const std::vector<int>& positive) {
  const std::size_t n = dec.size();
  double prior1 = 0, prior0 = 0;
  for (int p : positive) (p ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = positive[i] ? hi : lo;
  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fa = dec[i] * a + b;
      f += fa >= 0 ? t[i] * fa + std::log1p(std::exp(-fa)) : (t[i] - 1.0) * fa + std::log1p(std::exp(fa));
    }
    return f;
  };
  double fval = objective(A, B);
  constexpr double sigma = 1e-12, min_step = 1e-10, eps = 1e-5;
  for (int it = 0; it < 100; ++it) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fa = dec[i] * A + B;
      double p, q;
      if (fa >= 0) {
        p = std::exp(-fa) / (1.0 + std::exp(-fa));
        q = 1.0 / (1.0 + std::exp(-fa));
      } else {
        p = 1.0 / (1.0 + std::exp(fa));
        q = std::exp(fa) / (1.0 + std::exp(fa));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= min_step) {
      const double na = A + step * dA, nb = B + step * dB;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        A = na;
        B = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  return {A, B};
}

std::unique_ptr<SvmModel> SvmModel::fit(const Matrix& X, const std::vector<int>& y, const SvmParams& params,
                                        std::uint64_t seed) {
  if (X.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "svm");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(ErrorKind::SchemaMismatch, "svm: rows and labels differ");
  auto m = std::unique_ptr<SvmModel>(new SvmModel());
  m->classes_ = class_list(y);
  if (m->classes_.size() > 2) throw Error(ErrorKind::NonBinaryLabels, "svm handles two classes only");
  if (m->classes_.size() < 2) throw Error(ErrorKind::DegenerateLabels, "svm needs both classes in the training set");
  m->scaler_ = Standardizer::fit(X);
  const Matrix Z = m->scaler_.apply(X);
  if (params.gamma > 0.0) {
    m->gamma_ = params.gamma;
  } else {
    const double mean = Z.mean();
    const double var = (Z.array() - mean).square().mean();
    m->gamma_ = var > 0.0 ? 1.0 / (static_cast<double>(Z.cols()) * var) : 1.0;
  }
  std::vector<double> ys(y.size());
  std::vector<int> positive(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    positive[i] = y[i] == m->classes_[1] ? 1 : 0;
    ys[i] = positive[i] ? 1.0 : -1.0;
  }
  const Fitted full = fit_raw(Z, ys, params.C, m->gamma_, params.tol);
  m->support_ = full.support;
  m->coef_ = full.coef;
  m->rho_ = full.rho;

  // Platt calibration on a held-out stratified fold of an auxiliary fit.
  std::vector<std::size_t> fit_rows, cal_rows;
  Rng rng(derive_seed(seed, "platt"));
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (positive[i] == cls) members.push_back(i);
    }
    rng.shuffle(members);
    const auto n_cal = static_cast<std::size_t>(std::llround(params.calibration_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < members.size(); ++k) (k < n_cal ? cal_rows : fit_rows).push_back(members[k]);
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(cal_rows.begin(), cal_rows.end());
  auto has_both = [&](const std::vector<std::size_t>& rows) {
    bool p = false, q = false;
    for (std::size_t r : rows) (positive[r] ? p : q) = true;
    return p && q;
  };
  std::vector<double> dec;
  std::vector<int> dec_pos;
  if (y.size() >= 10 && has_both(fit_rows) && has_both(cal_rows)) {
    std::vector<double> yf;
    for (std::size_t r : fit_rows) yf.push_back(ys[r]);
    const Fitted aux = fit_raw(select_rows(Z, fit_rows), yf, params.C, m->gamma_, params.tol);
    const Vector d = decide(aux, m->gamma_, select_rows(Z, cal_rows));
    for (std::size_t k = 0; k < cal_rows.size(); ++k) {
      dec.push_back(d(static_cast<Eigen::Index>(k)));
      dec_pos.push_back(positive[cal_rows[k]]);
    }
  } else {
    const Vector d = decide(full, m->gamma_, Z);
    dec.assign(d.data(), d.data() + d.size());
    dec_pos = positive;
  }
  std::tie(m->platt_a_, m->platt_b_) = fit_platt(dec, dec_pos);
  return m;
}

Vector SvmModel::decision_standardized(const Matrix& Z) const {
  Fitted f{support_, coef_, rho_};
  return decide(f, gamma_, Z);
}

Vector SvmModel::decision_function(const Matrix& X) const { return decision_standardized(scaler_.apply(X)); }

Matrix SvmModel::predict_proba(const Matrix& X) const {
  const Vector d = decision_function(X);
  Matrix P(X.rows(), 2);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const double fa = d(r) * platt_a_ + platt_b_;
    const double p1 = fa >= 0 ? std::exp(-fa) / (1.0 + std::exp(-fa)) : 1.0 / (1.0 + std::exp(fa));
    P(r, 1) = p1;
    P(r, 0) = 1.0 - p1;
  }
  return P;
}

void SvmModel::save_body(ModelWriter& w) const {
  w.vector("mean", scaler_.mean());
  w.vector("scale", scaler_.scale());
  w.real("gamma", gamma_);
  w.matrix("support", support_);
  w.vector("coef", coef_);
  w.real("rho", rho_);
  w.real("platt_a", platt_a_);
  w.real("platt_b", platt_b_);
}

std::unique_ptr<SvmModel> SvmModel::load_body(ModelReader& r) {
  auto m = std::unique_ptr<SvmModel>(new SvmModel());
  Vector mean = r.vector("mean");
  Vector scale = r.vector("scale");
  m->scaler_ = Standardizer::from_parts(std::move(mean), std::move(scale));
  m->gamma_ = r.real("gamma");
  m->support_ = r.matrix("support");
  m->coef_ = r.vector("coef");
  m->rho_ = r.real("rho");
  m->platt_a_ = r.real("platt_a");
  m->platt_b_ = r.real("platt_b");
  return m;
}

}  // namespace priodrift
