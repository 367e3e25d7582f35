#pragma once

// Small dense linear algebra for gradient matrices of maps R^n -> R^N.
// Everything here is sized for n, N <= a handful; no blocking, no BLAS.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infharm/error.hpp"

namespace infharm {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InvalidInput("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Vector column(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInput("Matrix product: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InvalidInput("Matrix-vector product: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("Matrix difference: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("Matrix sum: shape mismatch");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

inline double frobenius_norm_sq(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

inline double frobenius_norm(const Matrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Rank-3 array with dims (N, n, n), used for Hessians D2u[alpha][i][j].
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t outer, std::size_t inner, double fill = 0.0)
      : outer_(outer), inner_(inner), data_(outer * inner * inner, fill) {}

  std::size_t outer() const { return outer_; }
  std::size_t inner() const { return inner_; }

  double& operator()(std::size_t a, std::size_t i, std::size_t j) {
    return data_[(a * inner_ + i) * inner_ + j];
  }
  double operator()(std::size_t a, std::size_t i, std::size_t j) const {
    return data_[(a * inner_ + i) * inner_ + j];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Largest |T[a,i,j] - T[a,j,i]|.
  double asymmetry() const {
    double m = 0.0;
    for (std::size_t a = 0; a < outer_; ++a)
      for (std::size_t i = 0; i < inner_; ++i)
        for (std::size_t j = i + 1; j < inner_; ++j)
          m = std::max(m, std::abs((*this)(a, i, j) - (*this)(a, j, i)));
    return m;
  }

  void symmetrize() {
    for (std::size_t a = 0; a < outer_; ++a)
      for (std::size_t i = 0; i < inner_; ++i)
        for (std::size_t j = i + 1; j < inner_; ++j) {
          const double m = 0.5 * ((*this)(a, i, j) + (*this)(a, j, i));
          (*this)(a, i, j) = m;
          (*this)(a, j, i) = m;
        }
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::size_t outer_ = 0;
  std::size_t inner_ = 0;
  std::vector<double> data_;
};

/// X = U diag(sigma) V^T with U (N x N) and V (n x n) orthogonal.
struct Svd {
  Matrix u;
  Vector sigma;  // nonincreasing, length min(N, n)
  Matrix v;
};

namespace detail {

// One-sided Jacobi (Hestenes) on a tall matrix (rows >= cols). Orthogonalizes
// the columns of W = X V in place; converges to machine-precision relative
// orthogonality, which keeps small singular values accurate.
inline Svd jacobi_svd_tall(const Matrix& x) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  Matrix w = x;
  Matrix v = Matrix::identity(n);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += w(i, p) * w(i, p);
          beta += w(i, q) * w(i, q);
          gamma += w(i, p) * w(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector norms(n);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, k) * w(i, k);
    norms[k] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  Svd out;
  out.sigma.resize(n);
  out.v = Matrix(n, n);
  out.u = Matrix(m, m);
  // Columns that are exactly zero (or denormal) get a basis completion below.
  constexpr double tiny = std::numeric_limits<double>::min() * 1e16;
  std::vector<bool> filled(m, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.sigma[k] = norms[src];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, src);
    if (norms[src] > tiny) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, src) / norms[src];
      filled[k] = true;
    }
  }

  // Complete U to an orthonormal basis: pick standard basis vectors with the
  // largest component outside the current span, orthogonalized twice.
  for (std::size_t k = 0; k < m; ++k) {
    if (filled[k]) continue;
    Vector best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < m; ++e) {
      Vector cand(m, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < m; ++j) {
          if (!filled[j]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += out.u(i, j) * cand[i];
          for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * out.u(i, j);
        }
      const double cn = norm(cand);
      if (cn > best_norm) {
        best_norm = cn;
        best = std::move(cand);
      }
    }
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = best[i] / best_norm;
    filled[k] = true;
  }
  return out;
}

}  // namespace detail

/// Full singular value decomposition of a small dense matrix.
inline Svd svd(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidInput("svd: empty matrix");
  if (!x.all_finite()) throw InvalidInput("svd: matrix has non-finite entries");
  if (x.rows() >= x.cols()) return detail::jacobi_svd_tall(x);
  Svd t = detail::jacobi_svd_tall(x.transposed());
  return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

inline constexpr double kDefaultTauAbs = 1e-9;
inline constexpr double kDefaultTauRel = 1e-6;

/// Numerical rank of a gradient matrix plus how clear-cut the decision was.
struct RankDecision {
  Vector singular_values;
  std::size_t rank = 0;
  double threshold = 0.0;
  // min(sigma_rank / threshold, threshold / sigma_{rank+1}); +inf when both
  // sides are empty or the discarded values are exactly zero.
  double margin = std::numeric_limits<double>::infinity();
};

inline void check_thresholds(double tau_abs, double tau_rel) {
  if (!(tau_abs > 0.0) || !std::isfinite(tau_abs))
    throw InvalidInput("rank threshold tau_abs must be positive, got " + std::to_string(tau_abs));
  if (!(tau_rel > 0.0 && tau_rel < 1.0))
    throw InvalidInput("rank threshold tau_rel must lie in (0,1), got " + std::to_string(tau_rel));
}

/// Rank from precomputed singular values: count sigma_k > max(tau_abs, tau_rel * sigma_1).
/// Values exactly at the threshold are discarded.
inline RankDecision decide_rank(std::span<const double> sigma, double tau_abs, double tau_rel) {
  check_thresholds(tau_abs, tau_rel);
  RankDecision d;
  d.singular_values.assign(sigma.begin(), sigma.end());
  const double s1 = sigma.empty() ? 0.0 : sigma.front();
  d.threshold = std::max(tau_abs, tau_rel * s1);
  if (s1 <= tau_abs) {
    d.rank = 0;
  } else {
    d.rank = static_cast<std::size_t>(
        std::count_if(sigma.begin(), sigma.end(), [&](double s) { return s > d.threshold; }));
  }
  double margin = std::numeric_limits<double>::infinity();
  if (d.rank > 0) margin = std::min(margin, sigma[d.rank - 1] / d.threshold);
  if (d.rank < sigma.size() && sigma[d.rank] > 0.0) margin = std::min(margin, d.threshold / sigma[d.rank]);
  d.margin = margin;
  return d;
}

inline RankDecision estimate_rank(const Matrix& x, double tau_abs = kDefaultTauAbs,
                                  double tau_rel = kDefaultTauRel) {
  check_thresholds(tau_abs, tau_rel);
  return decide_rank(svd(x).sigma, tau_abs, tau_rel);
}

/// I_N - U_r U_r^T, the orthogonal projection onto range(X)^perp.
inline Matrix range_complement_projection(const Svd& s, std::size_t rank) {
  const std::size_t big_n = s.u.rows();
  if (rank > s.sigma.size()) throw InvalidInput("range_complement_projection: rank exceeds min(N, n)");
  Matrix p = Matrix::identity(big_n);
  for (std::size_t k = 0; k < rank; ++k)
    for (std::size_t a = 0; a < big_n; ++a)
      for (std::size_t b = 0; b < big_n; ++b) p(a, b) -= s.u(a, k) * s.u(b, k);
  return p;
}

inline Matrix range_complement_projection(const Matrix& x, const RankDecision& d) {
  return range_complement_projection(svd(x), d.rank);
}

/// Index form of the infinity-Laplacian: component alpha is
///   sum_{beta,i,j} (D_i u_alpha D_j u_beta + |Du|^2 P_{alpha beta} delta_ij) D2_ij u_beta.
inline Vector infinity_contraction(const Matrix& du, const Matrix& p, const Tensor3& d2u) {
  const std::size_t big_n = du.rows();
  const std::size_t n = du.cols();
  if (p.rows() != big_n || p.cols() != big_n || d2u.outer() != big_n || d2u.inner() != n)
    throw InvalidInput("infinity_contraction: inconsistent shapes");
  const double du_sq = frobenius_norm_sq(du);
  Vector out(big_n, 0.0);
  for (std::size_t a = 0; a < big_n; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < big_n; ++b)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double coeff = du(a, i) * du(b, j);
          if (i == j) coeff += du_sq * p(a, b);
          acc += coeff * d2u(b, i, j);
        }
    out[a] = acc;
  }
  return out;
}

}  // namespace infharm
