#pragma once

// Reference computations that share no code with the library: pivoted
// Gram-Schmidt projections, a literal index-form residual, Gauss-Legendre
// quadrature, and random jet generators.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "infharm/jets.hpp"
#include "infharm/tensor.hpp"

namespace oracle {

using infharm::Jet2;
using infharm::Matrix;
using infharm::Tensor3;
using infharm::Vector;

/// Orthonormal basis of the span of the columns of x, by Gram-Schmidt with
/// column pivoting, stopping after `rank` vectors.
inline std::vector<Vector> range_basis(const Matrix& x, std::size_t rank) {
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<Vector> work(cols, Vector(rows));
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) work[c][r] = x(r, c);
  std::vector<Vector> basis;
  std::vector<bool> used(cols, false);
  while (basis.size() < rank) {
    std::size_t best = cols;
    double best_norm = -1.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c]) continue;
      double s = 0.0;
      for (double v : work[c]) s += v * v;
      if (s > best_norm) {
        best_norm = s;
        best = c;
      }
    }
    if (best == cols || best_norm <= 0.0) break;
    used[best] = true;
    Vector q = work[best];
    const double len = std::sqrt(best_norm);
    for (double& v : q) v /= len;
    basis.push_back(q);
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c]) continue;
      for (int pass = 0; pass < 2; ++pass) {
        double proj = 0.0;
        for (std::size_t r = 0; r < rows; ++r) proj += q[r] * work[c][r];
        for (std::size_t r = 0; r < rows; ++r) work[c][r] -= proj * q[r];
      }
    }
  }
  return basis;
}

inline Matrix complement_projection(const Matrix& x, std::size_t rank) {
  const auto basis = range_basis(x, rank);
  Matrix p(x.rows(), x.rows());
  for (std::size_t a = 0; a < x.rows(); ++a) {
    p(a, a) = 1.0;
    for (const auto& q : basis)
      for (std::size_t b = 0; b < x.rows(); ++b) p(a, b) -= q[a] * q[b];
  }
  return p;
}

/// Literal transcription of the index form with a caller-supplied projection.
inline Vector index_form_residual(const Jet2& j, const Matrix& p) {
  const std::size_t big_n = j.du.rows(), n = j.du.cols();
  double du2 = 0.0;
  for (std::size_t a = 0; a < big_n; ++a)
    for (std::size_t i = 0; i < n; ++i) du2 += j.du(a, i) * j.du(a, i);
  Vector out(big_n, 0.0);
  for (std::size_t a = 0; a < big_n; ++a)
    for (std::size_t b = 0; b < big_n; ++b)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
          out[a] += (j.du(a, i) * j.du(b, k) + (i == k ? du2 * p(a, b) : 0.0)) * j.d2u(b, i, k);
  return out;
}

/// Composite 5-point Gauss-Legendre rule on `panels` equal panels.
inline std::complex<double> gauss_legendre(const std::function<std::complex<double>(double)>& f, double a, double b,
                                           int panels) {
  static const std::array<double, 5> node = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                             0.9061798459386640};
  static const std::array<double, 5> weight = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                               0.2369268850561891, 0.2369268850561891};
  std::complex<double> sum = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) sum += weight[k] * f(mid + 0.5 * h * node[k]);
  }
  return 0.5 * h * sum;
}

inline Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(gen);
  return m;
}

/// Random matrix of prescribed rank r <= min(rows, cols) as a sum of r outer products.
inline Matrix random_rank_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols, std::size_t r) {
  Matrix m(rows, cols);
  for (std::size_t k = 0; k < r; ++k) {
    const Matrix a = random_matrix(gen, rows, 1), b = random_matrix(gen, 1, cols);
    m = m + a * b;
  }
  return m;
}

inline Jet2 random_jet(std::mt19937_64& gen, std::size_t big_n, std::size_t n, std::size_t rank) {
  Jet2 j(big_n, n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : j.u) v = u(gen);
  j.du = random_rank_matrix(gen, big_n, n, rank);
  for (std::size_t a = 0; a < big_n; ++a)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i; k < n; ++k) {
        const double v = u(gen);
        j.d2u(a, i, k) = v;
        j.d2u(a, k, i) = v;
      }
  return j;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a(r, c) - b(r, c)));
  return m;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace oracle
