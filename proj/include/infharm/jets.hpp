#pragma once

// Second-order jets (u, Du, D2u) of candidate maps, analytic where the family
// allows it and by central differences otherwise.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "infharm/error.hpp"
#include "infharm/kprofile.hpp"
#include "infharm/tensor.hpp"

namespace infharm {

/// Value, gradient matrix (N x n) and Hessian tensor (N x n x n) at a point.
struct Jet2 {
  Vector u;
  Matrix du;
  Tensor3 d2u;

  Jet2() = default;
  Jet2(std::size_t big_n, std::size_t n) : u(big_n, 0.0), du(big_n, n), d2u(big_n, n) {}

  std::size_t target_dim() const { return du.rows(); }
  std::size_t domain_dim() const { return du.cols(); }

  bool all_finite() const {
    for (double v : u)
      if (!std::isfinite(v)) return false;
    return du.all_finite() && d2u.all_finite();
  }
};

/// u(x, y) = exp(ix) - exp(iy) as a map R^2 -> R^2.
inline Jet2 jet_exp2(double x, double y) {
  const double cx = std::cos(x), sx = std::sin(x), cy = std::cos(y), sy = std::sin(y);
  Jet2 j(2, 2);
  j.u = {cx - cy, sx - sy};
  j.du(0, 0) = -sx;
  j.du(0, 1) = sy;
  j.du(1, 0) = cx;
  j.du(1, 1) = -cy;
  j.d2u(0, 0, 0) = -cx;
  j.d2u(0, 1, 1) = cy;
  j.d2u(1, 0, 0) = -sx;
  j.d2u(1, 1, 1) = sy;
  return j;
}

/// u(x, y) = int_y^x exp(iK(t)) dt. With `with_value == false` the value u is
/// left at zero and the quadrature is skipped; derivatives are always exact.
inline Jet2 jet_kprofile(double x, double y, const KProfile& k, bool with_value = true) {
  const auto [kx, dkx] = k.eval(x);
  const auto [ky, dky] = k.eval(y);
  const double cx = std::cos(kx), sx = std::sin(kx), cy = std::cos(ky), sy = std::sin(ky);
  Jet2 j(2, 2);
  if (with_value) {
    const Complex v = k.integral(y, x);
    j.u = {v.real(), v.imag()};
  }
  j.du(0, 0) = cx;
  j.du(1, 0) = sx;
  j.du(0, 1) = -cy;
  j.du(1, 1) = -sy;
  j.d2u(0, 0, 0) = -dkx * sx;
  j.d2u(1, 0, 0) = dkx * cx;
  j.d2u(0, 1, 1) = dky * sy;
  j.d2u(1, 1, 1) = -dky * cy;
  return j;
}

/// u = A x + b.
inline Jet2 jet_affine(std::span<const double> x, const Matrix& a, std::span<const double> b) {
  if (a.cols() != x.size() || a.rows() != b.size()) throw InvalidInput("jet_affine: shape mismatch");
  Jet2 j(a.rows(), a.cols());
  j.u = a * x;
  for (std::size_t i = 0; i < b.size(); ++i) j.u[i] += b[i];
  j.du = a;
  return j;
}

/// u = b + A x + 1/2 H(x, x), H symmetric in its last two slots.
inline Jet2 jet_quadratic(std::span<const double> x, const Matrix& a, std::span<const double> b,
                          const Tensor3& h) {
  const std::size_t big_n = a.rows(), n = a.cols();
  if (x.size() != n || b.size() != big_n || h.outer() != big_n || h.inner() != n)
    throw InvalidInput("jet_quadratic: shape mismatch");
  Jet2 j(big_n, n);
  for (std::size_t al = 0; al < big_n; ++al) {
    double v = b[al];
    for (std::size_t i = 0; i < n; ++i) {
      v += a(al, i) * x[i];
      double g = a(al, i);
      for (std::size_t k = 0; k < n; ++k) {
        v += 0.5 * h(al, i, k) * x[i] * x[k];
        g += h(al, i, k) * x[k];
      }
      j.du(al, i) = g;
    }
    j.u[al] = v;
  }
  j.d2u = h;
  return j;
}

/// Scalar functions with closed-form jets, used to build u = a + xi f.
struct ScalarProfile {
  enum class Kind { linear, half_norm_sq, cone };
  Kind kind = Kind::linear;
  Vector w;        // linear: f = w.x + offset
  double offset = 0.0;
  Vector center;   // cone: f = |x - center|
  std::size_t dim = 0;  // half_norm_sq: f = |x|^2 / 2 on R^dim

  static ScalarProfile linear(Vector w, double offset = 0.0) {
    return {Kind::linear, std::move(w), offset, {}, 0};
  }
  static ScalarProfile half_norm_sq(std::size_t n) { return {Kind::half_norm_sq, {}, 0.0, {}, n}; }
  static ScalarProfile cone(Vector center) { return {Kind::cone, {}, 0.0, std::move(center), 0}; }

  std::size_t dimension() const {
    switch (kind) {
      case Kind::linear: return w.size();
      case Kind::cone: return center.size();
      case Kind::half_norm_sq: return dim;
    }
    return 0;
  }

  /// Jet as an N = 1 map.
  Jet2 jet(std::span<const double> x) const {
    const std::size_t n = x.size();
    Jet2 j(1, n);
    switch (kind) {
      case Kind::linear:
        if (w.size() != n) throw InvalidInput("linear scalar profile: w has wrong length");
        j.u[0] = dot(w, x) + offset;
        for (std::size_t i = 0; i < n; ++i) j.du(0, i) = w[i];
        break;
      case Kind::half_norm_sq:
        if (dim != n) throw InvalidInput("half-norm-sq scalar profile: point has wrong dimension");
        j.u[0] = 0.5 * dot(x, x);
        for (std::size_t i = 0; i < n; ++i) {
          j.du(0, i) = x[i];
          j.d2u(0, i, i) = 1.0;
        }
        break;
      case Kind::cone: {
        if (center.size() != n) throw InvalidInput("cone scalar profile: center has wrong length");
        Vector d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - center[i];
        const double r = norm(d);
        if (!(r > 0.0)) throw ComputeFailure("cone scalar profile is not differentiable at its center");
        j.u[0] = r;
        for (std::size_t i = 0; i < n; ++i) {
          j.du(0, i) = d[i] / r;
          for (std::size_t k = 0; k < n; ++k)
            j.d2u(0, i, k) = ((i == k ? 1.0 : 0.0) - d[i] * d[k] / (r * r)) / r;
        }
        break;
      }
    }
    return j;
  }
};

inline std::string_view to_string(ScalarProfile::Kind k) {
  switch (k) {
    case ScalarProfile::Kind::linear: return "linear";
    case ScalarProfile::Kind::half_norm_sq: return "half-norm-sq";
    case ScalarProfile::Kind::cone: return "cone";
  }
  return "?";
}

/// u = a + xi f(x): Du = xi (x) Df, D2u[alpha] = xi_alpha D2f.
inline Jet2 jet_rank1_scalar(std::span<const double> x, std::span<const double> a,
                             std::span<const double> xi, const ScalarProfile& f) {
  if (a.size() != xi.size()) throw InvalidInput("jet_rank1_scalar: a and xi differ in length");
  if (std::abs(norm(xi) - 1.0) > 1e-12) throw InvalidInput("jet_rank1_scalar: xi must be a unit vector");
  const Jet2 fj = f.jet(x);
  const std::size_t big_n = a.size(), n = x.size();
  Jet2 j(big_n, n);
  for (std::size_t al = 0; al < big_n; ++al) {
    j.u[al] = a[al] + xi[al] * fj.u[0];
    for (std::size_t i = 0; i < n; ++i) {
      j.du(al, i) = xi[al] * fj.du(0, i);
      for (std::size_t k = 0; k < n; ++k) j.d2u(al, i, k) = xi[al] * fj.d2u(0, i, k);
    }
  }
  return j;
}

/// Largest entry of |Q^T Q - I|.
inline double semi_orthogonality_defect(const Matrix& q) {
  const Matrix g = q.transposed() * q;
  double m = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t k = 0; k < g.cols(); ++k) m = std::max(m, std::abs(g(i, k) - (i == k ? 1.0 : 0.0)));
  return m;
}

/// Pushes a jet through the isometry v -> Q v + b.
inline Jet2 embed(const Jet2& j, const Matrix& q, std::span<const double> b) {
  if (q.cols() != j.target_dim() || q.rows() != b.size()) throw InvalidInput("embed: shape mismatch");
  if (const double defect = semi_orthogonality_defect(q); defect > 1e-12)
    throw InvalidInput("embed: Q^T Q deviates from I by " + std::to_string(defect));
  const std::size_t big_n = q.rows(), base = q.cols(), n = j.domain_dim();
  Jet2 out(big_n, n);
  out.u = q * std::span<const double>(j.u);
  for (std::size_t a = 0; a < big_n; ++a) out.u[a] += b[a];
  out.du = q * j.du;
  for (std::size_t a = 0; a < big_n; ++a)
    for (std::size_t c = 0; c < base; ++c) {
      const double qa = q(a, c);
      if (qa == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) out.d2u(a, i, k) += qa * j.d2u(c, i, k);
    }
  return out;
}

using MapEvaluator = std::function<Vector(std::span<const double>)>;

/// Central-difference jet, second order in h. Mixed derivatives use the
/// four-corner stencil; the Hessian is symmetrized.
inline Jet2 jet_finite_difference(const MapEvaluator& eval, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw InvalidInput("jet_finite_difference: step must be positive");
  const std::size_t n = x.size();
  Vector p(x.begin(), x.end());
  const Vector u0 = eval(p);
  const std::size_t big_n = u0.size();
  Jet2 j(big_n, n);
  j.u = u0;

  auto at = [&](std::size_t i, double di, std::size_t k, double dk) {
    Vector q(x.begin(), x.end());
    q[i] += di;
    q[k] += dk;
    Vector v = eval(q);
    if (v.size() != big_n) throw ComputeFailure("jet_finite_difference: evaluator changed output size");
    return v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Vector plus = at(i, h, i, 0.0);
    const Vector minus = at(i, -h, i, 0.0);
    for (std::size_t a = 0; a < big_n; ++a) {
      j.du(a, i) = (plus[a] - minus[a]) / (2.0 * h);
      j.d2u(a, i, i) = (plus[a] - 2.0 * u0[a] + minus[a]) / (h * h);
    }
    for (std::size_t k = i + 1; k < n; ++k) {
      const Vector pp = at(i, h, k, h), pm = at(i, h, k, -h), mp = at(i, -h, k, h), mm = at(i, -h, k, -h);
      for (std::size_t a = 0; a < big_n; ++a) {
        const double mixed = (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * h * h);
        j.d2u(a, i, k) = mixed;
        j.d2u(a, k, i) = mixed;
      }
    }
  }
  j.d2u.symmetrize();
  return j;
}

}  // namespace infharm
