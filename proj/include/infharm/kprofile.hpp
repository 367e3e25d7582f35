#pragma once

// Angle profiles K: R -> (-pi/2, pi/2) for the planar family
//   u(x, y) = int_y^x exp(i K(t)) dt,
// together with the adaptive quadrature used to evaluate u.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "infharm/error.hpp"

namespace infharm {

using Complex = std::complex<double>;

namespace quadrature {

inline constexpr double kDefaultTolerance = 1e-12;
inline constexpr int kMaxDepth = 40;

namespace detail {

template <class F>
Complex simpson_step(F& f, double a, double b, Complex fa, Complex fm, Complex fb, Complex whole,
                     double tol, int depth, int min_depth, bool& converged) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const Complex flm = f(lm);
  const Complex frm = f(rm);
  const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const Complex delta = left + right - whole;
  if (depth >= kMaxDepth) {
    converged = false;
    return left + right;
  }
  if (depth >= min_depth && std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, min_depth, converged) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, min_depth, converged);
}

}  // namespace detail

/// Adaptive Simpson with Richardson correction for a complex integrand on [a, b].
/// Throws ComputeFailure when the subdivision depth cap is hit.
template <class F>
Complex adaptive_simpson(F&& f, double a, double b, double tol = kDefaultTolerance) {
  if (a == b) return {0.0, 0.0};
  const Complex fa = f(a);
  const Complex fb = f(b);
  const Complex fm = f(0.5 * (a + b));
  const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  bool converged = true;
  const Complex result = detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 0, 2, converged);
  if (!converged)
    throw ComputeFailure("adaptive Simpson did not reach tolerance " + std::to_string(tol) +
                         " on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  return result;
}

}  // namespace quadrature

enum class KProfileKind { constant, plateau2, plateau3, smooth_bump, user_piecewise };

inline std::string_view to_string(KProfileKind k) {
  switch (k) {
    case KProfileKind::constant: return "constant";
    case KProfileKind::plateau2: return "plateau2";
    case KProfileKind::plateau3: return "plateau3";
    case KProfileKind::smooth_bump: return "smooth-bump";
    case KProfileKind::user_piecewise: return "user-piecewise";
  }
  return "?";
}

inline KProfileKind kprofile_kind_from_string(std::string_view s) {
  if (s == "constant") return KProfileKind::constant;
  if (s == "plateau2") return KProfileKind::plateau2;
  if (s == "plateau3") return KProfileKind::plateau3;
  if (s == "smooth-bump") return KProfileKind::smooth_bump;
  if (s == "user-piecewise") return KProfileKind::user_piecewise;
  throw InvalidInput("unknown K profile kind '" + std::string(s) + "'");
}

/// A C^1 angle profile.
///
/// Plateau kinds (plateau2, plateau3): `breakpoints` holds the plateau
/// intervals pairwise, [b0,b1], [b2,b3], ..., and `values` one level per
/// plateau. Consecutive plateaus are joined by a cubic Hermite step with zero
/// end slopes over the whole gap. Outside the outermost plateaus K keeps moving
/// monotonically along a saturating tail A s^2 / (1 + s^2), s = distance / width,
/// so no flat region other than the plateaus exists.
///
/// user-piecewise: `breakpoints` are knots and `values` the K value at each
/// knot; cubic Hermite steps between knots, tails with the amplitudes in
/// `tail_amplitudes` (zero means flat).
///
/// smooth-bump: K(t) = values[0] * exp(-((t - c) / width)^2), c = breakpoints[0] or 0.
///
/// constant: K = values[0].
class KProfile {
 public:
  KProfileKind kind = KProfileKind::constant;
  std::vector<double> breakpoints;
  std::vector<double> values{0.0};
  double width = 0.5;
  std::vector<double> tail_amplitudes;  // user-piecewise only: {left, right}

  static KProfile constant(double v) {
    KProfile k;
    k.kind = KProfileKind::constant;
    k.values = {v};
    k.finalize();
    return k;
  }

  /// Levels -0.4 on [-2,-1] and +0.4 on [1,2].
  static KProfile plateau2(double width = 0.5) {
    KProfile k;
    k.kind = KProfileKind::plateau2;
    k.breakpoints = {-2.0, -1.0, 1.0, 2.0};
    k.values = {-0.4, 0.4};
    k.width = width;
    k.finalize();
    return k;
  }

  /// Levels -0.4 on [-2.5,-1.5], 0 on [-0.5,0.5], +0.4 on [1.5,2.5].
  static KProfile plateau3(double width = 0.5) {
    KProfile k;
    k.kind = KProfileKind::plateau3;
    k.breakpoints = {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    k.values = {-0.4, 0.0, 0.4};
    k.width = width;
    k.finalize();
    return k;
  }

  static KProfile smooth_bump(double amplitude, double width, double center = 0.0) {
    KProfile k;
    k.kind = KProfileKind::smooth_bump;
    k.breakpoints = {center};
    k.values = {amplitude};
    k.width = width;
    k.finalize();
    return k;
  }

  static KProfile user_piecewise(std::vector<double> knots, std::vector<double> values,
                                 double width = 0.5, std::vector<double> tail_amplitudes = {0.0, 0.0}) {
    KProfile k;
    k.kind = KProfileKind::user_piecewise;
    k.breakpoints = std::move(knots);
    k.values = std::move(values);
    k.width = width;
    k.tail_amplitudes = std::move(tail_amplitudes);
    k.finalize();
    return k;
  }

  /// Validates the parameters and precomputes knots and cumulative integrals.
  /// Must be called after editing the public fields.
  void finalize() {
    knots_.clear();
    levels_.clear();
    cumulative_.clear();
    tail_left_ = tail_right_ = 0.0;
    if (!(width > 0.0) || !std::isfinite(width)) throw InvalidInput("K profile: width must be positive");
    for (double b : breakpoints)
      if (!std::isfinite(b)) throw InvalidInput("K profile: non-finite breakpoint");
    for (double v : values)
      if (!std::isfinite(v)) throw InvalidInput("K profile: non-finite value");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
      if (!(breakpoints[i] > breakpoints[i - 1]))
        throw InvalidInput("K profile: breakpoints must be strictly increasing");

    switch (kind) {
      case KProfileKind::constant:
        if (values.size() != 1) throw InvalidInput("K profile constant: expects one value");
        knots_ = {0.0};
        levels_ = {values[0]};
        break;
      case KProfileKind::plateau2:
      case KProfileKind::plateau3:
        build_plateaus();
        break;
      case KProfileKind::smooth_bump:
        if (values.size() != 1) throw InvalidInput("K profile smooth-bump: expects one amplitude");
        if (breakpoints.size() > 1) throw InvalidInput("K profile smooth-bump: at most one center");
        knots_ = {breakpoints.empty() ? 0.0 : breakpoints[0]};
        levels_ = {values[0]};
        break;
      case KProfileKind::user_piecewise:
        if (breakpoints.empty() || breakpoints.size() != values.size())
          throw InvalidInput("K profile user-piecewise: need one value per knot");
        if (tail_amplitudes.empty()) tail_amplitudes = {0.0, 0.0};
        if (tail_amplitudes.size() != 2) throw InvalidInput("K profile user-piecewise: tail_amplitudes needs 2 entries");
        knots_ = breakpoints;
        levels_ = values;
        tail_left_ = tail_amplitudes[0];
        tail_right_ = tail_amplitudes[1];
        break;
    }

    const double bound = sup_abs();
    if (!(bound < std::numbers::pi / 2))
      throw InvalidInput("K profile: sup|K| = " + std::to_string(bound) + " is not below pi/2");

    // E(t_j) = int_{t_0}^{t_j} exp(iK), reused by every evaluation of u.
    cumulative_.assign(knots_.size(), Complex{});
    for (std::size_t j = 1; j < knots_.size(); ++j)
      cumulative_[j] = cumulative_[j - 1] + segment_integral(j - 1, knots_[j - 1], knots_[j], 1e-14);
  }

  /// sup over R of |K|; tails approach but never reach level + amplitude.
  double sup_abs() const {
    if (kind == KProfileKind::smooth_bump) return std::abs(values[0]);
    double m = 0.0;
    for (double v : levels_) m = std::max(m, std::abs(v));
    if (!levels_.empty()) {
      m = std::max(m, std::abs(levels_.front() + tail_left_));
      m = std::max(m, std::abs(levels_.back() + tail_right_));
    }
    return m;
  }

  double value(double t) const { return eval(t).first; }
  double derivative(double t) const { return eval(t).second; }

  /// (K(t), K'(t)).
  std::pair<double, double> eval(double t) const {
    if (kind == KProfileKind::smooth_bump) {
      const double s = (t - knots_[0]) / width;
      const double k = values[0] * std::exp(-s * s);
      return {k, -2.0 * s / width * k};
    }
    if (kind == KProfileKind::constant) return {levels_[0], 0.0};
    if (t <= knots_.front()) {
      const double s = (knots_.front() - t) / width;
      const double q = 1.0 + s * s;
      return {levels_.front() + tail_left_ * s * s / q, -tail_left_ * 2.0 * s / (q * q * width)};
    }
    if (t >= knots_.back()) {
      const double s = (t - knots_.back()) / width;
      const double q = 1.0 + s * s;
      return {levels_.back() + tail_right_ * s * s / q, tail_right_ * 2.0 * s / (q * q * width)};
    }
    const std::size_t j = segment_of(t);
    const double len = knots_[j + 1] - knots_[j];
    const double s = (t - knots_[j]) / len;
    const double jump = levels_[j + 1] - levels_[j];
    return {levels_[j] + jump * s * s * (3.0 - 2.0 * s), jump * 6.0 * s * (1.0 - s) / len};
  }

  /// int_y^x exp(i K(t)) dt to absolute tolerance ~1e-12.
  Complex integral(double y, double x) const { return antiderivative(x) - antiderivative(y); }

  /// Plateau intervals and levels (empty for non-plateau kinds).
  struct Plateau {
    double lo, hi, level;
  };
  std::vector<Plateau> plateaus() const {
    std::vector<Plateau> out;
    if (kind == KProfileKind::plateau2 || kind == KProfileKind::plateau3)
      for (std::size_t p = 0; p < values.size(); ++p)
        out.push_back({breakpoints[2 * p], breakpoints[2 * p + 1], values[p]});
    return out;
  }

  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
  std::vector<double> levels_;
  std::vector<Complex> cumulative_;
  double tail_left_ = 0.0;
  double tail_right_ = 0.0;

  void build_plateaus() {
    if (breakpoints.size() != 2 * values.size() || values.empty())
      throw InvalidInput("K profile " + std::string(to_string(kind)) +
                         ": needs two breakpoints per plateau value");
    knots_ = breakpoints;
    levels_.clear();
    for (double v : values) {
      levels_.push_back(v);
      levels_.push_back(v);
    }
    // Tails keep the monotone trend of the neighbouring step; a single plateau
    // falls off to the left and rises to the right.
    const double front = values.front();
    const double back = values.back();
    const double left_dir = values.size() > 1 && values[1] < front ? 1.0 : -1.0;
    const double right_dir = values.size() > 1 && values[values.size() - 2] > back ? -1.0 : 1.0;
    tail_left_ = left_dir * 0.5 * (std::numbers::pi / 2 - std::abs(front));
    tail_right_ = right_dir * 0.5 * (std::numbers::pi / 2 - std::abs(back));
  }

  std::size_t segment_of(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    std::size_t j = static_cast<std::size_t>(it - knots_.begin());
    j = j == 0 ? 0 : j - 1;
    return std::min(j, knots_.size() - 2);
  }

  Complex integrand(double t) const {
    const double k = value(t);
    return {std::cos(k), std::sin(k)};
  }

  // Integral over [a, b] lying inside one smooth piece; flat pieces are exact.
  Complex segment_integral(std::size_t j, double a, double b, double tol) const {
    if (levels_[j] == levels_[j + 1]) return (b - a) * Complex{std::cos(levels_[j]), std::sin(levels_[j])};
    return quadrature::adaptive_simpson([this](double t) { return integrand(t); }, a, b, tol);
  }

  Complex antiderivative(double t) const {
    constexpr double tol = 2.5e-13;
    if (kind == KProfileKind::constant) return t * Complex{std::cos(levels_[0]), std::sin(levels_[0])};
    if (kind == KProfileKind::smooth_bump || knots_.size() == 1) {
      if (kind != KProfileKind::smooth_bump && t < knots_[0] && tail_left_ == 0.0)
        return (t - knots_[0]) * Complex{std::cos(levels_[0]), std::sin(levels_[0])};
      if (kind != KProfileKind::smooth_bump && t > knots_[0] && tail_right_ == 0.0)
        return (t - knots_[0]) * Complex{std::cos(levels_[0]), std::sin(levels_[0])};
      return quadrature::adaptive_simpson([this](double s) { return integrand(s); }, knots_[0], t, tol);
    }
    if (t <= knots_.front()) {
      if (tail_left_ == 0.0) return (t - knots_.front()) * Complex{std::cos(levels_.front()), std::sin(levels_.front())};
      return quadrature::adaptive_simpson([this](double s) { return integrand(s); }, knots_.front(), t, tol);
    }
    if (t >= knots_.back()) {
      const Complex base = cumulative_.back();
      if (tail_right_ == 0.0) return base + (t - knots_.back()) * Complex{std::cos(levels_.back()), std::sin(levels_.back())};
      return base + quadrature::adaptive_simpson([this](double s) { return integrand(s); }, knots_.back(), t, tol);
    }
    const std::size_t j = segment_of(t);
    // Integrate from whichever end of the segment is closer.
    if (t - knots_[j] <= knots_[j + 1] - t) return cumulative_[j] + segment_integral(j, knots_[j], t, tol);
    return cumulative_[j + 1] - segment_integral(j, t, knots_[j + 1], tol);
  }
};

}  // namespace infharm
