#pragma once

// Gradient flows of a map along a fixed target direction xi:
//   plain     gamma' = xi^T Du(gamma)
//   modified  gamma' = |Du|^2 / |xi^T Du|^2 * xi^T Du(gamma)
// integrated by fixed-step RK4 forward and backward from gamma(0) = x.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "infharm/error.hpp"
#include "infharm/grid.hpp"
#include "infharm/jets.hpp"
#include "infharm/map_spec.hpp"
#include "infharm/residuals.hpp"
#include "infharm/tensor.hpp"

namespace infharm {

enum class FlowVariant { plain, modified };

inline std::string_view to_string(FlowVariant v) { return v == FlowVariant::plain ? "plain" : "modified"; }

inline FlowVariant flow_variant_from_string(std::string_view s) {
  if (s == "plain") return FlowVariant::plain;
  if (s == "modified") return FlowVariant::modified;
  throw InvalidInput("unknown flow variant '" + std::string(s) + "'");
}

// stopped_unresolved: the fixed step no longer resolves the field (step-doubling
// error estimate above FlowSpec::step_tol), typically just before the flow
// reaches the singular set where xi^T Du vanishes.
enum class Termination { completed, stopped_singular, stopped_unresolved, left_domain };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::stopped_singular: return "stopped-singular";
    case Termination::stopped_unresolved: return "stopped-unresolved";
    case Termination::left_domain: return "left-domain";
  }
  return "?";
}

struct Box {
  Vector lo, hi;

  static Box of(const Grid& g) {
    Box b;
    for (std::size_t k = 0; k < g.dim(); ++k) {
      b.lo.push_back(g.axis(k).min);
      b.hi.push_back(g.axis(k).max);
    }
    return b;
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t k = 0; k < x.size(); ++k)
      if (!(x[k] >= lo[k] && x[k] <= hi[k])) return false;
    return true;
  }
};

struct FlowSpec {
  FlowVariant variant = FlowVariant::plain;
  Vector start;
  Vector xi;
  double t_min = -1.0;
  double t_max = 1.0;
  double dt = 1e-3;
  double eps_stop = 1e-6;
  double step_tol = 1e-11;

  void validate() const {
    if (start.empty()) throw InvalidInput("flow: empty start point");
    if (xi.empty()) throw InvalidInput("flow: empty direction");
    for (double v : start)
      if (!std::isfinite(v)) throw InvalidInput("flow: non-finite start point");
    if (std::abs(norm(xi) - 1.0) > 1e-12) throw InvalidInput("flow: xi must be a unit vector");
    if (!(t_min < 0.0 && t_max > 0.0)) throw InvalidInput("flow: need t_min < 0 < t_max");
    if (!(dt > 0.0)) throw InvalidInput("flow: dt must be positive");
    if (dt > (t_max - t_min) / 10.0) throw InvalidInput("flow: dt must be at most (t_max - t_min) / 10");
    if (!(eps_stop > 0.0)) throw InvalidInput("flow: eps_stop must be positive");
    if (!(step_tol > 0.0)) throw InvalidInput("flow: step_tol must be positive");
  }
};

struct FlowSample {
  double t = 0.0;
  Vector x;
  double du_norm_sq = 0.0;
  double xi_u = 0.0;  // xi^T u(gamma(t))
};

struct FlowDiagnostics {
  double max_drift = 0.0;            // max | |Du|^2 - |Du(x)|^2 |
  double max_second_difference = 0.0;  // max |s[k+1] - 2 s[k] + s[k-1]| / dt^2 for s = xi^T u
  std::size_t monotonicity_violations = 0;
};

struct FlowTrajectory {
  FlowSpec spec;
  std::vector<FlowSample> samples;  // increasing t, one uniform step apart
  std::size_t origin = 0;           // index of t = 0
  Termination forward = Termination::completed;
  Termination backward = Termination::completed;
  FlowDiagnostics diagnostics;

  /// Worst of the two branch outcomes.
  Termination termination() const {
    for (Termination t : {Termination::stopped_singular, Termination::stopped_unresolved})
      if (forward == t || backward == t) return t;
    if (forward == Termination::left_domain || backward == Termination::left_domain)
      return Termination::left_domain;
    return Termination::completed;
  }
};

/// xi^T Du as an n-vector.
inline Vector xi_transpose_du(std::span<const double> xi, const Matrix& du) {
  Vector w(du.cols(), 0.0);
  for (std::size_t a = 0; a < du.rows(); ++a)
    for (std::size_t i = 0; i < du.cols(); ++i) w[i] += xi[a] * du(a, i);
  return w;
}

/// Velocity scale: 1 for the plain flow, |Du|^2 / |xi^T Du|^2 for the modified one.
inline double flow_scale(FlowVariant v, const Matrix& du, std::span<const double> w) {
  if (v == FlowVariant::plain) return 1.0;
  return frobenius_norm_sq(du) / dot(w, w);
}

inline std::size_t check_monotone_increasing(const FlowTrajectory& traj, double slack = 1e-10) {
  std::size_t bad = 0;
  for (std::size_t k = 1; k < traj.samples.size(); ++k)
    if (traj.samples[k].xi_u < traj.samples[k - 1].xi_u - slack) ++bad;
  return bad;
}

inline FlowDiagnostics flow_diagnostics(const FlowTrajectory& traj) {
  FlowDiagnostics d;
  const auto& s = traj.samples;
  if (s.empty()) return d;
  const double ref = s[traj.origin].du_norm_sq;
  for (const auto& p : s) d.max_drift = std::max(d.max_drift, std::abs(p.du_norm_sq - ref));
  const double dt2 = traj.spec.dt * traj.spec.dt;
  for (std::size_t k = 1; k + 1 < s.size(); ++k)
    d.max_second_difference =
        std::max(d.max_second_difference, std::abs(s[k + 1].xi_u - 2.0 * s[k].xi_u + s[k - 1].xi_u) / dt2);
  d.monotonicity_violations = check_monotone_increasing(traj);
  return d;
}

/// Integrates both branches of the flow. Throws InvalidInput when the start
/// lies outside `box` or, for the modified flow, when |xi^T Du(x)| <= eps_stop.
inline FlowTrajectory integrate_flow(const MapSpec& spec, const FlowSpec& fs, const Box& box) {
  fs.validate();
  const std::size_t n = spec.domain_dim(), big_n = spec.target_dim();
  if (fs.start.size() != n)
    throw InvalidInput("flow: start has dimension " + std::to_string(fs.start.size()) + ", expected " +
                       std::to_string(n));
  if (fs.xi.size() != big_n)
    throw InvalidInput("flow: xi has dimension " + std::to_string(fs.xi.size()) + ", expected " +
                       std::to_string(big_n));
  if (box.lo.size() != n || !box.contains(fs.start)) throw InvalidInput("flow: start point outside the domain box");

  const Jet2 j0 = spec.jet(fs.start, false);
  const double speed0 = norm(xi_transpose_du(fs.xi, j0.du));
  if (fs.variant == FlowVariant::modified && !(speed0 > fs.eps_stop))
    throw InvalidInput("flow: |xi^T Du(x)| = " + std::to_string(speed0) + " does not exceed eps_stop; xi is normal to the image");

  struct Stage {
    Vector v;
    bool singular = false;
  };
  auto velocity = [&](std::span<const double> x, double sign) {
    const Jet2 j = spec.jet(x, false);
    Vector w = xi_transpose_du(fs.xi, j.du);
    if (!(norm(w) >= fs.eps_stop)) return Stage{{}, true};
    const double s = sign * flow_scale(fs.variant, j.du, w);
    for (double& c : w) c *= s;
    return Stage{std::move(w), false};
  };
  auto sample_at = [&](double t, const Vector& x) {
    const Jet2 j = spec.jet(x, true);
    return FlowSample{t, x, frobenius_norm_sq(j.du), dot(fs.xi, j.u)};
  };

  // One classical RK4 step of size h; false when a stage hits |xi^T Du| < eps_stop.
  auto rk4 = [&](const Vector& x, double h, double sign, Vector& out) {
    Vector tmp(n);
    auto shifted = [&](const Vector& v, double c) {
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + c * v[i];
      return tmp;
    };
    const Stage k1 = velocity(x, sign);
    if (k1.singular) return false;
    const Stage k2 = velocity(shifted(k1.v, 0.5 * h), sign);
    if (k2.singular) return false;
    const Stage k3 = velocity(shifted(k2.v, 0.5 * h), sign);
    if (k3.singular) return false;
    const Stage k4 = velocity(shifted(k3.v, h), sign);
    if (k4.singular) return false;
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h / 6.0 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    return true;
  };

  // The full step is kept; two half steps only estimate its local error.
  auto branch = [&](double sign, double horizon, std::vector<FlowSample>& out) {
    const auto steps = static_cast<std::size_t>(std::floor(horizon / fs.dt + 1e-9));
    Vector x = fs.start, next, mid, fine;
    for (std::size_t k = 1; k <= steps; ++k) {
      if (!rk4(x, fs.dt, sign, next) || !rk4(x, 0.5 * fs.dt, sign, mid) || !rk4(mid, 0.5 * fs.dt, sign, fine))
        return Termination::stopped_singular;
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) err += (next[i] - fine[i]) * (next[i] - fine[i]);
      if (!(std::sqrt(err) * 16.0 / 15.0 <= fs.step_tol)) return Termination::stopped_unresolved;
      if (!box.contains(next)) return Termination::left_domain;
      x = next;
      out.push_back(sample_at(sign * static_cast<double>(k) * fs.dt, x));
    }
    return Termination::completed;
  };

  FlowTrajectory traj;
  traj.spec = fs;
  std::vector<FlowSample> fwd, bwd;
  traj.forward = branch(1.0, fs.t_max, fwd);
  traj.backward = branch(-1.0, -fs.t_min, bwd);
  traj.samples.reserve(fwd.size() + bwd.size() + 1);
  traj.samples.assign(bwd.rbegin(), bwd.rend());
  traj.origin = traj.samples.size();
  traj.samples.push_back(sample_at(0.0, fs.start));
  traj.samples.insert(traj.samples.end(), fwd.begin(), fwd.end());
  for (const auto& s : traj.samples)
    if (!std::isfinite(s.du_norm_sq) || !std::isfinite(s.xi_u))
      throw ComputeFailure("flow: non-finite sample at t = " + std::to_string(s.t));
  traj.diagnostics = flow_diagnostics(traj);
  return traj;
}

namespace detail {

/// Time derivative of uniformly spaced samples: centered inside, second-order
/// one-sided at the ends.
inline Vector sample_derivative(std::span<const double> f, double dt) {
  const std::size_t m = f.size();
  Vector d(m);
  for (std::size_t k = 1; k + 1 < m; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
  d[m - 1] = (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * dt);
  return d;
}

inline void require_samples(const FlowTrajectory& traj, const char* who) {
  if (traj.samples.size() < 5)
    throw InvalidInput(std::string(who) + ": need at least 5 trajectory samples, got " +
                       std::to_string(traj.samples.size()));
}

}  // namespace detail

struct IdentityCheck {
  double max_defect = 0.0;
  double max_lhs = 0.0;
  double max_rhs = 0.0;
  Vector defects;  // per sample
};

/// d/dt (|Du(gamma)|^2 / 2) against (scale xi^T Du (x) Du : D2u)(gamma), the
/// left side by finite differences in t, the right side from jets.
inline IdentityCheck check_energy_identity(const MapSpec& spec, const FlowTrajectory& traj) {
  detail::require_samples(traj, "energy identity");
  const auto& s = traj.samples;
  Vector half(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) half[k] = 0.5 * s[k].du_norm_sq;
  const Vector lhs = detail::sample_derivative(half, traj.spec.dt);
  IdentityCheck out;
  out.defects.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Jet2 j = spec.jet(s[k].x, false);
    const Vector w = xi_transpose_du(traj.spec.xi, j.du);
    const double rhs = flow_scale(traj.spec.variant, j.du, w) * dot(w, grad_half_du_sq(j));
    out.defects[k] = std::abs(lhs[k] - rhs);
    out.max_defect = std::max(out.max_defect, out.defects[k]);
    out.max_lhs = std::max(out.max_lhs, std::abs(lhs[k]));
    out.max_rhs = std::max(out.max_rhs, std::abs(rhs));
  }
  return out;
}

struct RateCheck {
  double max_defect = 0.0;          // | d/dt xi^T u - |Du|^2 |
  double max_printed_defect = 0.0;  // | |d/dt xi^T Du| - |Du|^2 |
  Vector defects;
};

/// Modified flow: d/dt (xi^T u(gamma)) = |Du(gamma)|^2. The literal covector
/// form d/dt (xi^T Du(gamma)) is measured alongside, by its norm.
inline RateCheck check_rate_identity(const MapSpec& spec, const FlowTrajectory& traj) {
  detail::require_samples(traj, "rate identity");
  const auto& s = traj.samples;
  const std::size_t m = s.size(), n = spec.domain_dim();
  Vector xu(m);
  std::vector<Vector> cov(n, Vector(m));
  for (std::size_t k = 0; k < m; ++k) {
    xu[k] = s[k].xi_u;
    const Vector w = xi_transpose_du(traj.spec.xi, spec.jet(s[k].x, false).du);
    for (std::size_t i = 0; i < n; ++i) cov[i][k] = w[i];
  }
  const Vector rate = detail::sample_derivative(xu, traj.spec.dt);
  std::vector<Vector> cov_rate;
  for (const auto& c : cov) cov_rate.push_back(detail::sample_derivative(c, traj.spec.dt));
  RateCheck out;
  out.defects.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.defects[k] = std::abs(rate[k] - s[k].du_norm_sq);
    out.max_defect = std::max(out.max_defect, out.defects[k]);
    double c2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) c2 += cov_rate[i][k] * cov_rate[i][k];
    out.max_printed_defect = std::max(out.max_printed_defect, std::abs(std::sqrt(c2) - s[k].du_norm_sq));
  }
  return out;
}

}  // namespace infharm
