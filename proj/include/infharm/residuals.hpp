#pragma once

// The infinity-Laplace residual and its split into a tangential part
// Du D(|Du|^2 / 2) and a normal part |Du|^2 [Du]^perp Laplacian(u).

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infharm/error.hpp"
#include "infharm/grid.hpp"
#include "infharm/jets.hpp"
#include "infharm/map_spec.hpp"
#include "infharm/parallel.hpp"
#include "infharm/tensor.hpp"

namespace infharm {

struct ResidualSample {
  Vector full;
  Vector tangential;
  Vector normal;
  double du_norm_sq = 0.0;
  RankDecision rank;
};

/// D(|Du|^2 / 2)_j = sum_{beta,i} D_i u_beta D2_ij u_beta.
inline Vector grad_half_du_sq(const Jet2& j) {
  const std::size_t big_n = j.target_dim(), n = j.domain_dim();
  Vector g(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t b = 0; b < big_n; ++b)
      for (std::size_t i = 0; i < n; ++i) g[k] += j.du(b, i) * j.d2u(b, i, k);
  return g;
}

/// Laplacian sum_i D2_ii u.
inline Vector laplacian(const Jet2& j) {
  Vector l(j.target_dim(), 0.0);
  for (std::size_t a = 0; a < j.target_dim(); ++a)
    for (std::size_t i = 0; i < j.domain_dim(); ++i) l[a] += j.d2u(a, i, i);
  return l;
}

inline ResidualSample residual_at(const Jet2& j, double tau_abs = kDefaultTauAbs,
                                  double tau_rel = kDefaultTauRel) {
  const std::size_t big_n = j.target_dim();
  const Svd s = svd(j.du);
  ResidualSample r;
  r.rank = decide_rank(s.sigma, tau_abs, tau_rel);
  r.du_norm_sq = frobenius_norm_sq(j.du);

  const Vector g = grad_half_du_sq(j);
  r.tangential = j.du * std::span<const double>(g);

  const Matrix p = range_complement_projection(s, r.rank.rank);
  r.normal = p * std::span<const double>(laplacian(j));
  for (double& v : r.normal) v *= r.du_norm_sq;

  r.full.resize(big_n);
  for (std::size_t a = 0; a < big_n; ++a) r.full[a] = r.tangential[a] + r.normal[a];
  return r;
}

/// Aronsson operator (Df (x) Df) : D2f of a scalar jet.
inline double scalar_residual_at(const Jet2& f) {
  if (f.target_dim() != 1)
    throw InvalidInput("scalar_residual_at: expected N = 1, got N = " + std::to_string(f.target_dim()));
  const std::size_t n = f.domain_dim();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) s += f.du(0, i) * f.du(0, k) * f.d2u(0, i, k);
  return s;
}

/// Curves (n = 1): the system collapses to |u'|^2 u''.
inline Vector one_d_residual_at(const Jet2& u) {
  if (u.domain_dim() != 1)
    throw InvalidInput("one_d_residual_at: expected n = 1, got n = " + std::to_string(u.domain_dim()));
  const double speed_sq = frobenius_norm_sq(u.du);
  Vector r(u.target_dim());
  for (std::size_t a = 0; a < r.size(); ++a) r[a] = speed_sq * u.d2u(a, 0, 0);
  return r;
}

struct EikonalFit {
  double c_sq = 0.0;
  double max_dev = 0.0;
};

/// Mean of |Du|^2 samples and the largest deviation from it.
inline EikonalFit eikonal_deviation(std::span<const double> du_norm_sq) {
  if (du_norm_sq.empty()) throw InvalidInput("eikonal_deviation: empty sample set");
  double sum = 0.0;
  for (double v : du_norm_sq) sum += v;
  EikonalFit fit;
  fit.c_sq = sum / static_cast<double>(du_norm_sq.size());
  for (double v : du_norm_sq) fit.max_dev = std::max(fit.max_dev, std::abs(v - fit.c_sq));
  return fit;
}

struct SupNorms {
  double full = 0.0;
  double tangential = 0.0;
  double normal = 0.0;
  // Largest absolute entry over all nodes and components.
  double full_component = 0.0;
  double tangential_component = 0.0;
  double normal_component = 0.0;
};

struct ResidualField {
  Grid grid;
  std::vector<ResidualSample> samples;
  SupNorms sup;
};

inline SupNorms sup_norms(std::span<const ResidualSample> samples) {
  SupNorms s;
  for (const auto& r : samples) {
    s.full = std::max(s.full, norm(r.full));
    s.tangential = std::max(s.tangential, norm(r.tangential));
    s.normal = std::max(s.normal, norm(r.normal));
    s.full_component = std::max(s.full_component, max_abs(r.full));
    s.tangential_component = std::max(s.tangential_component, max_abs(r.tangential));
    s.normal_component = std::max(s.normal_component, max_abs(r.normal));
  }
  return s;
}

/// Jet at a grid node; compute failures are rethrown with the node's location.
inline Jet2 node_jet(const MapSpec& spec, const Grid& grid, std::size_t node, bool with_value) {
  const Vector x = grid.point(node);
  try {
    return spec.jet(x, with_value);
  } catch (const ComputeFailure& e) {
    std::string where = "node " + std::to_string(node) + " at (";
    for (std::size_t k = 0; k < x.size(); ++k) where += (k ? ", " : "") + std::to_string(x[k]);
    throw ComputeFailure(std::string(e.what()) + " [" + where + ")]");
  }
}

/// Residual at every grid node.
inline ResidualField residual_field(const MapSpec& spec, const Grid& grid, double tau_abs = kDefaultTauAbs,
                                    double tau_rel = kDefaultTauRel) {
  check_thresholds(tau_abs, tau_rel);
  if (grid.dim() != spec.domain_dim())
    throw InvalidInput("residual_field: grid dimension " + std::to_string(grid.dim()) +
                       " does not match the map's domain dimension " + std::to_string(spec.domain_dim()));
  ResidualField field;
  field.grid = grid;
  field.samples.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t node) {
    field.samples[node] = residual_at(node_jet(spec, grid, node, false), tau_abs, tau_rel);
  });
  field.sup = sup_norms(field.samples);
  return field;
}

}  // namespace infharm
