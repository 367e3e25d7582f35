#pragma once

// Rank phases of a gridded map: per-node rank labels, the interface skeleton
// between phases, connected components, and the per-phase structure checks
// (eikonal constancy, u = a + xi f on rank <= 1 phases, straight images).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "infharm/error.hpp"
#include "infharm/grid.hpp"
#include "infharm/map_spec.hpp"
#include "infharm/parallel.hpp"
#include "infharm/residuals.hpp"
#include "infharm/tensor.hpp"

namespace infharm {

inline constexpr int kInterface = -1;
inline constexpr double kDefaultMarginFloor = 10.0;

struct ClassifyOptions {
  double tau_abs = kDefaultTauAbs;
  double tau_rel = kDefaultTauRel;
  double margin_floor = kDefaultMarginFloor;
};

struct Component {
  int id = 0;
  int label = 0;  // phase label: rank, with rank 0 folded into 1
  std::vector<std::size_t> nodes;
  std::vector<int> adjacent;  // components bordering a shared interface set
  bool boundary_truncated = false;
};

struct PhaseMap {
  Grid grid;
  std::vector<int> ranks;           // numerical rank per node
  std::vector<int> labels;          // phase label or kInterface
  std::vector<double> sigma_max;    // largest singular value per node
  std::vector<double> margins;
  std::vector<std::uint8_t> low_confidence;
  std::vector<int> component_of;    // -1 on interface nodes
  std::vector<Component> components;
  std::vector<std::vector<std::size_t>> interface_sets;
  std::vector<int> interface_set_of;  // -1 off the interface

  std::size_t interface_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kInterface));
  }

  std::size_t count_components(int label) const {
    return static_cast<std::size_t>(std::count_if(components.begin(), components.end(),
                                                  [label](const Component& c) { return c.label == label; }));
  }

  const Component& component(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= components.size())
      throw InvalidInput("phase map: no component with id " + std::to_string(id));
    return components[static_cast<std::size_t>(id)];
  }
};

namespace detail {

// Flood fill over nodes accepted by `member`, 2n-neighbour connectivity.
template <class Member>
std::vector<std::vector<std::size_t>> connected_sets(const Grid& grid, Member&& member, std::vector<int>& set_of) {
  std::vector<std::vector<std::size_t>> sets;
  set_of.assign(grid.size(), -1);
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < grid.size(); ++seed) {
    if (set_of[seed] != -1 || !member(seed)) continue;
    const int id = static_cast<int>(sets.size());
    sets.emplace_back();
    set_of[seed] = id;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      sets.back().push_back(node);
      grid.for_each_neighbor(node, [&](std::size_t nb) {
        if (set_of[nb] == -1 && member(nb) && member.same(seed, nb)) {
          set_of[nb] = id;
          queue.push_back(nb);
        }
      });
    }
    std::sort(sets.back().begin(), sets.back().end());
  }
  return sets;
}

}  // namespace detail

/// Labels every node by the numerical rank of Du and extracts phases.
///
/// A node becomes INTERFACE when an axis neighbour carries a different phase
/// label or its rank margin is below `margin_floor`. Rank-0 nodes join the
/// rank <= 1 phase.
inline PhaseMap classify(const MapSpec& spec, const Grid& grid, const ClassifyOptions& opt = {}) {
  check_thresholds(opt.tau_abs, opt.tau_rel);
  if (!(opt.margin_floor >= 1.0)) throw InvalidInput("classify: margin floor must be >= 1");
  if (grid.dim() != spec.domain_dim())
    throw InvalidInput("classify: grid dimension does not match the map's domain dimension");

  const std::size_t count = grid.size();
  PhaseMap pm;
  pm.grid = grid;
  pm.ranks.resize(count);
  pm.sigma_max.resize(count);
  pm.margins.resize(count);
  pm.low_confidence.resize(count);
  parallel_for(count, [&](std::size_t node) {
    const Jet2 j = node_jet(spec, grid, node, false);
    const RankDecision d = estimate_rank(j.du, opt.tau_abs, opt.tau_rel);
    pm.ranks[node] = static_cast<int>(d.rank);
    pm.sigma_max[node] = d.singular_values.front();
    pm.margins[node] = d.margin;
    pm.low_confidence[node] = d.margin < opt.margin_floor ? 1 : 0;
  });

  std::vector<int> raw(count);
  for (std::size_t node = 0; node < count; ++node) raw[node] = std::max(pm.ranks[node], 1);
  pm.labels = raw;
  for (std::size_t node = 0; node < count; ++node) {
    bool edge = pm.low_confidence[node] != 0;
    grid.for_each_neighbor(node, [&](std::size_t nb) { edge = edge || raw[nb] != raw[node]; });
    if (edge) pm.labels[node] = kInterface;
  }

  struct PhaseMember {
    const std::vector<int>& labels;
    bool operator()(std::size_t n) const { return labels[n] != kInterface; }
    bool same(std::size_t a, std::size_t b) const { return labels[a] == labels[b]; }
  };
  const auto sets = detail::connected_sets(grid, PhaseMember{pm.labels}, pm.component_of);
  for (std::size_t c = 0; c < sets.size(); ++c) {
    Component comp;
    comp.id = static_cast<int>(c);
    comp.label = pm.labels[sets[c].front()];
    comp.nodes = sets[c];
    comp.boundary_truncated =
        std::any_of(comp.nodes.begin(), comp.nodes.end(), [&](std::size_t n) { return grid.on_boundary(n); });
    pm.components.push_back(std::move(comp));
  }

  struct InterfaceMember {
    const std::vector<int>& labels;
    bool operator()(std::size_t n) const { return labels[n] == kInterface; }
    bool same(std::size_t, std::size_t) const { return true; }
  };
  pm.interface_sets = detail::connected_sets(grid, InterfaceMember{pm.labels}, pm.interface_set_of);

  // Components are adjacent when they touch the same interface set.
  std::vector<std::set<int>> touching(pm.interface_sets.size());
  for (std::size_t node = 0; node < count; ++node) {
    const int iset = pm.interface_set_of[node];
    if (iset < 0) continue;
    grid.for_each_neighbor(node, [&](std::size_t nb) {
      if (pm.component_of[nb] >= 0) touching[static_cast<std::size_t>(iset)].insert(pm.component_of[nb]);
    });
  }
  std::vector<std::set<int>> adjacency(pm.components.size());
  for (const auto& group : touching)
    for (int a : group)
      for (int b : group)
        if (a != b) adjacency[static_cast<std::size_t>(a)].insert(b);
  for (std::size_t c = 0; c < pm.components.size(); ++c)
    pm.components[c].adjacent.assign(adjacency[c].begin(), adjacency[c].end());
  return pm;
}

/// |Du|^2 constancy over a full-rank component.
inline EikonalFit verify_eikonal(const PhaseMap& pm, int component_id, const ResidualField& field) {
  const Component& comp = pm.component(component_id);
  if (comp.label != static_cast<int>(pm.grid.dim()))
    throw InvalidInput("verify_eikonal: component " + std::to_string(component_id) + " has rank " +
                       std::to_string(comp.label) + ", expected full rank " + std::to_string(pm.grid.dim()));
  if (field.samples.size() != pm.grid.size()) throw InvalidInput("verify_eikonal: field and phase map grids differ");
  std::vector<double> values;
  values.reserve(comp.nodes.size());
  for (std::size_t n : comp.nodes) values.push_back(field.samples[n].du_norm_sq);
  return eikonal_deviation(values);
}

/// u ~ a + xi f on a node set.
struct RankOneFit {
  Vector a;
  Vector xi;
  std::vector<std::size_t> nodes;
  std::vector<double> f;       // f at each node, same order as `nodes`
  std::vector<Vector> values;  // u at each node
  std::size_t anchor = 0;
  double max_residual = 0.0;
  bool degenerate = false;
};

/// Unit vector with its first non-negligible entry made positive.
inline Vector canonical_sign(Vector v) {
  for (double c : v)
    if (std::abs(c) > 1e-12) {
      if (c < 0.0)
        for (double& x : v) x = -x;
      break;
    }
  return v;
}

/// Fits u = a + xi f over `nodes`. xi is the dominant left singular vector of
/// Du at the node with the largest sigma_1; a = (I - xi xi^T) u(anchor).
inline RankOneFit fit_rank_one(const MapSpec& spec, const Grid& grid, std::span<const std::size_t> nodes,
                               double tau_abs = kDefaultTauAbs) {
  if (nodes.empty()) throw InvalidInput("fit_rank_one: empty node set");
  RankOneFit fit;
  fit.nodes.assign(nodes.begin(), nodes.end());
  fit.values.resize(nodes.size());
  std::vector<Vector> dominant(nodes.size());
  std::vector<double> s1(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) {
    const Jet2 j = node_jet(spec, grid, nodes[k], true);
    const Svd s = svd(j.du);
    fit.values[k] = j.u;
    s1[k] = s.sigma.front();
    dominant[k] = s.u.column(0);
  });

  const std::size_t best = static_cast<std::size_t>(std::max_element(s1.begin(), s1.end()) - s1.begin());
  fit.anchor = nodes[best];
  const std::size_t big_n = fit.values[best].size();
  const Vector& u0 = fit.values[best];

  if (s1[best] <= tau_abs) {
    fit.degenerate = true;
    fit.xi.assign(big_n, 0.0);
    fit.xi[0] = 1.0;
    fit.a = u0;
    fit.f.assign(nodes.size(), 0.0);
    for (const Vector& u : fit.values) {
      double d = 0.0;
      for (std::size_t a = 0; a < big_n; ++a) d += (u[a] - u0[a]) * (u[a] - u0[a]);
      fit.max_residual = std::max(fit.max_residual, std::sqrt(d));
    }
    return fit;
  }

  fit.xi = canonical_sign(dominant[best]);
  const double along = dot(fit.xi, u0);
  fit.a.resize(big_n);
  for (std::size_t a = 0; a < big_n; ++a) fit.a[a] = u0[a] - fit.xi[a] * along;

  fit.f.resize(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Vector& u = fit.values[k];
    double fk = 0.0;
    for (std::size_t a = 0; a < big_n; ++a) fk += fit.xi[a] * (u[a] - fit.a[a]);
    fit.f[k] = fk;
    double r = 0.0;
    for (std::size_t a = 0; a < big_n; ++a) {
      const double e = u[a] - fit.a[a] - fit.xi[a] * fk;
      r += e * e;
    }
    fit.max_residual = std::max(fit.max_residual, std::sqrt(r));
  }
  return fit;
}

inline RankOneFit fit_rank_one(const MapSpec& spec, const PhaseMap& pm, int component_id,
                               double tau_abs = kDefaultTauAbs) {
  const Component& comp = pm.component(component_id);
  if (comp.label > 1)
    throw InvalidInput("fit_rank_one: component " + std::to_string(component_id) + " has rank " +
                       std::to_string(comp.label) + " > 1");
  return fit_rank_one(spec, pm.grid, comp.nodes, tau_abs);
}

struct ScalarCheck {
  bool checkable = false;
  double sup = 0.0;
  std::size_t evaluated_nodes = 0;
};

/// Sup of |Df (x) Df : D2f| for the fitted scalar f, with f differentiated by
/// central differences on the grid at nodes whose full 3^n stencil lies in the
/// fitted node set. NOT-CHECKABLE when the set is less than 5 nodes across
/// along some axis or no such node exists.
inline ScalarCheck verify_scalar_infinity_harmonic(const RankOneFit& fit, const Grid& grid) {
  ScalarCheck out;
  const std::size_t n = grid.dim();
  std::vector<double> f_at(grid.size(), 0.0);
  std::vector<std::uint8_t> in(grid.size(), 0);
  std::vector<std::size_t> lo(n, SIZE_MAX), hi(n, 0);
  for (std::size_t k = 0; k < fit.nodes.size(); ++k) {
    f_at[fit.nodes[k]] = fit.f[k];
    in[fit.nodes[k]] = 1;
    const auto idx = grid.multi_index(fit.nodes[k]);
    for (std::size_t a = 0; a < n; ++a) {
      lo[a] = std::min(lo[a], idx[a]);
      hi[a] = std::max(hi[a], idx[a]);
    }
  }
  for (std::size_t a = 0; a < n; ++a)
    if (fit.nodes.empty() || hi[a] - lo[a] + 1 < 5) return out;

  // Offsets of the 3^n box around a node.
  std::vector<long> box;
  {
    const std::size_t total = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(n)));
    for (std::size_t code = 0; code < total; ++code) {
      long offset = 0;
      std::size_t c = code;
      for (std::size_t a = 0; a < n; ++a) {
        offset += (static_cast<long>(c % 3) - 1) * static_cast<long>(grid.stride(a));
        c /= 3;
      }
      box.push_back(offset);
    }
  }

  for (std::size_t node : fit.nodes) {
    const auto idx = grid.multi_index(node);
    bool interior = true;
    for (std::size_t a = 0; a < n && interior; ++a)
      interior = idx[a] > 0 && idx[a] + 1 < grid.axis(a).count;
    if (!interior) continue;
    for (long off : box)
      if (!in[static_cast<std::size_t>(static_cast<long>(node) + off)]) {
        interior = false;
        break;
      }
    if (!interior) continue;

    Jet2 j(1, n);
    const double f0 = f_at[node];
    j.u[0] = f0;
    for (std::size_t a = 0; a < n; ++a) {
      const double h = grid.axis(a).spacing();
      const std::size_t s = grid.stride(a);
      const double fp = f_at[node + s], fm = f_at[node - s];
      j.du(0, a) = (fp - fm) / (2.0 * h);
      j.d2u(0, a, a) = (fp - 2.0 * f0 + fm) / (h * h);
      for (std::size_t b = a + 1; b < n; ++b) {
        const double hb = grid.axis(b).spacing();
        const std::size_t t = grid.stride(b);
        const double mixed = (f_at[node + s + t] - f_at[node + s - t] - f_at[node - s + t] + f_at[node - s - t]) /
                             (4.0 * h * hb);
        j.d2u(0, a, b) = mixed;
        j.d2u(0, b, a) = mixed;
      }
    }
    out.sup = std::max(out.sup, std::abs(scalar_residual_at(j)));
    ++out.evaluated_nodes;
  }
  out.checkable = out.evaluated_nodes > 0;
  return out;
}

/// Largest distance from u(node) to the fitted line {a + t xi}; for a
/// degenerate fit, the distance to the constant point a.
inline double line_fit_image(const RankOneFit& fit) {
  double worst = 0.0;
  for (const Vector& u : fit.values) {
    Vector d(u.size());
    for (std::size_t a = 0; a < u.size(); ++a) d[a] = u[a] - fit.a[a];
    if (!fit.degenerate) {
      const double t = dot(d, fit.xi);
      for (std::size_t a = 0; a < u.size(); ++a) d[a] -= t * fit.xi[a];
    }
    worst = std::max(worst, norm(d));
  }
  return worst;
}

inline double line_fit_image(const MapSpec& spec, const PhaseMap& pm, int component_id,
                             double tau_abs = kDefaultTauAbs) {
  return line_fit_image(fit_rank_one(spec, pm, component_id, tau_abs));
}

struct InterfaceSetReport {
  std::size_t id = 0;
  std::size_t node_count = 0;
  double du_norm_sq_mean = 0.0;
  double du_norm_sq_max_dev = 0.0;
  int dominant_rank = 0;
  std::vector<std::pair<int, int>> adjacent;  // (component id, label)
  std::vector<std::size_t> junction_nodes;
};

struct InterfaceReport {
  std::vector<InterfaceSetReport> sets;
  std::size_t junction_count() const {
    std::size_t c = 0;
    for (const auto& s : sets) c += s.junction_nodes.size();
    return c;
  }
};

/// Per interface set: |Du|^2 statistics, the most common rank, bordering
/// components, and junction nodes (interface nodes with at least three distinct
/// components inside the Chebyshev ball of radius `junction_radius`).
inline InterfaceReport interface_report(const PhaseMap& pm, const ResidualField& field,
                                        std::size_t junction_radius = 2) {
  if (field.samples.size() != pm.grid.size()) throw InvalidInput("interface_report: field and phase map grids differ");
  const Grid& grid = pm.grid;
  const std::size_t n = grid.dim();
  InterfaceReport report;

  // Offsets within the Chebyshev ball, as per-axis displacements.
  std::vector<std::vector<long>> ball;
  {
    const long r = static_cast<long>(junction_radius);
    const std::size_t side = 2 * junction_radius + 1;
    std::size_t total = 1;
    for (std::size_t a = 0; a < n; ++a) total *= side;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<long> d(n);
      std::size_t c = code;
      for (std::size_t a = 0; a < n; ++a) {
        d[a] = static_cast<long>(c % side) - r;
        c /= side;
      }
      ball.push_back(std::move(d));
    }
  }

  for (std::size_t s = 0; s < pm.interface_sets.size(); ++s) {
    const auto& nodes = pm.interface_sets[s];
    InterfaceSetReport rep;
    rep.id = s;
    rep.node_count = nodes.size();
    std::vector<double> du;
    du.reserve(nodes.size());
    std::map<int, std::size_t> rank_count;
    std::set<int> adjacent;
    for (std::size_t node : nodes) {
      du.push_back(field.samples[node].du_norm_sq);
      ++rank_count[pm.ranks[node]];
      grid.for_each_neighbor(node, [&](std::size_t nb) {
        if (pm.component_of[nb] >= 0) adjacent.insert(pm.component_of[nb]);
      });

      const auto idx = grid.multi_index(node);
      std::set<int> seen;
      std::vector<std::size_t> probe(n);
      for (const auto& d : ball) {
        bool inside = true;
        for (std::size_t a = 0; a < n && inside; ++a) {
          const long v = static_cast<long>(idx[a]) + d[a];
          inside = v >= 0 && v < static_cast<long>(grid.axis(a).count);
          if (inside) probe[a] = static_cast<std::size_t>(v);
        }
        if (!inside) continue;
        const int c = pm.component_of[grid.linear_index(probe)];
        if (c >= 0) seen.insert(c);
      }
      if (seen.size() >= 3) rep.junction_nodes.push_back(node);
    }
    const EikonalFit e = eikonal_deviation(du);
    rep.du_norm_sq_mean = e.c_sq;
    rep.du_norm_sq_max_dev = e.max_dev;
    rep.dominant_rank = std::max_element(rank_count.begin(), rank_count.end(), [](const auto& a, const auto& b) {
                          return a.second < b.second;
                        })->first;
    for (int c : adjacent) rep.adjacent.emplace_back(c, pm.components[static_cast<std::size_t>(c)].label);
    report.sets.push_back(std::move(rep));
  }
  return report;
}

}  // namespace infharm
