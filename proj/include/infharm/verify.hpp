#pragma once

// The full check battery on one map: residual field, rank phases, per-component
// verdicts, interface report and optional flow diagnostics.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "infharm/flow.hpp"
#include "infharm/io.hpp"
#include "infharm/phase.hpp"
#include "infharm/residuals.hpp"

namespace infharm {

inline constexpr const char* kVersion = "0.1.0";

enum class CheckStatus { pass, fail, not_checkable };

inline std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_checkable: return "not-checkable";
  }
  return "?";
}

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  double value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

/// value <= tolerance passes; NaN fails.
inline Check bound_check(std::string name, double value, double tolerance, std::string note = {}) {
  return {std::move(name), value <= tolerance ? CheckStatus::pass : CheckStatus::fail, value, tolerance,
          std::move(note)};
}

struct VerifyTolerances {
  double residual = 1e-9;
  double eikonal = 1e-10;
  double rank1_fit = 1e-8;
  double line_fit = 1e-8;
  double scalar = 1e-6;
  double interface_du = 1e-9;
  double flow_drift = 1e-6;
  double flow_affinity = 1e-4;
  double flow_identity = 1e-6;
};

struct PhaseVerdict {
  int component = 0;
  int label = 0;
  std::size_t node_count = 0;
  bool boundary_truncated = false;
  std::optional<EikonalFit> eikonal;
  std::optional<RankOneFit> rank1;
  std::vector<Check> checks;
};

struct FlowSummary {
  FlowTrajectory trajectory;
  std::optional<IdentityCheck> energy;
  std::optional<RateCheck> rate;
  std::vector<Check> checks;
};

struct VerifyReport {
  Json map;
  Grid grid;
  SupNorms sup;
  std::vector<Check> checks;  // global checks (residual, interface sets)
  std::vector<std::size_t> components_by_label;  // index = label
  std::vector<std::size_t> nodes_by_label;
  std::size_t interface_nodes = 0;
  std::vector<PhaseVerdict> verdicts;
  InterfaceReport interface;
  std::vector<FlowSummary> flows;
  bool pass = false;
  double wall_seconds = 0.0;
};

/// Trajectory diagnostics checked against the tolerances. Conservation always;
/// monotonicity for the plain flow; affinity and the rate identity for the
/// modified flow; the energy identity when there are enough samples.
inline FlowSummary summarize_flow(const MapSpec& spec, FlowTrajectory traj, const VerifyTolerances& tol) {
  FlowSummary s;
  const auto& d = traj.diagnostics;
  s.checks.push_back(bound_check("flow-conservation", d.max_drift, tol.flow_drift));
  if (traj.spec.variant == FlowVariant::plain) {
    s.checks.push_back(bound_check("flow-monotone", static_cast<double>(d.monotonicity_violations), 0.0,
                                   "count of decreasing steps of xi^T u"));
  } else {
    s.checks.push_back(bound_check("flow-affinity", d.max_second_difference, tol.flow_affinity));
  }
  if (traj.samples.size() >= 5) {
    s.energy = check_energy_identity(spec, traj);
    s.checks.push_back(bound_check("flow-energy-identity", s.energy->max_defect, tol.flow_identity));
    if (traj.spec.variant == FlowVariant::modified) {
      s.rate = check_rate_identity(spec, traj);
      s.checks.push_back(bound_check("flow-rate-identity", s.rate->max_defect, tol.flow_identity));
    }
  } else {
    s.checks.push_back({"flow-energy-identity", CheckStatus::not_checkable, 0.0, tol.flow_identity,
                        "fewer than 5 samples"});
  }
  s.trajectory = std::move(traj);
  return s;
}

namespace detail {

inline bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (c.status == CheckStatus::fail) return false;
  return true;
}

/// Short modified flow from the best-conditioned node of an intermediate-rank
/// component along its dominant image direction.
inline FlowSummary intermediate_rank_flow(const MapSpec& spec, const PhaseMap& pm, const Component& comp,
                                          const VerifyTolerances& tol) {
  std::size_t anchor = comp.nodes.front();
  for (std::size_t n : comp.nodes)
    if (pm.sigma_max[n] > pm.sigma_max[anchor]) anchor = n;
  FlowSpec fs;
  fs.variant = FlowVariant::modified;
  fs.start = pm.grid.point(anchor);
  fs.xi = canonical_sign(svd(spec.jet(fs.start, false).du).u.column(0));
  fs.t_min = -0.1;
  fs.t_max = 0.1;
  return summarize_flow(spec, integrate_flow(spec, fs, Box::of(pm.grid)), tol);
}

}  // namespace detail

/// Runs every applicable check. `flows` are optional extra trajectories.
inline VerifyReport verify(const MapSpec& spec, const Grid& grid, const ClassifyOptions& opt,
                           const VerifyTolerances& tol, const std::vector<FlowSpec>& flows = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  rep.map = to_json(spec);
  rep.grid = grid;

  const ResidualField field = residual_field(spec, grid, opt.tau_abs, opt.tau_rel);
  rep.sup = field.sup;
  rep.checks.push_back(bound_check("residual", field.sup.full, tol.residual, "sup of |full residual|"));

  const PhaseMap pm = classify(spec, grid, opt);
  const std::size_t n = grid.dim();
  rep.components_by_label.assign(n + 1, 0);
  rep.nodes_by_label.assign(n + 1, 0);
  rep.interface_nodes = pm.interface_count();
  for (const auto& c : pm.components) {
    ++rep.components_by_label[static_cast<std::size_t>(c.label)];
    rep.nodes_by_label[static_cast<std::size_t>(c.label)] += c.nodes.size();
  }

  for (const auto& comp : pm.components) {
    PhaseVerdict v;
    v.component = comp.id;
    v.label = comp.label;
    v.node_count = comp.nodes.size();
    v.boundary_truncated = comp.boundary_truncated;
    if (comp.label == static_cast<int>(n)) {
      v.eikonal = verify_eikonal(pm, comp.id, field);
      v.checks.push_back(bound_check("eikonal", v.eikonal->max_dev, tol.eikonal, "max | |Du|^2 - C^2 |"));
    }
    if (comp.label <= 1) {
      v.rank1 = fit_rank_one(spec, pm, comp.id, opt.tau_abs);
      v.checks.push_back(bound_check("rank1-fit", v.rank1->max_residual, tol.rank1_fit,
                                     v.rank1->degenerate ? "degenerate: constant map" : ""));
      v.checks.push_back(bound_check("line-fit", line_fit_image(*v.rank1), tol.line_fit));
      const ScalarCheck sc = verify_scalar_infinity_harmonic(*v.rank1, grid);
      if (sc.checkable)
        v.checks.push_back(bound_check("scalar-infinity-harmonic", sc.sup, tol.scalar));
      else
        v.checks.push_back({"scalar-infinity-harmonic", CheckStatus::not_checkable, 0.0, tol.scalar,
                            "component thinner than the 5-node stencil"});
    }
    if (comp.label > 1 && comp.label < static_cast<int>(n)) {
      FlowSummary fsum = detail::intermediate_rank_flow(spec, pm, comp, tol);
      for (auto c : fsum.checks) {
        c.name = "phase-" + c.name;
        v.checks.push_back(std::move(c));
      }
    }
    rep.verdicts.push_back(std::move(v));
  }

  rep.interface = interface_report(pm, field);
  for (const auto& s : rep.interface.sets)
    rep.checks.push_back(bound_check("interface-" + std::to_string(s.id) + "-du-constant", s.du_norm_sq_max_dev,
                                     tol.interface_du));

  for (const auto& fs : flows) rep.flows.push_back(summarize_flow(spec, integrate_flow(spec, fs, Box::of(grid)), tol));

  rep.pass = detail::all_pass(rep.checks);
  for (const auto& v : rep.verdicts) rep.pass = rep.pass && detail::all_pass(v.checks);
  for (const auto& f : rep.flows) rep.pass = rep.pass && detail::all_pass(f.checks);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline Json to_json(const Check& c) {
  Json j;
  j["name"] = c.name;
  j["status"] = to_string(c.status);
  j["value"] = c.value;
  j["tolerance"] = c.tolerance;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

inline Json to_json(const std::vector<Check>& checks) {
  Json a = Json::array();
  for (const auto& c : checks) a.push_back(to_json(c));
  return a;
}

inline Json to_json(const Grid& g) {
  Json a = Json::array();
  for (const auto& ax : g.axes()) a.push_back({{"min", ax.min}, {"max", ax.max}, {"count", ax.count}});
  return a;
}

inline Json to_json(const SupNorms& s) {
  return {{"full", s.full},
          {"tangential", s.tangential},
          {"normal", s.normal},
          {"full_component", s.full_component},
          {"tangential_component", s.tangential_component},
          {"normal_component", s.normal_component}};
}

inline Json to_json(const InterfaceReport& r) {
  Json sets = Json::array();
  for (const auto& s : r.sets) {
    Json adj = Json::array();
    for (const auto& [c, label] : s.adjacent) adj.push_back({{"component", c}, {"label", label}});
    sets.push_back({{"id", s.id},
                    {"nodes", s.node_count},
                    {"du_norm_sq_mean", s.du_norm_sq_mean},
                    {"du_norm_sq_max_dev", s.du_norm_sq_max_dev},
                    {"dominant_rank", s.dominant_rank},
                    {"adjacent", adj},
                    {"junction_nodes", s.junction_nodes}});
  }
  return {{"sets", sets}, {"junction_count", r.junction_count()}};
}

inline Json to_json(const FlowSpec& fs) {
  return {{"variant", to_string(fs.variant)}, {"start", fs.start},       {"xi", fs.xi},
          {"t_min", fs.t_min},                {"t_max", fs.t_max},       {"dt", fs.dt},
          {"eps_stop", fs.eps_stop},          {"step_tol", fs.step_tol}};
}

inline Json to_json(const FlowSummary& f) {
  const auto& t = f.trajectory;
  Json j;
  j["flow"] = to_json(t.spec);
  j["samples"] = t.samples.size();
  j["t_first"] = t.samples.empty() ? 0.0 : t.samples.front().t;
  j["t_last"] = t.samples.empty() ? 0.0 : t.samples.back().t;
  j["termination"] = {{"backward", to_string(t.backward)}, {"forward", to_string(t.forward)}};
  j["max_drift"] = t.diagnostics.max_drift;
  j["max_second_difference"] = t.diagnostics.max_second_difference;
  j["monotonicity_violations"] = t.diagnostics.monotonicity_violations;
  if (f.energy)
    j["energy_identity"] = {{"max_defect", f.energy->max_defect}, {"max_lhs", f.energy->max_lhs},
                            {"max_rhs", f.energy->max_rhs}};
  if (f.rate)
    j["rate_identity"] = {{"max_defect", f.rate->max_defect}, {"max_printed_form_defect", f.rate->max_printed_defect}};
  j["checks"] = to_json(f.checks);
  return j;
}

inline Json to_json(const VerifyReport& r) {
  Json j;
  j["tool"] = "infharm";
  j["version"] = kVersion;
  j["map"] = r.map;
  j["grid"] = to_json(r.grid);
  j["residual_sup"] = to_json(r.sup);
  Json inv = Json::array();
  for (std::size_t label = 1; label < r.components_by_label.size(); ++label)
    inv.push_back({{"label", label}, {"components", r.components_by_label[label]}, {"nodes", r.nodes_by_label[label]}});
  j["phases"] = {{"inventory", inv}, {"interface_nodes", r.interface_nodes}};
  Json verdicts = Json::array();
  for (const auto& v : r.verdicts) {
    Json vj;
    vj["component"] = v.component;
    vj["label"] = v.label;
    vj["nodes"] = v.node_count;
    vj["boundary_truncated"] = v.boundary_truncated;
    if (v.eikonal) vj["eikonal"] = {{"c_sq", v.eikonal->c_sq}, {"max_dev", v.eikonal->max_dev}};
    if (v.rank1)
      vj["rank1_fit"] = {{"a", v.rank1->a},
                         {"xi", v.rank1->xi},
                         {"max_residual", v.rank1->max_residual},
                         {"degenerate", v.rank1->degenerate}};
    vj["checks"] = to_json(v.checks);
    verdicts.push_back(std::move(vj));
  }
  j["verdicts"] = verdicts;
  j["interface"] = to_json(r.interface);
  Json flows = Json::array();
  for (const auto& f : r.flows) flows.push_back(to_json(f));
  j["flows"] = flows;
  j["checks"] = to_json(r.checks);
  j["pass"] = r.pass;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

}  // namespace infharm
