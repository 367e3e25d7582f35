#pragma once

// Pipelines behind the command-line subcommands. Every run validates its
// configuration and output locations first, computes, then writes all files.
// Exit codes: 0 pass, 2 invalid config or spec, 3 compute failure, 4 checks failed.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "infharm/flow.hpp"
#include "infharm/io.hpp"
#include "infharm/phase.hpp"
#include "infharm/residuals.hpp"
#include "infharm/verify.hpp"

namespace infharm {

inline constexpr int kExitPass = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitCompute = 3;
inline constexpr int kExitChecksFailed = 4;

enum class Subcommand { residual, classify, flow, verify };

struct RunConfig {
  Subcommand command = Subcommand::verify;
  std::filesystem::path spec_path;
  std::optional<MapSpec> spec;  // used instead of spec_path when set
  std::vector<Axis> axes;       // empty: default grid for the map's dimension
  ClassifyOptions classify;
  VerifyTolerances tolerances;
  std::optional<FlowSpec> flow;
  std::filesystem::path json_out, csv_out, ppm_out;
};

/// [-3.2, 3.2] per axis; 256 nodes per axis up to n = 2, 33 beyond.
inline Grid default_grid(std::size_t n) { return Grid::cube(n, -3.2, 3.2, n <= 2 ? 256 : 33); }

namespace detail {

inline void check_writable(const std::filesystem::path& p) {
  if (p.empty()) return;
  std::filesystem::path dir = p.parent_path();
  if (dir.empty()) dir = ".";
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw InvalidInput("output directory '" + dir.string() + "' does not exist");
  if (::access(dir.c_str(), W_OK) != 0) throw InvalidInput("output directory '" + dir.string() + "' is not writable");
  if (std::filesystem::is_directory(p, ec)) throw InvalidInput("output path '" + p.string() + "' is a directory");
}

template <class Writer>
void write_file(const std::filesystem::path& p, Writer&& w) {
  if (p.empty()) return;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ComputeFailure("cannot open '" + p.string() + "' for writing");
  w(out);
  out.flush();
  if (!out) throw ComputeFailure("write to '" + p.string() + "' failed");
}

inline void write_json(const std::filesystem::path& p, const Json& j) {
  write_file(p, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

struct Prepared {
  MapSpec spec;
  Grid grid;
};

inline Prepared prepare(const RunConfig& cfg) {
  check_thresholds(cfg.classify.tau_abs, cfg.classify.tau_rel);
  if (!(cfg.classify.margin_floor >= 1.0)) throw InvalidInput("margin floor must be >= 1");
  if (!(cfg.tolerances.residual > 0.0)) throw InvalidInput("residual tolerance must be positive");
  for (const auto* p : {&cfg.json_out, &cfg.csv_out, &cfg.ppm_out}) check_writable(*p);
  MapSpec spec = cfg.spec ? *cfg.spec : load_map_spec(cfg.spec_path);
  Grid grid = cfg.axes.empty() ? default_grid(spec.domain_dim()) : Grid(cfg.axes);
  if (grid.dim() != spec.domain_dim())
    throw InvalidInput("grid has dimension " + std::to_string(grid.dim()) + " but the map's domain has dimension " +
                       std::to_string(spec.domain_dim()));
  if (!cfg.ppm_out.empty() && grid.dim() != 2) throw InvalidInput("--ppm needs a 2-D grid");
  if (cfg.flow) cfg.flow->validate();
  return {std::move(spec), std::move(grid)};
}

inline Json header_json(const Prepared& p, const char* command) {
  Json j;
  j["tool"] = "infharm";
  j["version"] = kVersion;
  j["command"] = command;
  j["map"] = to_json(p.spec);
  j["grid"] = to_json(p.grid);
  return j;
}

}  // namespace detail

inline int run_residual(const RunConfig& cfg, std::ostream& log) {
  const auto p = detail::prepare(cfg);
  const ResidualField field = residual_field(p.spec, p.grid, cfg.classify.tau_abs, cfg.classify.tau_rel);
  const bool pass = field.sup.full <= cfg.tolerances.residual;
  Json j = detail::header_json(p, "residual");
  j["residual_sup"] = to_json(field.sup);
  j["tolerance"] = cfg.tolerances.residual;
  j["pass"] = pass;
  detail::write_file(cfg.csv_out, [&](std::ostream& out) { write_residual_csv(out, field); });
  detail::write_json(cfg.json_out, j);
  log << "residual sup |full| = " << format_number(field.sup.full) << " (tolerance "
      << format_number(cfg.tolerances.residual) << "): " << (pass ? "pass" : "fail") << '\n';
  return pass ? kExitPass : kExitChecksFailed;
}

inline int run_classify(const RunConfig& cfg, std::ostream& log) {
  const auto p = detail::prepare(cfg);
  const PhaseMap pm = classify(p.spec, p.grid, cfg.classify);
  const ResidualField field = residual_field(p.spec, p.grid, cfg.classify.tau_abs, cfg.classify.tau_rel);
  const InterfaceReport ir = interface_report(pm, field);

  Json j = detail::header_json(p, "classify");
  j["thresholds"] = {{"tau_abs", cfg.classify.tau_abs},
                     {"tau_rel", cfg.classify.tau_rel},
                     {"margin_floor", cfg.classify.margin_floor}};
  Json comps = Json::array();
  for (const auto& c : pm.components)
    comps.push_back({{"id", c.id},
                     {"label", c.label},
                     {"nodes", c.nodes.size()},
                     {"boundary_truncated", c.boundary_truncated},
                     {"adjacent", c.adjacent}});
  j["components"] = comps;
  j["interface_nodes"] = pm.interface_count();
  j["low_confidence_nodes"] = std::count(pm.low_confidence.begin(), pm.low_confidence.end(), 1);
  j["interface"] = to_json(ir);
  detail::write_file(cfg.csv_out, [&](std::ostream& out) { write_phase_csv(out, pm); });
  detail::write_file(cfg.ppm_out, [&](std::ostream& out) { write_phase_ppm(out, pm); });
  detail::write_json(cfg.json_out, j);

  log << "components:";
  for (std::size_t label = 1; label <= p.grid.dim(); ++label)
    log << " rank " << label << ": " << pm.count_components(static_cast<int>(label)) << ';';
  log << " interface nodes: " << pm.interface_count() << "; junction nodes: " << ir.junction_count() << '\n';
  return kExitPass;
}

inline int run_flow(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.flow) throw InvalidInput("flow: --start and --xi are required");
  const auto p = detail::prepare(cfg);
  const FlowSummary s = summarize_flow(p.spec, integrate_flow(p.spec, *cfg.flow, Box::of(p.grid)), cfg.tolerances);
  const bool pass = detail::all_pass(s.checks);
  Json j = detail::header_json(p, "flow");
  j["result"] = to_json(s);
  j["pass"] = pass;
  detail::write_file(cfg.csv_out, [&](std::ostream& out) {
    write_trajectory_csv(out, s.trajectory, s.energy ? &*s.energy : nullptr, s.rate ? &*s.rate : nullptr);
  });
  detail::write_json(cfg.json_out, j);
  const auto& t = s.trajectory;
  log << to_string(t.spec.variant) << " flow: " << t.samples.size() << " samples, backward "
      << to_string(t.backward) << ", forward " << to_string(t.forward) << '\n';
  for (const auto& c : s.checks)
    log << "  " << c.name << " = " << format_number(c.value) << " (tolerance " << format_number(c.tolerance)
        << "): " << to_string(c.status) << '\n';
  return pass ? kExitPass : kExitChecksFailed;
}

inline int run_verify(const RunConfig& cfg, std::ostream& log) {
  const auto p = detail::prepare(cfg);
  std::vector<FlowSpec> flows;
  if (cfg.flow) flows.push_back(*cfg.flow);
  const VerifyReport rep = verify(p.spec, p.grid, cfg.classify, cfg.tolerances, flows);
  detail::write_json(cfg.json_out, to_json(rep));

  std::size_t failed = 0, unchecked = 0, total = rep.checks.size();
  auto tally = [&](const std::vector<Check>& cs) {
    for (const auto& c : cs) {
      failed += c.status == CheckStatus::fail;
      unchecked += c.status == CheckStatus::not_checkable;
    }
  };
  tally(rep.checks);
  for (const auto& v : rep.verdicts) {
    tally(v.checks);
    total += v.checks.size();
  }
  for (const auto& f : rep.flows) {
    tally(f.checks);
    total += f.checks.size();
  }
  log << "residual sup |full| = " << format_number(rep.sup.full) << "; components:";
  for (std::size_t label = 1; label < rep.components_by_label.size(); ++label)
    log << " rank " << label << ": " << rep.components_by_label[label] << ';';
  log << " junction nodes: " << rep.interface.junction_count() << '\n';
  log << total << " checks, " << failed << " failed, " << unchecked << " not checkable: "
      << (rep.pass ? "pass" : "fail") << '\n';
  return rep.pass ? kExitPass : kExitChecksFailed;
}

/// Dispatches and maps exceptions onto exit codes.
inline int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    switch (cfg.command) {
      case Subcommand::residual: return run_residual(cfg, log);
      case Subcommand::classify: return run_classify(cfg, log);
      case Subcommand::flow: return run_flow(cfg, log);
      case Subcommand::verify: return run_verify(cfg, log);
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ComputeFailure& e) {
    err << "compute failure: " << e.what() << '\n';
    return kExitCompute;
  } catch (const std::exception& e) {
    err << "compute failure: " << e.what() << '\n';
    return kExitCompute;
  }
  return kExitInvalid;
}

}  // namespace infharm
