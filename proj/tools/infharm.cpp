// infharm: residuals, rank phases, gradient flows and the full check battery
// for explicit candidate infinity-harmonic maps.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "infharm/run.hpp"

namespace {

using infharm::InvalidInput;

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidInput(std::string(what) + ": '" + item + "' is not a number");
    }
    if (used != item.size() || !std::isfinite(v))
      throw InvalidInput(std::string(what) + ": '" + item + "' is not a finite number");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidInput(std::string(what) + ": no values given");
  return out;
}

/// "NXxNY[xNZ...]" -> node counts.
std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidInput("--grid: expected NXxNY, got '" + text + "'");
    out.push_back(std::stoul(item));
  }
  if (out.empty()) throw InvalidInput("--grid: expected NXxNY, got '" + text + "'");
  return out;
}

struct Options {
  std::string spec, domain, grid, json, csv, ppm;
  double tau_abs = infharm::kDefaultTauAbs;
  double tau_rel = infharm::kDefaultTauRel;
  double margin_floor = infharm::kDefaultMarginFloor;
  double tol = 1e-9;
  std::string start, xi, variant = "plain";
  double dt = 1e-3, t_min = -1.0, t_max = 1.0, eps_stop = 1e-6, step_tol = 1e-11;
};

infharm::RunConfig build_config(infharm::Subcommand cmd, const Options& o) {
  infharm::RunConfig cfg;
  cfg.command = cmd;
  cfg.spec_path = o.spec;
  cfg.classify = {o.tau_abs, o.tau_rel, o.margin_floor};
  cfg.tolerances.residual = o.tol;
  cfg.json_out = o.json;
  cfg.csv_out = o.csv;
  cfg.ppm_out = o.ppm;

  if (!o.domain.empty() || !o.grid.empty()) {
    std::vector<double> box = o.domain.empty() ? std::vector<double>{} : parse_numbers(o.domain, "--domain");
    std::vector<std::size_t> counts = o.grid.empty() ? std::vector<std::size_t>{} : parse_counts(o.grid);
    if (!box.empty() && box.size() % 2 != 0) throw InvalidInput("--domain: expected min,max pairs per axis");
    const std::size_t dim = !box.empty() ? box.size() / 2 : counts.size();
    if (!counts.empty() && counts.size() != dim)
      throw InvalidInput("--domain and --grid disagree on the number of axes");
    for (std::size_t k = 0; k < dim; ++k) {
      infharm::Axis a{-3.2, 3.2, 256};
      if (!box.empty()) {
        a.min = box[2 * k];
        a.max = box[2 * k + 1];
      }
      if (!counts.empty()) a.count = counts[k];
      cfg.axes.push_back(a);
    }
  }

  if (!o.start.empty() || !o.xi.empty()) {
    if (o.start.empty() || o.xi.empty()) throw InvalidInput("--start and --xi must be given together");
    infharm::FlowSpec fs;
    fs.variant = infharm::flow_variant_from_string(o.variant);
    fs.start = parse_numbers(o.start, "--start");
    fs.xi = parse_numbers(o.xi, "--xi");
    const double len = infharm::norm(fs.xi);
    if (!(len > 0.0)) throw InvalidInput("--xi must be non-zero");
    for (double& c : fs.xi) c /= len;
    fs.dt = o.dt;
    fs.t_min = o.t_min;
    fs.t_max = o.t_max;
    fs.eps_stop = o.eps_stop;
    fs.step_tol = o.step_tol;
    cfg.flow = fs;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residuals, rank phases and gradient flows of explicit infinity-harmonic maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", infharm::kVersion);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--spec", o.spec, "Map specification (JSON)")->required();
    sub->add_option("--domain", o.domain, "Domain box x0,x1,y0,y1[,...] (default -3.2,3.2 per axis)");
    sub->add_option("--grid", o.grid, "Nodes per axis NXxNY[x...] (default 256x256)");
    sub->add_option("--tau-abs", o.tau_abs, "Absolute singular value threshold");
    sub->add_option("--tau-rel", o.tau_rel, "Relative singular value threshold");
    sub->add_option("--json", o.json, "JSON report path");
  };
  auto flow_opts = [&](CLI::App* sub) {
    sub->add_option("--start", o.start, "Flow start point x,y");
    sub->add_option("--xi", o.xi, "Target direction a,b (normalized)");
    sub->add_option("--variant", o.variant, "plain or modified")->check(CLI::IsMember({"plain", "modified"}));
    sub->add_option("--dt", o.dt, "RK4 step");
    sub->add_option("--t-min", o.t_min, "Backward horizon (negative)");
    sub->add_option("--t-max", o.t_max, "Forward horizon");
    sub->add_option("--eps-stop", o.eps_stop, "Stop when |xi^T Du| falls below this");
    sub->add_option("--step-tol", o.step_tol, "Stop when the local error estimate exceeds this");
  };

  auto* residual = app.add_subcommand("residual", "Residual field of the infinity-Laplace system");
  common(residual);
  residual->add_option("--tol", o.tol, "Pass threshold for sup |residual|");
  residual->add_option("--csv", o.csv, "Per-node CSV");

  auto* classify = app.add_subcommand("classify", "Rank phases, interfaces and components");
  common(classify);
  classify->add_option("--margin-floor", o.margin_floor, "Rank margin below which a node is interface");
  classify->add_option("--csv", o.csv, "node,label,component CSV");
  classify->add_option("--ppm", o.ppm, "Phase image (plain PPM)");

  auto* flow = app.add_subcommand("flow", "Integrate a gradient flow and check its identities");
  common(flow);
  flow_opts(flow);
  flow->add_option("--csv", o.csv, "Trajectory CSV");

  auto* verify = app.add_subcommand("verify", "Run every applicable check");
  common(verify);
  verify->add_option("--tol", o.tol, "Pass threshold for sup |residual|");
  verify->add_option("--margin-floor", o.margin_floor, "Rank margin below which a node is interface");
  flow_opts(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : infharm::kExitInvalid;
  }

  infharm::Subcommand cmd = infharm::Subcommand::verify;
  if (residual->parsed()) cmd = infharm::Subcommand::residual;
  else if (classify->parsed()) cmd = infharm::Subcommand::classify;
  else if (flow->parsed()) cmd = infharm::Subcommand::flow;

  infharm::RunConfig cfg;
  try {
    cfg = build_config(cmd, o);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return infharm::kExitInvalid;
  }
  return infharm::run(cfg, std::cout, std::cerr);
}
