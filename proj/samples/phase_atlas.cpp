// Writes phase images of the built-in maps and prints their phase inventory.
//
//   phase_atlas [output-dir]

#include <filesystem>
#include <fstream>
#include <iostream>

#include "infharm/infharm.hpp"

int main(int argc, char** argv) {
  using namespace infharm;
  const std::filesystem::path dir = argc > 1 ? argv[1] : ".";
  std::filesystem::create_directories(dir);
  const Grid grid = Grid::cube(2, -3.2, 3.2, 256);

  const std::pair<const char*, MapSpec> maps[] = {
      {"exp2", MapSpec::exp2()},
      {"plateau2", MapSpec::kprofile(KProfile::plateau2())},
      {"plateau3", MapSpec::kprofile(KProfile::plateau3())},
  };
  for (const auto& [name, spec] : maps) {
    const PhaseMap pm = classify(spec, grid);
    const ResidualField field = residual_field(spec, grid);
    const InterfaceReport ir = interface_report(pm, field);
    std::ofstream out(dir / (std::string(name) + ".ppm"));
    write_phase_ppm(out, pm);
    if (!out) {
      std::cerr << "cannot write " << (dir / (std::string(name) + ".ppm")).string() << '\n';
      return 1;
    }

    std::cout << name << ": sup |residual| " << field.sup.full << ", rank-1 components "
              << pm.count_components(1) << ", rank-2 components " << pm.count_components(2)
              << ", interface nodes " << pm.interface_count() << ", junction nodes " << ir.junction_count() << '\n';
    for (const auto& c : pm.components) {
      if (c.label != 1) continue;
      const RankOneFit fit = fit_rank_one(spec, pm, c.id);
      std::cout << "  component " << c.id << ": " << c.nodes.size() << " nodes, xi = (" << fit.xi[0] << ", "
                << fit.xi[1] << "), fit residual " << fit.max_residual << '\n';
    }
  }
}
