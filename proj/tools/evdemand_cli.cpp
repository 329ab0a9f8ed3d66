#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evdemand/evdemand.hpp"

namespace {

struct CommonFlags {
  std::string config;
  bool strict = false;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_flag("--strict", f.strict, "Treat warnings as errors");
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Random seed (scenario for gen, Monte Carlo for epc)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--data", f.data, "Directory holding the five tables");
}

evdemand::RunConfig resolve(const CommonFlags& f) {
  auto cfg = f.config.empty() ? evdemand::RunConfig{} : evdemand::load_run_config(f.config);
  if (f.strict) cfg.strict = true;
  if (f.workers) cfg.workers = *f.workers;
  if (f.seed) {
    cfg.scenario.seed = *f.seed;
    cfg.monte_carlo.seed = *f.seed;
  }
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.data.empty()) cfg.tables = evdemand::TablePaths::in_directory(f.data);
  return cfg;
}

int report(const evdemand::Diagnostics& diag, bool strict) {
  if (diag.empty()) return EXIT_SUCCESS;
  for (const auto& m : diag.messages) std::cerr << "warning: " << m << '\n';
  if (diag.count > diag.messages.size())
    std::cerr << "warning: ... " << diag.count - diag.messages.size() << " more\n";
  return strict ? 2 : EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regional BEV energy, charging-demand density and EPC Monte Carlo analysis"};
  app.require_subcommand(1);

  CommonFlags gen_f, val_f, est_f, den_f, epc_f;
  std::optional<int> rows, cols;
  std::optional<std::int64_t> persons;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario (five tables + epc_links.csv)");
  add_common(gen, gen_f);
  gen->add_option("--rows", rows, "Grid rows");
  gen->add_option("--cols", cols, "Grid columns");
  gen->add_option("--persons", persons, "Number of persons");

  auto* validate = app.add_subcommand("validate", "Parse and cross-check the five tables");
  add_common(validate, val_f);
  auto* estimate = app.add_subcommand("estimate", "ROM and granular energy per leg");
  add_common(estimate, est_f);
  auto* density = app.add_subcommand("density", "Threshold crossings binned into hexagons");
  add_common(density, den_f);
  auto* epc = app.add_subcommand("epc", "Monte Carlo fuel and CO2 removed from an EPC link set");
  add_common(epc, epc_f);

  std::string curve_path;
  std::vector<double> capacities, speeds;
  std::string range_out;
  auto* range = app.add_subcommand("range-table", "Driving range by speed for battery capacities");
  range->add_option("--curve", curve_path, "Energy curve JSON")->required();
  range->add_option("--capacities", capacities, "Capacities in kWh")->delimiter(',');
  range->add_option("--speeds", speeds, "Speeds in mph")->delimiter(',');
  range->add_option("--out", range_out, "Output CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = resolve(gen_f);
      if (rows) cfg.scenario.rows = *rows;
      if (cols) cfg.scenario.cols = *cols;
      if (persons) cfg.scenario.n_persons = *persons;
      const auto dir = gen_f.out.empty() ? std::string("scenario") : gen_f.out;
      auto r = evdemand::cmd_gen(cfg.scenario, dir);
      std::cout << "wrote " << dir << ": " << r.nodes << " nodes, " << r.links << " links, " << r.persons
                << " persons, " << r.legs << " legs, " << r.epc_links << " EPC links\n";
      return EXIT_SUCCESS;
    }
    if (validate->parsed()) {
      auto cfg = resolve(val_f);
      auto r = evdemand::cmd_validate(cfg);
      std::cout << r.nodes << " nodes, " << r.links << " links, " << r.profiles << " speed profiles, " << r.legs
                << " legs, " << r.routes << " routes, " << r.persons << " persons\n";
      return report(r.diagnostics, cfg.strict);
    }
    if (estimate->parsed()) {
      auto cfg = resolve(est_f);
      auto r = evdemand::cmd_estimate(cfg);
      std::cout << r.stats.n_trips << " trips, mean granular/ROM " << r.stats.mean_ratio << ", within +/-20% "
                << r.stats.fraction_within_band(0.2) << ", at or below +20% " << r.stats.fraction_at_or_below(0.2)
                << '\n';
      return report(r.diagnostics, cfg.strict);
    }
    if (density->parsed()) {
      auto cfg = resolve(den_f);
      auto r = evdemand::cmd_density(cfg);
      for (double t : cfg.thresholds.thresholds)
        std::cout << t << " Wh: " << r.counts.total(t) << " crossings in " << r.counts.layers.at(t).size()
                  << " cells\n";
      return report(r.diagnostics, cfg.strict);
    }
    if (epc->parsed()) {
      auto cfg = resolve(epc_f);
      auto r = evdemand::cmd_epc(cfg);
      const auto& s = r.summary;
      std::cout << s.iterations.size() << " iterations, " << s.eligible_persons << " eligible persons, mean "
                << s.mean_liters << " L (std " << s.std_liters << "), mean CO2 " << s.mean_co2_tons << " t\n";
      return report(r.diagnostics, cfg.strict);
    }
    if (range->parsed()) {
      auto curve = evdemand::curve_from_file(curve_path);
      evdemand::RunConfig defaults;
      auto table = evdemand::cmd_range_table(curve, capacities.empty() ? defaults.capacities_kwh : capacities,
                                             speeds.empty() ? defaults.range_speeds_mph : speeds);
      if (range_out.empty()) std::cout << table;
      else evdemand::csv::write_file(range_out, table);
      return EXIT_SUCCESS;
    }
  } catch (const evdemand::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
