// drg run|order|drift|levels --config <file> [--out <path>] [--norm ambient|riemannian]
//
// Exit codes: 0 success, 1 solver failure (partial output is still written),
// 2 bad usage or config, 3 I/O error.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drg/harness/studies.hpp"

namespace {

using namespace drg::harness;

constexpr int kSolverFailure = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;

std::string output_path(const ExperimentSpec& spec, const std::string& fallback) {
  return spec.out.empty() ? fallback : spec.out;
}

int cmd_run(const ExperimentSpec& spec) {
  const drg::RunRecord rec = run(spec);
  const std::string path = output_path(spec, "run.csv");
  write_csv(path, trajectory_table(rec));
  std::cout << "wrote " << path << " (" << rec.size() << " rows, max |dH| = " << format_number(rec.max_energy_error())
            << ")\n";
  if (!rec.ok()) {
    std::cerr << "error: " << *rec.error << '\n';
    return kSolverFailure;
  }
  return 0;
}

int cmd_order(const ExperimentSpec& spec) {
  const OrderStudyResult res = order_study(spec);
  const std::string path = output_path(spec, "order.csv");
  write_csv(path, res.table());
  for (const auto& r : res.rows) {
    if (r.failure) std::cerr << "warning: h = " << format_number(r.h) << ": " << *r.failure << '\n';
  }
  std::cout << "wrote " << path << " (method " << res.method << ", reference " << res.reference << ", slope "
            << format_number(res.fit.slope) << " from " << res.fit.points << " points, norm " << to_string(spec.norm)
            << ")\n";
  return 0;
}

int cmd_drift(const ExperimentSpec& spec) {
  const DriftStudyResult res = drift_study(spec);
  const std::string path = output_path(spec, "drift.csv");
  write_csv(path, res.table());
  for (std::size_t i = 0; i < res.methods.size(); ++i) {
    std::cout << res.methods[i] << ": max |dH| = " << format_number(res.max_drift(i));
    if (!res.records[i].ok()) std::cout << " (stopped: " << *res.records[i].error << ')';
    std::cout << '\n';
  }
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_levels(const ExperimentSpec& spec) {
  const auto trajectories = level_curve_study(spec);
  std::filesystem::path base(output_path(spec, "levels.csv"));
  const std::string stem = (base.parent_path() / base.stem()).string();
  int status = 0;
  for (const auto& tr : trajectories) {
    const std::string path = stem + "_" + tr.label + ".csv";
    write_csv(path, trajectory_table(tr.record));
    std::cout << "wrote " << path << '\n';
    if (!tr.record.ok()) {
      std::cerr << "error: " << tr.label << ": " << *tr.record.error << '\n';
      status = kSolverFailure;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-preserving integrators on spheres: runs, order studies, drift and level curves"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  std::string norm;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "flat JSON experiment file")->required();
    sub->add_option("--out", out, "output CSV path (overrides the config)");
    sub->add_option("--norm", norm, "error norm for order studies")->check(CLI::IsMember({"ambient", "riemannian"}));
  };
  CLI::App* run_cmd = app.add_subcommand("run", "integrate one trajectory");
  CLI::App* order_cmd = app.add_subcommand("order", "convergence study over h_list");
  CLI::App* drift_cmd = app.add_subcommand("drift", "energy error of several methods");
  CLI::App* levels_cmd = app.add_subcommand("levels", "level-curve trajectories on the sphere");
  for (CLI::App* sub : {run_cmd, order_cmd, drift_cmd, levels_cmd}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    ExperimentSpec spec = parse_config(config);
    if (!out.empty()) spec.out = out;
    if (!norm.empty()) spec.norm = parse_norm(norm);
    if (run_cmd->parsed()) return cmd_run(spec);
    if (order_cmd->parsed()) return cmd_order(spec);
    if (drift_cmd->parsed()) return cmd_drift(spec);
    return cmd_levels(spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}
