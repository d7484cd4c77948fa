#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "stripnet/config.hpp"
#include "stripnet/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDisagreement = 1;
constexpr int kExitUsage = 2;

// Renders a report into out_path, or stdout when out_path is empty.
int with_output(const std::string& out_path,
                const std::function<int(std::ostream&)>& body) {
  if (out_path.empty()) return body(std::cout);
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }
  return body(file);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"service-strip connectivity analysis and ad hoc routing simulation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string protocol;
  std::string trace_path;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  int jobs = 1;

  CLI::App* analytic =
      app.add_subcommand("analytic", "closed-form connectivity and link-time tables");
  analytic->add_option("--config", config_path, "config file")->required();
  analytic->add_option("--out", out_path, "write the report here instead of stdout");

  CLI::App* mc = app.add_subcommand(
      "mc", "sampling cross-checks against the closed forms (exit 1 on disagreement)");
  mc->add_option("--config", config_path, "config file")->required();
  mc->add_option("--samples", samples, "override mc.samples");
  mc->add_option("--seed", seed, "override mc.seed");
  mc->add_option("--out", out_path, "write the report here instead of stdout");

  CLI::App* sim = app.add_subcommand("sim", "run one routing simulation");
  sim->add_option("--config", config_path, "config file")->required();
  sim->add_option("--protocol", protocol, "override sim.protocol");
  sim->add_option("--seed", seed, "override sim.seed");
  sim->add_option("--trace", trace_path, "write the event trace to this file");
  sim->add_option("--out", out_path, "write the metrics here instead of stdout");

  CLI::App* sweep = app.add_subcommand("sweep", "run the plan.* experiment grid");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--jobs", jobs, "rows to run in parallel")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_path, "CSV destination, overrides plan.output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const stripnet::config::Config cfg =
        stripnet::config::Config::parse_file(config_path);

    if (analytic->parsed()) {
      return with_output(out_path, [&](std::ostream& out) {
        stripnet::harness::run_analytic(cfg, out);
        return kExitOk;
      });
    }

    if (mc->parsed()) {
      return with_output(out_path, [&](std::ostream& out) {
        return stripnet::harness::run_mc(cfg, samples, seed, out)
                   ? kExitOk
                   : kExitDisagreement;
      });
    }

    if (sim->parsed()) {
      return with_output(out_path, [&](std::ostream& out) {
        stripnet::harness::run_sim(cfg, protocol, seed, trace_path, out);
        return kExitOk;
      });
    }

    // sweep
    const stripnet::harness::ExperimentPlan base_plan =
        stripnet::harness::plan_from_config(cfg);
    stripnet::harness::ExperimentPlan plan = base_plan;
    if (!out_path.empty()) plan.output = out_path;

    const auto rows = stripnet::harness::run_sweep(cfg, plan, jobs);
    std::ostringstream csv;
    csv << stripnet::harness::csv_header() << "\n";
    for (const auto& row : rows) csv << stripnet::harness::csv_row(row) << "\n";

    if (plan.output.empty()) {
      std::cout << csv.str() << "\n";
    } else {
      std::ofstream file(plan.output, std::ios::binary);
      if (!file) {
        std::cerr << "error: cannot write " << plan.output << "\n";
        return kExitUsage;
      }
      file << csv.str();
    }
    stripnet::harness::write_sweep_summary(rows, std::cout);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
