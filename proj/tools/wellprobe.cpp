#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <memory>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wellprobe/config.hpp"
#include "wellprobe/error.hpp"
#include "wellprobe/run.hpp"

namespace {

using namespace wellprobe;

// A flag bound to one config entry; the value stays empty unless given.
struct FlagEntry {
  std::string flag;
  std::string section;
  std::string key;
  std::string value;
};

class Flags {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& section, const std::string& key,
           const std::string& help) {
    entries_.push_back(std::make_unique<FlagEntry>(FlagEntry{flag, section, key, {}}));
    app->add_option(flag, entries_.back()->value, help);
  }

  void apply(ExperimentConfig& config) const {
    for (const auto& e : entries_) {
      if (!e->value.empty()) apply_entry(config, e->section, e->key, e->value, "flag " + e->flag);
    }
  }

 private:
  std::vector<std::unique_ptr<FlagEntry>> entries_;
};

struct Command {
  CLI::App* app = nullptr;
  std::string name;
  Flags flags;
  std::string config_path;
};

void add_common(Command& cmd) {
  Flags& f = cmd.flags;
  cmd.app->add_option("--config", cmd.config_path, "config file; its entries override flags");
  f.add(cmd.app, "--V", "potential", "V", "potential V(x), e.g. '(x-1)^2'");
  f.add(cmd.app, "--L", "potential", "L", "domain length");
  f.add(cmd.app, "--q", "potential", "q", "perturbation q(x, eps), or none");
  f.add(cmd.app, "--schedule", "schedule", "eps", "decreasing eps list, comma separated");
  f.add(cmd.app, "--regime", "run", "regime", "ground | interior=E | high");
  f.add(cmd.app, "--grid-n", "grid", "policy", "interior grid nodes, or auto");
  f.add(cmd.app, "--output", "run", "output", "output directory");
  f.add(cmd.app, "--seed", "run", "seed", "seed for sampled test points");
  f.add(cmd.app, "--threads", "run", "threads", "worker threads (0 = all cores)");
}

void print_manifest(const RunManifest& m) {
  std::printf("%-10s %-7s %10s\n", "pipeline", "verdict", "seconds");
  for (const StepRecord& s : m.steps) {
    std::printf("%-10s %-7s %10.3f\n", s.pipeline.c_str(), to_string(s.verdict).c_str(), s.seconds);
    if (s.verdict == Verdict::Fail) {
      for (const std::string& n : s.notes) std::printf("  %s\n", n.c_str());
    }
  }
  std::printf("status: %s\n", m.pass ? "PASS" : "FAIL");
  std::printf("output: %s (%zu files + manifest.json)\n", m.output_dir.c_str(), m.outputs.size());
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=" << nlohmann::json(message).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical single-well eigenfunction probe"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    commands.push_back(std::make_unique<Command>());
    Command& cmd = *commands.back();
    cmd.name = name;
    cmd.app = app.add_subcommand(name, help);
    add_common(cmd);
    return cmd;
  };

  Command& spectrum = make("spectrum", "lowest eigenvalues (or those in a window) with residuals");
  spectrum.flags.add(spectrum.app, "--eps", "spectrum", "eps", "eps (default: smallest schedule eps)");
  spectrum.flags.add(spectrum.app, "--count", "spectrum", "count", "number of lowest eigenvalues");
  spectrum.flags.add(spectrum.app, "--window", "spectrum", "window", "energy window lo,hi");
  spectrum.flags.add(spectrum.app, "--oracle", "spectrum", "oracle", "compare against shooting (true/false)");

  Command& eigen = make("eigen", "eigenfunction samples (x, psi)");
  eigen.flags.add(eigen.app, "--eps", "schedule", "eps", "eps");
  eigen.flags.add(eigen.app, "--k", "eigen", "index", "mode index (default: the regime mode)");

  Command& agmon = make("agmon", "Agmon distance profile");
  agmon.flags.add(agmon.app, "--energy", "agmon", "energy", "energy (default: the regime eigenvalue)");
  agmon.flags.add(agmon.app, "--points", "agmon", "points", "profile grid points");

  Command& measure = make("measure", "moment and boundary-trace convergence along the schedule");
  measure.flags.add(measure.app, "--phi", "measure", "phi", "test functions: one,x,x2,sin,ind:a:b");
  measure.flags.add(measure.app, "--indicator-width", "measure", "indicator_width", "erf edge width");
  measure.flags.add(measure.app, "--high-factor", "measure", "high_factor", "high regime target factor");

  Command& husimi = make("husimi", "Husimi phase-space density and diagnostics");
  husimi.flags.add(husimi.app, "--eps", "husimi", "eps", "eps (default: smallest schedule eps)");
  husimi.flags.add(husimi.app, "--nx", "husimi", "nx", "x samples");
  husimi.flags.add(husimi.app, "--nxi", "husimi", "nxi", "xi samples");
  husimi.flags.add(husimi.app, "--xi-max", "husimi", "xi_max", "xi half-range");

  Command& bounds = make("bounds", "Agmon exponents with tunneling and Gronwall scans");
  bounds.flags.add(bounds.app, "--window", "bounds", "window", "observation window a,b");
  bounds.flags.add(bounds.app, "--boundary", "bounds", "boundary", "boundary point 0 or L");
  bounds.flags.add(bounds.app, "--alpha", "bounds", "alpha", "tunneling threshold alpha");

  Command& report = make("report", "full verification battery with one verdict table");
  report.flags.add(report.app, "--phi", "measure", "phi", "test functions");
  report.flags.add(report.app, "--window", "bounds", "window", "observation window a,b");
  report.flags.add(report.app, "--boundary", "bounds", "boundary", "boundary point 0 or L");
  report.flags.add(report.app, "--alpha", "bounds", "alpha", "tunneling threshold alpha");

  Command& run_cmd = make("run", "pipelines listed in the config file");
  run_cmd.app->get_option("--config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& cmd : commands) {
      if (!cmd->app->parsed()) continue;
      ExperimentConfig config;
      cmd->flags.apply(config);
      if (!cmd->config_path.empty()) apply_config_file(config, cmd->config_path);
      if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) {
        apply_entry(config, "run", "output", dir, std::string("env ") + kOutputDirEnv);
      }
      if (cmd->name != "run") config.pipelines = {cmd->name};
      const RunManifest manifest = wellprobe::run(config);
      print_manifest(manifest);
      return manifest.pass ? 0 : 2;
    }
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return 1;
  }
  return 1;
}
