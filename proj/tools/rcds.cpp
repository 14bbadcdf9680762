// rcds: simulate cohorts, compute oracle curves, analyse a cohort and choose a
// threshold under a usage cap.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rcds/errors.hpp"
#include "rcds/run.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> kappa;
  std::optional<int> bootstrap;
  std::optional<std::string> input;
  std::optional<std::string> report;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file (comments allowed)");
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--kappa", o.kappa, "usage cap (expected measurements per subject)");
  cmd->add_option("--bootstrap", o.bootstrap, "bootstrap replicates (0 skips intervals)");
  cmd->add_option("--input", o.input, "cohort CSV");
  cmd->add_option("--report", o.report, "report CSV (frontier)");
}

int fail(rcds::ErrorCode code, const std::string& message) {
  std::cerr << "rcds: " << message << '\n';
  std::cerr << "error_code=" << rcds::error_code_name(code) << '\n';
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-constrained threshold monitoring strategies"};
  app.require_subcommand(1);
  Overrides o;
  for (const char* name : {"simulate", "oracle", "analyze", "frontier", "coverage"}) {
    add_common(app.add_subcommand(name, std::string(name) + " mode"), o);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(rcds::ErrorCode::config, e.what());
  }

  try {
    rcds::RunConfig config = o.config.empty() ? rcds::RunConfig{} : rcds::load_run_config(o.config);
    config.mode = *rcds::parse_mode(app.get_subcommands().front()->get_name());
    if (o.seed) config.seed = *o.seed;
    if (o.out) config.output_dir = *o.out;
    if (o.kappa) config.kappa = *o.kappa;
    if (o.bootstrap) config.bootstrap = *o.bootstrap;
    if (o.input) config.input = *o.input;
    if (o.report) config.report = *o.report;
    const auto result = rcds::run(config, std::cerr);
    for (const auto& path : result.artifacts) std::cout << path.string() << '\n';
    return result.exit_code;
  } catch (const rcds::Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    std::cerr << "rcds: " << e.what() << '\n' << "error_code=INTERNAL_ERROR\n";
    return 1;
  }
}
