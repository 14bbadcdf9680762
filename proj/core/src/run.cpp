#include "rcds/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "rcds/chart.hpp"
#include "rcds/cohort_csv.hpp"
#include "rcds/errors.hpp"
#include "rcds/random.hpp"
#include "rcds/report.hpp"

namespace rcds {

namespace {

constexpr std::uint64_t kCalibrationStream = 0xca1;
constexpr std::uint64_t kOracleStream = 0x0c1e;
constexpr std::uint64_t kCoverageCohortStream = 0xc0c0;
constexpr std::uint64_t kCoverageBootstrapStream = 0xc0b0;

DgpParams seeded(const DgpParams& params, std::uint64_t seed) {
  DgpParams p = params;
  p.seed = seed;
  return p;
}

std::filesystem::path prepare_output(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create output directory {}: {}", config.output_dir.string(), ec.message()));
  return config.output_dir;
}

template <typename Writer>
std::filesystem::path write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  writer(out);
  return path;
}

std::shared_ptr<const Cohort> analysis_cohort(const RunConfig& config, std::ostream& log) {
  if (config.input) {
    fmt::print(log, "ingesting {}\n", config.input->string());
    return std::make_shared<const Cohort>(ingest_cohort(*config.input, config.horizon));
  }
  fmt::print(log, "no input cohort; simulating {} subjects\n", config.n_subjects);
  return std::make_shared<const Cohort>(simulate_cohort(seeded(config.dgp, *config.seed), config.n_subjects));
}

Estimate analyse(const RunConfig& config, std::ostream& log) {
  const auto cohort = analysis_cohort(config, log);
  const auto grid = config.grid.build();
  fmt::print(log, "analysing {} subjects over {} strategies (bootstrap B = {})\n", cohort->size(), grid.size(),
             config.bootstrap);
  Estimate e = config.bootstrap > 0 ? bootstrap_pipeline(cohort, grid, config.analysis, config.bootstrap, *config.seed)
                                    : estimate(cohort, grid, config.analysis);
  for (const auto& w : e.warnings) fmt::print(log, "warning: {}\n", w);
  if (e.table.bootstrap && e.table.bootstrap->failed > 0) {
    fmt::print(log, "warning: {} of {} bootstrap replicates failed and were skipped\n", e.table.bootstrap->failed,
               e.table.bootstrap->requested);
  }
  return e;
}

void log_selection(const ConstrainedSelection& s, std::ostream& log) {
  if (s.chosen_x) {
    fmt::print(log, "kappa {}: chosen x = {} (risk {:.4f}, usage {:.3f})\n", s.kappa, *s.chosen_x, s.chosen_risk,
               s.chosen_usage);
  } else {
    fmt::print(log, "warning: kappa {}: no strategy satisfies the usage cap (status infeasible)\n", s.kappa);
  }
}

double truth_at(const OracleTable& truth, double x) {
  for (const auto& r : truth.rows) {
    if (std::abs(r.x - x) < 1e-9) return r.risk;
  }
  throw ConfigError(fmt::format("coverage.x = {} is not a threshold of the oracle table", x));
}

}  // namespace

std::vector<double> calibrate_monitor_prob(const DgpParams& params, std::size_t n) {
  const Cohort cohort = simulate_cohort(params, n);
  const GlmFit fit = fit_marginal_numerator(cohort);
  std::vector<double> q;
  for (int t = 0; t <= params.horizon; ++t) q.push_back(inverse_link(Family::binomial_logit, fit.coefficients[0] + fit.coefficients[1] * t));
  return q;
}

ForcedRule oracle_rule(const RunConfig& config) {
  if (config.oracle.rule == "earliest") return EarliestMonth{};
  if (!config.oracle.monitor_prob.empty()) return WithinWindowRandom{config.oracle.monitor_prob};
  const auto params = seeded(config.dgp, derive_seed(*config.seed, kCalibrationStream, 0));
  return WithinWindowRandom{calibrate_monitor_prob(params, config.oracle.calibration_n)};
}

OracleTable compute_oracle(const RunConfig& config) {
  const auto params = seeded(config.dgp, derive_seed(*config.seed, kOracleStream, 0));
  return oracle_truth(params, config.grid.build(), config.oracle.n_mc, oracle_rule(config));
}

CoverageResult run_coverage(const RunConfig& config, const OracleTable& truth, std::ostream& log) {
  const auto& spec = config.coverage;
  CoverageResult out;
  out.x = spec.x;
  out.truth = truth_at(truth, spec.x);
  out.cohorts = spec.cohorts;
  const auto grid = config.grid.build();
  const auto xs = grid.thresholds();
  const auto it = std::find_if(xs.begin(), xs.end(), [&](double x) { return std::abs(x - spec.x) < 1e-9; });
  if (it == xs.end()) throw ConfigError(fmt::format("coverage.x = {} is not in the strategy grid", spec.x));
  const auto index = static_cast<std::size_t>(it - xs.begin());
  for (int c = 0; c < spec.cohorts; ++c) {
    const auto params = seeded(config.dgp, derive_seed(*config.seed, kCoverageCohortStream, static_cast<std::uint64_t>(c)));
    auto cohort = std::make_shared<const Cohort>(simulate_cohort(params, spec.n));
    try {
      const Estimate e = bootstrap_pipeline(cohort, grid, config.analysis, spec.bootstrap,
                                            derive_seed(*config.seed, kCoverageBootstrapStream, static_cast<std::uint64_t>(c)));
      const auto& ci = *e.table.rows[index].ci_risk;
      if (ci.lo <= out.truth && out.truth <= ci.hi) ++out.covered;
    } catch (const BootstrapUnstable& err) {
      ++out.failed;
      fmt::print(log, "cohort {}: {}\n", c, err.what());
    }
    if ((c + 1) % 10 == 0) fmt::print(log, "coverage: {} / {} cohorts, {} covered\n", c + 1, spec.cohorts, out.covered);
  }
  return out;
}

RunResult run(const RunConfig& config, std::ostream& log) {
  config.validate();
  RunResult result;
  const auto dir = prepare_output(config);

  switch (config.mode) {
    case Mode::simulate: {
      const DgpParams params = seeded(config.dgp, *config.seed);
      const Cohort cohort = simulate_cohort(params, config.n_subjects);
      result.artifacts.push_back(write_file(dir / "cohort.csv", [&](std::ostream& o) { write_cohort_csv(cohort, o); }));
      result.artifacts.push_back(write_file(dir / "dgp.json", [&](std::ostream& o) { o << dgp_to_json(params); }));
      break;
    }
    case Mode::oracle: {
      const OracleTable truth = compute_oracle(config);
      result.artifacts.push_back(write_file(dir / "truth.csv", [&](std::ostream& o) { write_truth_csv(truth, o); }));
      break;
    }
    case Mode::analyze: {
      const Estimate e = analyse(config, log);
      result.artifacts.push_back(
          write_file(dir / "report.csv", [&](std::ostream& o) { write_report_csv(e.table, config.kappa, o); }));
      result.artifacts.push_back(write_file(dir / "diagnostics.json", [&](std::ostream& o) { o << diagnostics_json(e); }));
      result.artifacts.push_back(
          write_file(dir / "chart.svg", [&](std::ostream& o) { o << render_chart(e.table, config.kappa); }));
      if (config.kappa) {
        const auto pts = points(e.table);
        const auto sel = select(pts, *config.kappa);
        log_selection(sel, log);
        result.artifacts.push_back(write_file(dir / "selection.json", [&](std::ostream& o) { o << selection_json(sel); }));
      }
      break;
    }
    case Mode::frontier: {
      const DoseResponseTable table = config.report ? read_report_csv(*config.report) : analyse(config, log).table;
      std::vector<double> kappas = config.kappa_grid;
      if (kappas.empty()) kappas.push_back(*config.kappa);
      const auto pts = points(table);
      const Frontier f = frontier(pts, kappas);
      for (const auto& s : f.selections) log_selection(s, log);
      result.artifacts.push_back(write_file(dir / "frontier.json", [&](std::ostream& o) { o << frontier_json(f); }));
      break;
    }
    case Mode::coverage: {
      OracleTable truth;
      if (config.coverage.truth) {
        std::ifstream in(*config.coverage.truth, std::ios::binary);
        if (!in) throw ConfigError(fmt::format("cannot open truth table {}", config.coverage.truth->string()));
        truth = read_truth_csv(in);
      } else {
        truth = compute_oracle(config);
      }
      const CoverageResult cov = run_coverage(config, truth, log);
      nlohmann::ordered_json j;
      j["x"] = cov.x;
      j["truth"] = cov.truth;
      j["cohorts"] = cov.cohorts;
      j["covered"] = cov.covered;
      j["failed"] = cov.failed;
      j["coverage"] = cov.coverage();
      fmt::print(log, "coverage at x = {}: {} / {} ({:.3f})\n", cov.x, cov.covered, cov.cohorts - cov.failed,
                 cov.coverage());
      result.artifacts.push_back(write_file(dir / "coverage.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; }));
      break;
    }
  }
  return result;
}

}  // namespace rcds
