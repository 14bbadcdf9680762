#include "rcds/msm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "rcds/errors.hpp"
#include "rcds/parallel.hpp"
#include "rcds/random.hpp"

namespace rcds {

namespace {

// Intercept used when every horizon response is zero: exp(-30) is zero for
// any practical purpose and keeps the curve finite.
constexpr double kDegenerateIntercept = -30.0;

enum class Response { outcome, resource };

SplineBasis strategy_basis(const StrategyGrid& grid, const MsmSpec& spec) {
  if (!spec.strategy_knots.empty()) return SplineBasis(spec.strategy_knots);
  const double probs[] = {0.05, 0.35, 0.65, 0.95};
  return SplineBasis(quantiles(grid.thresholds(), probs));
}

MsmFit fit_msm(const WeightedExpandedDataset& wds, const MsmSpec& spec, Response which, bool unit_weights,
               const GlmOptions& options) {
  const ExpandedDataset& ds = wds.expanded();
  const auto thresholds = ds.grid().thresholds();
  if (std::set<double>(thresholds.begin(), thresholds.end()).size() < 2) {
    throw ConfigError("the MSMs need a grid of at least 2 distinct thresholds");
  }
  const auto responses = horizon_responses(ds);
  std::set<double> seen;
  for (const auto& r : responses) seen.insert(r.x);
  if (seen.size() < 2) {
    throw ConfigError(fmt::format("horizon responses exist for {} threshold(s); at least 2 are needed", seen.size()));
  }

  MsmFit fit{GlmFit{}, strategy_basis(ds.grid(), spec), BaselineEncoder(ds.cohort(), spec.baseline_terms), {}, 0};
  const std::size_t n = responses.size();
  const std::size_t p = fit.width();
  DesignMatrix design;
  design.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  design.columns.push_back("(Intercept)");
  for (auto& name : fit.strategy_basis.names("x")) design.columns.push_back(std::move(name));
  for (const auto& name : fit.baseline.names()) design.columns.push_back(name);
  design.weights.resize(static_cast<Eigen::Index>(n));
  std::vector<double> y(n);
  std::vector<double> row(p);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = responses[i];
    fit.design_row(r.x, ds.cohort().subjects[r.subject].baseline, row);
    for (std::size_t j = 0; j < p; ++j) design.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    design.weights[static_cast<Eigen::Index>(i)] = unit_weights ? 1.0 : wds.horizon_weight(r.subject);
    y[i] = which == Response::outcome ? r.y : r.d;
    total += y[i] * design.weights[static_cast<Eigen::Index>(i)];
  }
  fit.rows = n;
  const Family family = which == Response::outcome ? spec.outcome_family : spec.resource_family;
  if (total == 0.0) {
    fit.glm.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    fit.glm.coefficients[0] = kDegenerateIntercept;
    fit.glm.columns = design.columns;
    fit.glm.family = family;
    fit.glm.converged = false;
    fit.warnings.push_back(fmt::format("DegenerateResponse: every horizon {} is zero",
                                       which == Response::outcome ? "outcome" : "measurement count"));
    return fit;
  }
  fit.glm = fit_glm(design, y, family, options);
  return fit;
}

MsmFit fit_msm_public(const WeightedExpandedDataset& wds, const MsmSpec& spec, Response which,
                      const GlmOptions& options) {
  return fit_msm(wds, spec, which, false, options);
}

}  // namespace

MsmSpec MsmSpec::default_spec() {
  MsmSpec spec;
  spec.baseline_terms = {{"sex", BaselineTerm::Kind::categorical, {}}, {"age", BaselineTerm::Kind::linear, {}}};
  return spec;
}

void MsmFit::design_row(double x, const BaselineCovariates& covariates, std::span<double> out) const {
  out[0] = 1.0;
  const std::size_t k = strategy_basis.columns();
  strategy_basis.evaluate(x, out.subspan(1, k));
  baseline.encode(covariates, out.subspan(1 + k, baseline.width()));
}

double MsmFit::predict(double x, const BaselineCovariates& covariates) const {
  std::vector<double> row(width());
  design_row(x, covariates, row);
  double eta = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) eta += row[j] * glm.coefficients[static_cast<Eigen::Index>(j)];
  return inverse_link(glm.family, eta);
}

MsmFit fit_outcome_msm(const WeightedExpandedDataset& wds, const MsmSpec& spec, const GlmOptions& options) {
  return fit_msm_public(wds, spec, Response::outcome, options);
}

MsmFit fit_resource_msm(const WeightedExpandedDataset& wds, const MsmSpec& spec, const GlmOptions& options) {
  return fit_msm_public(wds, spec, Response::resource, options);
}

std::vector<double> standardize(const MsmFit& fit, const Cohort& cohort, std::span<const double> xs) {
  std::vector<double> out(xs.size(), 0.0);
  if (cohort.empty()) return out;
  const std::size_t k = fit.strategy_basis.columns();
  const std::size_t b = fit.baseline.width();
  // eta = strategy part + baseline part; the baseline part is shared across x.
  std::vector<double> baseline_eta(cohort.size(), 0.0);
  std::vector<double> enc(b);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    fit.baseline.encode(cohort.subjects[i].baseline, enc);
    for (std::size_t j = 0; j < b; ++j) baseline_eta[i] += enc[j] * fit.glm.coefficients[static_cast<Eigen::Index>(1 + k + j)];
  }
  std::vector<double> basis(k);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    fit.strategy_basis.evaluate(xs[s], basis);
    double eta_x = fit.glm.coefficients[0];
    for (std::size_t j = 0; j < k; ++j) eta_x += basis[j] * fit.glm.coefficients[static_cast<Eigen::Index>(1 + j)];
    double sum = 0.0;
    for (double be : baseline_eta) sum += inverse_link(fit.glm.family, eta_x + be);
    out[s] = sum / static_cast<double>(cohort.size());
  }
  return out;
}

Estimate estimate(std::shared_ptr<const Cohort> cohort, const StrategyGrid& grid, const AnalysisOptions& options) {
  auto ds = std::make_shared<const ExpandedDataset>(expand(cohort, grid));
  Estimate out;
  MonitorModel model = fit_monitor_model(*cohort, options.monitor, options.glm);
  out.monitor_coefficients = model.glm().coefficients;
  out.monitor_columns = model.columns();
  const WeightedExpandedDataset wds = attach_weights(ds, model, options.weights);
  out.weights = wds.summary();
  out.outcome = fit_msm(wds, options.msm, Response::outcome, options.unit_weights, options.glm);
  out.resource = fit_msm(wds, options.msm, Response::resource, options.unit_weights, options.glm);
  for (const auto* fit : {&out.outcome, &out.resource}) {
    out.warnings.insert(out.warnings.end(), fit->warnings.begin(), fit->warnings.end());
  }

  const auto xs = grid.thresholds();
  const auto risk = standardize(out.outcome, *cohort, xs);
  const auto usage = standardize(out.resource, *cohort, xs);
  std::vector<std::size_t> at_risk(xs.size(), 0);
  for (const auto& c : ds->clones()) {
    if (c.reaches_horizon(ds->horizon())) ++at_risk[c.strategy];
  }
  out.table.rows.resize(xs.size());
  for (std::size_t s = 0; s < xs.size(); ++s) {
    auto& row = out.table.rows[s];
    row.x = xs[s];
    row.risk = std::clamp(risk[s], 0.0, 1.0);
    row.usage = std::max(usage[s], 0.0);
    row.n_atrisk = at_risk[s];
  }
  return out;
}

Cohort resample_subjects(const Cohort& cohort, std::uint64_t seed) {
  Cohort out;
  out.horizon = cohort.horizon;
  out.schema = cohort.schema;
  const std::size_t n = cohort.size();
  out.subjects.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    out.subjects.push_back(cohort.subjects[std::min(j, n - 1)]);
  }
  return out;
}

Estimate bootstrap_pipeline(std::shared_ptr<const Cohort> cohort, const StrategyGrid& grid,
                            const AnalysisOptions& options, int replicates, std::uint64_t seed) {
  if (replicates < 1) throw ConfigError("bootstrap needs at least 1 replicate");
  Estimate point = estimate(cohort, grid, options);
  const auto b = static_cast<std::size_t>(replicates);
  struct Replicate {
    bool ok = false;
    std::vector<double> risk, usage;
    Eigen::VectorXd monitor;
  };
  std::vector<Replicate> reps(b);
  parallel_for(b, [&](std::size_t r) {
    auto sample = std::make_shared<const Cohort>(resample_subjects(*cohort, derive_seed(seed, kBootstrapStream, r)));
    try {
      const Estimate e = estimate(sample, grid, options);
      auto& rep = reps[r];
      rep.ok = true;
      for (const auto& row : e.table.rows) {
        rep.risk.push_back(row.risk);
        rep.usage.push_back(row.usage);
      }
      rep.monitor = e.monitor_coefficients;
    } catch (const SeparationError&) {
    } catch (const NonConvergence&) {
    } catch (const RankError&) {
    } catch (const PositivityViolation&) {
    } catch (const ConfigError&) {
      // A resample can lose every horizon row for all but one threshold.
    }
  });

  BootstrapInfo info;
  info.requested = replicates;
  for (auto& rep : reps) {
    if (!rep.ok) {
      ++info.failed;
      continue;
    }
    info.risk.push_back(std::move(rep.risk));
    info.usage.push_back(std::move(rep.usage));
    info.monitor_coefficients.push_back(std::move(rep.monitor));
  }
  if (static_cast<double>(info.failed) > 0.05 * replicates || info.risk.empty()) {
    throw BootstrapUnstable(info.failed, replicates);
  }

  const double probs[] = {0.025, 0.975};
  const std::size_t ok = info.risk.size();
  for (std::size_t s = 0; s < point.table.rows.size(); ++s) {
    auto& row = point.table.rows[s];
    auto summarise = [&](const std::vector<std::vector<double>>& curves, double estimate_value,
                         std::optional<Interval>& ci, std::optional<double>& se) {
      std::vector<double> v(ok);
      double mean = 0.0;
      for (std::size_t r = 0; r < ok; ++r) {
        v[r] = curves[r][s];
        mean += v[r];
      }
      mean /= static_cast<double>(ok);
      double ss = 0.0;
      for (double value : v) ss += (value - mean) * (value - mean);
      se = ok > 1 ? std::sqrt(ss / static_cast<double>(ok - 1)) : 0.0;
      const auto q = quantiles(std::move(v), probs);
      // Percentile limits, widened when needed so the interval contains the point estimate.
      ci = Interval{std::min(q[0], estimate_value), std::max(q[1], estimate_value)};
    };
    summarise(info.risk, row.risk, row.ci_risk, row.se_risk);
    summarise(info.usage, row.usage, row.ci_usage, row.se_usage);
  }
  point.table.bootstrap = std::move(info);
  return point;
}

}  // namespace rcds
