#include "rcds/weights.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rcds/errors.hpp"
#include "rcds/parallel.hpp"

namespace rcds {

namespace {

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double scaled_marker(const MonitorFeatureSpec& spec, const SubjectRecord& record, const TimeRow& before) {
  if (!before.last_observed_marker) {
    throw UndefinedHistory(
        fmt::format("subject {} has no observed marker before month {}", record.subject_id, before.t + 1));
  }
  return (*before.last_observed_marker - spec.marker_center) / spec.marker_scale;
}

std::size_t person_months(const Cohort& cohort) {
  std::size_t n = 0;
  for (const auto& s : cohort.subjects) n += static_cast<std::size_t>(s.followup_end) + 1;
  return n;
}

bool is_indicator(const Eigen::MatrixXd& x, Eigen::Index col) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double v = x(i, col);
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

// Indicator columns whose level (either side) fixes the response.
void check_indicator_separation(const DesignMatrix& design, std::span<const double> y) {
  for (Eigen::Index c = 0; c < design.cols(); ++c) {
    if (design.columns[static_cast<std::size_t>(c)] == "(Intercept)" || !is_indicator(design.x, c)) continue;
    double n1 = 0, y1 = 0, n0 = 0, y0 = 0;
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
      if (design.x(i, c) == 1.0) {
        n1 += 1;
        y1 += y[static_cast<std::size_t>(i)];
      } else {
        n0 += 1;
        y0 += y[static_cast<std::size_t>(i)];
      }
    }
    const bool sep1 = n1 > 0 && (y1 == 0 || y1 == n1);
    const bool sep0 = n0 > 0 && (y0 == 0 || y0 == n0);
    if (sep1 || sep0) throw SeparationError(design.columns[static_cast<std::size_t>(c)]);
  }
}

}  // namespace

void MonitorFeatureSpec::validate() const {
  if (!(marker_scale > 0.0) || !std::isfinite(marker_center)) {
    throw ConfigError("monitor model marker scale must be positive and center finite");
  }
  if (gap_cap < 1) throw ConfigError("monitor model gap_cap must be at least 1");
  if (marker == MarkerForm::spline && !marker_knots.empty() && marker_knots.size() < 3) {
    throw ConfigError("monitor model marker spline needs at least 3 knots");
  }
}

MonitorModel::MonitorModel(const Cohort& cohort, MonitorFeatureSpec spec)
    : spec_(std::move(spec)), baseline_(cohort, spec_.baseline_terms) {
  spec_.validate();
  columns_.push_back("(Intercept)");
  if (spec_.marker == MonitorFeatureSpec::MarkerForm::linear) {
    columns_.push_back("marker");
  } else {
    std::vector<double> knots = spec_.marker_knots;
    if (knots.empty()) {
      std::vector<double> values;
      values.reserve(person_months(cohort));
      for (const auto& s : cohort.subjects) {
        for (int t = 0; t <= s.followup_end; ++t) values.push_back(scaled_marker(spec_, s, history_before(s, t)));
      }
      const double probs[] = {0.1, 0.5, 0.9};
      knots = quantiles(std::move(values), probs);
      // Heavily tied markers can collapse quantiles; fall back to a linear term.
      if (!(knots[0] < knots[1] && knots[1] < knots[2])) knots.clear();
    }
    if (knots.empty()) {
      spec_.marker = MonitorFeatureSpec::MarkerForm::linear;
      columns_.push_back("marker");
    } else {
      spec_.marker_knots = knots;
      marker_basis_.emplace(std::move(knots));
      for (auto& name : marker_basis_->names("marker")) columns_.push_back(std::move(name));
    }
  }
  if (spec_.gap == MonitorFeatureSpec::GapForm::linear) {
    columns_.push_back("months_since_monitor");
  } else {
    // Pool the top categories until the open-ended one has both outcomes, so
    // a sparse tail does not masquerade as separation.
    int cap = spec_.gap_cap;
    while (cap > 0) {
      bool seen0 = false, seen1 = false;
      for (const auto& s : cohort.subjects) {
        for (int t = 0; t <= s.followup_end; ++t) {
          if (history_before(s, t).months_since_last_monitor >= cap) (s.rows[t].monitor ? seen1 : seen0) = true;
        }
      }
      if (seen0 && seen1) break;
      --cap;
    }
    spec_.gap_cap = std::max(cap, 1);
    for (int level = 1; level <= cap; ++level) {
      columns_.push_back(level == cap ? fmt::format("gap={}+", level) : fmt::format("gap={}", level));
    }
    if (cap == 0) spec_.gap_cap = 0;
  }
  if (spec_.override_flag) columns_.push_back("override");
  if (spec_.month) columns_.push_back("t");
  for (const auto& name : baseline_.names()) columns_.push_back(name);
}

void MonitorModel::features(const SubjectRecord& record, int t, std::span<double> out) const {
  const TimeRow before = history_before(record, t);
  std::size_t col = 0;
  out[col++] = 1.0;
  const double m = scaled_marker(spec_, record, before);
  if (marker_basis_) {
    marker_basis_->evaluate(m, out.subspan(col, marker_basis_->columns()));
    col += marker_basis_->columns();
  } else {
    out[col++] = m;
  }
  const int gap = before.months_since_last_monitor;
  if (spec_.gap == MonitorFeatureSpec::GapForm::linear) {
    out[col++] = gap;
  } else {
    for (int level = 1; level <= spec_.gap_cap; ++level) {
      out[col++] = (level == spec_.gap_cap ? gap >= level : gap == level) ? 1.0 : 0.0;
    }
  }
  if (spec_.override_flag) out[col++] = before.override_flag ? 1.0 : 0.0;
  if (spec_.month) out[col++] = t;
  baseline_.encode(record.baseline, out.subspan(col, baseline_.width()));
}

double MonitorModel::probability(const SubjectRecord& record, int t) const {
  double buffer[64];
  std::vector<double> heap;
  std::span<double> f(buffer, std::min<std::size_t>(width(), 64));
  if (width() > 64) {
    heap.resize(width());
    f = heap;
  }
  features(record, t, f);
  double eta = 0.0;
  for (std::size_t j = 0; j < width(); ++j) eta += f[j] * fit_.coefficients[static_cast<Eigen::Index>(j)];
  return logistic(eta);
}

MonitorModel MonitorModel::fit(const Cohort& cohort, const MonitorFeatureSpec& spec, const GlmOptions& options) {
  MonitorModel model(cohort, spec);
  const std::size_t n = person_months(cohort);
  const std::size_t p = model.width();
  DesignMatrix design;
  design.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  design.columns = model.columns_;
  design.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  std::vector<double> y(n);
  std::vector<double> row(p);
  std::size_t r = 0;
  double monitored = 0;
  for (const auto& s : cohort.subjects) {
    for (int t = 0; t <= s.followup_end; ++t, ++r) {
      model.features(s, t, row);
      for (std::size_t j = 0; j < p; ++j) design.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = row[j];
      y[r] = s.rows[static_cast<std::size_t>(t)].monitor ? 1.0 : 0.0;
      monitored += y[r];
    }
  }
  if (monitored == 0 || monitored == static_cast<double>(n)) throw SeparationError("(Intercept)");
  check_indicator_separation(design, y);
  model.fit_ = fit_glm(design, y, Family::binomial_logit, options);
  // Quasi-separation on a continuous feature shows up as a runaway coefficient.
  for (Eigen::Index j = 1; j < design.cols(); ++j) {
    const double sd = std::sqrt((design.x.col(j).array() - design.x.col(j).mean()).square().mean());
    if (std::abs(model.fit_.coefficients[j]) * sd > 20.0) throw SeparationError(design.columns[static_cast<std::size_t>(j)]);
  }
  return model;
}

MonitorModel MonitorModel::with_coefficients(const Cohort& cohort, const MonitorFeatureSpec& spec,
                                             Eigen::VectorXd coefficients) {
  MonitorModel model(cohort, spec);
  if (static_cast<std::size_t>(coefficients.size()) != model.width()) {
    throw SchemaError(fmt::format("monitor model expects {} coefficients, got {}", model.width(), coefficients.size()));
  }
  model.fit_.coefficients = std::move(coefficients);
  model.fit_.columns = model.columns_;
  model.fit_.family = Family::binomial_logit;
  model.fit_.converged = true;
  return model;
}

MonitorModel fit_monitor_model(const Cohort& cohort, const MonitorFeatureSpec& spec, const GlmOptions& options) {
  return MonitorModel::fit(cohort, spec, options);
}

std::string_view to_string(Numerator numerator) { return numerator == Numerator::one ? "one" : "marginal"; }

std::optional<Numerator> parse_numerator(std::string_view text) {
  if (text == "one") return Numerator::one;
  if (text == "marginal") return Numerator::marginal;
  return std::nullopt;
}

GlmFit fit_marginal_numerator(const Cohort& cohort, const GlmOptions& options) {
  // Month is the only covariate, so person-months collapse to one weighted row
  // per (month, decision) without changing the likelihood.
  std::vector<double> monitored(static_cast<std::size_t>(cohort.horizon) + 1, 0.0);
  std::vector<double> skipped(monitored.size(), 0.0);
  for (const auto& s : cohort.subjects) {
    for (int t = 0; t <= s.followup_end; ++t) {
      (s.rows[static_cast<std::size_t>(t)].monitor ? monitored : skipped)[static_cast<std::size_t>(t)] += 1.0;
    }
  }
  std::vector<double> y;
  std::vector<double> t_col, w_col;
  for (std::size_t t = 0; t < monitored.size(); ++t) {
    for (int event = 1; event >= 0; --event) {
      const double count = event ? monitored[t] : skipped[t];
      if (count == 0.0) continue;
      y.push_back(event);
      t_col.push_back(static_cast<double>(t));
      w_col.push_back(count);
    }
  }
  const auto rows = static_cast<Eigen::Index>(y.size());
  DesignMatrix design;
  design.x.resize(rows, 2);
  design.columns = {"(Intercept)", "t"};
  design.weights = Eigen::Map<const Eigen::VectorXd>(w_col.data(), rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    design.x(r, 0) = 1.0;
    design.x(r, 1) = t_col[static_cast<std::size_t>(r)];
  }
  return fit_glm(design, y, Family::binomial_logit, options);
}

WeightedExpandedDataset::WeightedExpandedDataset(std::shared_ptr<const ExpandedDataset> ds, WeightOptions options,
                                                 std::vector<std::size_t> offsets, std::vector<double> cumulative,
                                                 std::vector<double> horizon_weight, WeightSummary summary)
    : ds_(std::move(ds)),
      options_(options),
      offsets_(std::move(offsets)),
      cumulative_(std::move(cumulative)),
      horizon_weight_(std::move(horizon_weight)),
      summary_(summary) {}

double WeightedExpandedDataset::cumulative(std::uint32_t subject, int t) const {
  return cumulative_[offsets_[subject] + static_cast<std::size_t>(t)];
}

double WeightedExpandedDataset::weight(const Clone& clone, int t) const {
  if (t == ds_->horizon() && clone.reaches_horizon(t)) return horizon_weight_[clone.subject];
  return cumulative(clone.subject, t);
}

WeightedExpandedDataset attach_weights(std::shared_ptr<const ExpandedDataset> ds, const MonitorModel& model,
                                       const WeightOptions& options) {
  if (!ds) throw ConfigError("attach_weights needs an expanded dataset");
  if (options.truncation_percentile) {
    const double p = *options.truncation_percentile;
    if (!(p > 0.0 && p <= 100.0)) throw ConfigError("truncation percentile must lie in (0, 100]");
  }
  const Cohort& cohort = ds->cohort();
  const std::size_t n = cohort.size();
  const int horizon = ds->horizon();
  const std::size_t k = ds->grid().size();

  Eigen::Vector2d marginal = Eigen::Vector2d::Zero();
  if (options.numerator == Numerator::marginal) marginal = fit_marginal_numerator(cohort).coefficients;

  std::vector<std::size_t> offsets(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = offsets[i] + static_cast<std::size_t>(cohort.subjects[i].followup_end) + 1;
  }
  std::vector<double> cumulative(offsets[n], 1.0);
  std::vector<int> clones_at_horizon(n, 0);
  std::vector<std::vector<PositivityRow>> violations(n);

  parallel_for(n, [&](std::size_t i) {
    const auto& record = cohort.subjects[i];
    // Last month any clone of this subject is at risk; later rows are never used.
    int used_until = -1;
    for (std::size_t s = 0; s < k; ++s) {
      const Clone& c = ds->clones()[i * k + s];
      used_until = std::max(used_until, c.censored ? c.last_t - 1 : c.last_t);
      if (c.reaches_horizon(horizon)) ++clones_at_horizon[i];
    }
    double w = 1.0;
    for (int t = 0; t <= record.followup_end; ++t) {
      const bool monitored = record.rows[static_cast<std::size_t>(t)].monitor;
      const double p = model.probability(record, t);
      const double f = monitored ? p : 1.0 - p;
      if (t <= used_until && f < kProbabilityFloor) violations[i].push_back({record.subject_id, t, f});
      double num = 1.0;
      if (options.numerator == Numerator::marginal) {
        const double q = logistic(marginal[0] + marginal[1] * t);
        num = monitored ? q : 1.0 - q;
      }
      w *= num / f;
      cumulative[offsets[i] + static_cast<std::size_t>(t)] = w;
    }
  });

  std::vector<PositivityRow> all;
  for (auto& v : violations) all.insert(all.end(), v.begin(), v.end());
  if (!all.empty()) throw PositivityViolation(std::move(all));

  std::vector<double> horizon_weight(n, 0.0);
  std::vector<double> row_weights;
  double subject_sum = 0.0;
  std::size_t subject_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (cohort.subjects[i].followup_end != horizon) continue;
    const double w = cumulative[offsets[i + 1] - 1];
    horizon_weight[i] = w;
    subject_sum += w;
    ++subject_count;
    row_weights.insert(row_weights.end(), static_cast<std::size_t>(clones_at_horizon[i]), w);
  }

  WeightSummary summary;
  summary.horizon_rows = row_weights.size();
  summary.subject_mean = subject_count ? subject_sum / static_cast<double>(subject_count) : 0.0;
  if (!row_weights.empty()) {
    if (options.truncation_percentile) {
      const double probs[] = {*options.truncation_percentile / 100.0};
      const double cap = *options.truncation_percentile == 100.0
                             ? *std::max_element(row_weights.begin(), row_weights.end())
                             : quantiles(row_weights, probs)[0];
      summary.cap = cap;
      std::size_t truncated = 0;
      for (double& w : row_weights) {
        if (w > cap) {
          w = cap;
          ++truncated;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (clones_at_horizon[i] > 0) horizon_weight[i] = std::min(horizon_weight[i], cap);
      }
      summary.truncated_fraction = static_cast<double>(truncated) / static_cast<double>(row_weights.size());
    }
    const double probs[] = {0.0, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0};
    const auto q = quantiles(row_weights, probs);
    summary.min = q[0];
    summary.p01 = q[1];
    summary.p25 = q[2];
    summary.p50 = q[3];
    summary.p75 = q[4];
    summary.p99 = q[5];
    summary.max = q[6];
    double sum = 0.0;
    for (double w : row_weights) sum += w;
    summary.mean = sum / static_cast<double>(row_weights.size());
  }
  return WeightedExpandedDataset(std::move(ds), options, std::move(offsets), std::move(cumulative),
                                 std::move(horizon_weight), summary);
}

}  // namespace rcds
