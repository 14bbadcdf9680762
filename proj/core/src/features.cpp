#include "rcds/features.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "rcds/errors.hpp"

namespace rcds {

BaselineEncoder::BaselineEncoder(const Cohort& cohort, std::span<const BaselineTerm> terms) {
  for (const auto& term : terms) {
    const auto index = cohort.schema.index_of(term.name);
    if (!index) throw ConfigError(fmt::format("baseline covariate '{}' is not in the cohort schema", term.name));
    Resolved r{term.kind, *index, {}, {}};
    switch (term.kind) {
      case BaselineTerm::Kind::linear:
        names_.push_back(term.name);
        break;
      case BaselineTerm::Kind::categorical: {
        std::set<double> levels;
        for (const auto& s : cohort.subjects) levels.insert(s.baseline.values[*index]);
        if (levels.size() > 1) r.levels.assign(std::next(levels.begin()), levels.end());
        for (double level : r.levels) names_.push_back(fmt::format("{}={}", term.name, level));
        break;
      }
      case BaselineTerm::Kind::spline: {
        std::vector<double> knots = term.knots;
        if (knots.empty()) {
          std::vector<double> values;
          values.reserve(cohort.size());
          for (const auto& s : cohort.subjects) values.push_back(s.baseline.values[*index]);
          const double probs[] = {0.1, 0.5, 0.9};
          knots = quantiles(std::move(values), probs);
        }
        r.spline.emplace(std::move(knots));
        for (auto& name : r.spline->names(term.name)) names_.push_back(std::move(name));
        break;
      }
    }
    terms_.push_back(std::move(r));
  }
}

void BaselineEncoder::encode(const BaselineCovariates& covariates, std::span<double> out) const {
  std::size_t col = 0;
  for (const auto& term : terms_) {
    const double v = covariates.values[term.index];
    switch (term.kind) {
      case BaselineTerm::Kind::linear:
        out[col++] = v;
        break;
      case BaselineTerm::Kind::categorical:
        for (double level : term.levels) out[col++] = v == level ? 1.0 : 0.0;
        break;
      case BaselineTerm::Kind::spline: {
        term.spline->evaluate(v, out.subspan(col, term.spline->columns()));
        col += term.spline->columns();
        break;
      }
    }
  }
}

}  // namespace rcds
