#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcds/core_model.hpp"
#include "rcds/glm.hpp"

namespace rcds {

// A baseline covariate entering a model: as-is, one-hot (first level is the
// reference), or through a restricted cubic spline.
struct BaselineTerm {
  enum class Kind { linear, categorical, spline };

  std::string name;
  Kind kind = Kind::linear;
  std::vector<double> knots;  // spline only; empty = 10/50/90th percentiles
};

// Resolves terms against a cohort (column positions, category levels, knots)
// and writes the resulting feature columns for a subject.
class BaselineEncoder {
 public:
  BaselineEncoder() = default;
  BaselineEncoder(const Cohort& cohort, std::span<const BaselineTerm> terms);

  std::size_t width() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  void encode(const BaselineCovariates& covariates, std::span<double> out) const;

 private:
  struct Resolved {
    BaselineTerm::Kind kind;
    std::size_t index;
    std::vector<double> levels;  // categorical, excluding the reference
    std::optional<SplineBasis> spline;
  };
  std::vector<Resolved> terms_;
  std::vector<std::string> names_;
};

}  // namespace rcds
