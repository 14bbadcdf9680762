#pragma once

// Constrained choice of threshold: lowest risk among strategies whose expected
// usage stays within the cap kappa.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rcds {

// One strategy's point estimates; the optimizer never looks at intervals.
struct StrategyPoint {
  double x = 0.0;
  double risk = 0.0;
  double usage = 0.0;
};

enum class Objective { minimize_risk, maximize_benefit };
enum class SelectionStatus { optimal, infeasible };

std::string_view to_string(SelectionStatus status);

struct ConstrainedSelection {
  double kappa = 0.0;
  Objective objective = Objective::minimize_risk;
  SelectionStatus status = SelectionStatus::infeasible;
  std::vector<double> feasible_x;  // ascending
  std::optional<double> chosen_x;
  double chosen_risk = 0.0;
  double chosen_usage = 0.0;
};

// feasible = {usage <= kappa}; ties on the objective go to smaller usage,
// then smaller x. Throws ConfigError for an empty table or kappa <= 0.
ConstrainedSelection select(std::span<const StrategyPoint> table, double kappa,
                            Objective objective = Objective::minimize_risk);

struct FrontierStep {
  double kappa_from = 0.0;
  double kappa_to = 0.0;
  double delta_risk = 0.0;
  double delta_usage = 0.0;
  std::optional<double> risk_per_measurement;  // delta_risk / delta_usage when usage changes
};

struct Frontier {
  std::vector<ConstrainedSelection> selections;  // kappa_grid order
  std::vector<FrontierStep> steps;               // consecutive feasible pairs with differing choices
};

Frontier frontier(std::span<const StrategyPoint> table, std::span<const double> kappa_grid,
                  Objective objective = Objective::minimize_risk);

}  // namespace rcds
