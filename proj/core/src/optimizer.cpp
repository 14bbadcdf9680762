#include "rcds/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "rcds/errors.hpp"

namespace rcds {

std::string_view to_string(SelectionStatus status) {
  return status == SelectionStatus::optimal ? "optimal" : "infeasible";
}

ConstrainedSelection select(std::span<const StrategyPoint> table, double kappa, Objective objective) {
  if (table.empty()) throw ConfigError("cannot select from an empty dose-response table");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be a positive finite number");

  ConstrainedSelection sel;
  sel.kappa = kappa;
  sel.objective = objective;
  const StrategyPoint* best = nullptr;
  // Returns true when a beats b.
  auto better = [objective](const StrategyPoint& a, const StrategyPoint& b) {
    if (a.risk != b.risk) return objective == Objective::minimize_risk ? a.risk < b.risk : a.risk > b.risk;
    if (a.usage != b.usage) return a.usage < b.usage;
    return a.x < b.x;
  };
  for (const auto& p : table) {
    if (!(p.usage <= kappa)) continue;
    sel.feasible_x.push_back(p.x);
    if (!best || better(p, *best)) best = &p;
  }
  std::sort(sel.feasible_x.begin(), sel.feasible_x.end());
  if (best) {
    sel.status = SelectionStatus::optimal;
    sel.chosen_x = best->x;
    sel.chosen_risk = best->risk;
    sel.chosen_usage = best->usage;
  }
  return sel;
}

Frontier frontier(std::span<const StrategyPoint> table, std::span<const double> kappa_grid, Objective objective) {
  if (kappa_grid.empty()) throw ConfigError("frontier needs at least one kappa");
  Frontier out;
  for (double kappa : kappa_grid) out.selections.push_back(select(table, kappa, objective));
  for (std::size_t i = 1; i < out.selections.size(); ++i) {
    const auto& a = out.selections[i - 1];
    const auto& b = out.selections[i];
    if (!a.chosen_x || !b.chosen_x || *a.chosen_x == *b.chosen_x) continue;
    FrontierStep step;
    step.kappa_from = a.kappa;
    step.kappa_to = b.kappa;
    step.delta_risk = b.chosen_risk - a.chosen_risk;
    step.delta_usage = b.chosen_usage - a.chosen_usage;
    if (step.delta_usage != 0.0) step.risk_per_measurement = step.delta_risk / step.delta_usage;
    out.steps.push_back(step);
  }
  return out;
}

}  // namespace rcds
