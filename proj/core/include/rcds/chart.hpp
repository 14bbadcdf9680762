#pragma once

#include <optional>
#include <string>

#include "rcds/msm.hpp"

namespace rcds {

// Standalone SVG: risk (left axis) and usage (right axis) against the
// threshold, a horizontal line at kappa on the usage axis, the feasible
// thresholds shaded and the constrained choice marked.
std::string render_chart(const DoseResponseTable& table, std::optional<double> kappa);

}  // namespace rcds
