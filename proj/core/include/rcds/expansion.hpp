#pragma once

// Replication and censoring: one clone per (subject, strategy), censored at
// the first month the subject's data deviate from that strategy.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "rcds/core_model.hpp"

namespace rcds {

// A clone's rows run t = 0..last_t. When censored, row last_t is the
// censoring month (censored_this_month = 1, not at risk).
struct Clone {
  std::uint32_t subject = 0;
  std::uint32_t strategy = 0;
  int deviation = 0;  // consistency_horizon(); horizon + 1 when never deviating
  int last_t = 0;
  bool censored = false;

  bool reaches_horizon(int horizon) const noexcept { return !censored && last_t == horizon; }
};

struct ExpandedRow {
  std::uint32_t subject = 0;
  double x = 0.0;
  int t = 0;
  bool at_risk = false;
  bool censored_this_month = false;
  const TimeRow* carry = nullptr;
  std::optional<int> response_y;  // horizon rows only
  int response_d = 0;             // monitoring events through t
};

// Column-per-field view of the expanded person-strategy-month rows.
struct ExpandedColumns {
  std::vector<std::uint32_t> subject;
  std::vector<double> x;
  std::vector<int> t;
  std::vector<std::uint8_t> at_risk;
  std::vector<std::uint8_t> censored_this_month;
  std::vector<int> response_y;  // -1 when absent
  std::vector<int> response_d;

  std::size_t size() const noexcept { return t.size(); }
};

class ExpandedDataset {
 public:
  ExpandedDataset(std::shared_ptr<const Cohort> cohort, StrategyGrid grid, std::vector<Clone> clones);

  const Cohort& cohort() const noexcept { return *cohort_; }
  const std::shared_ptr<const Cohort>& cohort_ptr() const noexcept { return cohort_; }
  const StrategyGrid& grid() const noexcept { return grid_; }
  const std::vector<Clone>& clones() const noexcept { return clones_; }
  std::size_t n_subjects() const noexcept { return cohort_->size(); }
  int horizon() const noexcept { return cohort_->horizon; }

  std::size_t row_count() const noexcept { return row_count_; }
  // Lambda_i: strategies subject i follows through the end of its follow-up.
  int strategies_followed(std::uint32_t subject) const;

  // Rows of one clone in t order.
  std::vector<ExpandedRow> clone_rows(const Clone& clone) const;
  // All rows in canonical (subject, x, t) order.
  std::vector<ExpandedRow> rows() const;
  ExpandedColumns columns() const;

 private:
  std::shared_ptr<const Cohort> cohort_;
  StrategyGrid grid_;
  std::vector<Clone> clones_;
  std::size_t row_count_ = 0;
};

ExpandedDataset expand(std::shared_ptr<const Cohort> cohort, const StrategyGrid& grid);

struct HorizonResponse {
  std::uint32_t subject = 0;
  std::uint32_t strategy = 0;
  double x = 0.0;
  int y = 0;
  int d = 0;
};

// One record per clone still uncensored at the horizon.
std::vector<HorizonResponse> horizon_responses(const ExpandedDataset& ds);

}  // namespace rcds
