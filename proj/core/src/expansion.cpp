#include "rcds/expansion.hpp"

#include "rcds/errors.hpp"
#include "rcds/parallel.hpp"

namespace rcds {

ExpandedDataset::ExpandedDataset(std::shared_ptr<const Cohort> cohort, StrategyGrid grid, std::vector<Clone> clones)
    : cohort_(std::move(cohort)), grid_(std::move(grid)), clones_(std::move(clones)) {
  for (const auto& c : clones_) row_count_ += static_cast<std::size_t>(c.last_t) + 1;
}

int ExpandedDataset::strategies_followed(std::uint32_t subject) const {
  int count = 0;
  for (const auto& c : clones_) {
    if (c.subject == subject && !c.censored) ++count;
  }
  return count;
}

std::vector<ExpandedRow> ExpandedDataset::clone_rows(const Clone& clone) const {
  const auto& record = cohort_->subjects[clone.subject];
  const double x = grid_.strategies[clone.strategy].x;
  std::vector<ExpandedRow> out;
  out.reserve(static_cast<std::size_t>(clone.last_t) + 1);
  int cumulative = 0;
  for (int t = 0; t <= clone.last_t; ++t) {
    const auto& row = record.rows[static_cast<std::size_t>(t)];
    if (row.monitor) ++cumulative;
    ExpandedRow r;
    r.subject = clone.subject;
    r.x = x;
    r.t = t;
    r.censored_this_month = clone.censored && t == clone.last_t;
    r.at_risk = !r.censored_this_month;
    r.carry = &row;
    r.response_d = cumulative;
    if (r.at_risk && t == horizon()) r.response_y = record.outcome_y;
    out.push_back(r);
  }
  return out;
}

std::vector<ExpandedRow> ExpandedDataset::rows() const {
  std::vector<ExpandedRow> out;
  out.reserve(row_count_);
  for (const auto& c : clones_) {
    auto rows = clone_rows(c);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

ExpandedColumns ExpandedDataset::columns() const {
  ExpandedColumns cols;
  for (const auto& c : clones_) {
    for (const auto& r : clone_rows(c)) {
      cols.subject.push_back(r.subject);
      cols.x.push_back(r.x);
      cols.t.push_back(r.t);
      cols.at_risk.push_back(r.at_risk ? 1 : 0);
      cols.censored_this_month.push_back(r.censored_this_month ? 1 : 0);
      cols.response_y.push_back(r.response_y.value_or(-1));
      cols.response_d.push_back(r.response_d);
    }
  }
  return cols;
}

ExpandedDataset expand(std::shared_ptr<const Cohort> cohort, const StrategyGrid& grid) {
  if (!cohort || cohort->empty()) throw ConfigError("cannot expand an empty cohort");
  grid.validate();
  const std::size_t n = cohort->size();
  const std::size_t k = grid.size();
  const int horizon = cohort->horizon;
  std::vector<Clone> clones(n * k);
  parallel_for(n, [&](std::size_t i) {
    const auto& record = cohort->subjects[i];
    for (std::size_t s = 0; s < k; ++s) {
      Clone c;
      c.subject = static_cast<std::uint32_t>(i);
      c.strategy = static_cast<std::uint32_t>(s);
      c.deviation = consistency_horizon(grid.strategies[s], record, horizon);
      c.censored = c.deviation <= record.followup_end;
      c.last_t = c.censored ? c.deviation : record.followup_end;
      clones[i * k + s] = c;
    }
  });
  return ExpandedDataset(std::move(cohort), grid, std::move(clones));
}

std::vector<HorizonResponse> horizon_responses(const ExpandedDataset& ds) {
  std::vector<HorizonResponse> out;
  const int horizon = ds.horizon();
  for (const auto& c : ds.clones()) {
    if (!c.reaches_horizon(horizon)) continue;
    const auto& record = ds.cohort().subjects[c.subject];
    out.push_back({c.subject, c.strategy, ds.grid().strategies[c.strategy].x, record.outcome_y.value_or(0),
                   record.d_total});
  }
  return out;
}

}  // namespace rcds
