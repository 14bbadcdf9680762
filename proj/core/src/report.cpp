#include "rcds/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "rcds/errors.hpp"

namespace rcds {

namespace {

using json = nlohmann::ordered_json;

std::string num(double v) { return fmt::format("{}", v); }

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError(fmt::format("line {}: '{}' is not a number", line, text));
  }
  return v;
}

// Reads a header + numeric rows CSV into named columns.
std::map<std::string, std::vector<double>, std::less<>> read_numeric(std::istream& in,
                                                                     std::initializer_list<std::string_view> required) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names;
  for (auto h : split(line)) names.emplace_back(h);
  for (auto r : required) {
    if (std::find(names.begin(), names.end(), r) == names.end()) {
      throw SchemaError(fmt::format("CSV is missing column '{}'", r));
    }
  }
  std::map<std::string, std::vector<double>, std::less<>> cols;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != names.size()) throw SchemaError(fmt::format("line {}: wrong number of fields", line_no));
    for (std::size_t i = 0; i < f.size(); ++i) cols[names[i]].push_back(to_double(f[i], line_no));
  }
  return cols;
}

}  // namespace

std::vector<StrategyPoint> points(const DoseResponseTable& table) {
  std::vector<StrategyPoint> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) out.push_back({r.x, r.risk, r.usage});
  return out;
}

void write_report_csv(const DoseResponseTable& table, std::optional<double> kappa, std::ostream& out) {
  const bool ci = std::all_of(table.rows.begin(), table.rows.end(),
                              [](const DoseResponseRow& r) { return r.ci_risk && r.ci_usage; }) &&
                  !table.rows.empty() && table.has_intervals();
  out << (ci ? "x,risk,risk_lo,risk_hi,usage,usage_lo,usage_hi" : "x,risk,usage");
  if (kappa) out << ",feasible";
  out << '\n';
  std::vector<const DoseResponseRow*> rows;
  for (const auto& r : table.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->x > b->x; });
  for (const auto* r : rows) {
    if (ci) {
      fmt::print(out, "{},{},{},{},{},{},{}", num(r->x), num(r->risk), num(r->ci_risk->lo), num(r->ci_risk->hi),
                 num(r->usage), num(r->ci_usage->lo), num(r->ci_usage->hi));
    } else {
      fmt::print(out, "{},{},{}", num(r->x), num(r->risk), num(r->usage));
    }
    if (kappa) out << ',' << (r->usage <= *kappa ? 1 : 0);
    out << '\n';
  }
}

DoseResponseTable read_report_csv(std::istream& in) {
  auto cols = read_numeric(in, {"x", "risk", "usage"});
  const bool ci = cols.contains("risk_lo") && cols.contains("risk_hi") && cols.contains("usage_lo") &&
                  cols.contains("usage_hi");
  DoseResponseTable table;
  for (std::size_t i = 0; i < cols["x"].size(); ++i) {
    DoseResponseRow row;
    row.x = cols["x"][i];
    row.risk = cols["risk"][i];
    row.usage = cols["usage"][i];
    if (ci) {
      row.ci_risk = Interval{cols["risk_lo"][i], cols["risk_hi"][i]};
      row.ci_usage = Interval{cols["usage_lo"][i], cols["usage_hi"][i]};
    }
    table.rows.push_back(row);
  }
  if (table.rows.empty()) throw SchemaError("report CSV has no rows");
  std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  if (ci) table.bootstrap = BootstrapInfo{};
  return table;
}

DoseResponseTable read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open report {}", path.string()));
  return read_report_csv(in);
}

void write_truth_csv(const OracleTable& truth, std::ostream& out) {
  out << "x,risk_true,risk_mcse,usage_true,usage_mcse\n";
  for (const auto& r : truth.rows) {
    fmt::print(out, "{},{},{},{},{}\n", num(r.x), num(r.risk), num(r.risk_mcse), num(r.usage), num(r.usage_mcse));
  }
}

OracleTable read_truth_csv(std::istream& in) {
  auto cols = read_numeric(in, {"x", "risk_true", "risk_mcse", "usage_true", "usage_mcse"});
  OracleTable t;
  for (std::size_t i = 0; i < cols["x"].size(); ++i) {
    t.rows.push_back({cols["x"][i], cols["risk_true"][i], cols["risk_mcse"][i], cols["usage_true"][i],
                      cols["usage_mcse"][i]});
  }
  return t;
}

namespace {

json selection_to_json(const ConstrainedSelection& s) {
  json j;
  j["kappa"] = s.kappa;
  j["status"] = std::string(to_string(s.status));
  j["objective"] = s.objective == Objective::minimize_risk ? "minimize_risk" : "maximize_benefit";
  j["feasible_x"] = s.feasible_x;
  if (s.chosen_x) {
    j["chosen_x"] = *s.chosen_x;
    j["chosen_risk"] = s.chosen_risk;
    j["chosen_usage"] = s.chosen_usage;
  } else {
    j["chosen_x"] = nullptr;
  }
  return j;
}

}  // namespace

std::string selection_json(const ConstrainedSelection& selection) { return selection_to_json(selection).dump(2) + "\n"; }

std::string frontier_json(const Frontier& frontier) {
  json j;
  j["selections"] = json::array();
  for (const auto& s : frontier.selections) j["selections"].push_back(selection_to_json(s));
  j["steps"] = json::array();
  for (const auto& st : frontier.steps) {
    json s;
    s["kappa_from"] = st.kappa_from;
    s["kappa_to"] = st.kappa_to;
    s["delta_risk"] = st.delta_risk;
    s["delta_usage"] = st.delta_usage;
    s["risk_per_measurement"] = st.risk_per_measurement ? json(*st.risk_per_measurement) : json(nullptr);
    j["steps"].push_back(s);
  }
  return j.dump(2) + "\n";
}

std::string diagnostics_json(const Estimate& e) {
  json j;
  const auto& w = e.weights;
  j["weights"] = {{"min", w.min},   {"p01", w.p01},   {"p25", w.p25},   {"p50", w.p50},
                  {"p75", w.p75},   {"p99", w.p99},   {"max", w.max},   {"mean", w.mean},
                  {"truncated_fraction", w.truncated_fraction},
                  {"cap", w.cap ? json(*w.cap) : json(nullptr)},
                  {"subject_mean_at_horizon", w.subject_mean},
                  {"horizon_rows", w.horizon_rows}};
  json monitor;
  for (std::size_t i = 0; i < e.monitor_columns.size(); ++i) {
    monitor[e.monitor_columns[i]] = e.monitor_coefficients[static_cast<Eigen::Index>(i)];
  }
  j["monitor_model"] = monitor;
  auto fit_json = [](const MsmFit& f) {
    json m;
    for (std::size_t i = 0; i < f.glm.columns.size(); ++i) {
      m["coefficients"][f.glm.columns[i]] = f.glm.coefficients[static_cast<Eigen::Index>(i)];
    }
    m["rows"] = f.rows;
    m["iterations"] = f.glm.iterations;
    m["converged"] = f.glm.converged;
    m["condition_number"] = f.glm.condition_number;
    return m;
  };
  j["outcome_msm"] = fit_json(e.outcome);
  j["resource_msm"] = fit_json(e.resource);
  j["warnings"] = e.warnings;
  if (e.table.bootstrap) {
    j["bootstrap"] = {{"requested", e.table.bootstrap->requested}, {"failed", e.table.bootstrap->failed}};
  }
  json rows = json::array();
  for (const auto& r : e.table.rows) rows.push_back({{"x", r.x}, {"n_atrisk", r.n_atrisk}});
  j["horizon_rows_per_strategy"] = rows;
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace rcds
