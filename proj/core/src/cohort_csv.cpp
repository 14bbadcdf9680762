#include "rcds/cohort_csv.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rcds/errors.hpp"

namespace rcds {

namespace {

constexpr std::string_view kBaselinePrefix = "baseline_";

std::string number(double v) { return fmt::format("{}", v); }
std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

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

template <typename T>
std::optional<T> parse(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct Pending {
  SubjectRecord record;
  std::size_t first_line = 0;
  std::optional<int> declared_end;
  std::optional<int> outcome_line_t;
  bool has_history_columns = false;
  std::vector<std::optional<double>> declared_last;
  std::vector<std::optional<int>> declared_since;
};

}  // namespace

void write_cohort_csv(const Cohort& cohort, std::ostream& out) {
  out << "subject_id,t,monitor,observed_marker,last_observed_marker,months_since_last_monitor,override_flag,"
         "followup_end,end_reason,outcome_y,marker_baseline";
  for (const auto& name : cohort.schema.names) out << ',' << kBaselinePrefix << name;
  out << '\n';
  for (const auto& s : cohort.subjects) {
    std::string baseline;
    for (double v : s.baseline.values) baseline += "," + number(v);
    for (const auto& row : s.rows) {
      const bool last = row.t == s.followup_end;
      fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{}{}\n", s.subject_id, row.t, row.monitor ? 1 : 0,
                 number(row.observed_marker), number(row.last_observed_marker), row.months_since_last_monitor,
                 row.override_flag ? 1 : 0, s.followup_end, to_string(s.end_reason),
                 last && s.outcome_y ? std::to_string(*s.outcome_y) : std::string(), number(s.baseline_marker),
                 baseline);
    }
  }
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write cohort file {}", path.string()));
  write_cohort_csv(cohort, out);
}

Cohort read_cohort_csv(std::istream& in, int horizon) {
  std::vector<std::string> violations;
  std::string line;
  if (!std::getline(in, line)) throw IngestError({"empty cohort file"});
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  std::map<std::string, std::size_t, std::less<>> col;
  Cohort cohort;
  cohort.horizon = horizon;
  std::vector<std::size_t> baseline_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(std::string(header[i]), i).second) {
      violations.push_back(fmt::format("line 1: duplicated column '{}'", header[i]));
    }
    if (header[i].starts_with(kBaselinePrefix)) {
      cohort.schema.names.emplace_back(header[i].substr(kBaselinePrefix.size()));
      baseline_cols.push_back(i);
    }
  }
  for (std::string_view required :
       {"subject_id", "t", "monitor", "observed_marker", "override_flag", "followup_end", "end_reason", "outcome_y"}) {
    if (!col.contains(required)) violations.push_back(fmt::format("line 1: missing required column '{}'", required));
  }
  if (!violations.empty()) throw IngestError(std::move(violations));
  auto optional_col = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = col.find(name);
    return it == col.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  };
  const auto c_last = optional_col("last_observed_marker");
  const auto c_since = optional_col("months_since_last_monitor");
  const auto c_base = optional_col("marker_baseline");

  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> index_of;
  std::set<std::pair<std::string, int>> seen_rows;
  std::size_t line_no = 1;
  std::size_t current = static_cast<std::size_t>(-1);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    auto bad = [&](std::string what) { violations.push_back(fmt::format("line {}: {}", line_no, what)); };
    if (f.size() != header.size()) {
      bad(fmt::format("expected {} fields, found {}", header.size(), f.size()));
      continue;
    }
    const std::string id(f[col.find("subject_id")->second]);
    if (id.empty()) {
      bad("empty subject_id");
      continue;
    }
    const auto t = parse<int>(f[col.find("t")->second]);
    const auto monitor = parse<int>(f[col.find("monitor")->second]);
    const auto override_flag = parse<int>(f[col.find("override_flag")->second]);
    const auto followup_end = parse<int>(f[col.find("followup_end")->second]);
    const auto end_reason = parse_end_reason(f[col.find("end_reason")->second]);
    const auto marker_text = f[col.find("observed_marker")->second];
    const auto outcome_text = f[col.find("outcome_y")->second];
    std::optional<double> marker;
    bool ok = true;
    if (!t || *t < 0) ok = false, bad("t must be a non-negative integer");
    if (!monitor || (*monitor != 0 && *monitor != 1)) ok = false, bad("monitor must be 0 or 1");
    if (!override_flag || (*override_flag != 0 && *override_flag != 1)) ok = false, bad("override_flag must be 0 or 1");
    if (!followup_end) ok = false, bad("followup_end must be an integer");
    if (!end_reason) ok = false, bad(fmt::format("unknown end_reason '{}'", f[col.find("end_reason")->second]));
    if (!marker_text.empty()) {
      marker = parse<double>(marker_text);
      if (!marker) ok = false, bad("observed_marker is not a number");
    }
    std::optional<int> outcome;
    if (!outcome_text.empty()) {
      outcome = parse<int>(outcome_text);
      if (!outcome) ok = false, bad("outcome_y is not an integer");
    }
    std::vector<double> baseline;
    for (std::size_t c : baseline_cols) {
      const auto v = parse<double>(f[c]);
      if (!v) {
        ok = false;
        bad(fmt::format("{} is not a number", header[c]));
      } else {
        baseline.push_back(*v);
      }
    }
    std::optional<double> base_marker;
    if (c_base && !f[*c_base].empty()) {
      base_marker = parse<double>(f[*c_base]);
      if (!base_marker) ok = false, bad("marker_baseline is not a number");
    }
    std::optional<double> declared_last;
    std::optional<int> declared_since;
    if (c_last && !f[*c_last].empty()) {
      declared_last = parse<double>(f[*c_last]);
      if (!declared_last) ok = false, bad("last_observed_marker is not a number");
    }
    if (c_since) {
      declared_since = parse<int>(f[*c_since]);
      if (!declared_since) ok = false, bad("months_since_last_monitor must be an integer");
    }
    if (!ok) continue;
    if (!seen_rows.emplace(id, *t).second) {
      bad(fmt::format("duplicated row for subject {} month {}", id, *t));
      continue;
    }

    auto it = index_of.find(id);
    if (it == index_of.end()) {
      it = index_of.emplace(id, pending.size()).first;
      Pending p;
      p.record.subject_id = id;
      p.record.baseline.values = baseline;
      p.record.baseline_marker = base_marker;
      p.record.followup_end = *followup_end;
      p.record.end_reason = *end_reason;
      p.first_line = line_no;
      p.has_history_columns = c_last.has_value() || c_since.has_value();
      pending.push_back(std::move(p));
    } else if (it->second != current) {
      bad(fmt::format("rows of subject {} are not contiguous", id));
      continue;
    }
    current = it->second;
    Pending& p = pending[current];
    SubjectRecord& rec = p.record;
    const int expected_t = static_cast<int>(rec.rows.size());
    if (*t != expected_t) {
      bad(fmt::format("subject {}: month {} follows month {} (months must be consecutive from 0)", id, *t,
                      expected_t - 1));
      continue;
    }
    if (*followup_end != rec.followup_end || *end_reason != rec.end_reason || baseline != rec.baseline.values ||
        base_marker != rec.baseline_marker) {
      bad(fmt::format("subject {}: per-subject fields differ from the subject's first row", id));
    }
    if (outcome) {
      if (*t != rec.followup_end) bad(fmt::format("subject {}: outcome_y only belongs on the last row", id));
      rec.outcome_y = outcome;
    }
    if (!*monitor && marker) bad(fmt::format("subject {}: observed_marker on an unmonitored month", id));
    if (*monitor && !marker) bad(fmt::format("subject {}: monitored month without observed_marker", id));
    if (declared_since && expected_t > 0) {
      const int prev = p.declared_since.back().value_or(-1);
      if (*declared_since != 0 && *declared_since != prev + 1) {
        bad(fmt::format("subject {}: months_since_last_monitor jumps from {} to {}", id, prev, *declared_since));
      }
    }
    TimeRow row;
    row.t = *t;
    row.monitor = *monitor == 1;
    row.observed_marker = marker;
    row.override_flag = *override_flag == 1;
    rec.rows.push_back(row);
    p.declared_last.push_back(declared_last);
    p.declared_since.push_back(declared_since);
  }

  cohort.subjects.reserve(pending.size());
  for (auto& p : pending) {
    SubjectRecord& rec = p.record;
    derive_history(rec);
    for (std::size_t i = 0; i < rec.rows.size(); ++i) {
      const auto& row = rec.rows[i];
      if (c_since && p.declared_since[i] && *p.declared_since[i] != row.months_since_last_monitor) {
        violations.push_back(fmt::format("subject {} month {}: months_since_last_monitor {} but {} derived",
                                         rec.subject_id, row.t, *p.declared_since[i], row.months_since_last_monitor));
      }
      if (c_last && p.declared_last[i] != row.last_observed_marker) {
        violations.push_back(fmt::format("subject {} month {}: last_observed_marker does not match the carried-forward value",
                                         rec.subject_id, row.t));
      }
    }
    for (auto& v : check_record(rec, horizon, cohort.schema.names.size())) {
      violations.push_back(fmt::format("line {}: {}", p.first_line, v));
    }
    cohort.subjects.push_back(std::move(rec));
  }
  if (cohort.subjects.empty() && violations.empty()) violations.push_back("cohort file has no data rows");
  if (!violations.empty()) throw IngestError(std::move(violations));
  return cohort;
}

Cohort ingest_cohort(const std::filesystem::path& path, int horizon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError({fmt::format("cannot open cohort file {}", path.string())});
  return read_cohort_csv(in, horizon);
}

void write_expanded_csv(const ExpandedDataset& ds, std::ostream& out) {
  out << "subject_id,x,t,at_risk,censored,response_y,response_d\n";
  for (const auto& clone : ds.clones()) {
    const auto& id = ds.cohort().subjects[clone.subject].subject_id;
    for (const auto& r : ds.clone_rows(clone)) {
      fmt::print(out, "{},{},{},{},{},{},{}\n", id, r.x, r.t, r.at_risk ? 1 : 0, r.censored_this_month ? 1 : 0,
                 r.response_y ? std::to_string(*r.response_y) : std::string(), r.response_d);
    }
  }
}

}  // namespace rcds
