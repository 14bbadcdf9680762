#include "rcds/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "rcds/errors.hpp"

namespace rcds {

namespace {

using json = nlohmann::json;

// Object view that remembers which keys were read so leftovers (typos) can be
// reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", where()));
  }
  ~Reader() = default;

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{} has the wrong type", where(), key));
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    used_.insert(key);
    if (!has(key)) return;
    T value{};
    get(key, value);
    out = value;
  }

  Reader child(const char* key) {
    used_.insert(key);
    return Reader(j_.at(key), path_ + "." + key);
  }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.contains(item.key())) throw ConfigError(fmt::format("unknown key {}.{}", where(), item.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Window read_window(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError(fmt::format("{} must be a [lo, hi] pair of integers", name));
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

void read_dgp(Reader r, DgpParams& p) {
  r.get("horizon", p.horizon);
  if (r.has("marker_init")) {
    auto c = r.child("marker_init");
    c.get("mean", p.marker_init.mean);
    c.get("sd", p.marker_init.sd);
    c.finish();
  }
  if (r.has("marker_drift")) {
    auto c = r.child("marker_drift");
    c.get("intercept", p.marker_drift.intercept);
    c.get("slope", p.marker_drift.slope);
    c.get("noise_sd", p.marker_drift.noise_sd);
    c.finish();
  }
  r.get("marker_center", p.marker_center);
  r.get("marker_scale", p.marker_scale);
  if (r.has("failure_hazard")) {
    auto c = r.child("failure_hazard");
    c.get("intercept", p.failure_hazard.intercept);
    c.get("months_since_monitor", p.failure_hazard.months_since_monitor);
    c.get("latent_marker", p.failure_hazard.latent_marker);
    c.get("age_per_decade", p.failure_hazard.age_per_decade);
    c.finish();
  }
  r.get("resuppress_prob", p.resuppress_prob);
  if (r.has("obs_monitor")) {
    auto c = r.child("obs_monitor");
    c.get("intercept", p.obs_monitor.intercept);
    c.get("last_marker", p.obs_monitor.last_marker);
    c.get("months_since_monitor", p.obs_monitor.months_since_monitor);
    c.get("override_flag", p.obs_monitor.override_flag);
    c.finish();
  }
  r.get("override_hazard", p.override_hazard);
  r.get("dropout_hazard", p.dropout_hazard);
  r.get("seed", p.seed);
  r.finish();
}

json dgp_json(const DgpParams& p) {
  json j;
  j["horizon"] = p.horizon;
  j["marker_init"] = {{"mean", p.marker_init.mean}, {"sd", p.marker_init.sd}};
  j["marker_drift"] = {{"intercept", p.marker_drift.intercept},
                       {"slope", p.marker_drift.slope},
                       {"noise_sd", p.marker_drift.noise_sd}};
  j["marker_center"] = p.marker_center;
  j["marker_scale"] = p.marker_scale;
  j["failure_hazard"] = {{"intercept", p.failure_hazard.intercept},
                         {"months_since_monitor", p.failure_hazard.months_since_monitor},
                         {"latent_marker", p.failure_hazard.latent_marker},
                         {"age_per_decade", p.failure_hazard.age_per_decade}};
  j["resuppress_prob"] = p.resuppress_prob;
  j["obs_monitor"] = {{"intercept", p.obs_monitor.intercept},
                      {"last_marker", p.obs_monitor.last_marker},
                      {"months_since_monitor", p.obs_monitor.months_since_monitor},
                      {"override_flag", p.obs_monitor.override_flag}};
  j["override_hazard"] = p.override_hazard;
  j["dropout_hazard"] = p.dropout_hazard;
  j["seed"] = p.seed;
  return j;
}

std::vector<BaselineTerm> read_terms(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError(fmt::format("{} must be an array", name));
  std::vector<BaselineTerm> out;
  for (const auto& item : j) {
    Reader r(item, name + "[]");
    BaselineTerm term;
    std::string kind = "linear";
    r.get("name", term.name);
    r.get("kind", kind);
    r.get("knots", term.knots);
    r.finish();
    if (term.name.empty()) throw ConfigError(fmt::format("{} entries need a name", name));
    if (kind == "linear") {
      term.kind = BaselineTerm::Kind::linear;
    } else if (kind == "categorical") {
      term.kind = BaselineTerm::Kind::categorical;
    } else if (kind == "spline") {
      term.kind = BaselineTerm::Kind::spline;
    } else {
      throw ConfigError(fmt::format("{}: unknown term kind '{}'", name, kind));
    }
    out.push_back(std::move(term));
  }
  return out;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::simulate: return "simulate";
    case Mode::oracle: return "oracle";
    case Mode::analyze: return "analyze";
    case Mode::frontier: return "frontier";
    case Mode::coverage: return "coverage";
  }
  return "analyze";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (Mode m : {Mode::simulate, Mode::oracle, Mode::analyze, Mode::frontier, Mode::coverage}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

StrategyGrid GridSpec::build() const {
  if (!(step > 0.0) || !(to >= from)) throw ConfigError("grid needs step > 0 and to >= from");
  auto grid = StrategyGrid::linear(from, to, step, window_below, window_above, override_window);
  grid.validate();
  return grid;
}

void RunConfig::validate() const {
  if (!seed) throw ConfigError("a seed is required (config \"seed\" or --seed)");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (dgp.horizon != horizon) throw ConfigError("dgp.horizon must equal horizon");
  dgp.validate();
  grid.build();
  analysis.monitor.validate();
  if (kappa && !(*kappa > 0.0)) throw ConfigError("kappa must be positive");
  for (double k : kappa_grid) {
    if (!(k > 0.0)) throw ConfigError("kappa_grid values must be positive");
  }
  if (bootstrap < 0) throw ConfigError("bootstrap must be >= 0");
  if (analysis.weights.truncation_percentile) {
    const double p = *analysis.weights.truncation_percentile;
    if (!(p > 0.0 && p <= 100.0)) throw ConfigError("weights.truncation_percentile must lie in (0, 100]");
  }
  if (oracle.rule != "earliest" && oracle.rule != "within_window") {
    throw ConfigError(fmt::format("oracle.rule must be earliest or within_window, not '{}'", oracle.rule));
  }
  if (oracle.n_mc < 1000) throw ConfigError("oracle.n_mc must be at least 1000");
  if (coverage.cohorts < 1 || coverage.n < 1 || coverage.bootstrap < 1) {
    throw ConfigError("coverage needs cohorts, n and bootstrap >= 1");
  }
  if (mode == Mode::frontier && kappa_grid.empty() && !kappa) throw ConfigError("frontier needs kappa_grid or kappa");
  if (n_subjects < 1) throw ConfigError("n_subjects must be at least 1");
}

RunConfig parse_run_config(std::string_view text) {
  const json j = parse_json(text);
  Reader r(j, "");
  RunConfig c;
  if (r.has("mode")) {
    std::string mode;
    r.get("mode", mode);
    const auto m = parse_mode(mode);
    if (!m) throw ConfigError(fmt::format("unknown mode '{}'", mode));
    c.mode = *m;
  }
  r.get("seed", c.seed);
  std::optional<std::string> input, report, output;
  r.get("input", input);
  r.get("report", report);
  r.get("output_dir", output);
  if (input) c.input = *input;
  if (report) c.report = *report;
  if (output) c.output_dir = *output;
  r.get("horizon", c.horizon);
  c.dgp.horizon = c.horizon;
  r.get("n_subjects", c.n_subjects);
  if (r.has("dgp")) read_dgp(r.child("dgp"), c.dgp);
  if (r.has("grid")) {
    auto g = r.child("grid");
    g.get("from", c.grid.from);
    g.get("to", c.grid.to);
    g.get("step", c.grid.step);
    if (g.has("window_below")) c.grid.window_below = read_window(g.raw("window_below"), "grid.window_below");
    if (g.has("window_above")) c.grid.window_above = read_window(g.raw("window_above"), "grid.window_above");
    if (g.has("override_window")) {
      c.grid.override_window = read_window(g.raw("override_window"), "grid.override_window");
    }
    g.finish();
  }
  if (r.has("monitor_model")) {
    auto m = r.child("monitor_model");
    auto& spec = c.analysis.monitor;
    std::string marker = "spline", gap = "categorical";
    m.get("marker", marker);
    m.get("marker_knots", spec.marker_knots);
    m.get("marker_center", spec.marker_center);
    m.get("marker_scale", spec.marker_scale);
    m.get("gap", gap);
    m.get("gap_cap", spec.gap_cap);
    m.get("override_flag", spec.override_flag);
    m.get("month", spec.month);
    if (m.has("baseline_terms")) spec.baseline_terms = read_terms(m.raw("baseline_terms"), "monitor_model.baseline_terms");
    m.finish();
    if (marker == "linear") {
      spec.marker = MonitorFeatureSpec::MarkerForm::linear;
    } else if (marker == "spline") {
      spec.marker = MonitorFeatureSpec::MarkerForm::spline;
    } else {
      throw ConfigError(fmt::format("monitor_model.marker must be linear or spline, not '{}'", marker));
    }
    if (gap == "linear") {
      spec.gap = MonitorFeatureSpec::GapForm::linear;
    } else if (gap == "categorical") {
      spec.gap = MonitorFeatureSpec::GapForm::categorical;
    } else {
      throw ConfigError(fmt::format("monitor_model.gap must be linear or categorical, not '{}'", gap));
    }
  }
  if (r.has("msm")) {
    auto m = r.child("msm");
    m.get("strategy_knots", c.analysis.msm.strategy_knots);
    if (m.has("baseline_terms")) c.analysis.msm.baseline_terms = read_terms(m.raw("baseline_terms"), "msm.baseline_terms");
    m.finish();
  }
  if (r.has("weights")) {
    auto w = r.child("weights");
    std::string numerator = "one";
    w.get("numerator", numerator);
    w.get("truncation_percentile", c.analysis.weights.truncation_percentile);
    w.finish();
    const auto n = parse_numerator(numerator);
    if (!n) throw ConfigError(fmt::format("weights.numerator must be one or marginal, not '{}'", numerator));
    c.analysis.weights.numerator = *n;
  }
  r.get("kappa", c.kappa);
  r.get("kappa_grid", c.kappa_grid);
  r.get("bootstrap", c.bootstrap);
  if (r.has("oracle")) {
    auto o = r.child("oracle");
    o.get("n_mc", c.oracle.n_mc);
    o.get("rule", c.oracle.rule);
    o.get("monitor_prob", c.oracle.monitor_prob);
    o.get("calibration_n", c.oracle.calibration_n);
    o.finish();
  }
  if (r.has("coverage")) {
    auto o = r.child("coverage");
    o.get("cohorts", c.coverage.cohorts);
    o.get("n", c.coverage.n);
    o.get("bootstrap", c.coverage.bootstrap);
    o.get("x", c.coverage.x);
    std::optional<std::string> truth;
    o.get("truth", truth);
    if (truth) c.coverage.truth = *truth;
    o.finish();
  }
  r.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto config = parse_run_config(buffer.str());
  // Relative paths in the config are relative to the config file.
  const auto base = path.parent_path();
  auto rebase = [&](std::optional<std::filesystem::path>& p) {
    if (p && p->is_relative()) p = base / *p;
  };
  rebase(config.input);
  rebase(config.report);
  rebase(config.coverage.truth);
  return config;
}

std::string dgp_to_json(const DgpParams& params) { return dgp_json(params).dump(2) + "\n"; }

DgpParams dgp_from_json(std::string_view text) {
  const json j = parse_json(text);
  DgpParams p;
  read_dgp(Reader(j, "dgp"), p);
  return p;
}

}  // namespace rcds
