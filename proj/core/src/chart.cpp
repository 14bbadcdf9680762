#include "rcds/chart.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rcds/errors.hpp"
#include "rcds/optimizer.hpp"
#include "rcds/report.hpp"

namespace rcds {

namespace {

constexpr double kWidth = 760, kHeight = 460;
constexpr double kLeft = 70, kRight = 70, kTop = 40, kBottom = 60;
constexpr std::string_view kRiskColour = "#b2182b";
constexpr std::string_view kUsageColour = "#2166ac";

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

struct Axis {
  double lo = 0.0, hi = 1.0, step = 0.2;

  static Axis covering(double lo, double hi, int ticks) {
    if (!(hi > lo)) hi = lo + (lo == 0.0 ? 1.0 : std::abs(lo) * 0.1);
    Axis a;
    a.step = nice_step(hi - lo, ticks);
    a.lo = std::floor(lo / a.step) * a.step;
    a.hi = std::ceil(hi / a.step) * a.step;
    return a;
  }
};

std::string fixed(double v) { return fmt::format("{:.2f}", v); }

std::string label(double v, double step) {
  const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
  return fmt::format("{:.{}f}", v, std::max(decimals, 0));
}

}  // namespace

std::string render_chart(const DoseResponseTable& table, std::optional<double> kappa) {
  if (table.rows.empty()) throw ConfigError("cannot chart an empty dose-response table");
  auto rows = table.rows;
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.x < b.x; });

  double x_lo = rows.front().x, x_hi = rows.back().x;
  double step_x = rows.size() > 1 ? (x_hi - x_lo) / static_cast<double>(rows.size() - 1) : 10.0;
  if (rows.size() == 1) {
    x_lo -= step_x;
    x_hi += step_x;
  }
  double r_hi = 0.0, u_hi = 0.0;
  for (const auto& r : rows) {
    r_hi = std::max({r_hi, r.risk, r.ci_risk ? r.ci_risk->hi : 0.0});
    u_hi = std::max({u_hi, r.usage, r.ci_usage ? r.ci_usage->hi : 0.0});
  }
  if (kappa) u_hi = std::max(u_hi, *kappa);
  const Axis ax = Axis::covering(x_lo, x_hi, 6);
  const Axis ar = Axis::covering(0.0, r_hi * 1.05, 5);
  const Axis au = Axis::covering(0.0, u_hi * 1.05, 5);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto pr = [&](double v) { return kTop + ph - (v - ar.lo) / (ar.hi - ar.lo) * ph; };
  auto pu = [&](double v) { return kTop + ph - (v - au.lo) / (au.hi - au.lo) * ph; };

  std::string svg = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      kWidth, kHeight);

  std::optional<ConstrainedSelection> selection;
  if (kappa) {
    const auto pts = points(table);
    selection = select(pts, *kappa);
    // Shade runs of adjacent feasible thresholds.
    const double half = step_x / 2.0;
    std::size_t i = 0;
    while (i < rows.size()) {
      if (!(rows[i].usage <= *kappa)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < rows.size() && rows[j + 1].usage <= *kappa) ++j;
      const double a = std::max(px(rows[i].x - half), kLeft);
      const double b = std::min(px(rows[j].x + half), kLeft + pw);
      svg += fmt::format("<rect class=\"feasible\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#e0e0e0\" "
                         "fill-opacity=\"0.6\"/>\n",
                         fixed(a), fixed(kTop), fixed(b - a), fixed(ph));
      i = j + 1;
    }
  }

  // Frame, grid and ticks.
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                     fixed(kLeft), fixed(kTop), fixed(pw), fixed(ph));
  for (double v = ax.lo; v <= ax.hi + ax.step * 1e-6; v += ax.step) {
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>"
                       "<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
                       fixed(px(v)), fixed(kTop + ph), fixed(kTop + ph + 5), fixed(kTop + ph + 20), label(v, ax.step));
  }
  for (double v = ar.lo; v <= ar.hi + ar.step * 1e-6; v += ar.step) {
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{4}\"/>"
                       "<text x=\"{3}\" y=\"{1}\" text-anchor=\"end\" dominant-baseline=\"middle\" fill=\"{4}\">{5}</text>\n",
                       fixed(kLeft - 5), fixed(pr(v)), fixed(kLeft), fixed(kLeft - 8), kRiskColour, label(v, ar.step));
  }
  for (double v = au.lo; v <= au.hi + au.step * 1e-6; v += au.step) {
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{4}\"/>"
                       "<text x=\"{3}\" y=\"{1}\" dominant-baseline=\"middle\" fill=\"{4}\">{5}</text>\n",
                       fixed(kLeft + pw), fixed(pu(v)), fixed(kLeft + pw + 5), fixed(kLeft + pw + 8), kUsageColour,
                       label(v, au.step));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Threshold x</text>\n", fixed(kLeft + pw / 2),
                     fixed(kHeight - 15));
  svg += fmt::format("<text x=\"15\" y=\"{0}\" text-anchor=\"middle\" fill=\"{1}\" transform=\"rotate(-90 15 {0})\">"
                     "Risk at horizon</text>\n",
                     fixed(kTop + ph / 2), kRiskColour);
  svg += fmt::format("<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" fill=\"{2}\" transform=\"rotate(90 {0} {1})\">"
                     "Measurements per subject</text>\n",
                     fixed(kWidth - 15), fixed(kTop + ph / 2), kUsageColour);

  auto series = [&](auto value, auto py, std::string_view colour, std::string_view cls) {
    std::string out;
    if (rows.size() > 1) {
      out += fmt::format("<polyline class=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"", cls, colour);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out += fmt::format("{}{},{}", i ? " " : "", fixed(px(rows[i].x)), fixed(py(value(rows[i]))));
      }
      out += "\"/>\n";
    }
    for (const auto& r : rows) {
      out += fmt::format("<circle class=\"{}\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\"/>\n", cls, fixed(px(r.x)),
                         fixed(py(value(r))), colour);
    }
    return out;
  };
  svg += series([](const DoseResponseRow& r) { return r.risk; }, pr, kRiskColour, "risk");
  svg += series([](const DoseResponseRow& r) { return r.usage; }, pu, kUsageColour, "usage");

  if (kappa) {
    svg += fmt::format("<line class=\"kappa\" x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"grey\" "
                       "stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n"
                       "<text x=\"{3}\" y=\"{4}\" fill=\"grey\">kappa = {5}</text>\n",
                       fixed(kLeft), fixed(kLeft + pw), fixed(pu(*kappa)), fixed(kLeft + 6), fixed(pu(*kappa) - 6),
                       fmt::format("{}", *kappa));
    if (selection && selection->chosen_x) {
      const double cx = px(*selection->chosen_x);
      svg += fmt::format("<line class=\"chosen\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\" "
                         "stroke-dasharray=\"2 3\"/>\n"
                         "<circle class=\"chosen\" cx=\"{0}\" cy=\"{3}\" r=\"6\" fill=\"none\" stroke=\"black\" "
                         "stroke-width=\"2\"/>\n"
                         "<text x=\"{0}\" y=\"{4}\" text-anchor=\"middle\">x = {5}</text>\n",
                         fixed(cx), fixed(kTop), fixed(kTop + ph), fixed(pr(selection->chosen_risk)),
                         fixed(kTop - 8), fmt::format("{}", *selection->chosen_x));
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace rcds
