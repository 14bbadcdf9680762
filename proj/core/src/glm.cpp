#include "rcds/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "rcds/errors.hpp"

namespace rcds {

std::string_view to_string(Family family) {
  return family == Family::binomial_logit ? "binomial_logit" : "poisson_log";
}

void DesignMatrix::validate() const {
  if (x.cols() < 1) throw ConfigError("design matrix needs at least one column");
  if (static_cast<std::size_t>(x.cols()) != columns.size()) {
    throw ConfigError(fmt::format("design has {} columns but {} names", x.cols(), columns.size()));
  }
  if (weights.size() != x.rows()) throw ConfigError("case weights must match the design rows");
  if (!x.allFinite()) throw ConfigError("design matrix contains non-finite entries");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw ConfigError("case weights must be finite and non-negative");
  }
  if (!(weights.array() > 0.0).any()) throw ConfigError("at least one case weight must be positive");
}

double inverse_link(Family family, double eta) {
  if (family == Family::binomial_logit) return 1.0 / (1.0 + std::exp(-eta));
  return std::exp(eta);
}

namespace {

constexpr double kMuEps = 1e-15;

double link(Family family, double mu) {
  if (family == Family::binomial_logit) return std::log(mu / (1.0 - mu));
  return std::log(mu);
}

Eigen::VectorXd mean_from_eta(Family family, const Eigen::VectorXd& eta) {
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double m = inverse_link(family, eta[i]);
    if (family == Family::binomial_logit) m = std::clamp(m, kMuEps, 1.0 - kMuEps);
    mu[i] = std::max(m, std::numeric_limits<double>::min());
  }
  return mu;
}

double xlogy_ratio(double y, double mu) { return y > 0.0 ? y * std::log(y / mu) : 0.0; }

void check_response(std::span<const double> y, Family family) {
  for (double v : y) {
    if (!std::isfinite(v)) throw ConfigError("response contains non-finite values");
    if (family == Family::binomial_logit && v != 0.0 && v != 1.0) {
      throw ConfigError("binomial response must be 0 or 1");
    }
    if (family == Family::poisson_log && v < 0.0) throw ConfigError("Poisson response must be non-negative");
  }
}

// Cholesky on the correlation-scaled weighted cross-product, column by column;
// the first column whose residual pivot collapses is dependent on its
// predecessors.
void check_rank(const DesignMatrix& design) {
  const Eigen::Index p = design.cols();
  const Eigen::MatrixXd xw = design.x.array().colwise() * design.weights.array().sqrt();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  a.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  a = a.selfadjointView<Eigen::Lower>();
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(a(j, j) > 0.0)) throw RankError(design.columns[static_cast<std::size_t>(j)]);
    scale[j] = 1.0 / std::sqrt(a(j, j));
  }
  a = scale.asDiagonal() * a * scale.asDiagonal();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (d < 1e-10) throw RankError(design.columns[static_cast<std::size_t>(j)]);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
}

double log_likelihood(Family family, std::span<const double> y, const Eigen::VectorXd& mu,
                      const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    if (family == Family::binomial_logit) {
      ll += w[i] * (yi * std::log(mu[i]) + (1.0 - yi) * std::log1p(-mu[i]));
    } else {
      ll += w[i] * (yi * std::log(mu[i]) - mu[i] - std::lgamma(yi + 1.0));
    }
  }
  return ll;
}

}  // namespace

double deviance(Family family, std::span<const double> y, const Eigen::VectorXd& mu, const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    if (family == Family::binomial_logit) {
      dev += w[i] * (xlogy_ratio(yi, mu[i]) + xlogy_ratio(1.0 - yi, 1.0 - mu[i]));
    } else {
      dev += w[i] * (xlogy_ratio(yi, mu[i]) - (yi - mu[i]));
    }
  }
  return 2.0 * dev;
}

GlmFit fit_glm(const DesignMatrix& design, std::span<const double> response, Family family,
               const GlmOptions& options) {
  design.validate();
  if (static_cast<Eigen::Index>(response.size()) != design.rows()) {
    throw ConfigError("response length must match the design rows");
  }
  check_response(response, family);
  check_rank(design);

  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  const auto& x = design.x;
  const auto& w = design.weights;
  const Eigen::Map<const Eigen::VectorXd> y(response.data(), n);

  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu[i] = family == Family::binomial_logit ? (y[i] + 0.5) / 2.0 : y[i] + 0.1;
  }
  Eigen::VectorXd eta = mu.unaryExpr([family](double m) { return link(family, m); });
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double dev = std::numeric_limits<double>::infinity();

  std::vector<IrlsStep> trajectory;
  Eigen::MatrixXd info(p, p);
  Eigen::VectorXd ww(n), z(n);
  Eigen::MatrixXd xw(n, p);
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= options.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var = family == Family::binomial_logit ? mu[i] * (1.0 - mu[i]) : mu[i];
      ww[i] = w[i] * var;
      z[i] = eta[i] + (y[i] - mu[i]) / var;
    }
    xw = x.array().colwise() * ww.array().sqrt();
    info.setZero();
    info.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
    info = info.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd rhs = x.transpose() * (ww.array() * z.array()).matrix();
    Eigen::VectorXd next = info.colPivHouseholderQr().solve(rhs);

    Eigen::VectorXd next_eta = x * next;
    Eigen::VectorXd next_mu = mean_from_eta(family, next_eta);
    double next_dev = deviance(family, response, next_mu, w);
    // Step halving guards against overshoot from poor starting values.
    for (int half = 0; half < 30 && iter > 1 && !(next_dev <= dev * (1.0 + 1e-12) + 1e-12); ++half) {
      next = 0.5 * (next + beta);
      next_eta = x * next;
      next_mu = mean_from_eta(family, next_eta);
      next_dev = deviance(family, response, next_mu, w);
    }
    const double change = (next - beta).lpNorm<Eigen::Infinity>() / (1.0 + next.lpNorm<Eigen::Infinity>());
    // Badly scaled spline columns can leave beta jittering in a flat valley, so a
    // deviance that has stopped moving also counts as converged.
    const double dev_change = std::abs(next_dev - dev) / (std::abs(next_dev) + 0.1);
    beta = next;
    eta = next_eta;
    mu = next_mu;
    dev = next_dev;
    trajectory.push_back({iter, dev, change});
    if (iter > 1 && (change < options.tolerance || dev_change < 1e-12)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonConvergence(std::move(trajectory));

  for (Eigen::Index i = 0; i < n; ++i) {
    ww[i] = w[i] * (family == Family::binomial_logit ? mu[i] * (1.0 - mu[i]) : mu[i]);
  }
  xw = x.array().colwise() * ww.array().sqrt();
  info.setZero();
  info.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  info = info.selfadjointView<Eigen::Lower>();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();

  GlmFit fit;
  fit.coefficients = beta;
  fit.columns = design.columns;
  fit.family = family;
  fit.converged = true;
  fit.iterations = iter;
  fit.deviance = dev;
  fit.log_likelihood = log_likelihood(family, response, mu, w);
  fit.condition_number = lo > 0.0 ? std::sqrt(hi / lo) : std::numeric_limits<double>::infinity();
  fit.information = info;
  return fit;
}

Eigen::VectorXd linear_predictor(const GlmFit& fit, const DesignMatrix& design) {
  if (design.columns != fit.columns) {
    throw SchemaError(fmt::format("prediction design columns [{}] do not match the fitted columns [{}]",
                                  fmt::join(design.columns, ", "), fmt::join(fit.columns, ", ")));
  }
  return design.x * fit.coefficients;
}

Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design) {
  const Eigen::VectorXd eta = linear_predictor(fit, design);
  return eta.unaryExpr([&](double e) { return inverse_link(fit.family, e); });
}

Eigen::VectorXd score(const GlmFit& fit, const DesignMatrix& design, std::span<const double> response) {
  const Eigen::VectorXd mu = predict(fit, design);
  const Eigen::Map<const Eigen::VectorXd> y(response.data(), static_cast<Eigen::Index>(response.size()));
  return design.x.transpose() * (design.weights.array() * (y - mu).array()).matrix();
}

SplineBasis::SplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3) throw ConfigError("restricted cubic spline needs at least 3 knots");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw ConfigError("spline knots must be strictly increasing");
  }
}

void SplineBasis::evaluate(double v, std::span<double> out) const {
  const std::size_t k = knots_.size();
  const double tk = knots_[k - 1];
  const double tk1 = knots_[k - 2];
  const double norm = (tk - knots_[0]) * (tk - knots_[0]);
  const auto cube = [](double u) { return u > 0.0 ? u * u * u : 0.0; };
  out[0] = v;
  for (std::size_t j = 0; j + 2 < k; ++j) {
    const double tj = knots_[j];
    out[j + 1] = (cube(v - tj) - cube(v - tk1) * (tk - tj) / (tk - tk1) + cube(v - tk) * (tk1 - tj) / (tk - tk1)) / norm;
  }
}

Eigen::MatrixXd SplineBasis::evaluate(std::span<const double> values) const {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(
      static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(columns()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    evaluate(values[i], std::span<double>(m.row(static_cast<Eigen::Index>(i)).data(), columns()));
  }
  return m;
}

std::vector<std::string> SplineBasis::names(std::string_view prefix) const {
  std::vector<std::string> out;
  out.emplace_back(prefix);
  for (std::size_t j = 1; j < columns(); ++j) out.push_back(fmt::format("{}'{}", prefix, j));
  return out;
}

Eigen::MatrixXd rcs_basis(std::span<const double> values, std::span<const double> knots) {
  return SplineBasis(std::vector<double>(knots.begin(), knots.end())).evaluate(values);
}

std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs) {
  if (values.empty()) throw ConfigError("cannot take quantiles of an empty sequence");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(probs.size());
  const double last = static_cast<double>(values.size() - 1);
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile probabilities must lie in [0, 1]");
    const double h = last * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    out.push_back(values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  return out;
}

}  // namespace rcds
