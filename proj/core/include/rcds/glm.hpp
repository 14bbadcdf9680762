#pragma once

// Weighted GLM fitting by IRLS (binomial-logit, Poisson-log) and the
// restricted cubic spline basis used for continuous terms.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rcds {

enum class Family { binomial_logit, poisson_log };

std::string_view to_string(Family family);

struct DesignMatrix {
  Eigen::MatrixXd x;  // rows = observations
  std::vector<std::string> columns;
  Eigen::VectorXd weights;  // case weights, >= 0

  Eigen::Index rows() const noexcept { return x.rows(); }
  Eigen::Index cols() const noexcept { return x.cols(); }

  // Throws ConfigError on non-finite entries, negative or all-zero weights, or
  // a column-name mismatch.
  void validate() const;
};

struct GlmOptions {
  double tolerance = 1e-8;  // on max |delta beta| / (1 + max |beta|)
  int max_iterations = 50;
};

struct GlmFit {
  Eigen::VectorXd coefficients;
  std::vector<std::string> columns;
  Family family = Family::poisson_log;
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
  double log_likelihood = 0.0;
  double condition_number = 0.0;  // of the weighted design at the solution
  Eigen::MatrixXd information;    // X' W X at the solution
};

GlmFit fit_glm(const DesignMatrix& design, std::span<const double> response, Family family,
               const GlmOptions& options = {});

Eigen::VectorXd linear_predictor(const GlmFit& fit, const DesignMatrix& design);
Eigen::VectorXd predict(const GlmFit& fit, const DesignMatrix& design);

double inverse_link(Family family, double eta);

// Weighted score X' w (y - mu); zero at the maximum likelihood solution.
Eigen::VectorXd score(const GlmFit& fit, const DesignMatrix& design, std::span<const double> response);

// Deviance of mean vector mu under the family, with case weights.
double deviance(Family family, std::span<const double> response, const Eigen::VectorXd& mu,
                const Eigen::VectorXd& weights);

// Restricted cubic spline with k >= 3 knots: k-1 columns, the first linear in
// the value, the rest cubic between knots and linear beyond the boundary
// knots. Nonlinear terms are scaled by (t_k - t_1)^2.
class SplineBasis {
 public:
  explicit SplineBasis(std::vector<double> knots);

  const std::vector<double>& knots() const noexcept { return knots_; }
  std::size_t columns() const noexcept { return knots_.size() - 1; }
  void evaluate(double value, std::span<double> out) const;
  Eigen::MatrixXd evaluate(std::span<const double> values) const;
  std::vector<std::string> names(std::string_view prefix) const;

 private:
  std::vector<double> knots_;
};

Eigen::MatrixXd rcs_basis(std::span<const double> values, std::span<const double> knots);

// Quantiles (linear interpolation between order statistics) used to place knots.
std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs);

}  // namespace rcds
