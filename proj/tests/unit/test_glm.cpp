#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/instances.hpp"
#include "oracles/nelder_mead.hpp"
#include "rcds/errors.hpp"
#include "rcds/glm.hpp"

using namespace rcds;

namespace {

DesignMatrix intercept_only(std::size_t n, std::vector<double> w = {}) {
  DesignMatrix d;
  d.x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  d.columns = {"(Intercept)"};
  d.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < w.size(); ++i) d.weights[static_cast<Eigen::Index>(i)] = w[i];
  return d;
}

// Independent restricted cubic spline: differences of the ESL d_j functions,
// rescaled to the (t_k - t_1)^2 convention.
std::vector<double> esl_basis(double x, const std::vector<double>& t) {
  const std::size_t k = t.size();
  auto d = [&](std::size_t j) {
    auto p3 = [](double u) { return u > 0 ? u * u * u : 0.0; };
    return (p3(x - t[j]) - p3(x - t[k - 1])) / (t[k - 1] - t[j]);
  };
  std::vector<double> out{x};
  const double norm = (t[k - 1] - t[0]) * (t[k - 1] - t[0]);
  for (std::size_t j = 0; j + 2 < k; ++j) out.push_back((t[k - 1] - t[j]) * (d(j) - d(k - 2)) / norm);
  return out;
}

double basis_at(const SplineBasis& b, double x, std::size_t col) {
  std::vector<double> out(b.columns());
  b.evaluate(x, out);
  return out[col];
}

// Central second difference; exact for cubic pieces when x +- h stay inside one piece.
double second_diff(const SplineBasis& b, double x, std::size_t col, double h) {
  return (basis_at(b, x + h, col) - 2.0 * basis_at(b, x, col) + basis_at(b, x - h, col)) / (h * h);
}

}  // namespace

TEST_SUITE("glm") {
  TEST_CASE("intercept-only Poisson is the log mean") {
    std::vector<double> y{1, 2, 3};
    auto fit = fit_glm(intercept_only(3), y, Family::poisson_log);
    CHECK(fit.converged);
    CHECK(fit.coefficients[0] == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  }

  TEST_CASE("intercept-only binomial is the weighted proportion") {
    std::vector<double> y{1, 0};
    auto fit = fit_glm(intercept_only(2, {3, 1}), y, Family::binomial_logit);
    CHECK(fit.coefficients[0] == doctest::Approx(std::log(0.75 / 0.25)).epsilon(1e-10));
  }

  TEST_CASE("zero coefficients predict the link origin") {
    GlmFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(1);
    fit.columns = {"(Intercept)"};
    fit.family = Family::binomial_logit;
    auto d = intercept_only(4);
    CHECK((predict(fit, d).array() == 0.5).all());
    fit.family = Family::poisson_log;
    CHECK((predict(fit, d).array() == 1.0).all());
    DesignMatrix other = d;
    other.columns = {"z"};
    CHECK_THROWS_AS(predict(fit, other), SchemaError);
  }

  TEST_CASE("deviance matches an independent derivative-free optimiser") {
    for (auto family : {Family::poisson_log, Family::binomial_logit}) {
      for (int seed = 0; seed < 25; ++seed) {
        CAPTURE(seed);
        const int p = 1 + seed % 4;
        auto inst = oracle::random_instance(family, 1000 * static_cast<int>(family) + seed, 50, p);
        auto fit = fit_glm(inst.design, inst.y, family);
        auto nm = oracle::nelder_mead(
            [&](const std::vector<double>& b) { return oracle::deviance_at(inst, family, b); },
            std::vector<double>(static_cast<std::size_t>(p), 0.0));
        const std::vector<double> beta(fit.coefficients.data(), fit.coefficients.data() + p);
        CHECK(std::abs(oracle::deviance_at(inst, family, beta) - nm.value) < 1e-6);
        CHECK(fit.deviance - nm.value < 1e-6);
        CHECK(score(fit, inst.design, inst.y).lpNorm<Eigen::Infinity>() < 1e-6 * 50);
      }
    }
  }

  TEST_CASE("fitted means reproduce the weighted response mean") {
    for (auto family : {Family::poisson_log, Family::binomial_logit}) {
      auto inst = oracle::random_instance(family, 77, 200, 3);
      auto fit = fit_glm(inst.design, inst.y, family);
      const Eigen::VectorXd mu = predict(fit, inst.design);
      const Eigen::Map<const Eigen::VectorXd> y(inst.y.data(), 200);
      const double wsum = inst.design.weights.sum();
      CHECK(std::abs(inst.design.weights.dot(mu) / wsum - inst.design.weights.dot(y) / wsum) < 1e-8);
    }
  }

  TEST_CASE("scaling the case weights leaves the coefficients unchanged") {
    for (auto family : {Family::poisson_log, Family::binomial_logit}) {
      auto inst = oracle::random_instance(family, 5, 80, 4);
      auto a = fit_glm(inst.design, inst.y, family);
      auto scaled = inst.design;
      scaled.weights *= 7.25;
      auto b = fit_glm(scaled, inst.y, family);
      CHECK((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>() < 1e-10);
    }
  }

  TEST_CASE("saturated one-hot binomial reproduces cell proportions") {
    // three cells, reference + two indicators
    DesignMatrix d;
    const int n = 12;
    d.x = Eigen::MatrixXd::Zero(n, 3);
    d.columns = {"(Intercept)", "b", "c"};
    d.weights.resize(n);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      d.x(i, 0) = 1;
      if (i % 3 == 1) d.x(i, 1) = 1;
      if (i % 3 == 2) d.x(i, 2) = 1;
      y[static_cast<std::size_t>(i)] = (i % 2 == 0 || i == 5) ? 1.0 : 0.0;
      d.weights[i] = 1.0 + 0.5 * i;
    }
    auto fit = fit_glm(d, y, Family::binomial_logit);
    const Eigen::VectorXd mu = predict(fit, d);
    for (int cell = 0; cell < 3; ++cell) {
      double sw = 0, swy = 0;
      for (int i = cell; i < n; i += 3) {
        sw += d.weights[i];
        swy += d.weights[i] * y[static_cast<std::size_t>(i)];
      }
      CHECK(mu[cell] == doctest::Approx(swy / sw).epsilon(1e-10));
    }
  }

  TEST_CASE("rank deficiency names the dependent column") {
    auto inst = oracle::random_instance(Family::poisson_log, 3, 50, 3);
    auto d = inst.design;
    d.x.conservativeResize(Eigen::NoChange, 4);
    d.x.col(3) = 2.0 * d.x.col(1) - d.x.col(2);
    d.columns.push_back("dup");
    try {
      fit_glm(d, inst.y, Family::poisson_log);
      FAIL("expected RankError");
    } catch (const RankError& e) {
      CHECK(e.column() == "dup");
      CHECK(e.code() == ErrorCode::rank);
    }
  }

  TEST_CASE("non-convergence carries the trajectory") {
    auto inst = oracle::random_instance(Family::poisson_log, 9, 50, 3);
    GlmOptions opts;
    opts.max_iterations = 1;
    try {
      fit_glm(inst.design, inst.y, Family::poisson_log, opts);
      FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
      REQUIRE(e.trajectory().size() == 1);
      CHECK(e.trajectory()[0].iteration == 1);
    }
  }

  TEST_CASE("convergence diagnostics") {
    auto inst = oracle::random_instance(Family::binomial_logit, 11, 50, 3);
    auto fit = fit_glm(inst.design, inst.y, Family::binomial_logit);
    CHECK(fit.converged);
    CHECK(fit.iterations <= 50);
    CHECK(fit.condition_number >= 1.0);
    CHECK(std::isfinite(fit.log_likelihood));
    CHECK(fit.deviance == doctest::Approx(-2.0 * fit.log_likelihood).epsilon(1e-9));
  }

  TEST_CASE("invalid inputs are configuration errors") {
    auto d = intercept_only(2);
    std::vector<double> bad{0.5, 1};
    CHECK_THROWS_AS(fit_glm(d, bad, Family::binomial_logit), ConfigError);
    std::vector<double> neg{-1, 1};
    CHECK_THROWS_AS(fit_glm(d, neg, Family::poisson_log), ConfigError);
    std::vector<double> ok{1, 1};
    auto zero = d;
    zero.weights.setZero();
    CHECK_THROWS_AS(fit_glm(zero, ok, Family::poisson_log), ConfigError);
    auto nan = d;
    nan.x(0, 0) = std::nan("");
    CHECK_THROWS_AS(fit_glm(nan, ok, Family::poisson_log), ConfigError);
    std::vector<double> short_y{1};
    CHECK_THROWS_AS(fit_glm(d, short_y, Family::poisson_log), ConfigError);
  }

  TEST_CASE("spline: textbook values with knots (0, 5, 10)") {
    SplineBasis b({0, 5, 10});
    std::vector<double> out(2);
    b.evaluate(10.0, out);
    // ((10-0)^3 - (10-5)^3 * 10 / 5) / 10^2
    CHECK(out[0] == 10.0);
    CHECK(out[1] == doctest::Approx(7.5).epsilon(1e-14));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 20);
    for (const std::vector<double>& knots :
         {std::vector<double>{0, 5, 10}, std::vector<double>{1, 2, 4, 7, 11}, std::vector<double>{-3, 0, 0.5, 8}}) {
      SplineBasis s(knots);
      std::vector<double> got(s.columns());
      for (int i = 0; i < 200; ++i) {
        const double x = u(rng);
        s.evaluate(x, got);
        const auto want = esl_basis(x, knots);
        for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("spline: linear outside the boundary knots") {
    SplineBasis b({1, 2, 4, 7, 11});
    for (double x : {-100.0, -1.0, 0.0, 0.999, 1.0}) {
      std::vector<double> out(b.columns());
      b.evaluate(x, out);
      CHECK(out[0] == x);
      for (std::size_t j = 1; j < out.size(); ++j) CHECK(out[j] == 0.0);
    }
    for (std::size_t col = 1; col < b.columns(); ++col) {
      for (double x : {12.0, 20.0, 50.0}) CHECK(std::abs(second_diff(b, x, col, 0.5)) < 1e-6);
    }
  }

  TEST_CASE("spline: second derivative continuous at interior knots") {
    for (const std::vector<double>& knots :
         {std::vector<double>{0, 5, 10}, std::vector<double>{1, 2, 4, 7, 11}, std::vector<double>{0.05, 0.35, 0.65, 0.95}}) {
      SplineBasis b(knots);
      const double h = 0.002 * (knots.back() - knots.front());
      for (std::size_t k = 0; k < knots.size(); ++k) {
        const double t = knots[k];
        for (std::size_t col = 1; col < b.columns(); ++col) {
          // f'' is linear on each piece; extrapolate both one-sided limits to t
          const double left = 2.0 * second_diff(b, t - 2 * h, col, h) - second_diff(b, t - 4 * h, col, h);
          const double right = 2.0 * second_diff(b, t + 2 * h, col, h) - second_diff(b, t + 4 * h, col, h);
          CAPTURE(t);
          CAPTURE(col);
          CHECK(std::abs(left - right) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("spline knots must be strictly increasing") {
    CHECK_THROWS_AS(SplineBasis({0, 5, 5}), ConfigError);
    CHECK_THROWS_AS(SplineBasis({0, 5}), ConfigError);
    std::vector<double> v{1, 2};
    std::vector<double> k{0, 1, 1};
    CHECK_THROWS_AS(rcs_basis(v, k), ConfigError);
  }

  TEST_CASE("quantiles interpolate order statistics") {
    auto q = quantiles({4, 1, 3, 2, 5}, std::vector<double>{0.0, 0.5, 0.1, 1.0});
    CHECK(q[0] == 1.0);
    CHECK(q[1] == 3.0);
    CHECK(q[2] == doctest::Approx(1.4));
    CHECK(q[3] == 5.0);
  }
}
