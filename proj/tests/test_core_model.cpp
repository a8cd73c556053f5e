#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "example_model.hpp"
#include "rsirs/core_model.hpp"
#include "rsirs/rng.hpp"

namespace rsirs {
namespace {

ModelParams band55() { return testing::example_params(); }  // Λ/μ = 55

std::vector<IncidenceFunction> builtin_kinds() {
  return {IncidenceFunction::linear(),
          IncidenceFunction::saturated(0.5),
          IncidenceFunction::nonmonotonic(0.001),
          IncidenceFunction::media1(0.05),
          IncidenceFunction::media2(0.4, MediaResponse::michaelis(10.0)),
          IncidenceFunction::media2(0.7, MediaResponse::exp_saturation(0.2))};
}

// Oracle: largest divided-difference slope of g(x) = G(x)/x on a uniform grid,
// computed from G alone.
double grid_lipschitz_oracle(const std::function<double(double)>& G, double upper, std::size_t n) {
  double best = 0.0;
  double prev = 1.0;  // g(0) = G'(0) = 1 for the built-in kinds
  for (std::size_t k = 1; k < n; ++k) {
    const double x = upper * static_cast<double>(k) / static_cast<double>(n - 1);
    const double g = G(x) / x;
    best = std::max(best, std::abs(g - prev) / (upper / static_cast<double>(n - 1)));
    prev = g;
  }
  return best;
}

TEST(EvaluateG, NonmonotonicValues) {
  const auto inc = IncidenceFunction::nonmonotonic(0.001);
  EXPECT_EQ(evaluate_G(inc, 0.0), 0.0);
  EXPECT_NEAR(evaluate_G(inc, 10.0), 10.0 / 1.1, 1e-12);
  EXPECT_EQ(evaluate_G(IncidenceFunction::linear(), 7.0), 7.0);
}

TEST(EvaluateG, NegativeArgumentIsDomainError) {
  try {
    evaluate_G(IncidenceFunction::linear(), -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  EXPECT_THROW(evaluate_g_ratio(IncidenceFunction::linear(), -0.5), Error);
}

TEST(EvaluateGRatio, ValuesAndLimitAtZero) {
  const auto inc = IncidenceFunction::nonmonotonic(0.001);
  EXPECT_NEAR(evaluate_g_ratio(inc, 20.0), 1.0 / 1.4, 1e-12);
  EXPECT_EQ(evaluate_g_ratio(IncidenceFunction::linear(), 3.0), 1.0);
  for (const auto& k : builtin_kinds()) EXPECT_EQ(evaluate_g_ratio(k, 0.0), k.gprime0()) << k.name();
}

TEST(EvaluateGRatio, ContinuousAtZero) {
  for (const auto& k : builtin_kinds()) {
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double h : {1e-2, 1e-4, 1e-6}) {
      const double gap = std::abs(evaluate_g_ratio(k, h) - k.gprime0());
      EXPECT_LE(gap, prev_gap) << k.name();
      prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 1e-5) << k.name();
  }
}

TEST(IncidenceProperty, H1HoldsOnRandomPoints) {
  RngStream rng(2024, 0);
  for (const auto& k : builtin_kinds()) {
    for (int n = 0; n < 1000; ++n) {
      const double x = rng.uniform(0.0, 55.0);
      const double G = k.G(x);
      ASSERT_GT(G, 0.0) << k.name() << " at " << x;
      ASSERT_LE(G, x * k.gprime0() * (1.0 + 1e-15)) << k.name() << " at " << x;
    }
  }
}

TEST(IncidenceDerivatives, MatchFiniteDifferences) {
  for (const auto& k : builtin_kinds()) {
    for (double x : {0.0, 0.3, 2.0, 18.0, 50.0}) {
      const double h = 1e-5;
      // second-order one-sided stencil at the boundary, central elsewhere
      auto diff = [&](const std::function<double(double)>& fn) {
        if (x == 0.0) return (-3.0 * fn(0.0) + 4.0 * fn(h) - fn(2.0 * h)) / (2.0 * h);
        return (fn(x + h) - fn(x - h)) / (2.0 * h);
      };
      EXPECT_NEAR(k.dG(x), diff([&](double y) { return k.G(y); }), 1e-6) << k.name() << " at " << x;
      EXPECT_NEAR(k.d2G(x), diff([&](double y) { return k.dG(y); }), 1e-5) << k.name() << " at " << x;
    }
  }
}

TEST(ValidateAssumptions, LinearHasZeroTheta) {
  const auto rep = validate_assumptions(IncidenceFunction::linear(), band55(), 1001);
  EXPECT_TRUE(rep.h1_ok);
  EXPECT_TRUE(rep.h2_ok);
  EXPECT_EQ(rep.theta_estimate, 0.0);
}

TEST(ValidateAssumptions, NonmonotonicThetaMatchesAnalyticMaximiser) {
  const double a = 0.001;
  const auto inc = IncidenceFunction::nonmonotonic(a);
  // |g'(x)| = 2ax/(1+ax^2)^2 peaks at x = sqrt(1/(3a)).
  const double xs = std::sqrt(1.0 / (3.0 * a));
  const double analytic = 2.0 * a * xs / std::pow(1.0 + a * xs * xs, 2);
  const double oracle = grid_lipschitz_oracle([&](double x) { return x / (1.0 + a * x * x); }, 55.0, 1'000'000);
  EXPECT_NEAR(analytic, 0.02054, 5e-6);
  EXPECT_NEAR(oracle, analytic, 1e-6);

  const auto rep = validate_assumptions(inc, band55(), 1'000'000);
  EXPECT_TRUE(rep.h1_ok);
  EXPECT_TRUE(rep.h2_ok);
  EXPECT_NEAR(rep.theta_estimate, analytic, 1e-8);
}

TEST(ValidateAssumptions, SaturatedThetaIsA) {
  const auto rep = validate_assumptions(IncidenceFunction::saturated(0.5), band55(), 100001);
  const double oracle = grid_lipschitz_oracle([](double x) { return x / (1.0 + 0.5 * x); }, 55.0, 1'000'000);
  EXPECT_DOUBLE_EQ(rep.theta_estimate, 0.5);
  EXPECT_NEAR(oracle, 0.5, 1e-4);  // first divided difference slightly under the endpoint slope
}

TEST(ValidateAssumptions, ThetaMonotoneUnderNestedRefinement) {
  const auto inc = IncidenceFunction::nonmonotonic(0.001);
  double prev = 0.0;
  std::vector<double> thetas;
  for (int k = 4; k <= 20; ++k) {
    const double th = validate_assumptions(inc, band55(), (std::size_t{1} << k) + 1).theta_estimate;
    EXPECT_GE(th, prev);
    prev = th;
    thetas.push_back(th);
  }
  const double t5 = validate_assumptions(inc, band55(), 100'000).theta_estimate;
  const double t6 = validate_assumptions(inc, band55(), 1'000'000).theta_estimate;
  EXPECT_LT(std::abs(t6 - t5) / t6, 0.01);
}

TEST(ValidateAssumptions, CustomWithoutDerivativeUsesDividedDifferences) {
  CustomIncidence c;
  c.G = [](double x) { return x / (1.0 + 0.5 * x); };
  const auto inc = IncidenceFunction::custom(c);
  EXPECT_FALSE(inc.has_derivative());
  const auto rep = validate_assumptions(inc, band55(), 10001);
  EXPECT_TRUE(rep.h1_ok);
  EXPECT_NEAR(rep.theta_estimate, 0.5, 1e-4);
}

TEST(ValidateAssumptions, DetectsH1Violation) {
  CustomIncidence c;
  c.G = [](double x) { return 2.0 * x / (1.0 + x); };  // G'(0) = 2 but declared 1
  c.gprime0 = 1.0;
  const auto rep = validate_assumptions(IncidenceFunction::custom(c), band55(), 101);
  EXPECT_FALSE(rep.h1_ok);
}

TEST(ValidateAssumptions, NonFiniteIncidenceIsRejected) {
  CustomIncidence c;
  c.G = [](double x) { return x > 10.0 ? std::numeric_limits<double>::quiet_NaN() : x; };
  try {
    validate_assumptions(IncidenceFunction::custom(c), band55(), 101);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_incidence);
  }
}

TEST(ValidateAssumptions, MediaResponseMustBeMonotone) {
  MediaResponse bumpy{"custom", 0.0, [](double x) { return std::sin(x) * 0.5 + 0.5 * x / (1.0 + x); }, {}, {}};
  const auto rep = validate_assumptions(IncidenceFunction::media2(0.3, bumpy), band55(), 1001);
  EXPECT_FALSE(rep.h1_ok);
}

TEST(ValidateAssumptions, GridTooSmall) {
  EXPECT_THROW(validate_assumptions(IncidenceFunction::linear(), band55(), 1), Error);
}

TEST(ModelParams, ValidateRejectsBadRates) {
  auto p = band55();
  EXPECT_NO_THROW(p.validate());
  p.mu = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = band55();
  p.betas[1] = -1.0;
  EXPECT_THROW(p.validate(), Error);
  p = band55();
  p.alpha = std::numeric_limits<double>::infinity();
  EXPECT_THROW(p.validate(), Error);
}

TEST(IncidenceFunction, ParameterChecks) {
  EXPECT_THROW(IncidenceFunction::saturated(0.0), Error);
  EXPECT_THROW(IncidenceFunction::media2(1.0, MediaResponse::michaelis(1.0)), Error);
  EXPECT_THROW(IncidenceFunction::custom({}), Error);
}

}  // namespace
}  // namespace rsirs
