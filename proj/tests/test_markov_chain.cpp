#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "example_model.hpp"
#include "rsirs/markov_chain.hpp"

namespace rsirs {
namespace {

Eigen::MatrixXd cycle3() {
  // 1 -> 2 -> 3 -> 1 with rates 1, 1, 3; the stationary law is proportional
  // to the mean holding times (1, 1, 1/3).
  Eigen::MatrixXd q(3, 3);
  q << -1, 1, 0,  //
      0, -1, 1,   //
      3, 0, -3;
  return q;
}

ErrorKind kind_of(const Eigen::MatrixXd& q) {
  try {
    validate_generator(q);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;  // sentinel: no error
}

TEST(ValidateGenerator, AcceptsExample) {
  const auto gen = testing::example_generator();
  EXPECT_EQ(gen.regimes(), 2u);
  EXPECT_NEAR(gen.exit_rate(0), 169.0 * 0.5 / 365.0, 1e-15);
}

TEST(ValidateGenerator, RejectsBadRows) {
  Eigen::MatrixXd q = cycle3();
  q(0, 0) = -0.9;
  EXPECT_EQ(kind_of(q), ErrorKind::invalid_generator);
}

TEST(ValidateGenerator, RejectsNegativeOffDiagonal) {
  Eigen::MatrixXd q(2, 2);
  q << 1, -1, 1, -1;
  EXPECT_EQ(kind_of(q), ErrorKind::invalid_rate);
}

TEST(ValidateGenerator, RejectsNonFinite) {
  Eigen::MatrixXd q = cycle3();
  q(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of(q), ErrorKind::invalid_rate);
}

TEST(ValidateGenerator, RejectsReducible) {
  Eigen::MatrixXd q(3, 3);
  q << -1, 1, 0,  //
      1, -1, 0,   //
      0, 0, 0;
  EXPECT_EQ(kind_of(q), ErrorKind::reducible);
  Eigen::MatrixXd absorbing(2, 2);
  absorbing << -1, 1, 0, 0;
  EXPECT_EQ(kind_of(absorbing), ErrorKind::reducible);
}

TEST(ValidateGenerator, RejectsNonSquare) {
  EXPECT_EQ(kind_of(Eigen::MatrixXd::Zero(2, 3)), ErrorKind::invalid_generator);
  EXPECT_EQ(kind_of(Eigen::MatrixXd(0, 0)), ErrorKind::invalid_generator);
}

TEST(ValidateGenerator, SingleRegimeIsTrivial) {
  const auto gen = validate_generator(Eigen::MatrixXd::Zero(1, 1));
  const auto pi = stationary_distribution(gen);
  EXPECT_DOUBLE_EQ(pi[0], 1.0);
}

TEST(StationaryDistribution, ThreeStateCycle) {
  const auto pi = stationary_distribution(validate_generator(cycle3()));
  EXPECT_NEAR(pi[0], 3.0 / 7.0, 1e-12);
  EXPECT_NEAR(pi[1], 3.0 / 7.0, 1e-12);
  EXPECT_NEAR(pi[2], 1.0 / 7.0, 1e-12);
  EXPECT_LT(pi.residual, 1e-14);
}

TEST(StationaryDistribution, ExampleTwoState) {
  const auto pi = stationary_distribution(testing::example_generator());
  EXPECT_NEAR(pi[0], 196.0 / 365.0, 1e-12);
  EXPECT_NEAR(pi[1], 169.0 / 365.0, 1e-12);
  EXPECT_NEAR(pi.pi.sum(), 1.0, 1e-15);
}

TEST(StationaryDistribution, MatchesLongTimeTransitionMatrix) {
  const Eigen::MatrixXd q = cycle3();
  const auto pi = stationary_distribution(validate_generator(q));
  const Eigen::MatrixXd p = (q * 50.0).exp();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(p(r, c), pi[static_cast<std::size_t>(c)], 1e-12);
}

TEST(SamplePath, EmpiricalTransitionMatchesMatrixExponential) {
  const Eigen::MatrixXd q = cycle3();
  const auto gen = validate_generator(q);
  const double t = 0.7;
  const Eigen::MatrixXd p = (q * t).exp();
  const int n = 40000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (int k = 0; k < n; ++k) {
    RngStream rng(99, static_cast<std::uint64_t>(k));
    const auto path = sample_path(gen, 0, t, rng);
    counts(static_cast<Eigen::Index>(path.states.back())) += 1.0;
  }
  for (int c = 0; c < 3; ++c) {
    const double phat = counts(c) / n;
    const double sd = std::sqrt(p(0, c) * (1.0 - p(0, c)) / n);
    EXPECT_NEAR(phat, p(0, c), 5.0 * sd) << "target " << c;
  }
}

TEST(SamplePath, OccupationApproachesStationary) {
  const auto gen = testing::example_generator();
  const auto pi = stationary_distribution(gen);
  RngStream rng(7, 0);
  const auto path = sample_path(gen, 0, 2e5, rng);
  const auto occ = occupation_fractions(path, 2);
  EXPECT_NEAR(occ[0], pi[0], 0.01);
  EXPECT_NEAR(occ[0] + occ[1], 1.0, 1e-12);
}

TEST(SamplePath, StructureAndRightContinuity) {
  const auto gen = validate_generator(cycle3());
  RngStream rng(3, 1);
  const auto path = sample_path(gen, 1, 30.0, rng);
  ASSERT_GT(path.jumps(), 5u);
  EXPECT_EQ(path.jump_times.front(), 0.0);
  EXPECT_EQ(path.states.front(), 1u);
  for (std::size_t k = 1; k < path.jump_times.size(); ++k) {
    EXPECT_GT(path.jump_times[k], path.jump_times[k - 1]);
    EXPECT_LT(path.jump_times[k], path.horizon);
    EXPECT_NE(path.states[k], path.states[k - 1]);
    EXPECT_GT(gen.rate(path.states[k - 1], path.states[k]), 0.0);
    EXPECT_EQ(regime_at(path, path.jump_times[k]), path.states[k]);
    EXPECT_EQ(regime_at(path, std::nextafter(path.jump_times[k], 0.0)), path.states[k - 1]);
  }
  EXPECT_THROW(regime_at(path, 31.0), Error);
}

TEST(SamplePath, SingleRegimeNeverJumps) {
  const auto gen = validate_generator(Eigen::MatrixXd::Zero(1, 1));
  RngStream rng(1, 0);
  EXPECT_EQ(sample_path(gen, 0, 100.0, rng).jumps(), 0u);
}

TEST(SamplePath, InputChecks) {
  const auto gen = validate_generator(cycle3());
  RngStream rng(1, 0);
  EXPECT_THROW(sample_path(gen, 3, 1.0, rng), Error);
  EXPECT_THROW(sample_path(gen, 0, 0.0, rng), Error);
}

TEST(SamplePath, Reproducible) {
  const auto gen = testing::example_generator();
  RngStream a(11, 4), b(11, 4);
  const auto pa = sample_path(gen, 0, 1e4, a);
  const auto pb = sample_path(gen, 0, 1e4, b);
  EXPECT_EQ(pa.jump_times, pb.jump_times);
  EXPECT_EQ(pa.states, pb.states);
}

}  // namespace
}  // namespace rsirs
