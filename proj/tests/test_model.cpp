#include <gtest/gtest.h>

#include <cmath>

#include "karma/model.hpp"
#include "support.hpp"

namespace karma {
namespace {

using testing::makeType;
using testing::singleResource;

TEST(RushHour, RewardsFollowTheDepartureProfile) {
  const Problem p = rushHourScenario();
  ASSERT_EQ(p.numResources(), 10u);
  ASSERT_EQ(p.numTypes(), 4u);
  EXPECT_TRUE(p.mutuallyExclusive);
  EXPECT_EQ(p.population(), 9000);
  for (int c : p.capacities) EXPECT_EQ(c, 180);
  for (const auto& t : p.types) {
    EXPECT_EQ(t.mass, 2250);
    EXPECT_DOUBLE_EQ(t.weight, 1.0);
    EXPECT_DOUBLE_EQ(t.rewardsOn[8], 0.0);
    EXPECT_DOUBLE_EQ(t.rewardsOn[9], -4.0);
    EXPECT_DOUBLE_EQ(t.rewardsOn[0], -8.0);
    EXPECT_DOUBLE_EQ(t.rewardsOn[4], -4.0);
    for (double r0 : t.rewardsOff) EXPECT_DOUBLE_EQ(r0, -8.0);
  }
}

TEST(RushHour, UrgencyProcesses) {
  const Problem p = rushHourScenario();
  const UrgencyProcess& high = p.types[3].urgency;
  ASSERT_EQ(high.levels.size(), 2u);
  EXPECT_DOUBLE_EQ(high.levels[1], 9.0);
  EXPECT_DOUBLE_EQ(high.probs[1], 0.125);
  ASSERT_EQ(p.types[0].urgency.size(), 1u);
  EXPECT_DOUBLE_EQ(p.types[0].urgency.levels[0], 2.0);
  for (const auto& t : p.types) EXPECT_NEAR(t.urgency.mean(), 2.0, 1e-12);
}

TEST(RushHour, OnlyTheEarliestIntervalIsFlagged) {
  const Problem p = rushHourScenario();
  const ValidationReport r = validate(p);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.hasWarning("equal-reward"));
  for (const auto& w : r.warnings) {
    ASSERT_TRUE(w.resource.has_value()) << w.message;
    EXPECT_EQ(*w.resource, 0u) << w.message;
  }
}

TEST(Validate, ZeroProbabilityIsAHardError) {
  Problem p = singleResource(1, {makeType(1, {1, 2}, {1.0, 0.0}, {1}, {0}),
                                 makeType(1, {1}, {1.0}, {1}, {0})});
  const ValidationReport r = validate(p);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.hasError("zero-probability"));
  EXPECT_THROW(checkStructure(p), ProblemError);
}

TEST(Validate, UncontestedResource) {
  Problem p = singleResource(2, {makeType(2, {1}, {1.0}, {1}, {0})});
  const ValidationReport lenient = validate(p);
  EXPECT_TRUE(lenient.ok());
  EXPECT_TRUE(lenient.hasWarning("A1.2"));
  const ValidationReport strict = validate(p, true);
  EXPECT_FALSE(strict.ok());
  EXPECT_TRUE(strict.hasError("A1.2"));
}

TEST(Validate, TypeWithoutDesiredResource) {
  Problem p = singleResource(1, {makeType(2, {1}, {1.0}, {1}, {0}),
                                 makeType(1, {1}, {1.0}, {0}, {0})});
  EXPECT_TRUE(validate(p).hasWarning("A1.1"));
  EXPECT_TRUE(validate(p, true).hasError("A1.1"));
}

TEST(Validate, StructuralDefects) {
  Problem p = singleResource(1, {makeType(2, {2, 1}, {0.5, 0.5}, {1}, {0})});
  EXPECT_TRUE(validate(p).hasError("urgency-order"));

  p = singleResource(1, {makeType(2, {1}, {0.9}, {1}, {0})});
  EXPECT_TRUE(validate(p).hasError("probability-sum"));

  p = singleResource(1, {makeType(2, {1}, {1.0}, {1, 2}, {0})});
  EXPECT_TRUE(validate(p).hasError("rewards-length"));

  p = singleResource(0, {makeType(2, {1}, {1.0}, {1}, {0})});
  EXPECT_TRUE(validate(p).hasError("capacity"));

  p = singleResource(1, {makeType(0, {1}, {1.0}, {1}, {0})});
  EXPECT_TRUE(validate(p).hasError("mass"));
}

TEST(CellTensor, ShapeAndIndexing) {
  const Problem p = rushHourScenario();
  CellTensor t = CellTensor::zerosLike(p);
  EXPECT_TRUE(t.matches(p));
  EXPECT_EQ(t.size(), 10u * (1 + 2 + 2 + 2));
  t(3, 8, 1) = 0.5;
  EXPECT_DOUBLE_EQ(t(3, 8, 1), 0.5);
  EXPECT_DOUBLE_EQ(t(3, 8, 0), 0.0);
  EXPECT_DOUBLE_EQ(t(2, 8, 1), 0.0);
}

TEST(Allocation, ImprovementLoadAndFeasibility) {
  Problem p = singleResource(1, {makeType(1, {1, 3}, {0.5, 0.5}, {2}, {0}),
                                 makeType(1, {1}, {1.0}, {1}, {0})});
  LongRunAllocation chi = CellTensor::zerosLike(p);
  chi(0, 0, 1) = 1.0;
  chi(1, 0, 0) = 0.5;
  EXPECT_DOUBLE_EQ(rewardImprovement(p, chi, 0), 0.5 * 3 * 2);
  EXPECT_DOUBLE_EQ(rewardImprovement(p, chi, 1), 0.5);
  EXPECT_DOUBLE_EQ(expectedShare(p, chi, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(expectedLoad(p, chi, 0), 1.0);
  EXPECT_LE(feasibilityViolation(p, chi), 0.0);

  chi(1, 0, 0) = 1.0;
  EXPECT_NEAR(feasibilityViolation(p, chi), 0.5, 1e-15);
}

}  // namespace
}  // namespace karma
