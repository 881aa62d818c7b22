#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "karma/ke.hpp"
#include "karma/rng.hpp"
#include "karma/sim.hpp"
#include "support.hpp"

namespace karma {
namespace {

using testing::makeType;
using testing::singleResource;

KarmaEquilibrium flatPolicy(const Problem& p, double chi, std::vector<double> bids) {
  KarmaEquilibrium ke;
  ke.chi = CellTensor(p.numResources(), [&] {
    std::vector<std::size_t> levels;
    for (const auto& t : p.types) levels.push_back(t.urgency.size());
    return levels;
  }(), chi);
  ke.bids = std::move(bids);
  ke.kappa.assign(p.numTypes(), 0.0);
  ke.eta = CellTensor::zerosLike(p);
  ke.etaRow = zeroLevelTable(p);
  return ke;
}

SimConfig configFor(const KarmaEquilibrium& ke, long horizon, std::uint64_t seed) {
  SimConfig c;
  c.policy = ke;
  c.horizon = horizon;
  c.seed = seed;
  c.meanKarma = defaultMeanKarma(ke);
  return c;
}

TEST(Philox, KnownAnswer) {
  const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                     {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(CounterRng, StreamsAreIndependentOfOrder) {
  CounterRng a(9, 3, 5), b(9, 3, 5), c(9, 4, 5);
  const double first = a.uniform();
  c.uniform();
  EXPECT_EQ(b.uniform(), first);
  for (int k = 0; k < 1000; ++k) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.below(7), 7u);
  }
}

TEST(Step, HighestBidClears) {
  // Three users, one unit, bids {5, 3, 3}: the two poorer users are capped at
  // their karma, so the first-highest bid 5 clears and its bidder pays it.
  const Problem p = singleResource(1, {makeType(3, {1}, {1.0}, {1}, {0})});
  SimConfig config = configFor(flatPolicy(p, 1.0, {5.0}), 1, 0);
  config.meanKarma = 16.0 / 3.0;
  SimState state = initialState(p, config);
  state.karma = {10.0, 3.0, 3.0};
  const StepRecord rec = step(state, p, config);
  EXPECT_EQ(rec.clearingBid[0], 5.0);
  ASSERT_EQ(rec.allocations.size(), 1u);
  EXPECT_EQ(rec.allocations[0].first, 0u);
  EXPECT_EQ(rec.totalPayment, 5.0);
  EXPECT_EQ(rec.shortfalls, 2);
  EXPECT_NEAR(state.karma[0], 10.0 - 5.0 + 5.0 / 3.0, 1e-12);
  EXPECT_NEAR(state.karma[1], 3.0 + 5.0 / 3.0, 1e-12);
  EXPECT_EQ(state.t, 1);
}

TEST(Step, ZeroBidsLeaveKarmaUnchanged) {
  const Problem p = singleResource(2, {makeType(5, {1, 2}, {0.5, 0.5}, {1}, {0})});
  const SimConfig config = configFor(flatPolicy(p, 1.0, {0.0}), 1, 3);
  SimState state = initialState(p, config);
  const std::vector<double> before = state.karma;
  const StepRecord rec = step(state, p, config);
  EXPECT_EQ(rec.clearingBid[0], 0.0);
  EXPECT_EQ(rec.totalPayment, 0.0);
  EXPECT_EQ(rec.allocations.size(), 2u);
  EXPECT_EQ(state.karma, before);
}

TEST(Step, TiesAreRationedWithinCapacity) {
  const Problem p = singleResource(3, {makeType(10, {1}, {1.0}, {1}, {0})});
  const SimConfig config = configFor(flatPolicy(p, 1.0, {1.0}), 1, 0);
  std::map<std::uint32_t, int> wins;
  SimState state = initialState(p, config);
  for (int t = 0; t < 400; ++t) {
    const StepRecord rec = step(state, p, config);
    EXPECT_EQ(rec.allocations.size(), 3u);
    EXPECT_EQ(rec.requests.size(), 10u);
    for (const auto& [a, j] : rec.allocations) ++wins[a];
  }
  EXPECT_EQ(wins.size(), 10u);
  for (const auto& [a, w] : wins) EXPECT_GT(w, 60) << "agent " << a;
}

TEST(PolicyBid, ExclusiveResourcesGetOneBid) {
  Problem p;
  p.mutuallyExclusive = true;
  p.capacities = {1, 1, 1};
  p.types = {makeType(4, {1}, {1.0}, {1, 1, 1}, {0, 0, 0})};
  const KarmaEquilibrium ke = flatPolicy(p, 1.0 / 3.0, {1.0, 2.0, 3.0});
  for (std::uint32_t a = 0; a < 200; ++a) {
    CounterRng rng(1, a, 0);
    const PolicyBid b = policyBid(p, 0, 0, ke, 100.0, ShortfallRule::capAtKarma, rng);
    int entered = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      entered += b.enters[j];
      EXPECT_EQ(b.amount[j], b.enters[j] ? ke.bids[j] : 0.0);
    }
    EXPECT_LE(entered, 1);
  }
}

TEST(PolicyBid, ZeroRowNeverBids) {
  const Problem p = singleResource(1, {makeType(2, {1}, {1.0}, {1}, {0})});
  const KarmaEquilibrium ke = flatPolicy(p, 0.0, {1.0});
  CounterRng rng(0, 0, 0);
  for (int k = 0; k < 50; ++k) {
    const PolicyBid b = policyBid(p, 0, 0, ke, 10.0, ShortfallRule::capAtKarma, rng);
    EXPECT_EQ(b.enters[0], 0);
    EXPECT_EQ(b.amount[0], 0.0);
  }
}

TEST(PolicyBid, ShortfallRules) {
  const Problem p = singleResource(1, {makeType(2, {1}, {1.0}, {1}, {0})});
  const KarmaEquilibrium ke = flatPolicy(p, 1.0, {2.0});
  CounterRng rng(0, 0, 0);
  PolicyBid b = policyBid(p, 0, 0, ke, 5.0, ShortfallRule::capAtKarma, rng);
  EXPECT_EQ(b.amount[0], 2.0);
  EXPECT_FALSE(b.shortfall);
  b = policyBid(p, 0, 0, ke, 0.5, ShortfallRule::capAtKarma, rng);
  EXPECT_EQ(b.amount[0], 0.5);
  EXPECT_TRUE(b.shortfall);
  b = policyBid(p, 0, 0, ke, 0.0, ShortfallRule::skipBid, rng);
  EXPECT_EQ(b.amount[0], 0.0);
  EXPECT_EQ(b.enters[0], 0);
  EXPECT_TRUE(b.shortfall);
}

class SimOnKe : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    problem_ = new Problem(singleResource(
        3, {makeType(4, {1, 5}, {0.8, 0.2}, {1}, {0}), makeType(3, {2}, {1.0}, {1}, {0})}));
    ke_ = new KarmaEquilibrium(findKe(*problem_));
  }
  static void TearDownTestSuite() {
    delete problem_;
    delete ke_;
  }
  static Problem* problem_;
  static KarmaEquilibrium* ke_;
};

Problem* SimOnKe::problem_ = nullptr;
KarmaEquilibrium* SimOnKe::ke_ = nullptr;

TEST_F(SimOnKe, KarmaIsConserved) {
  const SimStats s = run(*problem_, configFor(*ke_, 2000, 1));
  EXPECT_LE(s.maxKarmaDrift, 1e-9);
  const double total = std::accumulate(s.finalKarma.begin(), s.finalKarma.end(), 0.0);
  EXPECT_NEAR(total, 7 * defaultMeanKarma(*ke_), 1e-9 * 7 * defaultMeanKarma(*ke_));
  for (std::size_t i = 0; i < problem_->numTypes(); ++i) {
    EXPECT_GE(s.paymentByType[i], 0.0);
    EXPECT_GE(s.redistributionByType[i], 0.0);
  }
}

TEST_F(SimOnKe, RunsAreBitIdentical) {
  const SimStats a = run(*problem_, configFor(*ke_, 500, 42));
  const SimStats b = run(*problem_, configFor(*ke_, 500, 42));
  EXPECT_EQ(a.finalKarma, b.finalKarma);
  EXPECT_EQ(a.shortfallCount, b.shortfallCount);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k)
    EXPECT_EQ(a.trace[k].clearingBid, b.trace[k].clearingBid);
  for (std::size_t n = 0; n < a.allocFrequency.size(); ++n)
    EXPECT_EQ(a.allocFrequency.flat()[n], b.allocFrequency.flat()[n]);

  const SimStats c = run(*problem_, configFor(*ke_, 500, 43));
  EXPECT_NE(a.finalKarma, c.finalKarma);
}

TEST_F(SimOnKe, SingleRoundWithoutBurnIn) {
  SimConfig config = configFor(*ke_, 1, 5);
  config.burnIn = 0;
  const SimStats s = run(*problem_, config);
  EXPECT_EQ(s.measuredSteps, 1);
  double agentSteps = 0.0;
  for (const auto& row : s.levelCount)
    for (double c : row) agentSteps += c;
  EXPECT_EQ(agentSteps, 7.0);
  double allocated = 0.0;
  for (double c : s.allocCount.flat()) allocated += c;
  EXPECT_LE(allocated, 3.0);
  EXPECT_EQ(s.trace.size(), 1u);
}

TEST_F(SimOnKe, CapacityHoldsExPost) {
  SimConfig config = configFor(*ke_, 300, 8);
  SimState state = initialState(*problem_, config);
  for (int t = 0; t < 300; ++t) {
    const StepRecord rec = step(state, *problem_, config);
    EXPECT_LE(rec.allocations.size(), 3u);
    for (const auto& [a, j] : rec.allocations) EXPECT_EQ(j, 0u);
  }
}

TEST_F(SimOnKe, TraceIsThinned) {
  SimConfig config = configFor(*ke_, 100, 2);
  config.traceEvery = 10;
  EXPECT_EQ(run(*problem_, config).trace.size(), 10u);
}

TEST_F(SimOnKe, InvalidConfigIsRejected) {
  SimConfig config = configFor(*ke_, 0, 0);
  EXPECT_THROW(run(*problem_, config), std::invalid_argument);
  config.horizon = 10;
  config.burnIn = 10;
  EXPECT_THROW(run(*problem_, config), std::invalid_argument);
  config.burnIn.reset();
  config.meanKarma = 0.0;
  EXPECT_THROW(run(*problem_, config), std::invalid_argument);
}

}  // namespace
}  // namespace karma
