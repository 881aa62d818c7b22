#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "karma/mlnw.hpp"
#include "karma/oracle.hpp"
#include "support.hpp"

namespace karma {
namespace {

using testing::makeType;
using testing::singleResource;

// Straight enumeration of the two-day game over every urgency draw and every
// rationing outcome. Masks: bit 0 = bid when low, bit 1 = bid when high.
struct Agent {
  int day1;
  int day2;
};

void subsets(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int a = start; a < n; ++a) {
    cur.push_back(a);
    subsets(n, k, a + 1, cur, out);
    cur.pop_back();
  }
}

double payoffOfAgentZero(const std::vector<Agent>& agents, const TwoShotGameSpec& g) {
  const int n = static_cast<int>(agents.size());
  auto prob = [&](int bits) {
    double p = 1.0;
    for (int a = 0; a < n; ++a) p *= (bits >> a & 1) ? g.pHigh : 1.0 - g.pHigh;
    return p;
  };
  auto bids = [](int mask, bool high) { return (mask >> (high ? 1 : 0) & 1) != 0; };

  double total = 0.0;
  for (int u1 = 0; u1 < (1 << n); ++u1) {
    std::vector<int> entrants;
    for (int a = 0; a < n; ++a)
      if (bids(agents[a].day1, u1 >> a & 1)) entrants.push_back(a);
    std::vector<std::vector<int>> outcomes;
    if (static_cast<int>(entrants.size()) <= g.capacity) {
      outcomes.push_back(entrants);
    } else {
      std::vector<int> cur;
      std::vector<std::vector<int>> picks;
      subsets(static_cast<int>(entrants.size()), g.capacity, 0, cur, picks);
      for (const auto& pick : picks) {
        std::vector<int> winners;
        for (int idx : pick) winners.push_back(entrants[idx]);
        outcomes.push_back(winners);
      }
    }
    for (const auto& winners : outcomes) {
      const double pOutcome = prob(u1) / outcomes.size();
      std::vector<bool> token(n, true);
      for (int a : winners) token[a] = false;
      double value = 0.0;
      if (!token[0]) value += (u1 & 1) ? g.uHigh : g.uLow;
      for (int u2 = 0; u2 < (1 << n); ++u2) {
        int rivals = 0;
        for (int a = 1; a < n; ++a)
          if (token[a] && bids(agents[a].day2, u2 >> a & 1)) ++rivals;
        if (!token[0]) continue;
        const double win = std::min(1.0, static_cast<double>(g.capacity) / (rivals + 1));
        value += prob(u2) * win * ((u2 & 1) ? g.uHigh : g.uLow);
      }
      total += pOutcome * value;
    }
  }
  return total;
}

struct BruteForce {
  double minMargin = 0.0;
  double truthfulMargin = 0.0;
};

BruteForce bruteForceTwoShot(const TwoShotGameSpec& g) {
  const int k = g.n - 1;
  BruteForce out;
  out.minMargin = INFINITY;
  std::vector<int> code(k, 0);
  for (;;) {
    std::vector<Agent> agents(g.n);
    for (int a = 0; a < k; ++a) agents[a + 1] = {code[a] % 4, code[a] / 4};
    auto value = [&](int day1) {
      agents[0] = {day1, 3};
      return payoffOfAgentZero(agents, g);
    };
    const double margin = value(2) - std::max({value(0), value(3), value(1)});
    out.minMargin = std::min(out.minMargin, margin);
    if (std::all_of(code.begin(), code.end(), [](int c) { return c == 2 + 4 * 3; }))
      out.truthfulMargin = margin;
    int a = 0;
    while (a < k && ++code[a] == 16) code[a++] = 0;
    if (a == k) break;
  }
  return out;
}

TEST(TwoShot, DominantAtFourToOne) {
  const auto start = std::chrono::steady_clock::now();
  const DominanceReport r = twoShotCheck({4, 2, 1.0, 4.0, 0.5});
  EXPECT_TRUE(r.dominant);
  EXPECT_TRUE(r.equilibrium);
  EXPECT_DOUBLE_EQ(r.minMargin, 1.0 / 8.0);
  EXPECT_EQ(r.minMarginExact, "1/8");
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 10.0);
}

TEST(TwoShot, NotDominantAtTwoToOneButStillEquilibrium) {
  const DominanceReport r = twoShotCheck({4, 2, 1.0, 2.0, 0.5});
  EXPECT_FALSE(r.dominant);
  EXPECT_TRUE(r.equilibrium);
  EXPECT_LT(r.minMargin, 0.0);
  EXPECT_FALSE(r.worstProfile.empty());
}

TEST(TwoShot, BoundaryIsExactlyZero) {
  const DominanceReport r = twoShotCheck({4, 2, 1.0, 3.0, 0.5});
  EXPECT_EQ(r.minMarginExact, "0");
  EXPECT_TRUE(r.dominant);
}

TEST(TwoShot, VerdictFlipsOnceAcrossTheSweep) {
  int flips = 0;
  bool previous = false;
  for (const double uh : {2.0, 2.5, 3.0, 3.5, 4.0}) {
    const bool dominant = twoShotCheck({4, 2, 1.0, uh, 0.5}).dominant;
    if (uh > 2.0 && dominant != previous) ++flips;
    previous = dominant;
  }
  EXPECT_EQ(flips, 1);
  EXPECT_TRUE(previous);
}

TEST(TwoShot, MatchesBruteForceEnumeration) {
  const std::vector<TwoShotGameSpec> specs = {
      {3, 1, 1.0, 4.0, 0.5}, {3, 2, 1.0, 2.5, 0.25}, {4, 2, 1.0, 2.0, 0.5},
      {4, 2, 1.0, 3.5, 0.5}, {4, 1, 0.5, 3.0, 0.75}, {4, 3, 1.0, 6.0, 0.375},
  };
  for (const auto& g : specs) {
    const DominanceReport exact = twoShotCheck(g);
    const BruteForce brute = bruteForceTwoShot(g);
    EXPECT_NEAR(exact.minMargin, brute.minMargin, 1e-12)
        << "n=" << g.n << " c=" << g.capacity << " uh=" << g.uHigh << " p=" << g.pHigh;
    EXPECT_EQ(exact.equilibrium, brute.truthfulMargin >= -1e-12);
    if (std::abs(brute.minMargin) > 1e-9) {
      EXPECT_EQ(exact.dominant, brute.minMargin > 0.0);
    }
  }
}

TEST(TwoShot, ProfilesAreOpponentMultisets) {
  // 16 strategies collapse to 16 distinct (q1, q2) pairs at p = 1/4, so three
  // opponents give C(18, 3) multisets.
  EXPECT_EQ(twoShotCheck({4, 2, 1.0, 4.0, 0.25}).profiles, 816);
}

TEST(TwoShot, InvalidSpecsAreRejected) {
  EXPECT_THROW(twoShotCheck({4, 4, 1.0, 4.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(twoShotCheck({4, 0, 1.0, 4.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(twoShotCheck({9, 2, 1.0, 4.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(twoShotCheck({4, 2, 2.0, 1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(twoShotCheck({4, 2, 1.0, 4.0, 1.0}), std::invalid_argument);
}

TEST(LpVertexOracle, SmallLinearProgram) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0: optimum (8/5, 6/5).
  const LpResult r = lpVertexOracle({{1, 2}, {3, 1}, {-1, 0}, {0, -1}}, {4, 6, 0, 0}, {1, 1});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x[0], 1.6, 1e-12);
  EXPECT_NEAR(r.x[1], 1.2, 1e-12);
  EXPECT_NEAR(r.objective, 2.8, 1e-12);

  const LpResult empty = lpVertexOracle({{1}, {-1}}, {-1, 0}, {1});
  EXPECT_FALSE(empty.feasible);
}

TEST(MlnwOracle, SymmetricInstanceIsFairShare) {
  const Problem p = singleResource(1, {makeType(1, {1}, {1.0}, {1}, {0}),
                                       makeType(1, {1}, {1.0}, {1}, {0})});
  const OracleResult r = mlnwOracle(p);
  EXPECT_NEAR(r.chi(0, 0, 0), 0.5, 1e-6);
  EXPECT_NEAR(r.chi(1, 0, 0), 0.5, 1e-6);
  EXPECT_NEAR(r.objective, solveMlnw(p, 1e-9).objective, 1e-6);
}

TEST(MlnwOracle, TwoTypesTwoLevels) {
  const Problem p = singleResource(2, {makeType(2, {1, 4}, {0.6, 0.4}, {1.5}, {0}),
                                       makeType(1, {2, 3}, {0.5, 0.5}, {1}, {0})});
  const OracleResult r = mlnwOracle(p);
  const MlnwSolution sol = solveMlnw(p, 1e-9);
  EXPECT_NEAR(r.objective, sol.objective, 1e-4);
  EXPECT_LE(feasibilityViolation(p, r.chi), 1e-8);
  EXPECT_GE(r.dualBound, sol.objective - 1e-9);
}

TEST(MlnwOracle, AgreesWithSolverOnRandomInstances) {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 20; ++s) {
    const Problem p = testing::randomProblem(rng, 2, 2, 2, s % 2 == 1, 6);
    const OracleResult r = mlnwOracle(p);
    const MlnwSolution sol = solveMlnw(p, 1e-9);
    EXPECT_NEAR(r.objective, sol.objective, 1e-4) << "instance " << s;
    EXPECT_LE(r.objective, sol.objective + 1e-7) << "instance " << s;
    EXPECT_LE(feasibilityViolation(p, r.chi), 1e-8);
  }
}

TEST(MlnwOracle, DimensionGuard) {
  const Problem p = singleResource(1, {makeType(1, {1, 2, 3, 4}, {0.25, 0.25, 0.25, 0.25}, {1}, {0}),
                                       makeType(1, {1, 2, 3}, {0.2, 0.3, 0.5}, {1}, {0})});
  EXPECT_THROW(mlnwOracle(p), std::length_error);
}

TEST(MlnwOracle, EmptyFeasibleSet) {
  Problem p;
  p.capacities = {0, 1};
  p.types = {makeType(1, {1}, {1.0}, {1, 0}, {0, 0}), makeType(2, {1}, {1.0}, {0, 1}, {0, 0})};
  EXPECT_THROW(mlnwOracle(p), std::domain_error);
}

TEST(UtilitarianOracle, MatchesHandValue) {
  // Capacity 1 goes to the mass-1 urgency-3 type: value 3.
  const Problem p = singleResource(1, {makeType(3, {1}, {1.0}, {1}, {0}),
                                       makeType(1, {3}, {1.0}, {1}, {0})});
  EXPECT_NEAR(utilitarianOracle(p), 3.0, 1e-12);
}

}  // namespace
}  // namespace karma
