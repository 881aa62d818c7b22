#pragma once

#include <string>
#include <vector>

#include "karma/model.hpp"

namespace karma {

struct OracleResult {
  /// Feasible allocation and its Nash welfare objective.
  LongRunAllocation chi;
  double objective = 0.0;
  /// Dual value at the best prices; an upper bound on the optimum.
  double dualBound = 0.0;
  std::vector<double> prices;
};

/// Independent solver for the Nash welfare program over at most six desired
/// cells. A nested grid over capacity prices (8 * resolution + 1 points per
/// axis, recentered on improvement and shrunk by 4 otherwise) minimizes the
/// convex dual, whose inner problems are solved in closed form. A feasible
/// allocation reaching the implied improvements is then recovered by vertex
/// enumeration. Throws std::length_error above six cells and
/// std::domain_error when some type cannot be improved at all.
OracleResult mlnwOracle(const Problem& problem, int resolution = 3);

struct LpResult {
  std::vector<double> x;
  double objective = 0.0;
  bool feasible = false;
};

/// maximize c^T x subject to A x <= b by enumerating every basis. Only meant
/// for a handful of variables; the feasible set must be bounded.
LpResult lpVertexOracle(const std::vector<std::vector<double>>& A,
                        const std::vector<double>& b, const std::vector<double>& c);

/// Optimal value of one user's karma LP, by vertex enumeration.
double userProblemOracle(const UserType& type, const std::vector<double>& bids,
                         double budgetShare, bool mutuallyExclusive);

/// Optimal utilitarian objective, by vertex enumeration.
double utilitarianOracle(const Problem& problem);

struct TwoShotGameSpec {
  int n = 4;
  int capacity = 2;
  double uLow = 1.0;
  double uHigh = 4.0;
  double pHigh = 0.5;
};

struct DominanceReport {
  /// Truthful first-day bidding is a best response to every opponent profile.
  bool dominant = false;
  /// Truthful first-day bidding is a best response when all others play it.
  bool equilibrium = false;
  /// min over profiles of (truthful value - best deviating value); exact.
  double minMargin = 0.0;
  std::string minMarginExact;
  std::string worstProfile;
  long profiles = 0;
};

/// Exact enumeration of the two-day single-token game: one token per agent,
/// random rationing of day-1 bidders above capacity, only entrants pay, and
/// agents without a token cannot bid on day 2.
DominanceReport twoShotCheck(const TwoShotGameSpec& spec);

}  // namespace karma
