#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "karma/mlnw.hpp"
#include "karma/model.hpp"

namespace karma {

/// Optimal long-run allocation of a single user facing fixed bids.
/// Rows are urgency levels, columns are resources.
struct UserProblemSolution {
  std::vector<std::vector<double>> chi;
  /// Multipliers of chi <= 1 (zero when mutually exclusive).
  std::vector<std::vector<double>> eta;
  /// Multipliers of the per-level simplex rows (mutually exclusive only).
  std::vector<double> etaRow;
  double kappa = 0.0;
  double objective = 0.0;
  double spend = 0.0;
};

/// Exact solution of the user LP by a search over the budget dual: the
/// optimal selection is piecewise constant in kappa, so all breakpoints are
/// enumerated and the budget-crossing breakpoint is located by bisection.
/// Throws std::invalid_argument on negative bids or budget.
UserProblemSolution solveUserProblem(const UserType& type, const std::vector<double>& bids,
                                     double budgetShare, bool mutuallyExclusive);

struct KarmaEquilibrium {
  LongRunAllocation chi;
  std::vector<double> bids;
  std::vector<double> kappa;
  CellTensor eta;
  LevelTable etaRow;
  std::vector<double> rewardImprovements;
};

/// Per-user budget share w_i / sum(w) * sum_j b_j c_j.
double budgetShare(const Problem& problem, const std::vector<double>& bids, std::size_t type);

struct VerificationCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<VerificationCheck> checks;
  bool passed() const;
  const VerificationCheck* firstFailure() const;
};

VerificationReport verifyKe(const Problem& problem, const KarmaEquilibrium& candidate,
                            double tol = 1e-6);

class NoKeFound : public std::runtime_error {
 public:
  NoKeFound(const std::string& what, std::vector<double> excessDemand,
            std::vector<double> budgetImbalance, int iterations)
      : std::runtime_error(what),
        excessDemand(std::move(excessDemand)),
        budgetImbalance(std::move(budgetImbalance)),
        iterations(iterations) {}

  std::vector<double> excessDemand;
  std::vector<double> budgetImbalance;
  int iterations;
};

/// Bid tatonnement with bids normalized so that sum_j b_j c_j equals the total
/// access rights. When the tatonnement does not settle (demand is set-valued
/// on degenerate instances), falls back to a fixed point on the shadow weights
/// of the Nash welfare program, whose optimality system coincides with the
/// user problems at kappa_i = r_i / w'_i. A KE need not exist; NoKeFound is
/// thrown when the shadow weights of some type collapse to zero.
KarmaEquilibrium findKe(const Problem& problem, double tol = 1e-6, int maxIter = 100000);

struct NashBalanceReport {
  std::vector<double> perTypeRatio;
  double constantC = 0.0;
  double maxDeviation = 0.0;
  bool balanced = false;
};

NashBalanceReport checkNashBalance(const Problem& problem, const MlnwSolution& mlnw,
                                   double tol = 1e-6);

class NotNashBalanced : public std::runtime_error {
 public:
  explicit NotNashBalanced(NashBalanceReport report)
      : std::runtime_error("MLNW solution is not Nash-balanced"), report(std::move(report)) {}
  NashBalanceReport report;
};

/// b = alpha * lambda, kappa_i = r_i / (w_i alpha), eta scaled by r_i / w_i.
KarmaEquilibrium constructKeFromMlnw(const Problem& problem, const MlnwSolution& mlnw,
                                     double alpha = 1.0, double tol = 1e-6);

struct CouplingRow {
  std::size_t type = 0;
  double separateSum = 0.0;
  double combined = 0.0;
  double slack = 0.0;
};

struct CouplingReport {
  std::vector<CouplingRow> rows;
  double minSlack = 0.0;
};

/// Concatenates the resources of two problems over the same user types.
Problem mergeProblems(const Problem& a, const Problem& b);

/// Solves a KE in each economy and in the merged one. Types that desire no
/// resource of an economy do not take part in it and gain nothing there.
CouplingReport compareCoupling(const Problem& a, const Problem& b, double tol = 1e-6);

}  // namespace karma
