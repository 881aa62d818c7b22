#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "karma/model.hpp"

namespace karma {

/// Residuals of the MLNW optimality system, stated per user. Capacity terms
/// are relative to c_j.
struct KktResidualReport {
  double stationarity = 0.0;
  double primalFeasibility = 0.0;
  double dualFeasibility = 0.0;
  double complementarySlackness = 0.0;
  std::string worstIndex;

  double max() const;
  bool within(double tol) const { return max() <= tol; }
};

/// Optimal long-run allocation with its multipliers.
///
/// `eta` holds multipliers of the per-cell constraints chi <= 1 and is zero when
/// the problem is mutually exclusive; in that case `etaRow` holds the
/// multipliers of the per-(type, level) rows sum_j chi <= 1.
struct MlnwSolution {
  LongRunAllocation chi;
  std::vector<double> lambda;
  CellTensor eta;
  LevelTable etaRow;
  CellTensor iota;
  std::vector<double> rewardImprovements;
  double objective = 0.0;
  int iterations = 0;

  /// Sum over resources and levels of eta for one type (rows included).
  double etaMass(std::size_t type) const;
};

struct MlnwOptions {
  double tol = 1e-6;
  int maxIterations = 200;
  /// Replaces the access rights w_i in the objective when set.
  std::optional<std::vector<double>> weights;
  /// Starts from a random interior point instead of the Slater point.
  std::optional<std::uint64_t> randomStart;
};

class MlnwConvergenceError : public std::runtime_error {
 public:
  MlnwConvergenceError(const std::string& what, KktResidualReport best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const KktResidualReport& best() const { return best_; }

 private:
  KktResidualReport best_;
};

/// A type with no strictly desired resource has log(0) in the objective.
class NoImprovementError : public ProblemError {
 public:
  NoImprovementError(std::size_t type, const std::string& what)
      : ProblemError(what), type_(type) {}
  std::size_t type() const { return type_; }

 private:
  std::size_t type_;
};

MlnwSolution solveMlnw(const Problem& problem, double tol = 1e-6);
MlnwSolution solveMlnw(const Problem& problem, const MlnwOptions& options);

/// Pure evaluation of the optimality system. Throws std::domain_error if some
/// reward improvement is not positive.
KktResidualReport kktResiduals(const Problem& problem, const MlnwSolution& solution);
KktResidualReport kktResiduals(const Problem& problem, const MlnwSolution& solution,
                               const std::vector<double>& weights);

/// Sum over users of w_i log(r_i - r0_i); -inf if some improvement is not positive.
double nashObjective(const Problem& problem, const LongRunAllocation& chi);
double nashObjective(const Problem& problem, const LongRunAllocation& chi,
                     const std::vector<double>& weights);

/// Static Nash welfare each period: urgency is collapsed to 1 before solving,
/// and the allocation is repeated across levels.
LongRunAllocation singleShotNashWelfare(const Problem& problem);

/// Maximizes total urgency-weighted reward improvement. Solved exactly as a
/// min-cost flow; cells with identical value vectors share flow equally.
LongRunAllocation utilitarian(const Problem& problem);
double utilitarianObjective(const Problem& problem, const LongRunAllocation& chi);

std::vector<double> accessRights(const Problem& problem);

}  // namespace karma
