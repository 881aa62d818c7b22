#pragma once

#include <Eigen/Dense>
#include <vector>

namespace karma::detail {

/// One term a * log(sum_k coef_k x_{index_k}) of the (maximized) objective.
struct LogTerm {
  double weight = 0.0;
  std::vector<int> index;
  std::vector<double> coef;
};

/// minimize -sum_t a_t log(g_t^T x) subject to G x <= h.
///
/// `varScale` and `rowScale` convert the raw stationarity and complementarity
/// residuals to the caller's units for the stopping test.
struct LogProgram {
  std::vector<LogTerm> terms;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::VectorXd varScale;
  Eigen::VectorXd rowScale;
};

struct IpmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  double residual = 0.0;
  int iterations = 0;
};

/// Mehrotra predictor-corrector from a strictly feasible x0. Iterates until the
/// scaled residual falls below `target` or stalls, and returns the best iterate.
IpmResult solveLogProgram(const LogProgram& lp, const Eigen::VectorXd& x0, double target,
                          int maxIterations);

}  // namespace karma::detail
