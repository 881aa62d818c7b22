#include "karma/mlnw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "interior_point.hpp"

namespace karma {

double KktResidualReport::max() const {
  return std::max({stationarity, primalFeasibility, dualFeasibility, complementarySlackness});
}

double MlnwSolution::etaMass(std::size_t type) const {
  double total = 0.0;
  for (std::size_t j = 0; j < eta.numResources(); ++j)
    for (std::size_t k = 0; k < eta.numLevels(type); ++k) total += eta(type, j, k);
  if (type < etaRow.size())
    for (double v : etaRow[type]) total += v;
  return total;
}

std::vector<double> accessRights(const Problem& problem) {
  std::vector<double> w;
  for (const auto& t : problem.types) w.push_back(t.weight);
  return w;
}

double nashObjective(const Problem& problem, const LongRunAllocation& chi,
                     const std::vector<double>& weights) {
  double obj = 0.0;
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const double r = rewardImprovement(problem, chi, i);
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    obj += problem.types[i].mass * weights[i] * std::log(r);
  }
  return obj;
}

double nashObjective(const Problem& problem, const LongRunAllocation& chi) {
  return nashObjective(problem, chi, accessRights(problem));
}

namespace {

std::string cellName(std::size_t i, std::size_t j, std::size_t k) {
  std::ostringstream os;
  os << "(type=" << i << ",resource=" << j << ",level=" << k << ")";
  return os.str();
}

void track(double value, double& slot, std::string& where, double& worst,
           const std::string& label) {
  if (value > slot) slot = value;
  if (value > worst) {
    worst = value;
    where = label;
  }
}

struct Layout {
  std::vector<int> var;  // flat cell index -> variable or -1
  std::vector<std::array<std::size_t, 3>> cell;  // variable -> (type, resource, level)
};

Layout layoutFor(const Problem& problem) {
  Layout lay;
  CellTensor index = CellTensor::zerosLike(problem);
  lay.var.assign(index.size(), -1);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const UserType& t = problem.types[i];
    bool any = false;
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < t.urgency.size(); ++k, ++flat) {
        if (!t.desires(j)) continue;
        lay.var[flat] = static_cast<int>(lay.cell.size());
        lay.cell.push_back({i, j, k});
        any = true;
      }
    if (!any)
      throw NoImprovementError(
          i, "type " + std::to_string(i) + " strictly desires no resource; log(0) objective");
  }
  return lay;
}

}  // namespace

KktResidualReport kktResiduals(const Problem& problem, const MlnwSolution& sol,
                               const std::vector<double>& weights) {
  if (!sol.chi.matches(problem) || !sol.eta.matches(problem) || !sol.iota.matches(problem) ||
      sol.lambda.size() != problem.numResources())
    throw ProblemError("solution shape does not match problem");
  const bool me = problem.mutuallyExclusive;
  if (me && sol.etaRow.size() != problem.numTypes())
    throw ProblemError("solution is missing row multipliers");

  KktResidualReport rep;
  double worst = -1.0;
  rep.primalFeasibility = std::max(0.0, feasibilityViolation(problem, sol.chi));
  worst = rep.primalFeasibility;
  rep.worstIndex = "primal";

  for (std::size_t j = 0; j < problem.numResources(); ++j) {
    const double lam = sol.lambda[j];
    const double cap = problem.capacities[j];
    track(std::max(0.0, -lam), rep.dualFeasibility, rep.worstIndex, worst,
          "dual(lambda," + std::to_string(j) + ")");
    track(std::abs(lam * (cap - expectedLoad(problem, sol.chi, j)) / cap),
          rep.complementarySlackness, rep.worstIndex, worst,
          "slackness(lambda," + std::to_string(j) + ")");
  }

  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const UserType& t = problem.types[i];
    const double r = rewardImprovement(problem, sol.chi, i);
    if (!(r > 0.0))
      throw std::domain_error("reward improvement of type " + std::to_string(i) +
                              " is not positive");
    for (std::size_t k = 0; k < t.urgency.size(); ++k) {
      const double sigma = t.urgency.probs[k];
      const double u = t.urgency.levels[k];
      double rowEta = 0.0;
      if (me) {
        rowEta = sol.etaRow[i][k];
        double rowSum = 0.0;
        for (std::size_t j = 0; j < problem.numResources(); ++j) rowSum += sol.chi(i, j, k);
        const std::string where = "(type=" + std::to_string(i) + ",level=" + std::to_string(k) + ")";
        track(std::max(0.0, -rowEta), rep.dualFeasibility, rep.worstIndex, worst,
              "dual(etaRow)" + where);
        track(std::abs(rowEta * (1.0 - rowSum)), rep.complementarySlackness, rep.worstIndex,
              worst, "slackness(etaRow)" + where);
      }
      for (std::size_t j = 0; j < problem.numResources(); ++j) {
        const double x = sol.chi(i, j, k);
        const double eta = sol.eta(i, j, k);
        const double iota = sol.iota(i, j, k);
        const std::string where = cellName(i, j, k);
        const double st = -weights[i] * sigma * u * t.gain(j) / r + sigma * sol.lambda[j] +
                          eta + rowEta - iota;
        track(std::abs(st), rep.stationarity, rep.worstIndex, worst, "stationarity" + where);
        track(std::max({0.0, -eta, -iota}), rep.dualFeasibility, rep.worstIndex, worst,
              "dual" + where);
        track(std::max(std::abs(eta * (1.0 - x)), std::abs(iota * x)),
              rep.complementarySlackness, rep.worstIndex, worst, "slackness" + where);
      }
    }
  }
  return rep;
}

KktResidualReport kktResiduals(const Problem& problem, const MlnwSolution& solution) {
  return kktResiduals(problem, solution, accessRights(problem));
}

MlnwSolution solveMlnw(const Problem& problem, double tol) {
  MlnwOptions opts;
  opts.tol = tol;
  return solveMlnw(problem, opts);
}

MlnwSolution solveMlnw(const Problem& problem, const MlnwOptions& options) {
  checkStructure(problem);
  if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const std::vector<double> w = options.weights ? *options.weights : accessRights(problem);
  if (w.size() != problem.numTypes()) throw std::invalid_argument("weight vector size mismatch");

  const Layout lay = layoutFor(problem);
  const int nv = static_cast<int>(lay.cell.size());
  const std::size_t m = problem.numResources();
  const double n = static_cast<double>(problem.population());
  const bool me = problem.mutuallyExclusive;

  std::vector<double> pi(problem.numTypes());
  for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = problem.types[i].mass / n;

  detail::LogProgram lp;
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    detail::LogTerm term;
    term.weight = pi[i] * w[i];
    lp.terms.push_back(std::move(term));
  }
  std::vector<int> resourceVars(m, 0);
  for (int v = 0; v < nv; ++v) {
    const auto [i, j, k] = lay.cell[v];
    const UserType& t = problem.types[i];
    lp.terms[i].index.push_back(v);
    lp.terms[i].coef.push_back(t.urgency.probs[k] * t.urgency.levels[k] * t.gain(j));
    ++resourceVars[j];
  }

  // Constraint rows: capacity, then upper (cell or row), then lower bounds.
  std::vector<int> capRow(m, -1);
  int rows = 0;
  for (std::size_t j = 0; j < m; ++j)
    if (resourceVars[j] > 0) capRow[j] = rows++;
  const int upperStart = rows;
  std::vector<std::vector<int>> rowIndex;
  if (me) {
    rowIndex.resize(problem.numTypes());
    for (std::size_t i = 0; i < problem.numTypes(); ++i)
      rowIndex[i].assign(problem.types[i].urgency.size(), -1);
    for (int v = 0; v < nv; ++v) {
      const auto [i, j, k] = lay.cell[v];
      if (rowIndex[i][k] < 0) rowIndex[i][k] = rows++;
    }
  } else {
    rows += nv;
  }
  const int lowerStart = rows;
  rows += nv;

  lp.G = Eigen::MatrixXd::Zero(rows, nv);
  lp.h = Eigen::VectorXd::Zero(rows);
  lp.rowScale = Eigen::VectorXd::Ones(rows);
  lp.varScale = Eigen::VectorXd(nv);
  for (std::size_t j = 0; j < m; ++j)
    if (capRow[j] >= 0) {
      lp.h[capRow[j]] = problem.capacities[j] / n;
      lp.rowScale[capRow[j]] = problem.capacities[j] / n;
    }
  for (int v = 0; v < nv; ++v) {
    const auto [i, j, k] = lay.cell[v];
    lp.varScale[v] = pi[i];
    lp.G(capRow[j], v) = pi[i] * problem.types[i].urgency.probs[k];
    const int up = me ? rowIndex[i][k] : upperStart + v;
    lp.G(up, v) = pi[i];
    lp.h[up] = pi[i];
    lp.rowScale[up] = pi[i];
    lp.G(lowerStart + v, v) = -pi[i];
    lp.rowScale[lowerStart + v] = pi[i];
  }

  // Strictly feasible start.
  Eigen::VectorXd x0(nv);
  if (options.randomStart) {
    std::mt19937_64 gen(*options.randomStart);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    for (int v = 0; v < nv; ++v) x0[v] = dist(gen);
  } else {
    for (int v = 0; v < nv; ++v) {
      const std::size_t j = lay.cell[v][1];
      const double cj = problem.capacities[j];
      x0[v] = std::min((cj - 1e-3) / problem.desiringUsers(j), 0.5);
    }
  }
  {
    const Eigen::VectorXd use = lp.G * x0;
    double shrink = 1.0;
    for (int r = 0; r < lowerStart; ++r)
      if (use[r] > 0.0) shrink = std::min(shrink, 0.9 * lp.h[r] / use[r]);
    x0 *= shrink;
  }

  const double target = std::min(options.tol * 1e-3, 1e-12);
  const detail::IpmResult res = detail::solveLogProgram(lp, x0, target, options.maxIterations);

  MlnwSolution sol;
  sol.chi = CellTensor::zerosLike(problem);
  sol.eta = CellTensor::zerosLike(problem);
  sol.iota = CellTensor::zerosLike(problem);
  sol.etaRow = zeroLevelTable(problem);
  sol.lambda.assign(m, 0.0);
  sol.iterations = res.iterations;
  for (std::size_t j = 0; j < m; ++j)
    if (capRow[j] >= 0) sol.lambda[j] = res.z[capRow[j]];
  for (int v = 0; v < nv; ++v) {
    const auto [i, j, k] = lay.cell[v];
    sol.chi(i, j, k) = std::clamp(res.x[v], 0.0, 1.0);
    sol.iota(i, j, k) = res.z[lowerStart + v];
    if (me)
      sol.etaRow[i][k] = res.z[rowIndex[i][k]];
    else
      sol.eta(i, j, k) = res.z[upperStart + v];
  }
  sol.rewardImprovements = rewardImprovements(problem, sol.chi);

  // Eliminated cells sit at zero; their lower-bound multiplier follows from
  // stationarity.
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const UserType& t = problem.types[i];
    for (std::size_t j = 0; j < m; ++j) {
      if (t.desires(j)) continue;
      for (std::size_t k = 0; k < t.urgency.size(); ++k) {
        const double sigma = t.urgency.probs[k];
        const double row = me ? sol.etaRow[i][k] : 0.0;
        sol.iota(i, j, k) = sigma * sol.lambda[j] + row -
                            w[i] * sigma * t.urgency.levels[k] * t.gain(j) /
                                sol.rewardImprovements[i];
      }
    }
  }
  sol.objective = nashObjective(problem, sol.chi, w);

  const KktResidualReport report = kktResiduals(problem, sol, w);
  if (!report.within(options.tol)) {
    std::ostringstream msg;
    msg << "MLNW solver did not reach tolerance " << options.tol << " (worst residual "
        << report.max() << " at " << report.worstIndex << ")";
    throw MlnwConvergenceError(msg.str(), report);
  }
  return sol;
}

LongRunAllocation singleShotNashWelfare(const Problem& problem) {
  Problem collapsed = problem;
  for (auto& t : collapsed.types) t.urgency = UrgencyProcess{{1.0}, {1.0}};
  const MlnwSolution sol = solveMlnw(collapsed);

  LongRunAllocation out = CellTensor::zerosLike(problem);
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < out.numLevels(i); ++k) out(i, j, k) = sol.chi(i, j, 0);
  return out;
}

}  // namespace karma
