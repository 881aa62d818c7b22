#include "karma/ke.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "karma/parallel.hpp"

namespace karma {

double budgetShare(const Problem& problem, const std::vector<double>& bids, std::size_t type) {
  double pool = 0.0;
  for (std::size_t j = 0; j < problem.numResources(); ++j)
    pool += bids[j] * problem.capacities[j];
  return problem.types[type].weight / problem.totalWeight() * pool;
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const VerificationCheck& c) { return c.passed; });
}

const VerificationCheck* VerificationReport::firstFailure() const {
  for (const auto& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

namespace {

struct Worst {
  double value = 0.0;
  std::string where;
  void update(double v, const std::string& label) {
    if (v > value || (where.empty() && v >= value)) {
      value = v;
      where = label;
    }
  }
};

VerificationCheck finish(const std::string& name, const Worst& w, double tol) {
  return {name, w.value <= tol, w.value, w.where};
}

double spendOf(const Problem& problem, const LongRunAllocation& chi,
               const std::vector<double>& bids, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < problem.numResources(); ++j)
    s += bids[j] * expectedShare(problem, chi, i, j);
  return s;
}

std::string typeLabel(const std::string& what, std::size_t i) {
  return what + "(type=" + std::to_string(i) + ")";
}

// Maps a Nash welfare solution with weights w' to a
// karma equilibrium candidate.
KarmaEquilibrium keFromMlnw(const Problem& problem, const MlnwSolution& sol,
                            const std::vector<double>& weights, double alpha) {
  KarmaEquilibrium ke;
  ke.chi = sol.chi;
  ke.eta = sol.eta;
  ke.etaRow = sol.etaRow.empty() ? zeroLevelTable(problem) : sol.etaRow;
  for (double l : sol.lambda) ke.bids.push_back(alpha * l);
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const double r = sol.rewardImprovements[i];
    const double scale = r / weights[i];
    ke.kappa.push_back(scale / alpha);
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < ke.eta.numLevels(i); ++k) ke.eta(i, j, k) *= scale;
    for (double& v : ke.etaRow[i]) v *= scale;
  }
  ke.rewardImprovements = rewardImprovements(problem, ke.chi);
  return ke;
}

KarmaEquilibrium keFromBids(const Problem& problem, const std::vector<double>& bids) {
  KarmaEquilibrium ke;
  ke.chi = CellTensor::zerosLike(problem);
  ke.eta = CellTensor::zerosLike(problem);
  ke.etaRow = zeroLevelTable(problem);
  ke.bids = bids;
  ke.kappa.assign(problem.numTypes(), 0.0);
  std::vector<UserProblemSolution> sols(problem.numTypes());
  parallelFor(problem.numTypes(), [&](std::size_t i) {
    sols[i] = solveUserProblem(problem.types[i], bids, budgetShare(problem, bids, i),
                               problem.mutuallyExclusive);
  });
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    ke.kappa[i] = sols[i].kappa;
    ke.etaRow[i] = sols[i].etaRow;
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < ke.chi.numLevels(i); ++k) {
        ke.chi(i, j, k) = sols[i].chi[k][j];
        ke.eta(i, j, k) = sols[i].eta[k][j];
      }
  }
  ke.rewardImprovements = rewardImprovements(problem, ke.chi);
  return ke;
}

void diagnostics(const Problem& problem, const KarmaEquilibrium& ke,
                 std::vector<double>& excess, std::vector<double>& imbalance) {
  excess.clear();
  imbalance.clear();
  for (std::size_t j = 0; j < problem.numResources(); ++j)
    excess.push_back(expectedLoad(problem, ke.chi, j) - problem.capacities[j]);
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const double b = budgetShare(problem, ke.bids, i);
    imbalance.push_back((spendOf(problem, ke.chi, ke.bids, i) - b) / std::max(b, 1e-12));
  }
}

}  // namespace

VerificationReport verifyKe(const Problem& problem, const KarmaEquilibrium& ke, double tol) {
  VerificationReport report;
  const std::size_t m = problem.numResources();
  if (!ke.chi.matches(problem) || !ke.eta.matches(problem) || ke.bids.size() != m ||
      ke.kappa.size() != problem.numTypes() || ke.etaRow.size() != problem.numTypes() ||
      ke.rewardImprovements.size() != problem.numTypes()) {
    report.checks.push_back({"shape", false, 0.0, "candidate shape does not match problem"});
    return report;
  }
  const bool me = problem.mutuallyExclusive;

  Worst opt, clear, budget, reward;
  double maxBid = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    opt.update(std::max(0.0, -ke.bids[j]), "bid(resource=" + std::to_string(j) + ")");
    maxBid = std::max(maxBid, ke.bids[j]);
  }

  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const UserType& t = problem.types[i];
    const double share = budgetShare(problem, ke.bids, i);
    const double spend = spendOf(problem, ke.chi, ke.bids, i);
    const double kappa = ke.kappa[i];
    if (ke.etaRow[i].size() != t.urgency.size()) {
      report.checks.push_back({"shape", false, 0.0, "row multipliers do not match levels"});
      return report;
    }

    double valueScale = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < t.urgency.size(); ++k)
        valueScale = std::max(valueScale, t.urgency.probs[k] * t.urgency.levels[k] * t.gain(j));
    if (!(valueScale > 0.0)) valueScale = 1.0;

    const double budgetScale = std::max(share, 1e-12);
    opt.update(std::max(0.0, spend - share) / budgetScale, typeLabel("budget", i));
    opt.update(std::max(0.0, -kappa), typeLabel("dual(kappa)", i));
    opt.update(std::abs(kappa * (share - spend)) / valueScale, typeLabel("slackness(kappa)", i));

    double objective = 0.0;
    for (std::size_t k = 0; k < t.urgency.size(); ++k) {
      const double sigma = t.urgency.probs[k];
      const double u = t.urgency.levels[k];
      const double row = me ? ke.etaRow[i][k] : 0.0;
      double rowSum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double x = ke.chi(i, j, k);
        const double eta = ke.eta(i, j, k);
        const std::string where = "(type=" + std::to_string(i) + ",resource=" +
                                  std::to_string(j) + ",level=" + std::to_string(k) + ")";
        // Stationarity fixes the lower-bound multiplier; it must be a valid dual.
        const double iota = sigma * (kappa * ke.bids[j] - u * t.gain(j)) + eta + row;
        opt.update(std::max({0.0, -x, x - 1.0}), "box" + where);
        opt.update(std::max({0.0, -eta, -iota}) / valueScale, "dual" + where);
        opt.update(std::max(std::abs(eta * (1.0 - x)), std::abs(iota * x)) / valueScale,
                   "slackness" + where);
        rowSum += x;
        objective += sigma * u * t.gain(j) * x;
      }
      if (me) {
        const std::string where =
            "(type=" + std::to_string(i) + ",level=" + std::to_string(k) + ")";
        opt.update(std::max(0.0, rowSum - 1.0), "row" + where);
        opt.update(std::max(0.0, -row) / valueScale, "dual(row)" + where);
        opt.update(std::abs(row * (1.0 - rowSum)) / valueScale, "slackness(row)" + where);
      }
    }

    const bool bidsValid =
        std::all_of(ke.bids.begin(), ke.bids.end(), [](double b) { return b >= 0.0; });
    const UserProblemSolution exact =
        bidsValid ? solveUserProblem(t, ke.bids, share, me) : UserProblemSolution{};
    if (bidsValid) opt.update(std::abs(exact.objective - objective) / std::max(exact.objective, 1e-12),
               typeLabel("objective-gap", i));

    budget.update(std::abs(spend - share) / budgetScale, typeLabel("budget-balance", i));

    const double r = rewardImprovement(problem, ke.chi, i);
    reward.update(r > 0.0 ? 0.0 : 1.0, typeLabel("nonpositive-improvement", i));
    reward.update(std::abs(ke.rewardImprovements[i] - r) / std::max(1.0, std::abs(r)),
                  typeLabel("reward-mismatch", i));
  }

  for (std::size_t j = 0; j < m; ++j) {
    const double cap = problem.capacities[j];
    const double load = expectedLoad(problem, ke.chi, j);
    const std::string where = "(resource=" + std::to_string(j) + ")";
    clear.update(std::max(0.0, load - cap) / cap, "over-capacity" + where);
    if (ke.bids[j] > 1e-9 * maxBid) clear.update(std::abs(load - cap) / cap, "not-cleared" + where);
  }

  report.checks.push_back(finish("individual_optimality", opt, tol));
  report.checks.push_back(finish("resource_clearing", clear, tol));
  report.checks.push_back(finish("budget_balance", budget, tol));
  report.checks.push_back(finish("reward_consistency", reward, tol));
  return report;
}

NashBalanceReport checkNashBalance(const Problem& problem, const MlnwSolution& mlnw,
                                   double tol) {
  NashBalanceReport rep;
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    rep.perTypeRatio.push_back(mlnw.etaMass(i) / problem.types[i].weight);
  rep.constantC = std::accumulate(rep.perTypeRatio.begin(), rep.perTypeRatio.end(), 0.0) /
                  static_cast<double>(rep.perTypeRatio.size());
  for (double r : rep.perTypeRatio)
    rep.maxDeviation = std::max(rep.maxDeviation, std::abs(r - rep.constantC));
  rep.balanced = rep.maxDeviation <= tol;
  return rep;
}

KarmaEquilibrium constructKeFromMlnw(const Problem& problem, const MlnwSolution& mlnw,
                                     double alpha, double tol) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const KktResidualReport kkt = kktResiduals(problem, mlnw);
  if (!kkt.within(tol))
    throw std::invalid_argument("MLNW solution fails its optimality check at " +
                                kkt.worstIndex);
  NashBalanceReport nb = checkNashBalance(problem, mlnw, tol);
  if (!nb.balanced) throw NotNashBalanced(std::move(nb));
  return keFromMlnw(problem, mlnw, accessRights(problem), alpha);
}

KarmaEquilibrium findKe(const Problem& problem, double tol, int maxIter) {
  checkStructure(problem);
  if (!(tol > 0.0) || maxIter < 1) throw std::invalid_argument("invalid KE search settings");
  const std::size_t m = problem.numResources();
  const double W = problem.totalWeight();
  const double totalCap = std::accumulate(problem.capacities.begin(), problem.capacities.end(), 0.0);

  std::vector<double> excess, imbalance;

  // Bid tatonnement.
  {
    std::vector<double> bids(m, W / totalCap);
    const int budgetA = std::min(maxIter, 2000);
    int streak = 0;
    for (int k = 0; k < budgetA && streak < 10; ++k) {
      const KarmaEquilibrium ke = keFromBids(problem, bids);
      diagnostics(problem, ke, excess, imbalance);
      const double maxBid = *std::max_element(bids.begin(), bids.end());
      double worst = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double rel = excess[j] / problem.capacities[j];
        worst = std::max(worst, bids[j] > 1e-9 * maxBid ? std::abs(rel) : rel);
      }
      for (double v : imbalance) worst = std::max(worst, std::abs(v));
      streak = worst < tol ? streak + 1 : 0;
      if (streak >= 10) break;

      const double gamma = 0.1 / (1.0 + k / 100.0);
      double pool = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double rel = std::clamp(excess[j] / problem.capacities[j], -1.0, 10.0);
        bids[j] *= 1.0 + gamma * rel;
        pool += bids[j] * problem.capacities[j];
      }
      for (double& b : bids) b *= W / pool;
    }
    if (streak >= 10) {
      KarmaEquilibrium ke = keFromBids(problem, bids);
      if (verifyKe(problem, ke, tol).passed()) return ke;
    }
  }

  // Shadow-weight fixed point on the Nash welfare program. The map preserves
  // the mass-weighted sum of shadow weights; a KE exists only if the iteration
  // settles in the interior.
  std::vector<double> w = accessRights(problem);
  std::vector<double> shadow = w;
  MlnwOptions opts;
  opts.tol = 1e-10;
  double beta = 1.0, previous = std::numeric_limits<double>::infinity();
  const int budgetB = std::min(maxIter, 5000);
  for (int it = 0; it < budgetB; ++it) {
    opts.weights = shadow;
    MlnwSolution sol;
    try {
      sol = solveMlnw(problem, opts);
    } catch (const MlnwConvergenceError& e) {
      throw NoKeFound(std::string("KE search failed: ") + e.what(), excess, imbalance, it);
    }
    double S = 0.0;
    for (std::size_t j = 0; j < m; ++j) S += sol.lambda[j] * problem.capacities[j];

    std::vector<double> target(problem.numTypes());
    double gap = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      target[i] = sol.etaMass(i) + w[i] * S / W;
      gap = std::max(gap, std::abs(shadow[i] - target[i]) / w[i]);
    }
    const KarmaEquilibrium probe = keFromMlnw(problem, sol, shadow, S > 0.0 ? W / S : 1.0);
    diagnostics(problem, probe, excess, imbalance);

    for (std::size_t i = 0; i < target.size(); ++i) {
      if (shadow[i] < 1e-6 * w[i]) {
        throw NoKeFound("no karma equilibrium: the budget share of type " + std::to_string(i) +
                            " cannot be balanced at any clearing bids",
                        excess, imbalance, it + 1);
      }
    }
    if (gap < tol * 1e-3) {
      const VerificationReport rep = verifyKe(problem, probe, tol);
      if (rep.passed()) return probe;
      throw NoKeFound("KE candidate failed verification: " + rep.firstFailure()->name + " at " +
                          rep.firstFailure()->detail,
                      excess, imbalance, it + 1);
    }
    if (gap > previous) beta = std::max(beta / 2, 0.25);
    previous = gap;
    for (std::size_t i = 0; i < target.size(); ++i)
      shadow[i] = (1.0 - beta) * shadow[i] + beta * target[i];
  }
  std::ostringstream msg;
  msg << "no karma equilibrium found within " << budgetB << " shadow-weight iterations";
  throw NoKeFound(msg.str(), excess, imbalance, budgetB);
}

}  // namespace karma
