#include "karma/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace karma {

double UrgencyProcess::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) m += probs[k] * levels[k];
  return m;
}

long Problem::population() const {
  long n = 0;
  for (const auto& t : types) n += t.mass;
  return n;
}

double Problem::totalWeight() const {
  double w = 0.0;
  for (const auto& t : types) w += t.mass * t.weight;
  return w;
}

long Problem::desiringUsers(std::size_t resource) const {
  long n = 0;
  for (const auto& t : types)
    if (t.desires(resource)) n += t.mass;
  return n;
}

bool ValidationReport::hasWarning(const std::string& code) const {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const ValidationIssue& i) { return i.code == code; });
}

bool ValidationReport::hasError(const std::string& code) const {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const ValidationIssue& i) { return i.code == code; });
}

namespace {

void structuralIssues(const Problem& p, std::vector<ValidationIssue>& out) {
  auto add = [&](std::string code, std::string msg, std::optional<std::size_t> type = {},
                 std::optional<std::size_t> res = {}) {
    out.push_back({std::move(code), std::move(msg), type, res});
  };
  if (p.capacities.empty()) add("no-resources", "problem has no resources");
  for (std::size_t j = 0; j < p.capacities.size(); ++j)
    if (p.capacities[j] <= 0)
      add("capacity", "capacity of resource " + std::to_string(j) + " must be positive",
          {}, j);
  if (p.types.empty()) add("no-types", "problem has no user types");

  const std::size_t m = p.capacities.size();
  for (std::size_t i = 0; i < p.types.size(); ++i) {
    const UserType& t = p.types[i];
    const std::string where = "type " + std::to_string(i) + ": ";
    if (t.mass < 1) add("mass", where + "mass must be at least 1", i);
    if (!(t.weight > 0.0) || !std::isfinite(t.weight))
      add("weight", where + "weight must be positive and finite", i);
    if (t.scale && !(*t.scale > 0.0)) add("scale", where + "scale must be positive", i);
    if (t.rewardsOn.size() != m || t.rewardsOff.size() != m) {
      add("rewards-length", where + "rewards_on/rewards_off must have one entry per resource",
          i);
    } else {
      for (std::size_t j = 0; j < m; ++j)
        if (!std::isfinite(t.rewardsOn[j]) || !std::isfinite(t.rewardsOff[j]))
          add("rewards-finite", where + "non-finite reward", i, j);
    }

    const UrgencyProcess& u = t.urgency;
    if (u.levels.empty()) {
      add("urgency-empty", where + "urgency process has no levels", i);
      continue;
    }
    if (u.levels.size() != u.probs.size()) {
      add("urgency-length", where + "urgency levels and probs differ in length", i);
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < u.levels.size(); ++k) {
      if (!(u.levels[k] > 0.0) || !std::isfinite(u.levels[k]))
        add("urgency-level", where + "urgency levels must be positive and finite", i);
      if (k > 0 && !(u.levels[k] > u.levels[k - 1]))
        add("urgency-order", where + "urgency levels must be strictly increasing", i);
      if (u.probs[k] == 0.0)
        add("zero-probability", where + "zero-probability urgency level " + std::to_string(k),
            i);
      else if (!(u.probs[k] > 0.0) || !std::isfinite(u.probs[k]))
        add("probability", where + "urgency probabilities must be positive", i);
      sum += u.probs[k];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      add("probability-sum", where + "urgency probabilities must sum to 1", i);
  }
}

}  // namespace

void checkStructure(const Problem& problem) {
  std::vector<ValidationIssue> issues;
  structuralIssues(problem, issues);
  if (!issues.empty()) throw ProblemError(issues.front().message);
}

ValidationReport validate(const Problem& problem, bool strictAssumption1) {
  ValidationReport report;
  structuralIssues(problem, report.errors);
  if (!report.errors.empty()) return report;

  auto& assumptionSink = strictAssumption1 ? report.errors : report.warnings;
  const std::size_t m = problem.numResources();

  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) any = any || problem.types[i].desires(j);
    if (!any)
      assumptionSink.push_back({"A1.1",
                                "type " + std::to_string(i) + " desires no resource",
                                i, std::nullopt});
  }

  for (std::size_t j = 0; j < m; ++j) {
    const long desiring = problem.desiringUsers(j);
    if (desiring > problem.capacities[j]) continue;
    std::ostringstream msg;
    msg << "resource " << j << " is not contested: " << desiring
        << " desiring users for capacity " << problem.capacities[j];
    assumptionSink.push_back({"A1.2", msg.str(), std::nullopt, j});

    const bool allEqual =
        std::all_of(problem.types.begin(), problem.types.end(),
                    [j](const UserType& t) { return t.rewardsOn[j] == t.rewardsOff[j]; });
    if (allEqual)
      report.warnings.push_back(
          {"equal-reward",
           "resource " + std::to_string(j) + " gives the same reward as r0 for every user",
           std::nullopt, j});
  }
  return report;
}

Problem rushHourScenario() {
  constexpr int kIntervals = 10;
  constexpr int kPreferred = 9;
  constexpr int kMassPerType = 2250;

  Problem p;
  p.label = "rush-hour";
  p.mutuallyExclusive = true;
  p.capacities.assign(kIntervals, 180);

  std::vector<double> on(kIntervals), off(kIntervals, -8.0);
  for (int j = 1; j <= kIntervals; ++j)
    on[j - 1] = -static_cast<double>(std::max(kPreferred - j, 4 * (j - kPreferred)));

  // Same mean urgency 2 for every type; the two middle processes are a dyadic
  // family with that mean.
  const std::vector<UrgencyProcess> processes = {
      {{2.0}, {1.0}},
      {{1.0, 3.0}, {0.5, 0.5}},
      {{1.0, 5.0}, {0.75, 0.25}},
      {{1.0, 9.0}, {0.875, 0.125}},
  };
  for (const auto& u : processes) {
    UserType t;
    t.mass = kMassPerType;
    t.weight = 1.0;
    t.urgency = u;
    t.rewardsOn = on;
    t.rewardsOff = off;
    p.types.push_back(std::move(t));
  }
  return p;
}

CellTensor::CellTensor(std::size_t resources, std::vector<std::size_t> levelsPerType,
                       double fill)
    : resources_(resources), levels_(std::move(levelsPerType)) {
  offsets_.reserve(levels_.size());
  std::size_t total = 0;
  for (std::size_t q : levels_) {
    offsets_.push_back(total);
    total += resources_ * q;
  }
  data_.assign(total, fill);
}

CellTensor CellTensor::zerosLike(const Problem& problem) {
  std::vector<std::size_t> levels;
  for (const auto& t : problem.types) levels.push_back(t.urgency.size());
  return CellTensor(problem.numResources(), std::move(levels));
}

bool CellTensor::matches(const Problem& problem) const {
  if (resources_ != problem.numResources() || levels_.size() != problem.numTypes())
    return false;
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (levels_[i] != problem.types[i].urgency.size()) return false;
  return true;
}

LevelTable zeroLevelTable(const Problem& problem) {
  LevelTable table;
  for (const auto& t : problem.types) table.emplace_back(t.urgency.size(), 0.0);
  return table;
}

double rewardImprovement(const Problem& problem, const LongRunAllocation& chi,
                         std::size_t type) {
  const UserType& t = problem.types[type];
  double r = 0.0;
  for (std::size_t k = 0; k < t.urgency.size(); ++k) {
    double inner = 0.0;
    for (std::size_t j = 0; j < problem.numResources(); ++j) inner += chi(type, j, k) * t.gain(j);
    r += t.urgency.probs[k] * t.urgency.levels[k] * inner;
  }
  return r;
}

std::vector<double> rewardImprovements(const Problem& problem, const LongRunAllocation& chi) {
  std::vector<double> out(problem.numTypes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rewardImprovement(problem, chi, i);
  return out;
}

double expectedShare(const Problem& problem, const LongRunAllocation& chi, std::size_t type,
                     std::size_t resource) {
  const UrgencyProcess& u = problem.types[type].urgency;
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u.probs[k] * chi(type, resource, k);
  return s;
}

double expectedLoad(const Problem& problem, const LongRunAllocation& chi,
                    std::size_t resource) {
  double load = 0.0;
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    load += problem.types[i].mass * expectedShare(problem, chi, i, resource);
  return load;
}

double feasibilityViolation(const Problem& problem, const LongRunAllocation& chi) {
  double worst = 0.0;
  for (double x : chi.flat()) worst = std::max({worst, -x, x - 1.0});
  if (problem.mutuallyExclusive) {
    for (std::size_t i = 0; i < problem.numTypes(); ++i)
      for (std::size_t k = 0; k < chi.numLevels(i); ++k) {
        double row = 0.0;
        for (std::size_t j = 0; j < problem.numResources(); ++j) row += chi(i, j, k);
        worst = std::max(worst, row - 1.0);
      }
  }
  for (std::size_t j = 0; j < problem.numResources(); ++j)
    worst = std::max(worst, (expectedLoad(problem, chi, j) - problem.capacities[j]) /
                                problem.capacities[j]);
  return worst;
}

}  // namespace karma
