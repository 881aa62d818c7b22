#include <algorithm>
#include <limits>

#include "karma/ke.hpp"

namespace karma {

namespace {

bool sameTypes(const Problem& a, const Problem& b) {
  if (a.numTypes() != b.numTypes()) return false;
  for (std::size_t i = 0; i < a.numTypes(); ++i) {
    const UserType& x = a.types[i];
    const UserType& y = b.types[i];
    if (x.mass != y.mass || x.weight != y.weight || x.urgency.levels != y.urgency.levels ||
        x.urgency.probs != y.urgency.probs)
      return false;
  }
  return true;
}

bool participates(const UserType& t) {
  for (std::size_t j = 0; j < t.rewardsOn.size(); ++j)
    if (t.desires(j)) return true;
  return false;
}

/// Reward improvement per original type at a KE of the sub-economy formed by
/// the participating types; zero for the others.
std::vector<double> economyRewards(const Problem& p, double tol, const std::string& name) {
  Problem sub = p;
  sub.types.clear();
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < p.numTypes(); ++i)
    if (participates(p.types[i])) {
      members.push_back(i);
      sub.types.push_back(p.types[i]);
    }
  std::vector<double> out(p.numTypes(), 0.0);
  if (members.empty()) return out;
  try {
    const KarmaEquilibrium ke = findKe(sub, tol);
    for (std::size_t s = 0; s < members.size(); ++s) out[members[s]] = ke.rewardImprovements[s];
  } catch (const NoKeFound& e) {
    throw NoKeFound(name + ": " + e.what(), e.excessDemand, e.budgetImbalance, e.iterations);
  }
  return out;
}

}  // namespace

Problem mergeProblems(const Problem& a, const Problem& b) {
  if (!sameTypes(a, b))
    throw std::invalid_argument("coupled economies must share the same user types");
  if (a.mutuallyExclusive || b.mutuallyExclusive)
    throw std::invalid_argument("coupling requires economies without mutual exclusion");
  Problem merged = a;
  merged.label = a.label + "+" + b.label;
  merged.capacities.insert(merged.capacities.end(), b.capacities.begin(), b.capacities.end());
  for (std::size_t i = 0; i < merged.numTypes(); ++i) {
    auto& t = merged.types[i];
    const auto& other = b.types[i];
    t.rewardsOn.insert(t.rewardsOn.end(), other.rewardsOn.begin(), other.rewardsOn.end());
    t.rewardsOff.insert(t.rewardsOff.end(), other.rewardsOff.begin(), other.rewardsOff.end());
  }
  return merged;
}

CouplingReport compareCoupling(const Problem& a, const Problem& b, double tol) {
  checkStructure(a);
  checkStructure(b);
  const Problem merged = mergeProblems(a, b);

  const std::vector<double> ra = economyRewards(a, tol, "first economy");
  const std::vector<double> rb = economyRewards(b, tol, "second economy");
  const std::vector<double> rc = economyRewards(merged, tol, "combined economy");

  CouplingReport report;
  report.minSlack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.numTypes(); ++i) {
    CouplingRow row{i, ra[i] + rb[i], rc[i], rc[i] - ra[i] - rb[i]};
    report.minSlack = std::min(report.minSlack, row.slack);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace karma
