#pragma once

#include <random>
#include <vector>

#include "karma/model.hpp"

namespace karma::testing {

inline UserType makeType(int mass, std::vector<double> levels, std::vector<double> probs,
                         std::vector<double> on, std::vector<double> off, double weight = 1.0) {
  UserType t;
  t.mass = mass;
  t.weight = weight;
  t.urgency = {std::move(levels), std::move(probs)};
  t.rewardsOn = std::move(on);
  t.rewardsOff = std::move(off);
  return t;
}

/// Single resource of capacity c; every type gains 1 from it.
inline Problem singleResource(int capacity, std::vector<UserType> types) {
  Problem p;
  p.capacities = {capacity};
  p.types = std::move(types);
  return p;
}

inline std::size_t desiredCells(const Problem& p) {
  std::size_t n = 0;
  for (const auto& t : p.types)
    for (std::size_t j = 0; j < p.numResources(); ++j)
      if (t.desires(j)) n += t.urgency.size();
  return n;
}

inline UrgencyProcess randomUrgency(std::mt19937_64& rng, int maxLevels) {
  std::uniform_int_distribution<int> count(1, maxLevels);
  std::uniform_real_distribution<double> step(0.5, 4.0), weight(0.2, 1.0);
  UrgencyProcess u;
  const int q = count(rng);
  double level = 0.0, total = 0.0;
  for (int k = 0; k < q; ++k) {
    level += step(rng);
    u.levels.push_back(level);
    u.probs.push_back(weight(rng));
    total += u.probs.back();
  }
  for (double& p : u.probs) p /= total;
  return u;
}

/// Random instance satisfying the competitive-setting assumptions, with at
/// most `maxCells` desired (type, resource, level) cells.
inline Problem randomProblem(std::mt19937_64& rng, int maxTypes, int maxResources, int maxLevels,
                             bool mutuallyExclusive, std::size_t maxCells = 1000) {
  std::uniform_int_distribution<int> typeCount(1, maxTypes), resCount(1, maxResources);
  std::uniform_int_distribution<int> mass(1, 4);
  std::uniform_real_distribution<double> gain(0.2, 3.0), weight(0.5, 2.0), coin(0.0, 1.0);
  for (;;) {
    Problem p;
    p.mutuallyExclusive = mutuallyExclusive;
    const int m = resCount(rng);
    const int types = typeCount(rng);
    for (int i = 0; i < types; ++i) {
      UserType t;
      t.mass = mass(rng);
      t.weight = weight(rng);
      t.urgency = randomUrgency(rng, maxLevels);
      bool any = false;
      for (int j = 0; j < m; ++j) {
        const bool wants = coin(rng) < 0.7;
        t.rewardsOn.push_back(wants ? gain(rng) : 0.0);
        t.rewardsOff.push_back(0.0);
        any = any || wants;
      }
      if (!any) t.rewardsOn[std::uniform_int_distribution<int>(0, m - 1)(rng)] = gain(rng);
      p.types.push_back(std::move(t));
    }
    bool ok = true;
    for (int j = 0; j < m; ++j) {
      const long desiring = p.desiringUsers(j);
      if (desiring < 2) {
        ok = false;
        break;
      }
      p.capacities.push_back(std::uniform_int_distribution<int>(1, static_cast<int>(desiring) - 1)(rng));
    }
    if (ok && desiredCells(p) <= maxCells && validate(p, true).ok()) return p;
  }
}

/// Single-resource instances on which every fair share w_i c / W is at most 1,
/// which is exactly when a KE exists.
inline Problem randomSingleResource(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> types(2, 4), mass(1, 3);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  for (;;) {
    Problem p;
    const int n = types(rng);
    for (int i = 0; i < n; ++i) {
      UserType t;
      t.mass = mass(rng);
      t.weight = weight(rng);
      t.urgency = randomUrgency(rng, 3);
      t.rewardsOn = {1.0};
      t.rewardsOff = {0.0};
      p.types.push_back(t);
    }
    const long pop = p.population();
    p.capacities = {std::uniform_int_distribution<int>(1, static_cast<int>(pop) - 1)(rng)};
    bool attainable = true;
    for (const auto& t : p.types)
      attainable = attainable && t.weight * p.capacities[0] <= p.totalWeight();
    if (attainable && validate(p, true).ok()) return p;
  }
}

/// A second single-resource economy over the same types, with fresh rewards
/// and capacity.
inline Problem couplingPartner(std::mt19937_64& rng, const Problem& a) {
  Problem b = a;
  for (auto& t : b.types)
    for (double& r : t.rewardsOn) r = std::uniform_real_distribution<double>(0.2, 3.0)(rng);
  for (std::size_t j = 0; j < b.numResources(); ++j)
    b.capacities[j] =
        std::uniform_int_distribution<int>(1, static_cast<int>(b.desiringUsers(j)) - 1)(rng);
  return b;
}

}  // namespace karma::testing
