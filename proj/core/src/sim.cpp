#include "karma/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "karma/parallel.hpp"

namespace karma {

double defaultMeanKarma(const KarmaEquilibrium& policy) {
  double maxBid = 0.0;
  for (double b : policy.bids) maxBid = std::max(maxBid, b);
  return maxBid > 0.0 ? 10.0 * maxBid : 1.0;
}

double SimStats::shortfallRate() const {
  const double trials = static_cast<double>(population) * static_cast<double>(measuredSteps);
  return trials > 0.0 ? shortfallCount / trials : 0.0;
}

namespace {

void checkConfig(const Problem& problem, const SimConfig& config) {
  if (config.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(config.meanKarma > 0.0)) throw std::invalid_argument("mean karma must be positive");
  if (config.traceEvery < 1) throw std::invalid_argument("trace interval must be at least 1");
  const long burn = config.burnIn.value_or(config.horizon / 10);
  if (burn < 0 || burn >= config.horizon)
    throw std::invalid_argument("burn-in must lie in [0, horizon)");
  if (!config.policy.chi.matches(problem) ||
      config.policy.bids.size() != problem.numResources())
    throw std::invalid_argument("policy does not match problem");
}

// Writes one agent's bids into the m-wide slices and returns true on shortfall.
bool bidInto(const Problem& problem, std::size_t type, std::size_t level,
             const KarmaEquilibrium& ke, double karma, ShortfallRule rule, CounterRng& rng,
             double* amount, std::uint8_t* enters) {
  const std::size_t m = problem.numResources();
  std::fill(amount, amount + m, 0.0);
  std::fill(enters, enters + m, std::uint8_t{0});
  if (problem.mutuallyExclusive) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc += ke.chi(type, j, level);
      if (u < acc) {
        enters[j] = 1;
        break;
      }
    }
  } else {
    for (std::size_t j = 0; j < m; ++j)
      if (rng.uniform() < ke.chi(type, j, level)) enters[j] = 1;
  }

  double intended = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    if (enters[j]) intended += ke.bids[j];
  if (intended <= karma) {
    for (std::size_t j = 0; j < m; ++j)
      if (enters[j]) amount[j] = ke.bids[j];
    return false;
  }
  if (rule == ShortfallRule::skipBid) {
    std::fill(enters, enters + m, std::uint8_t{0});
    return true;
  }
  double remaining = karma;
  for (std::size_t j = 0; j < m; ++j)
    if (enters[j]) {
      amount[j] = std::min(ke.bids[j], remaining);
      remaining -= amount[j];
    }
  return true;
}

std::size_t drawLevel(const UrgencyProcess& u, CounterRng& rng) {
  const double x = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    acc += u.probs[k];
    if (x < acc) return k;
  }
  return u.size() - 1;
}

}  // namespace

SimState initialState(const Problem& problem, const SimConfig& config) {
  checkStructure(problem);
  checkConfig(problem, config);
  SimState s;
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    s.agentType.insert(s.agentType.end(), problem.types[i].mass, static_cast<std::uint32_t>(i));
  s.karma.assign(s.agentType.size(), config.meanKarma);
  return s;
}

PolicyBid policyBid(const Problem& problem, std::size_t type, std::size_t level,
                    const KarmaEquilibrium& ke, double karmaAvailable, ShortfallRule rule,
                    CounterRng& rng) {
  PolicyBid out;
  out.amount.resize(problem.numResources());
  out.enters.resize(problem.numResources());
  out.shortfall = bidInto(problem, type, level, ke, karmaAvailable, rule, rng,
                          out.amount.data(), out.enters.data());
  return out;
}

StepRecord step(SimState& state, const Problem& problem, const SimConfig& config) {
  const std::size_t n = state.karma.size();
  const std::size_t m = problem.numResources();
  if (n != static_cast<std::size_t>(problem.population()) || state.agentType.size() != n)
    throw std::invalid_argument("simulation state does not match problem");
  const KarmaEquilibrium& ke = config.policy;
  const auto t32 = static_cast<std::uint32_t>(state.t);

  StepRecord rec;
  rec.t = state.t;
  rec.level.resize(n);
  rec.clearingBid.assign(m, 0.0);
  rec.paymentByType.assign(problem.numTypes(), 0.0);
  rec.redistributionByType.assign(problem.numTypes(), 0.0);

  std::vector<double> amount(n * m);
  std::vector<std::uint8_t> enters(n * m);
  std::vector<std::uint8_t> shortfall(n);
  parallelFor(n, [&](std::size_t a) {
    CounterRng rng(config.seed, static_cast<std::uint32_t>(a), t32, 0);
    const std::size_t type = state.agentType[a];
    const std::size_t level = drawLevel(problem.types[type].urgency, rng);
    rec.level[a] = static_cast<std::uint32_t>(level);
    shortfall[a] = bidInto(problem, type, level, ke, state.karma[a], config.shortfallRule, rng,
                           &amount[a * m], &enters[a * m]);
  });
  for (std::uint8_t s : shortfall) rec.shortfalls += s;

  std::vector<double> pay(n, 0.0);
  std::vector<std::uint32_t> entrants, tied;
  for (std::size_t j = 0; j < m; ++j) {
    entrants.clear();
    for (std::size_t a = 0; a < n; ++a)
      if (enters[a * m + j]) entrants.push_back(static_cast<std::uint32_t>(a));
    for (auto a : entrants) rec.requests.push_back({a, static_cast<std::uint32_t>(j)});
    const std::size_t cap = static_cast<std::size_t>(problem.capacities[j]);

    double clearing = 0.0;
    if (entrants.size() >= cap) {
      std::vector<double> bids;
      bids.reserve(entrants.size());
      for (auto a : entrants) bids.push_back(amount[a * m + j]);
      std::nth_element(bids.begin(), bids.begin() + (cap - 1), bids.end(), std::greater<>());
      clearing = bids[cap - 1];
    }
    rec.clearingBid[j] = clearing;

    std::size_t higher = 0;
    tied.clear();
    for (auto a : entrants) {
      const double b = amount[a * m + j];
      if (entrants.size() < cap || b > clearing) {
        rec.allocations.push_back({a, static_cast<std::uint32_t>(j)});
        pay[a] += clearing;
        ++higher;
      } else if (b == clearing) {
        tied.push_back(a);
      }
    }
    // Uniform rationing of the residual capacity among agents tied at the
    // clearing bid (partial Fisher-Yates).
    const std::size_t rest = std::min(tied.size(), cap - std::min(cap, higher));
    CounterRng rng(config.seed, static_cast<std::uint32_t>(n + j), t32, 1);
    for (std::size_t r = 0; r < rest; ++r) {
      const std::size_t pick = r + rng.below(static_cast<std::uint32_t>(tied.size() - r));
      std::swap(tied[r], tied[pick]);
      rec.allocations.push_back({tied[r], static_cast<std::uint32_t>(j)});
      pay[tied[r]] += clearing;
    }
  }

  const double W = problem.totalWeight();
  for (std::size_t a = 0; a < n; ++a) rec.totalPayment += pay[a];
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t type = state.agentType[a];
    const double g = problem.types[type].weight / W * rec.totalPayment;
    state.karma[a] += g - pay[a];
    rec.paymentByType[type] += pay[a];
    rec.redistributionByType[type] += g;
  }

  const double expected = static_cast<double>(n) * config.meanKarma;
  const double total = std::accumulate(state.karma.begin(), state.karma.end(), 0.0);
  if (std::abs(total - expected) > 1e-9 * expected) {
    std::ostringstream msg;
    msg << "karma not conserved at t=" << state.t << ": total " << total << ", expected "
        << expected;
    throw KarmaConservationError(msg.str());
  }
  ++state.t;
  return rec;
}

SimStats run(const Problem& problem, const SimConfig& config) {
  SimState state = initialState(problem, config);
  const long burn = config.burnIn.value_or(config.horizon / 10);
  const double expected = static_cast<double>(state.karma.size()) * config.meanKarma;

  SimStats stats;
  stats.population = static_cast<long>(state.karma.size());
  stats.allocCount = CellTensor::zerosLike(problem);
  stats.requestCount = CellTensor::zerosLike(problem);
  stats.levelCount = zeroLevelTable(problem);
  stats.paymentByType.assign(problem.numTypes(), 0.0);
  stats.redistributionByType.assign(problem.numTypes(), 0.0);

  for (long t = 0; t < config.horizon; ++t) {
    const StepRecord rec = step(state, problem, config);
    const double total = std::accumulate(state.karma.begin(), state.karma.end(), 0.0);
    stats.maxKarmaDrift = std::max(stats.maxKarmaDrift, std::abs(total - expected) / expected);
    if (t % config.traceEvery == 0)
      for (std::size_t j = 0; j < problem.numResources(); ++j)
        stats.trace.push_back({t, j, rec.clearingBid[j], rec.totalPayment});
    if (t < burn) continue;

    ++stats.measuredSteps;
    stats.shortfallCount += rec.shortfalls;
    for (std::size_t a = 0; a < rec.level.size(); ++a)
      stats.levelCount[state.agentType[a]][rec.level[a]] += 1.0;
    for (const auto& [a, j] : rec.allocations) {
      const std::size_t type = state.agentType[a];
      stats.allocCount(type, j, rec.level[a]) += 1.0;
    }
    for (const auto& [a, j] : rec.requests)
      stats.requestCount(state.agentType[a], j, rec.level[a]) += 1.0;
    for (std::size_t i = 0; i < problem.numTypes(); ++i) {
      stats.paymentByType[i] += rec.paymentByType[i];
      stats.redistributionByType[i] += rec.redistributionByType[i];
    }
  }

  stats.allocFrequency = CellTensor::zerosLike(problem);
  stats.requestFrequency = CellTensor::zerosLike(problem);
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < stats.levelCount[i].size(); ++k)
        if (stats.levelCount[i][k] > 0.0) {
          stats.allocFrequency(i, j, k) = stats.allocCount(i, j, k) / stats.levelCount[i][k];
          stats.requestFrequency(i, j, k) = stats.requestCount(i, j, k) / stats.levelCount[i][k];
        }
  stats.finalKarma = state.karma;
  return stats;
}

}  // namespace karma
