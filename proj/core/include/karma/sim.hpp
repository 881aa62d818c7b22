#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "karma/ke.hpp"
#include "karma/model.hpp"
#include "karma/rng.hpp"

namespace karma {

enum class ShortfallRule { capAtKarma, skipBid };

struct SimConfig {
  long horizon = 1;
  std::uint64_t seed = 0;
  double meanKarma = 1.0;
  KarmaEquilibrium policy;
  ShortfallRule shortfallRule = ShortfallRule::capAtKarma;
  /// Steps excluded from the statistics; defaults to horizon / 10.
  std::optional<long> burnIn;
  /// Keep every n-th step in the traces.
  long traceEvery = 1;
};

/// 10 * max_j b_j, the default endowment.
double defaultMeanKarma(const KarmaEquilibrium& policy);

struct SimState {
  std::vector<double> karma;
  std::vector<std::uint32_t> agentType;
  long t = 0;
};

SimState initialState(const Problem& problem, const SimConfig& config);

/// Bids of one agent. `enters[j]` marks a request for resource j; the amount
/// may be zero when the clearing bid is zero or karma is exhausted.
struct PolicyBid {
  std::vector<double> amount;
  std::vector<std::uint8_t> enters;
  bool shortfall = false;
};

PolicyBid policyBid(const Problem& problem, std::size_t type, std::size_t level,
                    const KarmaEquilibrium& ke, double karmaAvailable, ShortfallRule rule,
                    CounterRng& rng);

struct StepRecord {
  long t = 0;
  std::vector<double> clearingBid;
  double totalPayment = 0.0;
  long shortfalls = 0;
  /// Urgency level drawn by each agent.
  std::vector<std::uint32_t> level;
  /// (agent, resource) pairs requested and allocated this step.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> requests;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> allocations;
  std::vector<double> paymentByType;
  std::vector<double> redistributionByType;
};

class KarmaConservationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One auction round: urgency draws, bids, c_j-highest clearing with uniform
/// rationing of ties at the clearing bid, uniform payment, redistribution.
StepRecord step(SimState& state, const Problem& problem, const SimConfig& config);

struct TraceRow {
  long t;
  std::size_t resource;
  double clearingBid;
  double totalPayment;
};

struct SimStats {
  /// Empirical P(allocated j | type i at level u).
  CellTensor allocFrequency;
  CellTensor allocCount;
  /// Empirical P(requests j | type i at level u); differs from allocFrequency
  /// only through rationing.
  CellTensor requestFrequency;
  CellTensor requestCount;
  /// Agent-steps spent at each (type, level).
  LevelTable levelCount;
  std::vector<TraceRow> trace;
  long shortfallCount = 0;
  long measuredSteps = 0;
  long population = 0;
  std::vector<double> paymentByType;
  std::vector<double> redistributionByType;
  /// Largest relative deviation of total karma from n * mean karma over all steps.
  double maxKarmaDrift = 0.0;
  std::vector<double> finalKarma;

  double shortfallRate() const;
};

SimStats run(const Problem& problem, const SimConfig& config);

}  // namespace karma
