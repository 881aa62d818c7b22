#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace karma {

/// Raised for malformed problem data (shape mismatches, invalid probabilities).
/// Distinct from assumption warnings, which are reported by validate().
class ProblemError : public std::runtime_error {
 public:
  explicit ProblemError(const std::string& what) : std::runtime_error(what) {}
};

/// A discrete i.i.d. urgency distribution: strictly increasing positive
/// levels, each with strictly positive probability.
struct UrgencyProcess {
  std::vector<double> levels;
  std::vector<double> probs;

  std::size_t size() const { return levels.size(); }
  double mean() const;
};

/// A group of identical users. Everything in the model is stated per user;
/// `mass` only enters through aggregate capacity and redistribution sums.
struct UserType {
  int mass = 1;
  double weight = 1.0;
  UrgencyProcess urgency;
  std::vector<double> rewardsOn;
  std::vector<double> rewardsOff;
  std::optional<double> scale;

  /// r_j - r0_j, the elementary gain from receiving resource j.
  double gain(std::size_t resource) const {
    return rewardsOn[resource] - rewardsOff[resource];
  }
  bool desires(std::size_t resource) const { return gain(resource) > 0.0; }
};

struct Problem {
  std::vector<int> capacities;
  std::vector<UserType> types;
  bool mutuallyExclusive = false;
  std::string label;

  std::size_t numResources() const { return capacities.size(); }
  std::size_t numTypes() const { return types.size(); }
  /// Number of users n.
  long population() const;
  /// Sum of access rights over all users (not types).
  double totalWeight() const;
  /// Number of users desiring resource j, |N_j|.
  long desiringUsers(std::size_t resource) const;
};

/// Throws ProblemError on any structural defect.
void checkStructure(const Problem& problem);

struct ValidationIssue {
  std::string code;
  std::string message;
  std::optional<std::size_t> type;
  std::optional<std::size_t> resource;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return errors.empty(); }
  bool hasWarning(const std::string& code) const;
  bool hasError(const std::string& code) const;
};

/// Structural defects are always errors. Violations of the competitive-setting
/// assumptions are warnings, or errors when `strictAssumption1` is set.
ValidationReport validate(const Problem& problem, bool strictAssumption1 = false);

/// Highway priority lanes over the morning rush hour: ten mutually exclusive
/// departure intervals of capacity 180, 9000 users in four urgency types.
Problem rushHourScenario();

/// Dense tensor indexed by (type, resource, urgency level). Types may have
/// different numbers of levels.
class CellTensor {
 public:
  CellTensor() = default;
  CellTensor(std::size_t resources, std::vector<std::size_t> levelsPerType,
             double fill = 0.0);
  static CellTensor zerosLike(const Problem& problem);

  std::size_t numTypes() const { return levels_.size(); }
  std::size_t numResources() const { return resources_; }
  std::size_t numLevels(std::size_t type) const { return levels_[type]; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t type, std::size_t resource, std::size_t level) {
    return data_[index(type, resource, level)];
  }
  double operator()(std::size_t type, std::size_t resource, std::size_t level) const {
    return data_[index(type, resource, level)];
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool sameShape(const CellTensor& other) const {
    return resources_ == other.resources_ && levels_ == other.levels_;
  }
  bool matches(const Problem& problem) const;

 private:
  std::size_t index(std::size_t type, std::size_t resource, std::size_t level) const {
    return offsets_[type] + resource * levels_[type] + level;
  }

  std::size_t resources_ = 0;
  std::vector<std::size_t> levels_;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// Long-run allocation probabilities chi_{i,j}(u).
using LongRunAllocation = CellTensor;

/// Per (type, urgency level) values, e.g. multipliers of per-level simplex rows.
using LevelTable = std::vector<std::vector<double>>;

LevelTable zeroLevelTable(const Problem& problem);

/// Expected per-user reward improvement over the no-allocation benchmark.
double rewardImprovement(const Problem& problem, const LongRunAllocation& chi,
                         std::size_t type);
std::vector<double> rewardImprovements(const Problem& problem,
                                       const LongRunAllocation& chi);

/// Expected long-run probability that one user of `type` receives `resource`.
double expectedShare(const Problem& problem, const LongRunAllocation& chi,
                     std::size_t type, std::size_t resource);

/// Ex-ante number of units of `resource` in use, summed over all users.
double expectedLoad(const Problem& problem, const LongRunAllocation& chi,
                    std::size_t resource);

/// Largest violation of box, simplex (if mutually exclusive) and capacity
/// constraints. Capacity violations are relative to c_j.
double feasibilityViolation(const Problem& problem, const LongRunAllocation& chi);

}  // namespace karma
