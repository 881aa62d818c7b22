#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "karma/ke.hpp"
#include "karma/mlnw.hpp"
#include "karma/model.hpp"
#include "karma/oracle.hpp"
#include "karma/sim.hpp"

namespace karma {

/// Tensors are nested arrays indexed [type][resource][level]; per-level tables
/// are [type][level].
std::string solutionJson(const Problem& problem, const MlnwSolution& solution,
                         const KktResidualReport& residuals);

std::string keJson(const Problem& problem, const KarmaEquilibrium& ke,
                   const std::optional<VerificationReport>& verification = std::nullopt);

/// Reads a document written by keJson (or solutionJson plus `bids` and
/// `kappa`). Throws ProblemFormatError naming the offending field.
KarmaEquilibrium parseKe(const Problem& problem, const std::string& text);

std::string verificationJson(const VerificationReport& report);
std::string nashBalanceJson(const NashBalanceReport& report);
std::string dominanceJson(const TwoShotGameSpec& spec, const DominanceReport& report);

/// type,resource,urgency,chi
std::string chiCsv(const Problem& problem, const LongRunAllocation& chi);
/// type,separate_sum,combined,slack
std::string couplingCsv(const CouplingReport& report);
/// Per-cell empirical frequencies next to the policy probabilities.
std::string frequencyCsv(const Problem& problem, const KarmaEquilibrium& policy,
                         const SimStats& stats);
/// t,j,clearing_bid,total_payment
std::string traceCsv(const SimStats& stats);

/// Shortest decimal that round-trips.
std::string formatNumber(double value);

void writeText(const std::filesystem::path& path, const std::string& text);
std::string readText(const std::filesystem::path& path);

}  // namespace karma
