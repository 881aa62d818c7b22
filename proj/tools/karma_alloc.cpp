// karma-alloc: command-line front end for the karma allocation library.
//
// Exit codes: 0 success, 1 a verification or solver failure, 2 usage errors
// and malformed input.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "karma/ke.hpp"
#include "karma/mlnw.hpp"
#include "karma/model.hpp"
#include "karma/oracle.hpp"
#include "karma/problem_io.hpp"
#include "karma/report_io.hpp"
#include "karma/sim.hpp"

#ifndef KARMA_VERSION
#define KARMA_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

/// Error that maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  fs::path outDir = "karma-out";
  double tol = 1e-6;
  std::uint64_t seed = 0;
  long horizon = 10000;
  double alpha = 1.0;
  std::string meanKarma = "auto";
  std::string shortfall = "cap";
  long traceEvery = 1;
  bool strict = false;

  std::string problem;
  std::string problemB;
  std::string keFile;
  std::string scenario;

  karma::TwoShotGameSpec twoShot;
};

karma::Problem loadChecked(const std::string& path, bool strict) {
  karma::Problem p;
  try {
    p = karma::loadProblem(path);
  } catch (const karma::ProblemFormatError& e) {
    throw UsageError(path + ": " + e.what());
  }
  const auto report = karma::validate(p, strict);
  for (const auto& w : report.warnings)
    std::cerr << "warning [" << w.code << "]: " << w.message << "\n";
  if (!report.ok()) {
    std::string msg = path + ": invalid problem";
    for (const auto& e : report.errors) msg += "\n  [" + e.code + "] " + e.message;
    throw UsageError(msg);
  }
  return p;
}

void writeManifest(const Options& o, const std::string& command,
                   const std::vector<std::string>& args, int exitCode) {
  Json doc;
  doc["tool"] = "karma-alloc";
  doc["version"] = KARMA_VERSION;
  doc["command"] = command;
  doc["argv"] = args;
  doc["out_dir"] = o.outDir.string();
  doc["tol"] = o.tol;
  doc["seed"] = o.seed;
  doc["horizon"] = o.horizon;
  Json inputs = Json::array();
  for (const auto* path : {&o.problem, &o.problemB, &o.keFile})
    if (!path->empty()) inputs.push_back(*path);
  doc["inputs"] = inputs;
  doc["flags"] = Json{{"alpha", o.alpha},
                      {"mean_karma", o.meanKarma},
                      {"shortfall", o.shortfall},
                      {"trace_every", o.traceEvery},
                      {"strict", o.strict}};
  doc["exit_code"] = exitCode;
  karma::writeText(o.outDir / "manifest.json", doc.dump(2) + "\n");
}

int reportVerification(const karma::VerificationReport& report) {
  if (const auto* bad = report.firstFailure()) {
    std::cerr << "verification failed: " << bad->name << " (worst " << bad->worst << ")";
    if (!bad->detail.empty()) std::cerr << ": " << bad->detail;
    std::cerr << "\n";
    return kFailed;
  }
  return kOk;
}

int cmdScenario(const Options& o) {
  if (o.scenario != "rush-hour") throw UsageError("unknown scenario '" + o.scenario + "'");
  const fs::path path = o.outDir / "rush_hour.json";
  karma::writeText(path, karma::serializeProblem(karma::rushHourScenario()));
  std::cout << path.string() << "\n";
  return kOk;
}

int cmdSolveMlnw(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  const auto sol = karma::solveMlnw(problem, o.tol);
  const auto kkt = karma::kktResiduals(problem, sol);
  karma::writeText(o.outDir / "mlnw.json", karma::solutionJson(problem, sol, kkt));
  karma::writeText(o.outDir / "chi.csv", karma::chiCsv(problem, sol.chi));
  std::cout << "objective " << sol.objective << "\n"
            << "kkt stationarity " << kkt.stationarity << " primal " << kkt.primalFeasibility
            << " dual " << kkt.dualFeasibility << " complementarity "
            << kkt.complementarySlackness << "\n";
  if (!kkt.within(o.tol)) {
    std::cerr << "KKT residual " << kkt.max() << " exceeds tolerance at " << kkt.worstIndex
              << "\n";
    return kFailed;
  }
  return kOk;
}

int cmdBaselines(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  const auto single = karma::singleShotNashWelfare(problem);
  const auto util = karma::utilitarian(problem);
  karma::writeText(o.outDir / "single_shot_chi.csv", karma::chiCsv(problem, single));
  karma::writeText(o.outDir / "utilitarian_chi.csv", karma::chiCsv(problem, util));
  Json doc;
  doc["single_shot"] = Json{{"nash_objective", karma::nashObjective(problem, single)},
                            {"utilitarian_objective", karma::utilitarianObjective(problem, single)},
                            {"reward_improvements", karma::rewardImprovements(problem, single)}};
  doc["utilitarian"] = Json{{"nash_objective", karma::nashObjective(problem, util)},
                            {"utilitarian_objective", karma::utilitarianObjective(problem, util)},
                            {"reward_improvements", karma::rewardImprovements(problem, util)}};
  // -inf is not valid JSON; nlohmann writes it as null.
  karma::writeText(o.outDir / "baselines.json", doc.dump(2) + "\n");
  return kOk;
}

int cmdSolveKe(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  karma::KarmaEquilibrium ke;
  try {
    ke = karma::findKe(problem, o.tol);
  } catch (const karma::NoKeFound& e) {
    std::cerr << "no karma equilibrium found: " << e.what() << "\n";
    return kFailed;
  }
  const auto report = karma::verifyKe(problem, ke, o.tol);
  karma::writeText(o.outDir / "ke.json", karma::keJson(problem, ke, report));
  karma::writeText(o.outDir / "chi.csv", karma::chiCsv(problem, ke.chi));
  return reportVerification(report);
}

int cmdVerifyKe(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  karma::KarmaEquilibrium ke;
  try {
    ke = karma::parseKe(problem, karma::readText(o.keFile));
  } catch (const karma::ProblemFormatError& e) {
    throw UsageError(o.keFile + ": " + e.what());
  }
  const auto report = karma::verifyKe(problem, ke, o.tol);
  karma::writeText(o.outDir / "verification.json", karma::verificationJson(report));
  for (const auto& c : report.checks)
    std::cout << (c.passed ? "ok   " : "FAIL ") << c.name << " " << c.worst << "\n";
  return reportVerification(report);
}

int cmdCheckNb(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  const auto sol = karma::solveMlnw(problem, std::min(o.tol, 1e-9));
  const auto nb = karma::checkNashBalance(problem, sol, o.tol);
  karma::writeText(o.outDir / "nash_balance.json", karma::nashBalanceJson(nb));
  std::cout << (nb.balanced ? "balanced" : "not balanced") << " C " << nb.constantC
            << " max deviation " << nb.maxDeviation << "\n";
  return nb.balanced ? kOk : kFailed;
}

int cmdConstructKe(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  const auto sol = karma::solveMlnw(problem, std::min(o.tol, 1e-9));
  karma::KarmaEquilibrium ke;
  try {
    ke = karma::constructKeFromMlnw(problem, sol, o.alpha, o.tol);
  } catch (const karma::NotNashBalanced& e) {
    karma::writeText(o.outDir / "nash_balance.json", karma::nashBalanceJson(e.report));
    std::cerr << e.what() << " (max deviation " << e.report.maxDeviation << ")\n";
    return kFailed;
  }
  const auto report = karma::verifyKe(problem, ke, o.tol);
  karma::writeText(o.outDir / "ke.json", karma::keJson(problem, ke, report));
  return reportVerification(report);
}

int cmdCouple(const Options& o) {
  const auto a = loadChecked(o.problem, o.strict);
  const auto b = loadChecked(o.problemB, o.strict);
  karma::CouplingReport report;
  try {
    report = karma::compareCoupling(a, b, o.tol);
  } catch (const karma::NoKeFound& e) {
    std::cerr << "no karma equilibrium found: " << e.what() << "\n";
    return kFailed;
  }
  karma::writeText(o.outDir / "coupling.csv", karma::couplingCsv(report));
  std::cout << "min slack " << report.minSlack << "\n";
  return report.minSlack >= -o.tol ? kOk : kFailed;
}

int cmdSimulate(const Options& o) {
  const auto problem = loadChecked(o.problem, o.strict);
  karma::SimConfig cfg;
  cfg.horizon = o.horizon;
  cfg.seed = o.seed;
  cfg.traceEvery = o.traceEvery;
  cfg.shortfallRule =
      o.shortfall == "skip" ? karma::ShortfallRule::skipBid : karma::ShortfallRule::capAtKarma;
  if (!o.keFile.empty()) {
    try {
      cfg.policy = karma::parseKe(problem, karma::readText(o.keFile));
    } catch (const karma::ProblemFormatError& e) {
      throw UsageError(o.keFile + ": " + e.what());
    }
  } else {
    try {
      cfg.policy = karma::findKe(problem, o.tol);
    } catch (const karma::NoKeFound& e) {
      std::cerr << "no karma equilibrium found: " << e.what() << "\n";
      return kFailed;
    }
  }
  if (o.meanKarma == "auto") {
    cfg.meanKarma = karma::defaultMeanKarma(cfg.policy);
  } else {
    try {
      std::size_t used = 0;
      cfg.meanKarma = std::stod(o.meanKarma, &used);
      if (used != o.meanKarma.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("--mean-karma: expected a number or 'auto', got '" + o.meanKarma + "'");
    }
  }

  karma::SimStats stats;
  try {
    stats = karma::run(problem, cfg);
  } catch (const karma::KarmaConservationError& e) {
    std::cerr << e.what() << "\n";
    return kFailed;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  karma::writeText(o.outDir / "frequencies.csv", karma::frequencyCsv(problem, cfg.policy, stats));
  karma::writeText(o.outDir / "trace.csv", karma::traceCsv(stats));
  Json doc;
  doc["horizon"] = cfg.horizon;
  doc["seed"] = cfg.seed;
  doc["mean_karma"] = cfg.meanKarma;
  doc["shortfall_rule"] = o.shortfall;
  doc["measured_steps"] = stats.measuredSteps;
  doc["population"] = stats.population;
  doc["shortfall_rate"] = stats.shortfallRate();
  doc["max_karma_drift"] = stats.maxKarmaDrift;
  doc["bids"] = cfg.policy.bids;
  doc["payment_by_type"] = stats.paymentByType;
  doc["redistribution_by_type"] = stats.redistributionByType;
  karma::writeText(o.outDir / "simulation.json", doc.dump(2) + "\n");
  std::cout << "shortfall rate " << stats.shortfallRate() << " max karma drift "
            << stats.maxKarmaDrift << "\n";
  return kOk;
}

int cmdTwoShot(const Options& o) {
  karma::DominanceReport report;
  try {
    report = karma::twoShotCheck(o.twoShot);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  karma::writeText(o.outDir / "two_shot.json", karma::dominanceJson(o.twoShot, report));
  std::cout << "dominant " << (report.dominant ? "yes" : "no") << " equilibrium "
            << (report.equilibrium ? "yes" : "no") << " min margin " << report.minMarginExact
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-run Nash welfare allocation and karma economies"};
  app.set_version_flag("--version", KARMA_VERSION);
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-o,--out-dir", o.outDir, "Directory for all outputs")->capture_default_str();
    sub->add_option("--tol", o.tol, "Solver and verification tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_flag("--strict", o.strict, "Treat assumption violations as errors");
  };
  auto problemArg = [&](CLI::App* sub) {
    sub->add_option("problem", o.problem, "Problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
  };

  auto* scenario = app.add_subcommand("scenario", "Write a built-in problem file");
  scenario->add_option("name", o.scenario, "Scenario name (rush-hour)")->required();
  common(scenario);

  auto* solveMlnw = app.add_subcommand("solve-mlnw", "Solve the long-run Nash welfare program");
  problemArg(solveMlnw);
  common(solveMlnw);

  auto* baselines = app.add_subcommand("baselines", "Single-shot Nash welfare and utilitarian");
  problemArg(baselines);
  common(baselines);

  auto* solveKe = app.add_subcommand("solve-ke", "Compute a karma equilibrium");
  problemArg(solveKe);
  common(solveKe);

  auto* verifyKe = app.add_subcommand("verify-ke", "Check a candidate karma equilibrium");
  problemArg(verifyKe);
  verifyKe->add_option("ke", o.keFile, "Equilibrium file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  common(verifyKe);

  auto* checkNb = app.add_subcommand("check-nb", "Test whether the MLNW solution is Nash-balanced");
  problemArg(checkNb);
  common(checkNb);

  auto* constructKe =
      app.add_subcommand("construct-ke", "Build a karma equilibrium from the MLNW solution");
  problemArg(constructKe);
  constructKe->add_option("--alpha", o.alpha, "Bid scale")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  common(constructKe);

  auto* couple = app.add_subcommand("couple", "Compare separate and merged karma economies");
  couple->add_option("first", o.problem, "First economy")->required()->check(CLI::ExistingFile);
  couple->add_option("second", o.problemB, "Second economy")
      ->required()
      ->check(CLI::ExistingFile);
  common(couple);

  auto* simulate = app.add_subcommand("simulate", "Run the repeated karma auction");
  problemArg(simulate);
  simulate->add_option("--ke", o.keFile, "Policy file; solved with solve-ke when omitted")
      ->check(CLI::ExistingFile);
  simulate->add_option("--horizon", o.horizon, "Number of periods")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  simulate->add_option("--mean-karma", o.meanKarma, "Initial karma per agent, or auto")
      ->capture_default_str();
  simulate->add_option("--shortfall", o.shortfall, "Rule when karma is short of the bid")
      ->capture_default_str()
      ->check(CLI::IsMember({"cap", "skip"}));
  simulate->add_option("--trace-every", o.traceEvery, "Keep every n-th period in trace.csv")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  common(simulate);

  auto* twoShot = app.add_subcommand("two-shot", "Exact dominance check for the two-day game");
  twoShot->add_option("--n", o.twoShot.n, "Agents")->capture_default_str();
  twoShot->add_option("--capacity", o.twoShot.capacity, "Priority slots per day")
      ->capture_default_str();
  twoShot->add_option("--u-low", o.twoShot.uLow, "Low urgency")->capture_default_str();
  twoShot->add_option("--u-high", o.twoShot.uHigh, "High urgency")->capture_default_str();
  twoShot->add_option("--p-high", o.twoShot.pHigh, "Probability of high urgency")
      ->capture_default_str();
  common(twoShot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  static const std::map<std::string, int (*)(const Options&)> handlers = {
      {"scenario", cmdScenario},       {"solve-mlnw", cmdSolveMlnw},
      {"baselines", cmdBaselines},     {"solve-ke", cmdSolveKe},
      {"verify-ke", cmdVerifyKe},      {"check-nb", cmdCheckNb},
      {"construct-ke", cmdConstructKe}, {"couple", cmdCouple},
      {"simulate", cmdSimulate},       {"two-shot", cmdTwoShot}};

  int code = kOk;
  try {
    fs::create_directories(o.outDir);
    code = handlers.at(command)(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kUsage;
  } catch (const karma::ProblemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kFailed;
  }
  try {
    writeManifest(o, command, args, code);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (code == kOk) code = kFailed;
  }
  return code;
}
