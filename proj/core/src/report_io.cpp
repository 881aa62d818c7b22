#include "karma/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "karma/problem_io.hpp"

namespace karma {

namespace {

using Json = nlohmann::ordered_json;

Json tensorJson(const CellTensor& t) {
  Json out = Json::array();
  for (std::size_t i = 0; i < t.numTypes(); ++i) {
    Json perType = Json::array();
    for (std::size_t j = 0; j < t.numResources(); ++j) {
      Json row = Json::array();
      for (std::size_t k = 0; k < t.numLevels(i); ++k) row.push_back(t(i, j, k));
      perType.push_back(std::move(row));
    }
    out.push_back(std::move(perType));
  }
  return out;
}

Json kktJson(const KktResidualReport& r) {
  return Json{{"stationarity", r.stationarity},
              {"primal_feasibility", r.primalFeasibility},
              {"dual_feasibility", r.dualFeasibility},
              {"complementary_slackness", r.complementarySlackness},
              {"max", r.max()},
              {"worst_index", r.worstIndex}};
}

Json checksJson(const VerificationReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks)
    checks.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"worst", c.worst}, {"detail", c.detail}});
  return Json{{"passed", report.passed()}, {"checks", std::move(checks)}};
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ProblemFormatError(where, what);
}

const Json& field(const Json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end()) fail(key, "missing required key");
  return *it;
}

double number(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::vector<double> numberList(const Json& v, const std::string& path, std::size_t size) {
  if (!v.is_array()) fail(path, "expected an array");
  if (v.size() != size)
    fail(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

CellTensor parseTensor(const Problem& problem, const Json& v, const std::string& path) {
  CellTensor t = CellTensor::zerosLike(problem);
  if (!v.is_array() || v.size() != problem.numTypes())
    fail(path, "expected one entry per type");
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const std::string pi = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != problem.numResources())
      fail(pi, "expected one entry per resource");
    for (std::size_t j = 0; j < problem.numResources(); ++j) {
      const std::string pj = pi + "[" + std::to_string(j) + "]";
      const auto row = numberList(v[i][j], pj, t.numLevels(i));
      for (std::size_t k = 0; k < row.size(); ++k) t(i, j, k) = row[k];
    }
  }
  return t;
}

LevelTable parseLevelTable(const Problem& problem, const Json& v, const std::string& path) {
  LevelTable out = zeroLevelTable(problem);
  if (!v.is_array() || v.size() != problem.numTypes())
    fail(path, "expected one entry per type");
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    out[i] = numberList(v[i], path + "[" + std::to_string(i) + "]", out[i].size());
  return out;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

std::string formatNumber(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string solutionJson(const Problem& problem, const MlnwSolution& solution,
                         const KktResidualReport& residuals) {
  Json doc;
  doc["label"] = problem.label;
  doc["objective"] = solution.objective;
  doc["iterations"] = solution.iterations;
  doc["reward_improvements"] = solution.rewardImprovements;
  doc["lambda"] = solution.lambda;
  doc["chi"] = tensorJson(solution.chi);
  doc["eta"] = tensorJson(solution.eta);
  doc["eta_row"] = solution.etaRow;
  doc["iota"] = tensorJson(solution.iota);
  doc["kkt"] = kktJson(residuals);
  return dump(doc);
}

std::string keJson(const Problem& problem, const KarmaEquilibrium& ke,
                   const std::optional<VerificationReport>& verification) {
  Json doc;
  doc["label"] = problem.label;
  doc["reward_improvements"] = ke.rewardImprovements;
  doc["chi"] = tensorJson(ke.chi);
  doc["eta"] = tensorJson(ke.eta);
  doc["eta_row"] = ke.etaRow;
  doc["bids"] = ke.bids;
  doc["kappa"] = ke.kappa;
  if (verification) doc["verification"] = checksJson(*verification);
  return dump(doc);
}

KarmaEquilibrium parseKe(const Problem& problem, const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::ostringstream where;
    where << "byte " << e.byte;
    fail(where.str(), "invalid JSON");
  }
  if (!doc.is_object()) fail("$", "expected an object");

  KarmaEquilibrium ke;
  ke.chi = parseTensor(problem, field(doc, "chi"), "chi");
  ke.bids = numberList(field(doc, "bids"), "bids", problem.numResources());
  ke.kappa = numberList(field(doc, "kappa"), "kappa", problem.numTypes());
  ke.eta = doc.contains("eta") ? parseTensor(problem, doc["eta"], "eta")
                               : CellTensor::zerosLike(problem);
  ke.etaRow = doc.contains("eta_row") ? parseLevelTable(problem, doc["eta_row"], "eta_row")
                                      : zeroLevelTable(problem);
  ke.rewardImprovements = rewardImprovements(problem, ke.chi);
  return ke;
}

std::string verificationJson(const VerificationReport& report) {
  return dump(checksJson(report));
}

std::string nashBalanceJson(const NashBalanceReport& report) {
  Json doc;
  doc["balanced"] = report.balanced;
  doc["constant_c"] = report.constantC;
  doc["max_deviation"] = report.maxDeviation;
  doc["per_type_ratio"] = report.perTypeRatio;
  return dump(doc);
}

std::string dominanceJson(const TwoShotGameSpec& spec, const DominanceReport& report) {
  Json doc;
  doc["n"] = spec.n;
  doc["capacity"] = spec.capacity;
  doc["u_low"] = spec.uLow;
  doc["u_high"] = spec.uHigh;
  doc["p_high"] = spec.pHigh;
  doc["dominant"] = report.dominant;
  doc["equilibrium"] = report.equilibrium;
  doc["min_margin"] = report.minMargin;
  doc["min_margin_exact"] = report.minMarginExact;
  doc["worst_profile"] = report.worstProfile;
  doc["profiles"] = report.profiles;
  return dump(doc);
}

std::string chiCsv(const Problem& problem, const LongRunAllocation& chi) {
  std::ostringstream out;
  out << "type,resource,urgency,chi\n";
  for (std::size_t i = 0; i < chi.numTypes(); ++i)
    for (std::size_t j = 0; j < chi.numResources(); ++j)
      for (std::size_t k = 0; k < chi.numLevels(i); ++k)
        out << i << ',' << j << ',' << formatNumber(problem.types[i].urgency.levels[k]) << ','
            << formatNumber(chi(i, j, k)) << '\n';
  return out.str();
}

std::string couplingCsv(const CouplingReport& report) {
  std::ostringstream out;
  out << "type,separate_sum,combined,slack\n";
  for (const auto& r : report.rows)
    out << r.type << ',' << formatNumber(r.separateSum) << ',' << formatNumber(r.combined) << ','
        << formatNumber(r.slack) << '\n';
  return out.str();
}

std::string frequencyCsv(const Problem& problem, const KarmaEquilibrium& policy,
                         const SimStats& stats) {
  std::ostringstream out;
  out << "type,resource,urgency,chi,frequency,request_frequency,observations,std_error\n";
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < problem.types[i].urgency.size(); ++k) {
        const double p = policy.chi(i, j, k);
        const double obs = stats.levelCount[i][k];
        const double se = obs > 0.0 ? std::sqrt(p * (1.0 - p) / obs) : 0.0;
        out << i << ',' << j << ',' << formatNumber(problem.types[i].urgency.levels[k]) << ','
            << formatNumber(p) << ',' << formatNumber(stats.allocFrequency(i, j, k)) << ','
            << formatNumber(stats.requestFrequency(i, j, k)) << ',' << formatNumber(obs) << ','
            << formatNumber(se) << '\n';
      }
  return out.str();
}

std::string traceCsv(const SimStats& stats) {
  std::ostringstream out;
  out << "t,j,clearing_bid,total_payment\n";
  for (const auto& r : stats.trace)
    out << r.t << ',' << r.resource << ',' << formatNumber(r.clearingBid) << ','
        << formatNumber(r.totalPayment) << '\n';
  return out.str();
}

void writeText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string readText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace karma
