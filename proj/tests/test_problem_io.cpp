#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "karma/ke.hpp"
#include "karma/problem_io.hpp"
#include "karma/report_io.hpp"
#include "support.hpp"

namespace karma {
namespace {

std::string whereOf(const std::string& text) {
  try {
    parseProblem(text);
  } catch (const ProblemFormatError& e) {
    return e.where();
  }
  return "<parsed>";
}

TEST(ProblemIo, RushHourRoundTripIsByteIdentical) {
  const std::string text = serializeProblem(rushHourScenario());
  EXPECT_EQ(serializeProblem(parseProblem(text)), text);
}

TEST(ProblemIo, RandomRoundTripIsByteIdentical) {
  std::mt19937_64 rng(11);
  for (int s = 0; s < 25; ++s) {
    Problem p = testing::randomProblem(rng, 4, 3, 4, s % 2 == 0);
    p.label = "random " + std::to_string(s);
    if (s % 3 == 0) p.types[0].scale = 0.1 * (s + 1);
    const std::string text = serializeProblem(p);
    const Problem back = parseProblem(text);
    EXPECT_EQ(serializeProblem(back), text);
    ASSERT_EQ(back.numTypes(), p.numTypes());
    for (std::size_t i = 0; i < p.numTypes(); ++i) {
      EXPECT_EQ(back.types[i].urgency.probs, p.types[i].urgency.probs);
      EXPECT_EQ(back.types[i].rewardsOn, p.types[i].rewardsOn);
      EXPECT_EQ(back.types[i].scale, p.types[i].scale);
    }
  }
}

TEST(ProblemIo, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "karma_problem_io_test";
  const auto path = dir / "rush.json";
  const Problem p = rushHourScenario();
  saveProblem(p, path);
  EXPECT_EQ(serializeProblem(loadProblem(path)), serializeProblem(p));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(loadProblem(path), ProblemFormatError);
}

TEST(ProblemIo, ErrorsNameTheField) {
  EXPECT_EQ(whereOf("{\n  \"capacities\": [1,\n"), "line 3");
  EXPECT_EQ(whereOf("[]"), "(root)");
  EXPECT_EQ(whereOf(R"({"mutually_exclusive": false, "types": []})"), "capacities");
  EXPECT_EQ(whereOf(R"({"capacities": [1.5], "mutually_exclusive": false, "types": []})"),
            "capacities[0]");
  EXPECT_EQ(whereOf(R"({"capacities": [1], "mutually_exclusive": false, "types": [], "x": 1})"),
            "x");
  EXPECT_EQ(whereOf(R"({"capacities": [1], "mutually_exclusive": false, "types": [
              {"mass": 1, "weight": 1, "urgency": {"levels": [1], "probs": ["a"]},
               "rewards_on": [1], "rewards_off": [0]}]})"),
            "types[0].urgency.probs[0]");
  EXPECT_EQ(whereOf(R"({"capacities": [1], "mutually_exclusive": false, "types": [
              {"mass": 1, "urgency": {"levels": [1], "probs": [1]},
               "rewards_on": [1], "rewards_off": [0]}]})"),
            "types[0].weight");
  EXPECT_EQ(whereOf(R"({"capacities": [1], "mutually_exclusive": false, "types": [
              {"mass": 1, "weight": 1, "urgency": {"levels": [1], "probs": [1], "q": 0},
               "rewards_on": [1], "rewards_off": [0]}]})"),
            "types[0].urgency.q");
}

TEST(ReportIo, KeRoundTrip) {
  const Problem p = testing::singleResource(
      1, {testing::makeType(2, {1, 3}, {0.5, 0.5}, {1}, {0})});
  KarmaEquilibrium ke;
  ke.chi = CellTensor::zerosLike(p);
  ke.chi(0, 0, 1) = 0.75;
  ke.eta = CellTensor::zerosLike(p);
  ke.etaRow = zeroLevelTable(p);
  ke.bids = {0.3};
  ke.kappa = {1.0 / 3.0};
  const KarmaEquilibrium back = parseKe(p, keJson(p, ke));
  EXPECT_EQ(back.chi(0, 0, 1), 0.75);
  EXPECT_EQ(back.bids, ke.bids);
  EXPECT_EQ(back.kappa, ke.kappa);
  EXPECT_DOUBLE_EQ(back.rewardImprovements[0], 0.5 * 3 * 0.75);
}

TEST(ReportIo, KeErrorsNameTheField) {
  const Problem p = testing::singleResource(
      1, {testing::makeType(2, {1, 3}, {0.5, 0.5}, {1}, {0})});
  try {
    parseKe(p, R"({"chi": [[[0, 1]]], "bids": [1, 2], "kappa": [0]})");
    FAIL() << "expected a format error";
  } catch (const ProblemFormatError& e) {
    EXPECT_EQ(e.where(), "bids");
  }
  try {
    parseKe(p, R"({"chi": [[[0]]], "bids": [1], "kappa": [0]})");
    FAIL() << "expected a format error";
  } catch (const ProblemFormatError& e) {
    EXPECT_EQ(e.where(), "chi[0][0]");
  }
}

TEST(ReportIo, ShortestRoundTripNumbers) {
  EXPECT_EQ(formatNumber(0.1), "0.1");
  EXPECT_EQ(formatNumber(2.0), "2");
  EXPECT_EQ(std::stod(formatNumber(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace karma
