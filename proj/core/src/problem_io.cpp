#include "karma/problem_io.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace karma {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ProblemFormatError(where, what);
}

void rejectUnknown(const Json& obj, const std::string& path,
                   const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
}

const Json& require(const Json& obj, const std::string& path, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing required key");
  return *it;
}

double asReal(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

long long asInteger(const Json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  fail(path, "expected an integer");
}

std::vector<double> asRealList(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(asReal(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

int asInt(const Json& v, const std::string& path) {
  const long long x = asInteger(v, path);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    fail(path, "integer out of range");
  return static_cast<int>(x);
}

UserType parseType(const Json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  rejectUnknown(obj, path,
                {"mass", "weight", "urgency", "rewards_on", "rewards_off", "scale"});
  UserType t;
  t.mass = asInt(require(obj, path, "mass"), path + ".mass");
  t.weight = asReal(require(obj, path, "weight"), path + ".weight");

  const std::string upath = path + ".urgency";
  const Json& u = require(obj, path, "urgency");
  if (!u.is_object()) fail(upath, "expected an object");
  rejectUnknown(u, upath, {"levels", "probs"});
  t.urgency.levels = asRealList(require(u, upath, "levels"), upath + ".levels");
  t.urgency.probs = asRealList(require(u, upath, "probs"), upath + ".probs");

  t.rewardsOn = asRealList(require(obj, path, "rewards_on"), path + ".rewards_on");
  t.rewardsOff = asRealList(require(obj, path, "rewards_off"), path + ".rewards_off");
  if (auto it = obj.find("scale"); it != obj.end()) t.scale = asReal(*it, path + ".scale");
  return t;
}

std::size_t lineOf(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k)
    if (text[k] == '\n') ++line;
  return line;
}

}  // namespace

Problem parseProblem(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail("line " + std::to_string(lineOf(text, e.byte)), "invalid JSON syntax");
  }
  if (!doc.is_object()) fail("(root)", "expected an object");
  rejectUnknown(doc, "", {"capacities", "mutually_exclusive", "types", "label"});

  Problem p;
  const Json& caps = require(doc, "", "capacities");
  if (!caps.is_array()) fail("capacities", "expected an array of integers");
  for (std::size_t j = 0; j < caps.size(); ++j)
    p.capacities.push_back(asInt(caps[j], "capacities[" + std::to_string(j) + "]"));

  const Json& me = require(doc, "", "mutually_exclusive");
  if (!me.is_boolean()) fail("mutually_exclusive", "expected a boolean");
  p.mutuallyExclusive = me.get<bool>();

  const Json& types = require(doc, "", "types");
  if (!types.is_array()) fail("types", "expected an array");
  for (std::size_t i = 0; i < types.size(); ++i)
    p.types.push_back(parseType(types[i], "types[" + std::to_string(i) + "]"));

  if (auto it = doc.find("label"); it != doc.end()) {
    if (!it->is_string()) fail("label", "expected a string");
    p.label = it->get<std::string>();
  }
  return p;
}

Problem loadProblem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProblemFormatError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseProblem(buf.str());
}

std::string serializeProblem(const Problem& problem) {
  Json doc;
  doc["label"] = problem.label;
  doc["capacities"] = problem.capacities;
  doc["mutually_exclusive"] = problem.mutuallyExclusive;
  Json types = Json::array();
  for (const auto& t : problem.types) {
    Json obj;
    obj["mass"] = t.mass;
    obj["weight"] = t.weight;
    obj["urgency"] = {{"levels", t.urgency.levels}, {"probs", t.urgency.probs}};
    obj["rewards_on"] = t.rewardsOn;
    obj["rewards_off"] = t.rewardsOff;
    if (t.scale) obj["scale"] = *t.scale;
    types.push_back(std::move(obj));
  }
  doc["types"] = std::move(types);
  return doc.dump(2) + "\n";
}

void saveProblem(const Problem& problem, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serializeProblem(problem);
}

}  // namespace karma
