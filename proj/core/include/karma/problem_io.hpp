#pragma once

#include <filesystem>
#include <string>

#include "karma/model.hpp"

namespace karma {

/// Malformed problem document. `where()` names the JSON line or field path.
class ProblemFormatError : public ProblemError {
 public:
  ProblemFormatError(const std::string& where, const std::string& what)
      : ProblemError(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// Parses a problem document. Only the JSON shape is checked here; call
/// validate() for semantic checks.
Problem parseProblem(const std::string& text);
Problem loadProblem(const std::filesystem::path& path);

/// Canonical serialization: fixed key order, shortest round-trip numbers,
/// two-space indent, trailing newline.
std::string serializeProblem(const Problem& problem);
void saveProblem(const Problem& problem, const std::filesystem::path& path);

}  // namespace karma
