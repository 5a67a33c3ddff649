#pragma once

#include <stdexcept>
#include <string>

namespace rdhmm {

// Matrix inversion requested on a Sigma whose smallest singular value is
// below the working tolerance. Carries both so callers can report them.
class SingularSigmaError : public std::runtime_error {
public:
  SingularSigmaError(double sigma_min, double tolerance)
      : std::runtime_error("sigma is numerically singular: sigma_min=" +
                           std::to_string(sigma_min) +
                           " tolerance=" + std::to_string(tolerance)),
        sigma_min(sigma_min), tolerance(tolerance) {}
  double sigma_min;
  double tolerance;
};

// Belief-state update whose normalizer is too close to zero to divide by.
class UnstableConditionalError : public std::runtime_error {
public:
  explicit UnstableConditionalError(double normalizer)
      : std::runtime_error("conditional update normalizer too close to zero: " +
                           std::to_string(normalizer)),
        normalizer(normalizer) {}
  double normalizer;
};

class RankDeficiencyError : public std::runtime_error {
public:
  RankDeficiencyError(const std::string& what, double singular_value)
      : std::runtime_error(what), singular_value(singular_value) {}
  double singular_value;
};

class EnumerationBudgetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Count-file parse failure; line is 1-based.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, long line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file(file), line(line) {}
  std::string file;
  long line;
};

}  // namespace rdhmm
