#pragma once

#include <stdexcept>
#include <string>

namespace spdc {

/// Raised for malformed or out-of-range apparatus configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a correlation value or CHSH combination cannot be formed
/// from the supplied count records.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a coincidence curve carries no modulation to fit.
class DegenerateFitError : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spdc
