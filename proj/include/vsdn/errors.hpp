// Error taxonomy. Exit-code mapping lives in the CLI: config/ingestion -> 1,
// runtime faults (divergence, non-finite) -> 2, failed verification -> 3.
#pragma once

#include <stdexcept>
#include <string>

namespace vsdn {

// Caller broke a documented precondition (programming error, not data).
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Bad configuration value or unsatisfiable parameter combination.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (CSV schema, non-ascending times, empty rows...).
struct IngestionError : std::runtime_error {
  explicit IngestionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite state or gradient during training/simulation. Carries context
// (parameter name, grid index) in the message; never silently clipped.
struct TrainingFault : std::runtime_error {
  explicit TrainingFault(const std::string& msg) : std::runtime_error(msg) {}
};

// The finite-difference oracle hit a non-finite function evaluation.
struct OracleFailure : std::runtime_error {
  explicit OracleFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vsdn
