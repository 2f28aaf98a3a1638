#pragma once

#include <stdexcept>
#include <string>

namespace qof {

/// Invalid protocol parameters or scenario files. Raised at setup, never
/// mid-execution.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed message bytes. Protocol handlers catch this and drop the
/// message; it never propagates out of a party's event handler.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API contract (e.g. propose while a round is open).
class ProtocolMisuse : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An internal invariant failed. The simulator converts this into a
/// fail-fast report carrying the trace position.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace qof
