#pragma once

#include <stdexcept>
#include <string>

namespace semignn {

enum class ErrorCode {
  NegativeWeight,
  NodeOutOfRange,
  SelfLoopInRelationView,
  ParseError,
  ValidationError,
  MissingRelationView,
  DegenerateDistribution,
  NonScalarLoss,
  NonDeterministicLoss,
  EmptyBatch,
  NoLabeledUsers,
  NoRelationView,
  SingleClass,
  NotBipartiteView,
  InvalidConfig,
  MissingArtifact,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NodeOutOfRange: return "NodeOutOfRange";
    case ErrorCode::SelfLoopInRelationView: return "SelfLoopInRelationView";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::MissingRelationView: return "MissingRelationView";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::NonDeterministicLoss: return "NonDeterministicLoss";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NoLabeledUsers: return "NoLabeledUsers";
    case ErrorCode::NoRelationView: return "NoRelationView";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NotBipartiteView: return "NotBipartiteView";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace semignn
