#pragma once

#include <stdexcept>
#include <string>

namespace dform {

enum class ErrorKind {
  DimensionMismatch,
  DegreeOverflow,
  DegreeUnderflow,
  DegreeMismatch,
  OutOfDomain,
  NotBoundaryNode,
  NotBoundaryFace,
  NotSymmetric,
  NoSpectralGap,
  SolverDiverged,
  TooLarge,
  WrongDimension,
  BasisMismatch,
  Validation,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegreeOverflow: return "DegreeOverflow";
    case ErrorKind::DegreeUnderflow: return "DegreeUnderflow";
    case ErrorKind::DegreeMismatch: return "DegreeMismatch";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NotBoundaryNode: return "NotBoundaryNode";
    case ErrorKind::NotBoundaryFace: return "NotBoundaryFace";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NoSpectralGap: return "NoSpectralGap";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::WrongDimension: return "WrongDimension";
    case ErrorKind::BasisMismatch: return "BasisMismatch";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace dform
