#ifndef AGGFLEX_ERRORS_HPP
#define AGGFLEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aggflex {

/// Classifies every error the library throws. CLI maps validation-type
/// errors to exit code 1 and solver-type errors to exit code 2.
enum class ErrorKind {
    Domain,             // invalid numeric input (T < 1, delta <= 0, ...)
    DimensionMismatch,  // incompatible matrix/vector shapes
    DimensionTooLarge,  // desk-scale oracle asked to work beyond n <= 3
    Index,              // arrival/departure outside the horizon
    Config,             // bad configuration (inverted ranges, K > N, ...)
    InfeasibleSpec,     // EV spec encodes an empty flexibility set
    EmptyInputSet,      // operation requires a nonempty polytope
    Infeasible,         // LP/SOCP reported an empty feasible set
    Unbounded,          // LP/SOCP reported an unbounded objective
    Model,              // malformed conic program
    BackendUnsupported, // selected backend cannot handle the program
    Solver,             // numeric failure inside a solve
    Internal,           // invariant breakage that signals a library bug
    Precondition,       // caller violated a documented precondition
    DegenerateBaseline, // gap undefined because J* == 0 while J(K) > 0
    Io,                 // file or format problem
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    /// True for errors caused by bad inputs rather than solve failures.
    bool is_validation() const {
        switch (kind_) {
            case ErrorKind::Solver:
            case ErrorKind::Internal:
            case ErrorKind::BackendUnsupported:
                return false;
            default:
                return true;
        }
    }

    const char* kind_name() const {
        switch (kind_) {
            case ErrorKind::Domain: return "domain";
            case ErrorKind::DimensionMismatch: return "dimension_mismatch";
            case ErrorKind::DimensionTooLarge: return "dimension_too_large";
            case ErrorKind::Index: return "index";
            case ErrorKind::Config: return "config";
            case ErrorKind::InfeasibleSpec: return "infeasible_spec";
            case ErrorKind::EmptyInputSet: return "empty_input_set";
            case ErrorKind::Infeasible: return "infeasible";
            case ErrorKind::Unbounded: return "unbounded";
            case ErrorKind::Model: return "model";
            case ErrorKind::BackendUnsupported: return "backend_unsupported";
            case ErrorKind::Solver: return "solver";
            case ErrorKind::Internal: return "internal";
            case ErrorKind::Precondition: return "precondition";
            case ErrorKind::DegenerateBaseline: return "degenerate_baseline";
            case ErrorKind::Io: return "io";
        }
        return "unknown";
    }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

} // namespace aggflex

#endif
