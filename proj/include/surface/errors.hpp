#pragma once

#include <stdexcept>
#include <string>

namespace surface {

/// Raised when an input file is missing, malformed, or violates a
/// documented schema invariant. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an analysis cannot complete soundly in strict mode
/// (unresolved syscall number, unmapped builtin, ...). Exit code 1.
class AnalysisError : public std::runtime_error {
public:
    explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

/// Error policy for the analysis stages. Strict stops on soundness
/// gaps; permissive degrades to warnings plus over-approximation.
enum class Mode { strict, permissive };

inline const char* to_string(Mode m) {
    return m == Mode::strict ? "strict" : "permissive";
}

}  // namespace surface
