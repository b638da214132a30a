#pragma once

#include <stdexcept>
#include <string>

namespace torusdecay {

// Base class for every failure the library reports on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent problem data (bad JSON, singular lattice, ...).
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// A sublattice operation that requires saturation was handed a non-saturated
// input. Completion to a full basis is impossible in that case.
class NotSaturated : public Error {
public:
    explicit NotSaturated(const std::string& msg) : Error(msg) {}
};

// A counterexample was requested for a problem whose nonlinearity-
// diffusivity condition holds; no such field exists.
class ConditionHolds : public Error {
public:
    explicit ConditionHolds(const std::string& msg) : Error(msg) {}
};

// Time step exceeds the monotonicity/stability bound.
class CflViolation : public Error {
public:
    explicit CflViolation(const std::string& msg) : Error(msg) {}
};

// Request outside the supported regime (e.g. dissipation audit with
// off-diagonal diffusion).
class Unsupported : public Error {
public:
    explicit Unsupported(const std::string& msg) : Error(msg) {}
};

} // namespace torusdecay
