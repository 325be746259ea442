#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tmc {

// Root of every error the library raises. Callers that only need a message
// catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Source-positioned errors (model files and property strings).

class PositionedError : public Error {
   public:
    PositionedError(const std::string& what, std::size_t line, std::size_t column);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& detail() const noexcept { return detail_; }

   private:
    std::size_t line_;
    std::size_t column_;
    std::string detail_;
};

class SyntaxError : public PositionedError {
   public:
    using PositionedError::PositionedError;
};

class UndeclaredIdentifier : public PositionedError {
   public:
    using PositionedError::PositionedError;
};

class DuplicateDeclaration : public PositionedError {
   public:
    using PositionedError::PositionedError;
};

class MissingTurnVariable : public PositionedError {
   public:
    using PositionedError::PositionedError;
};

// Type mismatches, bad bounds, non-constant probabilities and similar
// semantic problems detected while resolving a parsed model.
class ModelSemanticError : public PositionedError {
   public:
    using PositionedError::PositionedError;
};

class BoundOutOfRange : public PositionedError {
   public:
    using PositionedError::PositionedError;
};

// ---------------------------------------------------------------------------
// Model expansion.

class ModelError : public Error {
   public:
    using Error::Error;
};

class DivisionByZero : public ModelError {
   public:
    using ModelError::ModelError;
};

class ProbabilitiesDoNotSumToOne : public ModelError {
   public:
    using ModelError::ModelError;
};

class ActionNotEnabled : public ModelError {
   public:
    using ModelError::ModelError;
};

class NondeterministicAction : public ModelError {
   public:
    using ModelError::ModelError;
};

class UpdateOutOfBounds : public ModelError {
   public:
    UpdateOutOfBounds(const std::string& variable, std::int64_t value, const std::string& what);
    const std::string& variable() const noexcept { return variable_; }
    std::int64_t value() const noexcept { return value_; }

   private:
    std::string variable_;
    std::int64_t value_;
};

class DeadlockState : public ModelError {
   public:
    using ModelError::ModelError;
};

class PolicySelectsDisabledAction : public ModelError {
   public:
    using ModelError::ModelError;
};

class InvalidState : public ModelError {
   public:
    using ModelError::ModelError;
};

// ---------------------------------------------------------------------------
// Building and checking.

class StateBudgetExceeded : public Error {
   public:
    StateBudgetExceeded(std::size_t budget, std::size_t states_so_far);
    std::size_t budget() const noexcept { return budget_; }
    std::size_t states_so_far() const noexcept { return states_so_far_; }

   private:
    std::size_t budget_;
    std::size_t states_so_far_;
};

class Timeout : public Error {
   public:
    using Error::Error;
};

class PropertyError : public Error {
   public:
    using Error::Error;
};

class UnknownLabel : public PropertyError {
   public:
    using PropertyError::PropertyError;
};

class UnknownFeature : public PropertyError {
   public:
    using PropertyError::PropertyError;
};

class QuantifierOnDtmc : public PropertyError {
   public:
    using PropertyError::PropertyError;
};

class QuantifierRequired : public PropertyError {
   public:
    using PropertyError::PropertyError;
};

class UnsupportedPathFormula : public PropertyError {
   public:
    using PropertyError::PropertyError;
};

class NonConvergence : public Error {
   public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Agents and policies.

class NonFiniteLoss : public Error {
   public:
    using Error::Error;
};

class SchemaMismatch : public Error {
   public:
    using Error::Error;
};

class PolicyFormatError : public Error {
   public:
    using Error::Error;
};

class TurnOutOfRange : public Error {
   public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Environments and configuration.

class UnknownBenchmark : public Error {
   public:
    using Error::Error;
};

class InvalidParams : public Error {
   public:
    using Error::Error;
};

class ConfigError : public Error {
   public:
    using Error::Error;
};

}  // namespace tmc
