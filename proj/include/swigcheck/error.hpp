#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace swigcheck {

/// Location of a token in DSL source text. Lines and columns are 1-based,
/// offsets are byte offsets into the input.
struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t end_line = 1;
  std::size_t end_column = 1;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const SourceSpan&) const = default;
};

/// Base of every error raised by the library. `code()` is the stable
/// machine-readable name used by the CLI and the JSON service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }
  virtual const std::optional<SourceSpan>& span() const noexcept {
    static const std::optional<SourceSpan> none;
    return none;
  }

 private:
  std::string code_;
};

#define SWIGCHECK_DEFINE_ERROR(Name)                               \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// graph_core
SWIGCHECK_DEFINE_ERROR(CycleError)
SWIGCHECK_DEFINE_ERROR(RoleError)
SWIGCHECK_DEFINE_ERROR(DanglingEdgeError)
SWIGCHECK_DEFINE_ERROR(UnknownNode)
SWIGCHECK_DEFINE_ERROR(OverlappingSets)
SWIGCHECK_DEFINE_ERROR(GraphError)
// swig
SWIGCHECK_DEFINE_ERROR(DuplicateLabel)
SWIGCHECK_DEFINE_ERROR(FixedNodeInQuery)
// criteria
SWIGCHECK_DEFINE_ERROR(InvalidAdjustSet)
SWIGCHECK_DEFINE_ERROR(UnmeasuredCovariate)
// inference
SWIGCHECK_DEFINE_ERROR(TooManyVariables)
SWIGCHECK_DEFINE_ERROR(InvalidCpt)
SWIGCHECK_DEFINE_ERROR(ZeroProbabilityEvent)
SWIGCHECK_DEFINE_ERROR(UndefinedMeasure)
SWIGCHECK_DEFINE_ERROR(InfeasibleMatch)
SWIGCHECK_DEFINE_ERROR(InvalidValue)
SWIGCHECK_DEFINE_ERROR(DegenerateTable)
// scenarios
SWIGCHECK_DEFINE_ERROR(UnknownScenario)
SWIGCHECK_DEFINE_ERROR(UnknownVariant)

#undef SWIGCHECK_DEFINE_ERROR

/// Parse failures carry the span of the offending token.
class SpannedError : public Error {
 public:
  SpannedError(std::string code, const std::string& message, SourceSpan span)
      : Error(std::move(code), message), span_(span) {}

  const std::optional<SourceSpan>& span() const noexcept override { return span_; }

 private:
  std::optional<SourceSpan> span_;
};

class SyntaxError : public SpannedError {
 public:
  SyntaxError(const std::string& message, SourceSpan span)
      : SpannedError("SyntaxError", message, span) {}
};

class SemanticError : public SpannedError {
 public:
  SemanticError(const std::string& message, SourceSpan span)
      : SpannedError("SemanticError", message, span) {}
};

}  // namespace swigcheck
