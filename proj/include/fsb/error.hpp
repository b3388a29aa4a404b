#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fsb {

enum class Errc {
  validation,
  io,
  format,
  corruption,
  mapping,
  empty_result,
  degenerate_vector,
  dimension,
  infeasible_spec,
  infeasible_query,
  protocol,
  domain,
  insufficient_data,
  config,
};

const char* to_string(Errc code) noexcept;

/// Base of every error the library throws. The code survives rethrowing with
/// extra context, so callers can classify failures without RTTI.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Episode that was being evaluated when the error surfaced, if any.
  std::optional<std::int64_t> episode_index;

 private:
  Errc code_;
};

#define FSB_DEFINE_ERROR(Name, code_value)                  \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& message)               \
        : Error(Errc::code_value, message) {}               \
  };

FSB_DEFINE_ERROR(ValidationError, validation)
FSB_DEFINE_ERROR(IoError, io)
FSB_DEFINE_ERROR(FormatError, format)
FSB_DEFINE_ERROR(CorruptionError, corruption)
FSB_DEFINE_ERROR(MappingError, mapping)
FSB_DEFINE_ERROR(EmptyResultError, empty_result)
FSB_DEFINE_ERROR(DimensionError, dimension)
FSB_DEFINE_ERROR(InfeasibleSpecError, infeasible_spec)
FSB_DEFINE_ERROR(ProtocolError, protocol)
FSB_DEFINE_ERROR(DomainError, domain)
FSB_DEFINE_ERROR(InsufficientDataError, insufficient_data)
FSB_DEFINE_ERROR(ConfigError, config)

#undef FSB_DEFINE_ERROR

class DegenerateVectorError : public Error {
 public:
  explicit DegenerateVectorError(std::int64_t row)
      : DegenerateVectorError(row, "zero-norm vector at row " + std::to_string(row)) {}
  DegenerateVectorError(std::int64_t row, const std::string& message)
      : Error(Errc::degenerate_vector, message), row_(row) {}

  std::int64_t row() const noexcept { return row_; }

 private:
  std::int64_t row_;
};

class InfeasibleQueryError : public Error {
 public:
  InfeasibleQueryError(std::int64_t requested, std::int64_t max_feasible)
      : InfeasibleQueryError(max_feasible,
                             "query count " + std::to_string(requested) +
                                 " exceeds the remaining pool; maximum feasible query count is " +
                                 std::to_string(max_feasible)) {}
  InfeasibleQueryError(std::int64_t max_feasible, const std::string& message)
      : Error(Errc::infeasible_query, message), max_feasible_(max_feasible) {}

  std::int64_t max_feasible() const noexcept { return max_feasible_; }

 private:
  std::int64_t max_feasible_;
};

/// Rethrows `e` as its own concrete type with `prefix` in front of the
/// message. The episode index is kept unless a new one is given.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& prefix,
                                       std::optional<std::int64_t> episode_index = std::nullopt);

/// Process exit code for a failure of the given kind:
/// 2 config, 3 data/format, 4 infeasible protocol.
int exit_code_for(Errc code) noexcept;

}  // namespace fsb
