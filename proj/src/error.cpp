#include "fsb/error.hpp"

namespace fsb {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::validation: return "validation error";
    case Errc::io: return "I/O error";
    case Errc::format: return "format error";
    case Errc::corruption: return "corruption error";
    case Errc::mapping: return "mapping error";
    case Errc::empty_result: return "empty-result error";
    case Errc::degenerate_vector: return "degenerate-vector error";
    case Errc::dimension: return "dimension error";
    case Errc::infeasible_spec: return "infeasible-spec error";
    case Errc::infeasible_query: return "infeasible-query error";
    case Errc::protocol: return "protocol error";
    case Errc::domain: return "domain error";
    case Errc::insufficient_data: return "insufficient-data error";
    case Errc::config: return "config error";
  }
  return "error";
}

namespace {

template <typename E>
[[noreturn]] void throw_tagged(E error, std::optional<std::int64_t> episode_index) {
  error.episode_index = episode_index;
  throw error;
}

}  // namespace

void rethrow_with_context(const Error& e, const std::string& prefix,
                          std::optional<std::int64_t> episode_index) {
  const std::string message = prefix + e.what();
  const auto index = episode_index ? episode_index : e.episode_index;
  switch (e.code()) {
    case Errc::validation: throw_tagged(ValidationError(message), index);
    case Errc::io: throw_tagged(IoError(message), index);
    case Errc::format: throw_tagged(FormatError(message), index);
    case Errc::corruption: throw_tagged(CorruptionError(message), index);
    case Errc::mapping: throw_tagged(MappingError(message), index);
    case Errc::empty_result: throw_tagged(EmptyResultError(message), index);
    case Errc::dimension: throw_tagged(DimensionError(message), index);
    case Errc::infeasible_spec: throw_tagged(InfeasibleSpecError(message), index);
    case Errc::protocol: throw_tagged(ProtocolError(message), index);
    case Errc::domain: throw_tagged(DomainError(message), index);
    case Errc::insufficient_data: throw_tagged(InsufficientDataError(message), index);
    case Errc::config: throw_tagged(ConfigError(message), index);
    case Errc::degenerate_vector: {
      const auto* d = dynamic_cast<const DegenerateVectorError*>(&e);
      throw_tagged(DegenerateVectorError(d ? d->row() : -1, message), index);
    }
    case Errc::infeasible_query: {
      const auto* q = dynamic_cast<const InfeasibleQueryError*>(&e);
      throw_tagged(InfeasibleQueryError(q ? q->max_feasible() : 0, message), index);
    }
  }
  throw_tagged(Error(e.code(), message), index);
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::config:
      return 2;
    case Errc::mapping:
    case Errc::empty_result:
    case Errc::infeasible_spec:
    case Errc::infeasible_query:
    case Errc::protocol:
      return 4;
    default:
      return 3;
  }
}

}  // namespace fsb
