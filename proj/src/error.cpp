#include "pfield/error.hpp"

namespace pfield {

ParseError::ParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

StrideError::StrideError(long long agent_id, const std::string& what)
    : DataError("agent " + std::to_string(agent_id) + ": " + what), agent_id_(agent_id) {}

}  // namespace pfield
