#ifndef KCFGRL_RESPONSE_HPP
#define KCFGRL_RESPONSE_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kcfgrl/config_space.hpp"

namespace kcfgrl {

// Parsed policy emission: exactly one <think> block, zero or more
// <tool_call> blocks, one <answer> block, in that order, with nothing but
// whitespace between blocks.
struct AgentResponse {
  std::string think;
  std::vector<std::string> tool_calls;
  std::string answer;
  std::string raw;
};

enum class FormatFault {
  MissingTag,
  UnbalancedTag,
  DuplicateTag,
  OutOfOrder,
  StrayText,
};

struct FormatFailure {
  FormatFault fault = FormatFault::MissingTag;
  std::string detail;
};

using ParseResult = std::variant<AgentResponse, FormatFailure>;

ParseResult parse_response(const std::string& raw);

// Indicator of parse success: 1 iff the emission matched the template.
double format_reward(const ParseResult& parsed);

// Canonical answer text emitted inside <answer> tags. Inverse of
// parse_answer on its own output.
std::string render_answer(const Answer& answer);

// Parses answer text of the expected type; tolerant of surrounding
// whitespace only. nullopt = invalid (consumed by the answer reward as a
// zero-score proposal).
std::optional<Answer> parse_answer(const std::string& text, ConfigKind expected);

}  // namespace kcfgrl

#endif
