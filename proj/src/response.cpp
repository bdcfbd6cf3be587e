#include "kcfgrl/response.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "kcfgrl/error.hpp"

namespace kcfgrl {

namespace {

enum class Token {
  ThinkOpen,
  ThinkClose,
  ToolOpen,
  ToolClose,
  AnswerOpen,
  AnswerClose,
};

struct TokenHit {
  Token token;
  std::size_t pos;
  std::size_t len;
};

constexpr std::array<std::pair<Token, std::string_view>, 6> kTokens{{
    {Token::ThinkOpen, "<think>"},
    {Token::ThinkClose, "</think>"},
    {Token::ToolOpen, "<tool_call>"},
    {Token::ToolClose, "</tool_call>"},
    {Token::AnswerOpen, "<answer>"},
    {Token::AnswerClose, "</answer>"},
}};

std::vector<TokenHit> scan_tokens(std::string_view raw) {
  std::vector<TokenHit> hits;
  std::size_t i = 0;
  while (i < raw.size()) {
    bool matched = false;
    if (raw[i] == '<') {
      for (const auto& [tok, text] : kTokens) {
        if (raw.substr(i, text.size()) == text) {
          hits.push_back(TokenHit{tok, i, text.size()});
          i += text.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  return hits;
}

bool whitespace_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::optional<FormatFailure> check_counts(const std::vector<TokenHit>& hits) {
  std::size_t n_think_open = 0, n_think_close = 0, n_ans_open = 0, n_ans_close = 0,
              n_tool_open = 0, n_tool_close = 0;
  for (const auto& h : hits) {
    switch (h.token) {
      case Token::ThinkOpen: ++n_think_open; break;
      case Token::ThinkClose: ++n_think_close; break;
      case Token::ToolOpen: ++n_tool_open; break;
      case Token::ToolClose: ++n_tool_close; break;
      case Token::AnswerOpen: ++n_ans_open; break;
      case Token::AnswerClose: ++n_ans_close; break;
    }
  }
  if (n_think_open == 0 && n_think_close == 0)
    return FormatFailure{FormatFault::MissingTag, "no <think> block"};
  if (n_ans_open == 0 && n_ans_close == 0)
    return FormatFailure{FormatFault::MissingTag, "no <answer> block"};
  if (n_think_open != n_think_close)
    return FormatFailure{FormatFault::UnbalancedTag, "unbalanced <think>"};
  if (n_ans_open != n_ans_close)
    return FormatFailure{FormatFault::UnbalancedTag, "unbalanced <answer>"};
  if (n_tool_open != n_tool_close)
    return FormatFailure{FormatFault::UnbalancedTag, "unbalanced <tool_call>"};
  if (n_think_open > 1)
    return FormatFailure{FormatFault::DuplicateTag, "more than one <think> block"};
  if (n_ans_open > 1)
    return FormatFailure{FormatFault::DuplicateTag, "more than one <answer> block"};
  return std::nullopt;
}

}  // namespace

ParseResult parse_response(const std::string& raw) {
  const std::vector<TokenHit> hits = scan_tokens(raw);

  if (auto fail = check_counts(hits)) return *fail;

  // Expected token sequence:
  //   <think> </think> (<tool_call> </tool_call>)* <answer> </answer>
  std::vector<Token> expected{Token::ThinkOpen, Token::ThinkClose};
  const std::size_t n_tool_pairs = (hits.size() - 4) / 2;
  for (std::size_t i = 0; i < n_tool_pairs; ++i) {
    expected.push_back(Token::ToolOpen);
    expected.push_back(Token::ToolClose);
  }
  expected.push_back(Token::AnswerOpen);
  expected.push_back(Token::AnswerClose);

  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].token != expected[i])
      return FormatFailure{FormatFault::OutOfOrder, "tag blocks out of order"};
  }

  // Only whitespace may appear outside the blocks.
  auto gap = [&raw](std::size_t from, std::size_t to) {
    return std::string_view(raw).substr(from, to - from);
  };
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < hits.size(); i += 2) {
    if (!whitespace_only(gap(cursor, hits[i].pos)))
      return FormatFailure{FormatFault::StrayText, "text outside tag blocks"};
    cursor = hits[i + 1].pos + hits[i + 1].len;
  }
  if (!whitespace_only(gap(cursor, raw.size())))
    return FormatFailure{FormatFault::StrayText, "text after </answer>"};

  AgentResponse resp;
  resp.raw = raw;
  auto inner = [&raw](const TokenHit& open, const TokenHit& close) {
    return raw.substr(open.pos + open.len, close.pos - (open.pos + open.len));
  };
  resp.think = inner(hits[0], hits[1]);
  for (std::size_t i = 2; i + 2 < hits.size(); i += 2)
    resp.tool_calls.push_back(inner(hits[i], hits[i + 1]));
  resp.answer = inner(hits[hits.size() - 2], hits[hits.size() - 1]);
  return resp;
}

double format_reward(const ParseResult& parsed) {
  return std::holds_alternative<AgentResponse>(parsed) ? 1.0 : 0.0;
}

std::string render_answer(const Answer& answer) {
  if (const auto* m = std::get_if<MenuAnswer>(&answer)) {
    if (m->symbols.empty()) throw_data("cannot render an empty Menu answer");
  }
  if (const auto* b = std::get_if<BoolAnswer>(&answer)) {
    if (b->symbol.empty()) throw_data("cannot render a Bool answer without a symbol");
  }
  if (const auto* c = std::get_if<ChoiceAnswer>(&answer)) {
    if (c->symbol.empty()) throw_data("cannot render a Choice answer without a symbol");
  }
  if (const auto* v = std::get_if<ValueAnswer>(&answer)) {
    if (v->symbol.empty()) throw_data("cannot render a Value answer without a symbol");
  }
  return answer_to_json(answer).dump();
}

std::optional<Answer> parse_answer(const std::string& text, ConfigKind expected) {
  std::string_view sv(text);
  while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.front()))) sv.remove_prefix(1);
  while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back()))) sv.remove_suffix(1);
  if (sv.empty()) return std::nullopt;

  nlohmann::json j = nlohmann::json::parse(sv, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return std::nullopt;
  return answer_from_json(j, expected);
}

}  // namespace kcfgrl
