#include "kcfgrl/policy.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>

#include "kcfgrl/error.hpp"
#include "kcfgrl/response.hpp"

namespace kcfgrl {

namespace {

std::vector<Answer> enumerate_group(const ConfigSpace& space, const ConfigGroup& group) {
  std::vector<Answer> out;
  switch (group.type) {
    case ConfigKind::Bool: {
      const std::string& sym = group.candidates.front();
      out.push_back(BoolAnswer{sym, true});
      out.push_back(BoolAnswer{sym, false});
      break;
    }
    case ConfigKind::Choice: {
      for (const auto& c : group.candidates) out.push_back(ChoiceAnswer{c});
      break;
    }
    case ConfigKind::Menu: {
      const auto& cands = group.candidates;
      if (cands.size() <= 4) {
        for (std::size_t mask = 1; mask < (std::size_t{1} << cands.size()); ++mask) {
          MenuAnswer m;
          for (std::size_t i = 0; i < cands.size(); ++i)
            if (mask & (std::size_t{1} << i)) m.symbols.push_back(cands[i]);
          std::sort(m.symbols.begin(), m.symbols.end());
          out.push_back(std::move(m));
        }
      } else {
        for (const auto& c : cands) out.push_back(MenuAnswer{{c}});
        MenuAnswer full{cands};
        std::sort(full.symbols.begin(), full.symbols.end());
        out.push_back(std::move(full));
      }
      break;
    }
    case ConfigKind::Value: {
      const std::string& sym = group.candidates.front();
      for (const auto& v : space.at(sym).domain_values())
        out.push_back(ValueAnswer{sym, v});
      break;
    }
  }
  return out;
}

}  // namespace

ActionTable ActionTable::build(const ConfigSpace& space, const std::vector<ConfigGroup>& groups) {
  ActionTable table;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    if (g.candidates.empty()) throw_data("ActionTable: group without candidates");
    table.offsets.push_back(offset);
    table.answers.push_back(enumerate_group(space, g));
    if (table.answers.back().empty()) throw_data("ActionTable: group enumerated no answers");
    offset += table.answers.back().size();
  }
  return table;
}

std::size_t ActionTable::total_dim() const {
  std::size_t n = 0;
  for (const auto& a : answers) n += a.size();
  return n;
}

PolicyParams init_params(const ActionTable& table, std::uint64_t seed) {
  SplitMix64 rng(seed);
  PolicyParams params;
  params.theta.resize(table.total_dim());
  for (auto& t : params.theta) t = rng.next_double(-0.01, 0.01);
  params.refresh_snapshot();
  return params;
}

namespace {

std::vector<double> softmax_of(const std::vector<double>& logits, std::size_t begin,
                               std::size_t count) {
  std::vector<double> probs(count);
  double hi = logits[begin];
  for (std::size_t i = 1; i < count; ++i) hi = std::max(hi, logits[begin + i]);
  double z = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    probs[i] = std::exp(logits[begin + i] - hi);
    z += probs[i];
  }
  for (auto& p : probs) p /= z;
  return probs;
}

}  // namespace

ActionDistribution action_probs(const PolicyParams& params, const ActionTable& table,
                                std::size_t group_index) {
  if (group_index >= table.group_count()) throw_usage("action_probs: group index out of range");
  if (params.theta.size() != table.total_dim())
    throw_usage("action_probs: params dimension mismatch");
  ActionDistribution dist;
  dist.group_index = group_index;
  dist.probs = softmax_of(params.theta, table.offsets[group_index], table.group_size(group_index));
  return dist;
}

SampledAction sample_action(const PolicyParams& params, const ActionTable& table,
                            std::size_t group_index, SplitMix64& rng) {
  if (!params.snapshot) throw_usage("sample_action: snapshot (old policy) not set");
  ActionDistribution dist = action_probs(params, table, group_index);

  const double u = rng.next_double();
  std::size_t k = dist.probs.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    acc += dist.probs[i];
    if (u < acc) {
      k = i;
      break;
    }
  }

  std::vector<double> old_probs = softmax_of(*params.snapshot, table.offsets[group_index],
                                             table.group_size(group_index));
  return SampledAction{k, dist.probs[k], old_probs[k]};
}

std::vector<double> log_prob_grad(const PolicyParams& params, const ActionTable& table,
                                  std::size_t group_index, std::size_t answer_index) {
  ActionDistribution dist = action_probs(params, table, group_index);
  if (answer_index >= dist.probs.size()) throw_usage("log_prob_grad: unknown answer index");
  std::vector<double> grad(dist.probs.size());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = (i == answer_index ? 1.0 : 0.0) - dist.probs[i];
  return grad;
}

// ---------------------------------------------------------------------------

std::string render_prompt(const ConfigGroup& group) {
  std::string prompt =
      "Kernel tuning assistant. Reason inside <think></think> tags, query the "
      "knowledge base inside <tool_call></tool_call> tags when needed, and put "
      "the final decision inside <answer></answer> tags.\n";
  prompt += "Tuning target: " + group.question + "\n";
  prompt += std::string("Group type: ") + to_string(group.type) + "\n";
  prompt += "Candidates:";
  for (const auto& c : group.candidates) prompt += " " + c;
  prompt += "\n";
  return prompt;
}

Emission ToyPolicy::emit(const PolicyParams& params, std::size_t group_index,
                         SplitMix64& rng) const {
  SampledAction s = sample_action(params, *table_, group_index, rng);
  Emission e;
  e.answer_index = s.answer_index;
  e.prob_new = s.prob_new;
  e.prob_old = s.prob_old;
  e.raw = render_emission(group_index, s.answer_index, rng);
  return e;
}

std::string ToyPolicy::render_emission(std::size_t group_index, std::size_t answer_index,
                                       SplitMix64& rng) const {
  const Answer& answer = table_->answers[group_index][answer_index];
  const std::string body = render_answer(answer);
  const std::string think = "group " + std::to_string(group_index) + ": option " +
                            std::to_string(answer_index);

  std::string sym;
  if (const auto* b = std::get_if<BoolAnswer>(&answer)) sym = b->symbol;
  else if (const auto* c = std::get_if<ChoiceAnswer>(&answer)) sym = c->symbol;
  else if (const auto* m = std::get_if<MenuAnswer>(&answer)) sym = m->symbols.front();
  else sym = std::get<ValueAnswer>(answer).symbol;

  const bool corrupt = format_noise_ > 0.0 && rng.next_double() < format_noise_;
  std::string raw = "<think>" + think + "</think><tool_call>" + sym + "</tool_call><answer>" +
                    body + "</answer>";
  if (!corrupt) return raw;

  switch (rng.next_below(4)) {
    case 0:  // unbalanced answer tag
      return "<think>" + think + "</think><answer>" + body;
    case 1:  // answer before think
      return "<answer>" + body + "</answer><think>" + think + "</think>";
    case 2:  // duplicated think block
      return "<think>" + think + "</think><think>again</think><answer>" + body + "</answer>";
    default:  // stray text between blocks
      return "<think>" + think + "</think>unquoted remark<answer>" + body + "</answer>";
  }
}

// ---------------------------------------------------------------------------

HttpCompletionClient::HttpCompletionClient(std::string host, int port, std::string path)
    : host_(std::move(host)), port_(port), path_(std::move(path)) {}

HttpCompletionClient::~HttpCompletionClient() = default;

CompletionOutcome HttpCompletionClient::complete(const std::string& prompt, int max_tokens) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(30, 0);

  nlohmann::json req{{"prompt", prompt}, {"max_tokens", max_tokens}};
  auto res = client.Post(path_, req.dump(), "application/json");

  CompletionOutcome out;
  if (!res) {
    out.error = CompletionError{true, "transport failure: " + httplib::to_string(res.error())};
    return out;
  }
  if (res->status != 200) {
    out.error = CompletionError{res->status >= 500,
                                "endpoint returned status " + std::to_string(res->status)};
    return out;
  }
  nlohmann::json body = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.is_object() || !body.contains("text") ||
      !body["text"].is_string()) {
    out.error = CompletionError{false, "endpoint response missing \"text\""};
    return out;
  }
  out.text = body["text"].get<std::string>();
  return out;
}

CompletionOutcome emit_response(CompletionClient& client, const ConfigGroup& group,
                                int max_tokens) {
  return client.complete(render_prompt(group), max_tokens);
}

}  // namespace kcfgrl
