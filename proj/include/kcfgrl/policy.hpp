#ifndef KCFGRL_POLICY_HPP
#define KCFGRL_POLICY_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kcfgrl/config_space.hpp"
#include "kcfgrl/env.hpp"
#include "kcfgrl/rng.hpp"

namespace kcfgrl {

// Canonical answer enumeration per group: Bool -> Yes/No for the first
// candidate; Choice -> one answer per candidate; Value -> domain endpoints
// plus midpoint (all literals for finite sets); Menu -> all non-empty
// subsets up to 4 candidates, singletons plus the full set beyond that.
// Every enumerated answer is valid for its group by construction.
struct ActionTable {
  std::vector<std::vector<Answer>> answers;  // [group][k]
  std::vector<std::size_t> offsets;          // logit offset per group

  static ActionTable build(const ConfigSpace& space, const std::vector<ConfigGroup>& groups);

  std::size_t group_count() const { return answers.size(); }
  std::size_t group_size(std::size_t g) const { return answers[g].size(); }
  std::size_t total_dim() const;
  std::size_t flat_index(std::size_t g, std::size_t k) const { return offsets[g] + k; }
};

// Flat logit vector, one entry per (group, canonical answer), plus the
// frozen old-policy copy used for probability ratios.
struct PolicyParams {
  std::vector<double> theta;
  std::optional<std::vector<double>> snapshot;

  void refresh_snapshot() { snapshot = theta; }
};

struct ActionDistribution {
  std::size_t group_index = 0;
  std::vector<double> probs;  // nonnegative, sums to 1
};

// Logits drawn i.i.d. uniform in [-0.01, 0.01]; deterministic per seed.
// The snapshot starts equal to theta.
PolicyParams init_params(const ActionTable& table, std::uint64_t seed);

// Numerically stabilized softmax over one group's logits.
ActionDistribution action_probs(const PolicyParams& params, const ActionTable& table,
                                std::size_t group_index);

struct SampledAction {
  std::size_t answer_index = 0;
  double prob_new = 0.0;  // probability under theta
  double prob_old = 0.0;  // probability under the snapshot
};

// Inverse-CDF sample from action_probs; one rng draw. Requires the snapshot
// to be present (ratios are always recorded).
SampledAction sample_action(const PolicyParams& params, const ActionTable& table,
                            std::size_t group_index, SplitMix64& rng);

// Gradient of log softmax w.r.t. the group's logits: one_hot(answer) - probs.
std::vector<double> log_prob_grad(const PolicyParams& params, const ActionTable& table,
                                  std::size_t group_index, std::size_t answer_index);

// ---------------------------------------------------------------------------
// Emission layer

struct Emission {
  std::string raw;
  std::size_t answer_index = 0;
  double prob_new = 0.0;
  double prob_old = 0.0;
};

// Renders the instruction prompt for a group (used by the external adapter).
std::string render_prompt(const ConfigGroup& group);

// The toy policy emission: a well-formed think/tool_call/answer response
// around the sampled canonical answer. With probability format_noise the
// emission is deliberately malformed to exercise the format reward.
class ToyPolicy {
 public:
  ToyPolicy(const ActionTable& table, double format_noise = 0.0)
      : table_(&table), format_noise_(format_noise) {}

  Emission emit(const PolicyParams& params, std::size_t group_index, SplitMix64& rng) const;
  // Emission text for an already-chosen answer (the trainer selects the
  // action, the policy renders it).
  std::string render_emission(std::size_t group_index, std::size_t answer_index,
                              SplitMix64& rng) const;

  double format_noise() const { return format_noise_; }
  const ActionTable& table() const { return *table_; }

 private:
  const ActionTable* table_;
  double format_noise_;
};

// ---------------------------------------------------------------------------
// External completion adapter

struct CompletionError {
  bool retryable = false;
  std::string message;
};

struct CompletionOutcome {
  std::optional<std::string> text;  // set on success
  std::optional<CompletionError> error;
};

// Contract for an external text-completion policy: prompt in, text out.
// Such policies are scored through the same reward path as the toy policy
// but never participate in gradient computation.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionOutcome complete(const std::string& prompt, int max_tokens) = 0;
};

// POSTs {"prompt","max_tokens"} to <host,port>/complete and expects
// {"text"} back. Transport failures come back as retryable errors.
class HttpCompletionClient : public CompletionClient {
 public:
  HttpCompletionClient(std::string host, int port, std::string path = "/complete");
  ~HttpCompletionClient() override;
  CompletionOutcome complete(const std::string& prompt, int max_tokens) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
};

// Emission via an external completion policy; returns the endpoint text
// verbatim (no probabilities are available for external policies).
CompletionOutcome emit_response(CompletionClient& client, const ConfigGroup& group,
                                int max_tokens = 512);

}  // namespace kcfgrl

#endif
