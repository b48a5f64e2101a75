#pragma once

#include <string>
#include <vector>

#include "wstypist/env.hpp"
#include "wstypist/metrics.hpp"
#include "wstypist/policy.hpp"

namespace wst {

struct EvalOutput {
  std::vector<TypingRecord> records;
  MetricReport report;
};

// Greedy rollout of `n_words` episodes at fixed cognitive parameters.
// Word choice and environment noise derive from `seed`, so repeated calls
// reproduce the same records.
inline EvalOutput evaluate_policy(const PolicyParams& params, const SuggestEngine& engine,
                                  const EnvConfig& cfg, const WordSet& words,
                                  const CognitiveParams& cparams, int n_words, uint64_t seed) {
  TypingEnv env(engine, cfg);
  Rng word_rng(derive_seed(seed, "eval-words"));
  Rng act_rng(derive_seed(seed, "eval-act"));  // unused under greedy, kept for signature parity
  EvalOutput out;
  out.records.reserve(static_cast<size_t>(n_words));
  for (int i = 0; i < n_words; ++i) {
    const std::string& word = sample_word(words, word_rng);
    Observation obs = env.reset(word, cparams, derive_seed(seed, "eval-env", i));
    bool done = false;
    int guard = 0;
    while (!done && guard++ < cfg.max_steps + 2) {
      const auto enc = encode_observation(obs, cfg.variant);
      const ActResult ar = act(params, enc, act_rng, /*greedy=*/true);
      const StepResult r = env.step(ar.action);
      obs = r.obs;
      done = r.done;
    }
    out.records.push_back(env.record());
  }
  out.report = compute_report(out.records);
  return out;
}

}  // namespace wst
