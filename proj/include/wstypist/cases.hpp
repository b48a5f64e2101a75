#pragma once

#include <future>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "wstypist/config.hpp"
#include "wstypist/eval.hpp"
#include "wstypist/fit.hpp"
#include "wstypist/policy.hpp"

namespace wst {

struct CaseRow {
  std::string condition;
  int replicate = -1;  // -1 marks an aggregate row
  std::map<std::string, double> values;
};

struct CaseResult {
  std::string case_id;
  std::vector<std::string> columns;
  std::vector<CaseRow> rows;

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write case csv: " + path);
    out << "condition,replicate";
    for (const auto& c : columns) out << "," << c;
    out << "\n";
    for (const auto& r : rows) {
      out << r.condition << "," << (r.replicate < 0 ? std::string("mean") : std::to_string(r.replicate));
      for (const auto& c : columns) {
        out << ",";
        auto it = r.values.find(c);
        if (it != r.values.end()) out << it->second;
      }
      out << "\n";
    }
  }

  json to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
      json jr{{"condition", r.condition}, {"replicate", r.replicate}};
      for (const auto& [k, v] : r.values) jr[k] = v;
      rows_json.push_back(jr);
    }
    return json{{"case", case_id}, {"columns", columns}, {"rows", rows_json}};
  }

  // Mean over replicate rows of one condition.
  double mean_of(const std::string& condition, const std::string& column) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows) {
      if (r.condition != condition || r.replicate < 0) continue;
      auto it = r.values.find(column);
      if (it == r.values.end()) continue;
      sum += it->second;
      ++n;
    }
    if (n == 0) throw std::runtime_error("case: no rows for " + condition + "/" + column);
    return sum / n;
  }
};

// Runs `n` independent jobs with at most `jobs` in flight; results land by
// index, so the outcome does not depend on scheduling.
template <typename Fn>
inline void parallel_for(int n, int jobs, Fn&& fn) {
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> inflight;
  int next = 0;
  while (next < n || !inflight.empty()) {
    while (next < n && static_cast<int>(inflight.size()) < jobs)
      inflight.push_back(std::async(std::launch::async, fn, next++));
    inflight.front().get();
    inflight.erase(inflight.begin());
  }
}

struct CaseContext {
  const Lexicon& lex;
  RunConfig cfg;
  WordSet train_words;
  WordSet cap_words;
  int replicates = 4;
  CognitiveParams eval_params;  // cognitive profile used for greedy evaluation
  uint64_t seed = 1;
  int jobs = 1;
  int finetune_episodes = 1500;  // upper bound; early stopping usually ends sooner
};

inline Checkpoint train_agent(const CaseContext& ctx, const EnvConfig& env_cfg,
                              const WordSet& words, int episodes, uint64_t seed) {
  SuggestEngine engine(ctx.lex, env_cfg.suggest);
  TypingRolloutEnv env(engine, env_cfg, words);
  TrainConfig tc = ctx.cfg.train;
  tc.episodes = episodes;
  tc.seed = seed;
  return train(env, tc).checkpoint;
}

inline Checkpoint finetune_agent(const CaseContext& ctx, const Checkpoint& base,
                                 const EnvConfig& env_cfg, const WordSet& words, uint64_t seed) {
  SuggestEngine engine(ctx.lex, env_cfg.suggest);
  TypingRolloutEnv env(engine, env_cfg, words);
  TrainConfig tc = ctx.cfg.train;
  tc.episodes = ctx.finetune_episodes;
  tc.seed = seed;
  return fine_tune(base, env, tc).checkpoint;
}

inline EvalOutput eval_agent(const CaseContext& ctx, const Checkpoint& ckpt,
                             const EnvConfig& env_cfg, const WordSet& words, uint64_t seed) {
  SuggestEngine engine(ctx.lex, env_cfg.suggest);
  return evaluate_policy(ckpt.params, engine, env_cfg, words, ctx.eval_params,
                         ctx.cfg.eval_words, seed);
}

inline void append_aggregate_rows(CaseResult& result) {
  std::vector<std::string> conditions;
  for (const auto& r : result.rows)
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end())
      conditions.push_back(r.condition);
  for (const auto& c : conditions) {
    CaseRow agg;
    agg.condition = c;
    agg.replicate = -1;
    for (const auto& col : result.columns) agg.values[col] = result.mean_of(c, col);
    result.rows.push_back(agg);
  }
}

inline void fill_metric_columns(CaseRow& row, const MetricReport& rep) {
  row.values["picked"] = rep.picked;
  row.values["failed"] = rep.failed;
  row.values["start"] = rep.start;
  row.values["gaze_sugg"] = rep.gaze_sugg;
  row.values["gaze_kbd"] = rep.gaze_kbd;
  row.values["bpc"] = rep.bpc;
  row.values["uer"] = rep.uer;
  row.values["wpm"] = rep.wpm;
  row.values["ks"] = rep.ks;
}

// ---- 1. engine accuracy sweep -------------------------------------------------

inline CaseResult run_accuracy_sweep(const CaseContext& ctx,
                                     const std::vector<Checkpoint>& base,
                                     const std::vector<double>& levels) {
  CaseResult result;
  result.case_id = "accuracy-sweep";
  result.columns = {"picked", "failed", "ks", "gaze_sugg", "wpm", "uer"};
  const int n_jobs = static_cast<int>(levels.size()) * ctx.replicates;
  std::vector<CaseRow> rows(static_cast<size_t>(n_jobs));
  parallel_for(n_jobs, ctx.jobs, [&](int j) {
    const int li = j / ctx.replicates, r = j % ctx.replicates;
    const double level = levels[static_cast<size_t>(li)];
    EnvConfig env_cfg = ctx.cfg.env;
    env_cfg.suggest.mode = SuggestMode::AccuracyControlled;
    env_cfg.suggest.target_accuracy = level;
    const uint64_t s = derive_seed(ctx.seed, "acc-sweep", static_cast<uint64_t>(j));
    const Checkpoint ck = finetune_agent(ctx, base[static_cast<size_t>(r)], env_cfg,
                                         ctx.train_words, s);
    const EvalOutput out = eval_agent(ctx, ck, env_cfg, ctx.train_words, derive_seed(s, "eval"));
    CaseRow row;
    char label[32];
    std::snprintf(label, sizeof label, "%.2f", level);
    row.condition = label;
    row.replicate = r;
    row.values["picked"] = out.report.picked;
    row.values["failed"] = out.report.failed;
    row.values["ks"] = out.report.ks;
    row.values["gaze_sugg"] = out.report.gaze_sugg;
    row.values["wpm"] = out.report.wpm;
    row.values["uer"] = out.report.uer;
    rows[static_cast<size_t>(j)] = std::move(row);
  });
  result.rows = std::move(rows);
  append_aggregate_rows(result);
  return result;
}

// ---- 2. length priority --------------------------------------------------------

inline CaseResult run_length_priority(const CaseContext& ctx,
                                      const std::vector<Checkpoint>& base) {
  CaseResult result;
  result.case_id = "length-priority";
  result.columns = {"picked", "failed", "gaze_sugg", "wpm", "ks"};
  struct Condition {
    std::string name;
    std::optional<SuggestMode> mode;  // empty = evaluate the base system as-is
  };
  const std::vector<Condition> conditions = {
      {"longer", SuggestMode::LengthDescending},
      {"average", std::nullopt},
      {"shorter", SuggestMode::LengthAscending},
  };

  // Both priorities must serve the same overall accuracy. Each condition's
  // coverage rate is the ratio of the common target (the smaller natural
  // accuracy) to its own natural accuracy.
  auto natural_accuracy = [&](SuggestMode mode) {
    SuggestionConfig scfg = ctx.cfg.env.suggest;
    scfg.mode = mode;
    scfg.target_accuracy.reset();
    return SuggestEngine(ctx.lex, scfg).measure_accuracy(ctx.train_words).accuracy;
  };
  const double nat_desc = natural_accuracy(SuggestMode::LengthDescending);
  const double nat_asc = natural_accuracy(SuggestMode::LengthAscending);
  const double matched = std::min(nat_desc, nat_asc);

  const int n_jobs = static_cast<int>(conditions.size()) * ctx.replicates;
  std::vector<CaseRow> rows(static_cast<size_t>(n_jobs));
  parallel_for(n_jobs, ctx.jobs, [&](int j) {
    const int ci = j / ctx.replicates, r = j % ctx.replicates;
    const Condition& cond = conditions[static_cast<size_t>(ci)];
    EnvConfig env_cfg = ctx.cfg.env;
    const uint64_t s = derive_seed(ctx.seed, "length-priority", static_cast<uint64_t>(j));
    Checkpoint ck = base[static_cast<size_t>(r)];
    if (cond.mode) {
      env_cfg.suggest.mode = *cond.mode;
      const double natural = *cond.mode == SuggestMode::LengthDescending ? nat_desc : nat_asc;
      env_cfg.suggest.target_accuracy = std::min(1.0, matched / natural);
      ck = finetune_agent(ctx, base[static_cast<size_t>(r)], env_cfg, ctx.train_words, s);
    }
    const EvalOutput out = eval_agent(ctx, ck, env_cfg, ctx.train_words, derive_seed(s, "eval"));
    CaseRow row;
    row.condition = cond.name;
    row.replicate = r;
    row.values["picked"] = out.report.picked;
    row.values["failed"] = out.report.failed;
    row.values["gaze_sugg"] = out.report.gaze_sugg;
    row.values["wpm"] = out.report.wpm;
    row.values["ks"] = out.report.ks;
    rows[static_cast<size_t>(j)] = std::move(row);
  });
  result.rows = std::move(rows);
  append_aggregate_rows(result);
  return result;
}

// ---- 3. capitalization priority -------------------------------------------------

inline double capitalized_skip_rate(const std::vector<TypingRecord>& records) {
  int cap_words = 0, skipped = 0;
  for (const auto& r : records) {
    if (!is_capitalized(r.target)) continue;
    ++cap_words;
    for (const auto& e : r.events)
      if (e.kind == EventKind::Keystroke && e.skip) {
        ++skipped;
        break;
      }
  }
  return cap_words > 0 ? static_cast<double>(skipped) / cap_words : 0.0;
}

inline std::pair<double, double> capitalized_pick_rates(const std::vector<TypingRecord>& records) {
  int cap_words = 0, picked = 0, failed = 0;
  for (const auto& r : records) {
    if (!is_capitalized(r.target)) continue;
    ++cap_words;
    bool picked_cap = false;
    for (const auto& e : r.events)
      if (e.kind == EventKind::Pick && is_capitalized(e.text)) picked_cap = true;
    if (picked_cap) ++picked;
    else if (fixated_sugg_region(r)) ++failed;
  }
  if (cap_words == 0) return {0.0, 0.0};
  return {static_cast<double>(picked) / cap_words, static_cast<double>(failed) / cap_words};
}

// Agents are trained from scratch on the baseline capitalization system
// (auto-correction off, stricter error exponent), then adapted to the high-
// and low-priority engines.
inline CaseResult run_capitalization(const CaseContext& ctx, int base_episodes) {
  CaseResult result;
  result.case_id = "capitalization";
  result.columns = {"picked_cap", "failed_cap", "skip_rate", "wpm"};

  EnvConfig base_cfg = ctx.cfg.env;
  base_cfg.variant = EnvVariant::Capitalization;
  base_cfg.suggest.mode = SuggestMode::Baseline;
  base_cfg.suggest.autocorrect_enabled = false;
  base_cfg.reward.beta = 2.0;

  std::vector<Checkpoint> base(static_cast<size_t>(ctx.replicates));
  parallel_for(ctx.replicates, ctx.jobs, [&](int r) {
    base[static_cast<size_t>(r)] =
        train_agent(ctx, base_cfg, ctx.cap_words, base_episodes,
                    derive_seed(ctx.seed, "cap-base", static_cast<uint64_t>(r)));
  });

  const std::vector<std::pair<std::string, SuggestMode>> conditions = {
      {"high", SuggestMode::CapHigh},
      {"baseline", SuggestMode::Baseline},
      {"low", SuggestMode::CapLow},
  };
  const int n_jobs = static_cast<int>(conditions.size()) * ctx.replicates;
  std::vector<CaseRow> rows(static_cast<size_t>(n_jobs));
  parallel_for(n_jobs, ctx.jobs, [&](int j) {
    const int ci = j / ctx.replicates, r = j % ctx.replicates;
    const auto& [name, mode] = conditions[static_cast<size_t>(ci)];
    EnvConfig env_cfg = base_cfg;
    env_cfg.suggest.mode = mode;
    const uint64_t s = derive_seed(ctx.seed, "cap-cond", static_cast<uint64_t>(j));
    Checkpoint ck = base[static_cast<size_t>(r)];
    if (mode != SuggestMode::Baseline) ck = finetune_agent(ctx, ck, env_cfg, ctx.cap_words, s);
    const EvalOutput out = eval_agent(ctx, ck, env_cfg, ctx.cap_words, derive_seed(s, "eval"));
    CaseRow row;
    row.condition = name;
    row.replicate = r;
    const auto [picked_cap, failed_cap] = capitalized_pick_rates(out.records);
    row.values["picked_cap"] = picked_cap;
    row.values["failed_cap"] = failed_cap;
    row.values["skip_rate"] = capitalized_skip_rate(out.records);
    row.values["wpm"] = out.report.wpm;
    rows[static_cast<size_t>(j)] = std::move(row);
  });
  result.rows = std::move(rows);
  append_aggregate_rows(result);
  return result;
}

// ---- 4. interface variants -------------------------------------------------------

inline double mean_gaze_shifts(const std::vector<TypingRecord>& records) {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) total += gaze_shift_count(r);
  return total / static_cast<double>(records.size());
}

inline CaseResult run_interface(const CaseContext& ctx, const std::vector<Checkpoint>& base) {
  CaseResult result;
  result.case_id = "interface";
  result.columns = {"picked", "failed", "gaze_input", "wpm", "ks", "gaze_shifts"};
  const std::vector<std::pair<std::string, EnvVariant>> conditions = {
      {"average", EnvVariant::Full},
      {"input-sugg", EnvVariant::InputSugg},
      {"input-sugg-shortcut", EnvVariant::InputSuggShortcut},
  };
  const int n_jobs = static_cast<int>(conditions.size()) * ctx.replicates;
  std::vector<CaseRow> rows(static_cast<size_t>(n_jobs));
  parallel_for(n_jobs, ctx.jobs, [&](int j) {
    const int ci = j / ctx.replicates, r = j % ctx.replicates;
    const auto& [name, variant] = conditions[static_cast<size_t>(ci)];
    EnvConfig env_cfg = ctx.cfg.env;
    env_cfg.variant = variant;
    const uint64_t s = derive_seed(ctx.seed, "interface", static_cast<uint64_t>(j));
    Checkpoint ck = base[static_cast<size_t>(r)];
    if (variant != EnvVariant::Full) ck = finetune_agent(ctx, ck, env_cfg, ctx.train_words, s);
    const EvalOutput out = eval_agent(ctx, ck, env_cfg, ctx.train_words, derive_seed(s, "eval"));
    CaseRow row;
    row.condition = name;
    row.replicate = r;
    row.values["picked"] = out.report.picked;
    row.values["failed"] = out.report.failed;
    row.values["gaze_input"] = gaze_ratio(out.records, Region::InputField);
    row.values["wpm"] = out.report.wpm;
    row.values["ks"] = out.report.ks;
    row.values["gaze_shifts"] = mean_gaze_shifts(out.records);
    rows[static_cast<size_t>(j)] = std::move(row);
  });
  result.rows = std::move(rows);
  append_aggregate_rows(result);
  return result;
}

// ---- 5. word-length analysis --------------------------------------------------------

inline CaseResult run_word_length_analysis(const CaseContext& ctx, const Checkpoint& ckpt,
                                           int words_per_eval = 1000) {
  CaseResult result;
  result.case_id = "word-length";
  result.columns = {"picked", "failed", "engine_accuracy", "n_words"};

  SuggestEngine engine(ctx.lex, ctx.cfg.env.suggest);
  const EvalOutput out =
      evaluate_policy(ckpt.params, engine, ctx.cfg.env, ctx.train_words, ctx.eval_params,
                      words_per_eval, derive_seed(ctx.seed, "word-length"));

  std::map<size_t, std::vector<TypingRecord>> by_length;
  for (const auto& r : out.records) by_length[to_lower(r.target).size()].push_back(r);
  std::map<size_t, WordSet> sets_by_length;
  for (const auto& w : ctx.train_words.words) {
    auto& set = sets_by_length[w.size()];
    set.label = "len";
    set.words.push_back(w);
  }

  for (const auto& [len, records] : by_length) {
    CaseRow row;
    row.condition = std::to_string(len);
    row.replicate = 0;
    row.values["picked"] = picked_rate(records);
    row.values["failed"] = failed_rate(records);
    auto it = sets_by_length.find(len);
    row.values["engine_accuracy"] =
        it != sets_by_length.end() ? engine.measure_accuracy(it->second).accuracy : 0.0;
    row.values["n_words"] = static_cast<double>(records.size());
    result.rows.push_back(std::move(row));
  }
  return result;
}

// ---- 6. ablations ---------------------------------------------------------------------

inline CaseResult run_ablations(const CaseContext& ctx, int episodes) {
  CaseResult result;
  result.case_id = "ablations";
  result.columns = {"picked", "failed", "start", "gaze_sugg", "gaze_kbd", "bpc", "uer", "wpm", "ks"};
  struct Config {
    std::string name;
    Ablations ablations;
  };
  const std::vector<Config> configs = {
      {"full", {}},
      {"no-ps", {.no_ps = true}},
      {"no-pk", {.no_pk = true}},
      {"no-com", {.no_com = true}},
  };
  const int n_jobs = static_cast<int>(configs.size()) * ctx.replicates;
  std::vector<CaseRow> rows(static_cast<size_t>(n_jobs));
  parallel_for(n_jobs, ctx.jobs, [&](int j) {
    const int ci = j / ctx.replicates, r = j % ctx.replicates;
    const Config& config = configs[static_cast<size_t>(ci)];
    EnvConfig env_cfg = ctx.cfg.env;
    env_cfg.ablations = config.ablations;
    // Matched seeds: replicate r shares its seed across all four configs.
    const uint64_t s = derive_seed(ctx.seed, "ablation", static_cast<uint64_t>(r));
    const Checkpoint ck = train_agent(ctx, env_cfg, ctx.train_words, episodes, s);
    const EvalOutput out = eval_agent(ctx, ck, env_cfg, ctx.train_words, derive_seed(s, "eval"));
    CaseRow row;
    row.condition = config.name;
    row.replicate = r;
    fill_metric_columns(row, out.report);
    rows[static_cast<size_t>(j)] = std::move(row);
  });
  result.rows = std::move(rows);
  append_aggregate_rows(result);
  return result;
}

}  // namespace wst
