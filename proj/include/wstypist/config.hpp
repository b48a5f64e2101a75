#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "wstypist/env.hpp"
#include "wstypist/policy.hpp"

namespace wst {

using nlohmann::json;

inline void merge_patch(json& base, const json& patch) { base.merge_patch(patch); }

inline json suggest_to_json(const SuggestionConfig& c) {
  json j{{"w_len", c.w_len},
         {"w_freq", c.w_freq},
         {"algo_slots", c.algo_slots},
         {"fuzzy_max_distance", c.fuzzy_max_distance},
         {"mode", to_string(c.mode)},
         {"appearance_fraction", c.appearance_fraction},
         {"autocorrect_enabled", c.autocorrect_enabled},
         {"autocorrect_success", c.autocorrect_success},
         {"cap_demotion", c.cap_demotion}};
  if (c.target_accuracy) j["target_accuracy"] = *c.target_accuracy;
  else j["target_accuracy"] = nullptr;
  return j;
}

inline SuggestionConfig suggest_from_json(const json& j) {
  SuggestionConfig c;
  c.w_len = j.value("w_len", c.w_len);
  c.w_freq = j.value("w_freq", c.w_freq);
  c.algo_slots = j.value("algo_slots", c.algo_slots);
  c.fuzzy_max_distance = j.value("fuzzy_max_distance", c.fuzzy_max_distance);
  if (j.contains("mode")) c.mode = suggest_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("target_accuracy") && !j.at("target_accuracy").is_null())
    c.target_accuracy = j.at("target_accuracy").get<double>();
  c.appearance_fraction = j.value("appearance_fraction", c.appearance_fraction);
  c.autocorrect_enabled = j.value("autocorrect_enabled", c.autocorrect_enabled);
  c.autocorrect_success = j.value("autocorrect_success", c.autocorrect_success);
  c.cap_demotion = j.value("cap_demotion", c.cap_demotion);
  return c;
}

inline json reward_to_json(const RewardConfig& c) {
  return json{{"beta", c.beta},
              {"gamma", c.gamma},
              {"lambda_c", c.lambda_c},
              {"shaping_enabled", c.shaping_enabled},
              {"shaping_backspace_penalty", c.shaping_backspace_penalty},
              {"shaping_anneal_fraction", c.shaping_anneal_fraction}};
}

inline RewardConfig reward_from_json(const json& j) {
  RewardConfig c;
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.lambda_c = j.value("lambda_c", c.lambda_c);
  c.shaping_enabled = j.value("shaping_enabled", c.shaping_enabled);
  c.shaping_backspace_penalty = j.value("shaping_backspace_penalty", c.shaping_backspace_penalty);
  c.shaping_anneal_fraction = j.value("shaping_anneal_fraction", c.shaping_anneal_fraction);
  return c;
}

inline json ranges_to_json(const ParamRanges& r) {
  return json{{"p_m", {r.p_m_lo, r.p_m_hi}},
              {"p_f", {r.p_f_lo, r.p_f_hi}},
              {"p_k", {r.p_k_lo, r.p_k_hi}},
              {"p_s", {r.p_s_lo, r.p_s_hi}}};
}

inline ParamRanges ranges_from_json(const json& j) {
  ParamRanges r;
  auto pair = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    lo = j.at(key).at(0).get<double>();
    hi = j.at(key).at(1).get<double>();
    if (lo > hi) throw std::runtime_error(std::string("param range inverted: ") + key);
  };
  pair("p_m", r.p_m_lo, r.p_m_hi);
  pair("p_f", r.p_f_lo, r.p_f_hi);
  pair("p_k", r.p_k_lo, r.p_k_hi);
  pair("p_s", r.p_s_lo, r.p_s_hi);
  return r;
}

inline json params_to_json(const CognitiveParams& p) {
  return json{{"p_m", p.p_m}, {"p_f", p.p_f}, {"p_k", p.p_k}, {"p_s", p.p_s}};
}

inline CognitiveParams params_from_json(const json& j) {
  CognitiveParams p;
  p.p_m = j.value("p_m", p.p_m);
  p.p_f = j.value("p_f", p.p_f);
  p.p_k = j.value("p_k", p.p_k);
  p.p_s = j.value("p_s", p.p_s);
  return p;
}

inline json env_to_json(const EnvConfig& c) {
  json ablations = json::array();
  if (c.ablations.no_ps) ablations.push_back("no-ps");
  if (c.ablations.no_pk) ablations.push_back("no-pk");
  if (c.ablations.no_com) ablations.push_back("no-com");
  return json{{"variant", to_string(c.variant)},
              {"ablations", ablations},
              {"gaze_shift_mean_ms", c.gaze_shift_mean_ms},
              {"gaze_shift_sd_ms", c.gaze_shift_sd_ms},
              {"pick_mean_ms", c.pick_mean_ms},
              {"pick_sd_ms", c.pick_sd_ms},
              {"pick_min_ms", c.pick_min_ms},
              {"err_kbd", c.err_kbd},
              {"err_sugg", c.err_sugg},
              {"err_input", c.err_input},
              {"eta", c.eta},
              {"keystroke_min_s", c.keystroke_min_s},
              {"keystroke_sd_factor", c.keystroke_sd_factor},
              {"max_steps", c.max_steps},
              {"suggest", suggest_to_json(c.suggest)},
              {"reward", reward_to_json(c.reward)},
              {"params", ranges_to_json(c.ranges)}};
}

inline Ablations ablations_from_json(const json& arr) {
  Ablations a;
  for (const auto& item : arr) {
    const std::string s = item.get<std::string>();
    if (s == "no-ps") a.no_ps = true;
    else if (s == "no-pk") a.no_pk = true;
    else if (s == "no-com") a.no_com = true;
    else throw std::runtime_error("unknown ablation: " + s);
  }
  return a;
}

inline EnvConfig env_from_json(const json& j) {
  EnvConfig c;
  if (j.contains("variant")) c.variant = env_variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("ablations")) c.ablations = ablations_from_json(j.at("ablations"));
  c.gaze_shift_mean_ms = j.value("gaze_shift_mean_ms", c.gaze_shift_mean_ms);
  c.gaze_shift_sd_ms = j.value("gaze_shift_sd_ms", c.gaze_shift_sd_ms);
  c.pick_mean_ms = j.value("pick_mean_ms", c.pick_mean_ms);
  c.pick_sd_ms = j.value("pick_sd_ms", c.pick_sd_ms);
  c.pick_min_ms = j.value("pick_min_ms", c.pick_min_ms);
  c.err_kbd = j.value("err_kbd", c.err_kbd);
  c.err_sugg = j.value("err_sugg", c.err_sugg);
  c.err_input = j.value("err_input", c.err_input);
  c.eta = j.value("eta", c.eta);
  c.keystroke_min_s = j.value("keystroke_min_s", c.keystroke_min_s);
  c.keystroke_sd_factor = j.value("keystroke_sd_factor", c.keystroke_sd_factor);
  c.max_steps = j.value("max_steps", c.max_steps);
  if (j.contains("suggest")) c.suggest = suggest_from_json(j.at("suggest"));
  if (j.contains("reward")) c.reward = reward_from_json(j.at("reward"));
  if (j.contains("params")) c.ranges = ranges_from_json(j.at("params"));
  return c;
}

inline json train_to_json(const TrainConfig& c) {
  json stages = json::array();
  for (const auto& s : c.curriculum) stages.push_back({s.progress, s.max_pick_distance});
  return json{{"episodes", c.episodes},
              {"lr", c.lr},
              {"clip_eps", c.clip_eps},
              {"gae_gamma", c.gae_gamma},
              {"gae_lambda", c.gae_lambda},
              {"epochs_per_batch", c.epochs_per_batch},
              {"batch_episodes", c.batch_episodes},
              {"minibatch", c.minibatch},
              {"entropy_coef", c.entropy_coef},
              {"value_coef", c.value_coef},
              {"max_grad_norm", c.max_grad_norm},
              {"mask_penalty", c.mask_penalty},
              {"curriculum", stages},
              {"seed", c.seed},
              {"hidden", c.hidden}};
}

inline TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.episodes = j.value("episodes", c.episodes);
  c.lr = j.value("lr", c.lr);
  c.clip_eps = j.value("clip_eps", c.clip_eps);
  c.gae_gamma = j.value("gae_gamma", c.gae_gamma);
  c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
  c.epochs_per_batch = j.value("epochs_per_batch", c.epochs_per_batch);
  c.batch_episodes = j.value("batch_episodes", c.batch_episodes);
  c.minibatch = j.value("minibatch", c.minibatch);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.value_coef = j.value("value_coef", c.value_coef);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.mask_penalty = j.value("mask_penalty", c.mask_penalty);
  if (j.contains("curriculum")) {
    c.curriculum.clear();
    for (const auto& s : j.at("curriculum"))
      c.curriculum.push_back({s.at(0).get<double>(), s.at(1).get<int>()});
  }
  c.seed = j.value("seed", c.seed);
  c.hidden = j.value("hidden", c.hidden);
  return c;
}

// Top-level run configuration: one merged document drives every subcommand,
// with command-line flags overriding single fields.
struct RunConfig {
  uint64_t seed = 1;
  std::string lexicon_path = "data/frequency_5k.tsv";
  std::string train_words_path = "data/wordset_train.txt";
  std::string cap_words_path = "data/wordset_cap.txt";
  std::string reference_path = "data/human_reference.csv";
  std::string out_dir = "runs";
  int jobs = 1;
  EnvConfig env;          // includes suggest, reward, param ranges
  TrainConfig train;
  int eval_words = 100;
  int fit_budget = 60;
  int fit_words = 100;
  int fit_bins = 32;

  json to_json() const {
    return json{{"seed", seed},
                {"lexicon", lexicon_path},
                {"train_words", train_words_path},
                {"cap_words", cap_words_path},
                {"reference_tables", reference_path},
                {"out_dir", out_dir},
                {"jobs", jobs},
                {"env", env_to_json(env)},
                {"train", train_to_json(train)},
                {"eval", {{"words", eval_words}}},
                {"fit", {{"budget", fit_budget}, {"words", fit_words}, {"bins", fit_bins}}}};
  }

  static RunConfig from_json(const json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.lexicon_path = j.value("lexicon", c.lexicon_path);
    c.train_words_path = j.value("train_words", c.train_words_path);
    c.cap_words_path = j.value("cap_words", c.cap_words_path);
    c.reference_path = j.value("reference_tables", c.reference_path);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("env")) c.env = env_from_json(j.at("env"));
    if (j.contains("train")) c.train = train_from_json(j.at("train"));
    if (j.contains("eval")) c.eval_words = j.at("eval").value("words", c.eval_words);
    if (j.contains("fit")) {
      c.fit_budget = j.at("fit").value("budget", c.fit_budget);
      c.fit_words = j.at("fit").value("words", c.fit_words);
      c.fit_bins = j.at("fit").value("bins", c.fit_bins);
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    in >> j;
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    out << to_json().dump(2) << "\n";
  }

  // Fingerprint over the behavior-relevant sections; checkpoints trained
  // under a different fingerprint trigger a warning at load time.
  std::string fingerprint() const {
    const std::string dump = env_to_json(env).dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : dump) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace wst
