#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wstypist/levenshtein.hpp"
#include "wstypist/lexicon.hpp"
#include "wstypist/record.hpp"
#include "wstypist/rng.hpp"
#include "wstypist/suggest.hpp"

namespace wst {

enum class EnvVariant { Full, NoSuggestions, NoAutocorrect, Capitalization, InputSugg, InputSuggShortcut };

inline const char* to_string(EnvVariant v) {
  switch (v) {
    case EnvVariant::Full: return "full";
    case EnvVariant::NoSuggestions: return "no-suggestions";
    case EnvVariant::NoAutocorrect: return "no-autocorrect";
    case EnvVariant::Capitalization: return "capitalization";
    case EnvVariant::InputSugg: return "input-sugg";
    case EnvVariant::InputSuggShortcut: return "input-sugg-shortcut";
  }
  return "?";
}

inline EnvVariant env_variant_from_string(std::string_view s) {
  if (s == "full") return EnvVariant::Full;
  if (s == "no-suggestions") return EnvVariant::NoSuggestions;
  if (s == "no-autocorrect") return EnvVariant::NoAutocorrect;
  if (s == "capitalization") return EnvVariant::Capitalization;
  if (s == "input-sugg") return EnvVariant::InputSugg;
  if (s == "input-sugg-shortcut") return EnvVariant::InputSuggShortcut;
  throw std::runtime_error("unknown env variant: " + std::string(s));
}

struct Ablations {
  bool no_ps = false;   // drop the suggestion-use reward term
  bool no_pk = false;   // disable the orthographic error channel
  bool no_com = false;  // hide completeness from the observation
};

struct CognitiveParams {
  double p_m = 0.1;   // memory decay rate, 1/s
  double p_f = 0.25;  // mean inter-keystroke interval, s
  double p_k = 0.4;   // linguistic knowledge in [0,1]
  double p_s = 0.6;   // suggestion reliance reward
};

// Training ranges for the cognitive parameters; also used to min-max scale
// them into the observation.
struct ParamRanges {
  double p_m_lo = 0.0, p_m_hi = 0.2;
  double p_f_lo = 0.15, p_f_hi = 0.35;
  double p_k_lo = 0.3, p_k_hi = 0.5;
  double p_s_lo = 0.5, p_s_hi = 0.7;

  CognitiveParams sample(Rng& rng) const {
    return {rng.uniform(p_m_lo, p_m_hi), rng.uniform(p_f_lo, p_f_hi),
            rng.uniform(p_k_lo, p_k_hi), rng.uniform(p_s_lo, p_s_hi)};
  }

  CognitiveParams midpoint() const {
    return {0.5 * (p_m_lo + p_m_hi), 0.5 * (p_f_lo + p_f_hi), 0.5 * (p_k_lo + p_k_hi),
            0.5 * (p_s_lo + p_s_hi)};
  }

  static double scale(double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  }

  std::array<double, 4> scale01(const CognitiveParams& p) const {
    return {scale(p.p_m, p_m_lo, p_m_hi), scale(p.p_f, p_f_lo, p_f_hi),
            scale(p.p_k, p_k_lo, p_k_hi), scale(p.p_s, p_s_lo, p_s_hi)};
  }
};

struct RewardConfig {
  double beta = 1.0;      // error-penalty exponent
  double gamma = 0.15;    // speed weight
  double lambda_c = 0.7;  // correctness exponent
  bool shaping_enabled = true;
  double shaping_backspace_penalty = -0.05;
  double shaping_anneal_fraction = 0.5;  // shaping active while progress < fraction
};

struct EnvConfig {
  EnvVariant variant = EnvVariant::Full;
  Ablations ablations;
  double gaze_shift_mean_ms = 200.0;
  double gaze_shift_sd_ms = 100.0;
  double pick_mean_ms = 760.0;
  double pick_sd_ms = 150.0;
  double pick_min_ms = 100.0;
  double err_kbd = 0.05;
  double err_sugg = 0.06;
  double err_input = 0.10;
  double eta = 0.05;            // orthographic error scale
  double keystroke_min_s = 0.03;
  double keystroke_sd_factor = 0.2;
  int max_steps = 30;
  SuggestionConfig suggest;
  RewardConfig reward;
  ParamRanges ranges;

  void validate() const {
    suggest.validate();
    if (max_steps <= 0) throw std::runtime_error("env: max_steps must be positive");
    for (double e : {err_kbd, err_sugg, err_input})
      if (e < 0.0 || e > 1.0) throw std::runtime_error("env: error rate out of [0,1]");
    if (eta < 0.0) throw std::runtime_error("env: eta must be >= 0");
  }
};

enum class Finger { Type = 0, Backspace = 1, Pick = 2, NoAct = 3 };

struct Action {
  Region gaze = Region::Keyboard;
  Finger finger = Finger::Type;
};

enum class SuggStatus { Unknown = 0, Yes = 1, No = 2 };

struct Observation {
  double w_l = 0.0;  // target length / longest lexicon word
  double w_f = 0.0;  // normalized target frequency
  Region gaze = Region::Keyboard;
  SuggStatus sugg = SuggStatus::Unknown;
  double certainty = 1.0;
  double correctness = 1.0;
  double completeness = 0.0;
  std::array<double, 4> params{};  // p_m, p_f, p_k, p_s scaled to [0,1]
  double cap_indicator = 0.0;      // capitalization variant only
};

inline int observation_dim(EnvVariant variant) {
  return variant == EnvVariant::Capitalization ? 16 : 15;
}

inline std::vector<double> encode_observation(const Observation& o, EnvVariant variant) {
  std::vector<double> x;
  x.reserve(observation_dim(variant));
  x.push_back(o.w_l);
  x.push_back(o.w_f);
  for (int r = 0; r < 3; ++r) x.push_back(static_cast<int>(o.gaze) == r ? 1.0 : 0.0);
  for (int s = 0; s < 3; ++s) x.push_back(static_cast<int>(o.sugg) == s ? 1.0 : 0.0);
  x.push_back(o.certainty);
  x.push_back(o.correctness);
  x.push_back(o.completeness);
  for (double p : o.params) x.push_back(p);
  if (variant == EnvVariant::Capitalization) x.push_back(o.cap_indicator);
  return x;
}

struct StepResult {
  Observation obs;
  double reward = 0.0;   // terminal episode reward, 0 mid-episode
  bool done = false;
  double shaping = 0.0;  // training-only shaping term, never part of `reward`
  std::vector<Event> events;
};

// Working-memory closed forms.
inline double certainty_value(double p_m, double t_since_proofread) {
  return std::exp(-p_m * t_since_proofread);
}

inline double completeness_value(size_t input_len, size_t word_len, double certainty) {
  if (word_len == 0) return 0.0;
  const double c = (static_cast<double>(input_len) / static_cast<double>(word_len)) * certainty;
  return std::clamp(c, 0.0, 1.0);
}

inline double correctness_value(std::string_view buffer, std::string_view remaining,
                                std::string_view target, double lambda_c) {
  std::string assumed(buffer);
  assumed += remaining;
  const double cer = normalized_edit_distance(assumed, target);
  return 1.0 - std::pow(cer, lambda_c);
}

// Final episode reward: accuracy term, normalized time cost, and the
// suggestion-use bonus granted when the target itself was picked.
inline double episode_reward(std::string_view final_text, std::string_view target,
                             double elapsed_s, bool picked_target, const CognitiveParams& params,
                             const RewardConfig& rcfg, const Ablations& abl = {}) {
  const double uer = normalized_edit_distance(final_text, target);
  double r = (1.0 - std::pow(uer, rcfg.beta)) -
             rcfg.gamma * (elapsed_s / static_cast<double>(target.size()));
  if (picked_target && !abl.no_ps) r += params.p_s;
  return r;
}

// QWERTY neighbourhood used to sample substitution errors.
inline char qwerty_error_char(char intended, Rng& rng) {
  static const std::array<const char*, 26> kNeighbors = {
      "qwsz",    // a
      "vghn",    // b
      "xdfv",    // c
      "serfcx",  // d
      "wsdr",    // e
      "drtgvc",  // f
      "ftyhbv",  // g
      "gyujnb",  // h
      "ujko",    // i
      "huikmn",  // j
      "jiolm",   // k
      "kop",     // l
      "njk",     // m
      "bhjm",    // n
      "iklp",    // o
      "ol",      // p
      "wa",      // q
      "edft",    // r
      "awedxz",  // s
      "rfgy",    // t
      "yhji",    // u
      "cfgb",    // v
      "qase",    // w
      "zsdc",    // x
      "tghu",    // y
      "asx",     // z
  };
  const char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(intended)));
  if (lc < 'a' || lc > 'z') {
    return static_cast<char>('a' + rng.uniform_int(26));
  }
  const char* n = kNeighbors[lc - 'a'];
  const size_t len = std::string_view(n).size();
  return n[rng.uniform_int(len)];
}

struct EnvState {
  std::string target;
  std::string buffer;
  size_t intended_index = 0;  // always equal to buffer length
  Region gaze = Region::Keyboard;
  SuggestionList sugg_list;
  SuggStatus sugg_status = SuggStatus::Unknown;
  bool sighted_target = false;  // target seen in the list this word
  double elapsed_s = 0.0;
  double time_since_proofread_s = 0.0;
  int step_count = 0;
  int keystrokes = 0;
  int backspaces = 0;
  bool picked_any = false;
  bool picked_target = false;
  WordProgress progress;
};

// The typing POMDP. One instance is single-owner and sequential; independent
// instances can run concurrently against a shared read-only engine.
class TypingEnv {
 public:
  TypingEnv(const SuggestEngine& engine, EnvConfig cfg)
      : engine_(engine), cfg_(std::move(cfg)) {
    cfg_.validate();
  }

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  bool done() const { return done_; }
  const TypingRecord& record() const { return record_; }
  const CognitiveParams& params() const { return params_; }

  // The word a pick would take: the target when it is on the bar, the top
  // slot otherwise. Empty when nothing is pickable.
  std::string pickable_word() const {
    if (!suggestions_enabled() || state_.sugg_list.algorithmic.empty()) return {};
    if (state_.sugg_list.contains(state_.target)) return state_.target;
    return state_.sugg_list.slot1();
  }

  // Edit distance between the pickable word and the target, used by the
  // training curriculum. Large when nothing is pickable.
  int pick_distance() const {
    const std::string w = pickable_word();
    if (w.empty()) return 1 << 20;
    return levenshtein(w, state_.target);
  }

  Observation reset(const std::string& word, const CognitiveParams& params, uint64_t seed) {
    if (!engine_.lexicon().contains(word))
      throw std::runtime_error("env: word not in lexicon: " + word);
    if (cfg_.variant != EnvVariant::Capitalization && is_capitalized(word))
      throw std::runtime_error("env: capitalized word outside capitalization variant: " + word);
    rng_ = Rng(seed);
    params_ = params;
    done_ = false;
    buffer_dirty_ = false;
    pending_commit_dur_ = 0.0;
    state_ = EnvState{};
    state_.target = word;
    state_.progress = engine_.draw_word_progress(word, rng_);
    const int regions = cfg_.variant == EnvVariant::NoSuggestions ? 2 : 3;
    int g = static_cast<int>(rng_.uniform_int(regions));
    if (cfg_.variant == EnvVariant::NoSuggestions && g == 1) g = 2;  // skip the list
    state_.gaze = static_cast<Region>(g);
    refresh_suggestions();
    record_ = TypingRecord{};
    record_.target = word;
    record_.sugg_region = reveal_region();
    log_gaze(state_.gaze, 0.0);
    reveal();
    update_memory();
    return make_observation();
  }

  StepResult step(const Action& action) {
    if (done_) throw std::runtime_error("env: step() after episode end");
    StepResult result;
    const size_t first_event = record_.events.size();

    // 1. gaze shift
    Region gaze_cmd = action.gaze;
    if (cfg_.variant == EnvVariant::NoSuggestions && gaze_cmd == Region::SuggList)
      gaze_cmd = state_.gaze;  // the list does not exist; stay put
    if (gaze_cmd != state_.gaze) {
      const double dt = rng_.normal_clamped(cfg_.gaze_shift_mean_ms, cfg_.gaze_shift_sd_ms, 0.0) / 1000.0;
      advance(dt);
      state_.gaze = gaze_cmd;
      log_gaze(gaze_cmd, dt);
    }

    // 2. reveal / proofread
    reveal();

    // 3. finger action
    bool committed = false;
    switch (action.finger) {
      case Finger::Type: committed = do_type(result); break;
      case Finger::Backspace: do_backspace(result); break;
      case Finger::Pick: do_pick(); break;
      case Finger::NoAct: do_noact(); break;
    }

    // 4. suggestion refresh; a changed buffer invalidates the revealed status
    if (buffer_dirty_) {
      refresh_suggestions();
      state_.sugg_status = SuggStatus::Unknown;
      buffer_dirty_ = false;
    }

    // 5. working memory
    update_memory();

    // 6. termination and reward
    ++state_.step_count;
    if (state_.picked_target) {
      finish(Terminal::Pick, state_.buffer, result);
    } else if (committed) {
      finalize_commit(result);
    } else if (state_.step_count >= cfg_.max_steps) {
      finish(Terminal::StepLimit, state_.buffer, result);
    }

    result.obs = make_observation();
    result.done = done_;
    result.events.assign(record_.events.begin() + static_cast<long>(first_event),
                         record_.events.end());
    return result;
  }

  bool suggestions_enabled() const { return cfg_.variant != EnvVariant::NoSuggestions; }

  Region reveal_region() const {
    return (cfg_.variant == EnvVariant::InputSugg || cfg_.variant == EnvVariant::InputSuggShortcut)
               ? Region::InputField
               : Region::SuggList;
  }

  bool pick_allowed_from(Region gaze) const {
    switch (cfg_.variant) {
      case EnvVariant::NoSuggestions: return false;
      case EnvVariant::InputSugg: return gaze == Region::InputField;
      case EnvVariant::InputSuggShortcut:
        return gaze == Region::InputField || gaze == Region::Keyboard;
      default: return gaze == Region::SuggList;
    }
  }

 private:
  void advance(double dt) {
    state_.elapsed_s += dt;
    state_.time_since_proofread_s += dt;
  }

  void log_gaze(Region r, double dt) {
    Event e;
    e.kind = EventKind::GazeEnter;
    e.t_s = state_.elapsed_s;
    e.dur_s = dt;
    e.region = r;
    record_.events.push_back(e);
  }

  void reveal() {
    if (state_.gaze == Region::InputField) state_.time_since_proofread_s = 0.0;
    if (!suggestions_enabled()) return;
    if (state_.gaze == reveal_region()) {
      const bool present = state_.sugg_list.contains(state_.target);
      state_.sugg_status = present ? SuggStatus::Yes : SuggStatus::No;
      if (present) state_.sighted_target = true;
    }
  }

  void refresh_suggestions() {
    if (!suggestions_enabled()) {
      state_.sugg_list.literal = state_.buffer;
      state_.sugg_list.algorithmic.assign(cfg_.suggest.algo_slots, "");
      return;
    }
    state_.sugg_list = engine_.suggest(state_.buffer, state_.target, state_.progress);
  }

  double keystroke_time() {
    return rng_.normal_clamped(params_.p_f, cfg_.keystroke_sd_factor * params_.p_f,
                               cfg_.keystroke_min_s);
  }

  double base_error_rate() const {
    switch (state_.gaze) {
      case Region::Keyboard: return cfg_.err_kbd;
      case Region::SuggList: return cfg_.err_sugg;
      case Region::InputField: return cfg_.err_input;
    }
    return cfg_.err_kbd;
  }

  bool cap_pending() const {
    return cfg_.variant == EnvVariant::Capitalization &&
           state_.intended_index < state_.target.size() &&
           std::isupper(static_cast<unsigned char>(state_.target[state_.intended_index]));
  }

  // Returns true when this keystroke was the commit press.
  bool do_type(StepResult&) {
    if (state_.intended_index >= state_.target.size()) {
      // One character beyond the word is the space that commits it.
      const double dt = keystroke_time();
      advance(dt);
      state_.buffer += ' ';
      ++state_.intended_index;
      pending_commit_dur_ = dt;
      buffer_dirty_ = true;
      return true;
    }
    const bool capital = cap_pending();
    double dt = keystroke_time();
    if (capital) dt *= 2.0;  // reaching for shift doubles the stroke
    advance(dt);
    double p_err = base_error_rate();
    if (!cfg_.ablations.no_pk && !state_.sighted_target)
      p_err += cfg_.eta * (1.0 - params_.p_k);
    const bool err = rng_.bernoulli(std::min(p_err, 1.0));
    char c = state_.target[state_.intended_index];
    if (err) {
      c = qwerty_error_char(c, rng_);
      if (capital) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    state_.buffer += c;
    ++state_.intended_index;
    ++state_.keystrokes;
    buffer_dirty_ = true;
    Event e;
    e.kind = EventKind::Keystroke;
    e.t_s = state_.elapsed_s;
    e.dur_s = dt;
    e.text = std::string(1, c);
    e.error = err;
    record_.events.push_back(e);
    return false;
  }

  void do_backspace(StepResult& result) {
    const double dt = keystroke_time();
    advance(dt);
    Event e;
    e.kind = EventKind::Backspace;
    e.t_s = state_.elapsed_s;
    e.dur_s = dt;
    if (state_.buffer.empty()) {
      e.empty = true;
      result.shaping += shaping_penalty();
    } else {
      const size_t pos = state_.buffer.size() - 1;
      e.deleted_correct =
          pos < state_.target.size() && state_.buffer[pos] == state_.target[pos];
      if (e.deleted_correct) result.shaping += shaping_penalty();
      state_.buffer.pop_back();
      --state_.intended_index;
      buffer_dirty_ = true;
    }
    ++state_.backspaces;
    record_.events.push_back(e);
  }

  void do_pick() {
    if (!pick_allowed_from(state_.gaze)) return;
    // Tapping the identified suggestion: the target when it is shown, the
    // top slot as the blind guess otherwise.
    const std::string picked = pickable_word();
    if (picked.empty()) return;
    const double dt = cfg_.variant == EnvVariant::InputSuggShortcut
                          ? keystroke_time()
                          : rng_.normal_clamped(cfg_.pick_mean_ms, cfg_.pick_sd_ms,
                                                cfg_.pick_min_ms) / 1000.0;
    advance(dt);
    state_.buffer = picked;
    state_.intended_index = state_.buffer.size();
    state_.picked_any = true;
    if (picked == state_.target) state_.picked_target = true;
    buffer_dirty_ = true;
    Event e;
    e.kind = EventKind::Pick;
    e.t_s = state_.elapsed_s;
    e.dur_s = dt;
    e.text = picked;
    record_.events.push_back(e);
  }

  void do_noact() {
    if (!cap_pending()) return;
    // Skipping the capital: the lowercase letter goes in for free.
    const char c = static_cast<char>(
        std::tolower(static_cast<unsigned char>(state_.target[state_.intended_index])));
    state_.buffer += c;
    ++state_.intended_index;
    ++state_.keystrokes;
    buffer_dirty_ = true;
    Event e;
    e.kind = EventKind::Keystroke;
    e.t_s = state_.elapsed_s;
    e.dur_s = 0.0;
    e.text = std::string(1, c);
    e.skip = true;
    record_.events.push_back(e);
  }

  double shaping_penalty() const {
    return cfg_.reward.shaping_enabled ? cfg_.reward.shaping_backspace_penalty : 0.0;
  }

  void finalize_commit(StepResult& result) {
    std::string raw = state_.buffer.substr(0, state_.buffer.size() - 1);
    std::string final_text = raw;
    bool fired = false;
    const bool autocorrect_on =
        cfg_.variant != EnvVariant::NoAutocorrect && cfg_.suggest.autocorrect_enabled;
    if (autocorrect_on) {
      auto [corrected, f] = engine_.autocorrect(raw, state_.target, rng_);
      final_text = corrected;
      fired = f;
    }
    Event commit;
    commit.kind = EventKind::Commit;
    commit.t_s = state_.elapsed_s;
    commit.dur_s = pending_commit_dur_;
    commit.text = final_text;
    record_.events.push_back(commit);
    if (fired) {
      Event ac;
      ac.kind = EventKind::AutocorrectFired;
      ac.t_s = state_.elapsed_s;
      ac.text = final_text;
      record_.events.push_back(ac);
    }
    finish(Terminal::Commit, final_text, result);
  }

  void finish(Terminal terminal, const std::string& final_text, StepResult& result) {
    done_ = true;
    record_.terminal = terminal;
    record_.final = final_text;
    record_.elapsed_s = state_.elapsed_s;
    result.reward = episode_reward(final_text, state_.target, state_.elapsed_s,
                                   state_.picked_target, params_, cfg_.reward, cfg_.ablations);
  }

  void update_memory() {
    certainty_ = certainty_value(params_.p_m, state_.time_since_proofread_s);
    completeness_ = completeness_value(state_.buffer.size(), state_.target.size(), certainty_);
    const std::string_view remaining =
        state_.intended_index < state_.target.size()
            ? std::string_view(state_.target).substr(state_.intended_index)
            : std::string_view{};
    // At commit the buffer carries the trailing space; correctness is only
    // shown to the agent pre-commit, so strip it for the comparison.
    std::string_view buf = state_.buffer;
    if (buf.size() > state_.target.size()) buf.remove_suffix(buf.size() - state_.target.size());
    correctness_ = correctness_value(buf, remaining, state_.target, cfg_.reward.lambda_c);
  }

  Observation make_observation() const {
    Observation o;
    const WordStats stats = word_stats(state_.target, engine_.lexicon());
    o.w_l = static_cast<double>(stats.length) /
            static_cast<double>(engine_.lexicon().max_word_length());
    o.w_f = stats.norm_freq;
    o.gaze = state_.gaze;
    o.sugg = suggestions_enabled() ? state_.sugg_status : SuggStatus::Unknown;
    o.certainty = certainty_;
    o.correctness = correctness_;
    o.completeness = cfg_.ablations.no_com ? 0.0 : completeness_;
    o.params = cfg_.ranges.scale01(params_);
    o.cap_indicator = cap_pending() ? 1.0 : 0.0;
    return o;
  }

  const SuggestEngine& engine_;
  EnvConfig cfg_;
  EnvState state_;
  CognitiveParams params_;
  Rng rng_;
  TypingRecord record_;
  bool done_ = true;
  bool buffer_dirty_ = false;
  double pending_commit_dur_ = 0.0;
  double certainty_ = 1.0;
  double correctness_ = 1.0;
  double completeness_ = 0.0;
};

}  // namespace wst
