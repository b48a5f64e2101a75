#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wstypist/levenshtein.hpp"
#include "wstypist/lexicon.hpp"
#include "wstypist/rng.hpp"

namespace wst {

enum class SuggestMode {
  Baseline,
  LengthAscending,
  LengthDescending,
  CapHigh,
  CapLow,
  AccuracyControlled,
};

inline const char* to_string(SuggestMode m) {
  switch (m) {
    case SuggestMode::Baseline: return "baseline";
    case SuggestMode::LengthAscending: return "length-ascending";
    case SuggestMode::LengthDescending: return "length-descending";
    case SuggestMode::CapHigh: return "cap-high";
    case SuggestMode::CapLow: return "cap-low";
    case SuggestMode::AccuracyControlled: return "accuracy-controlled";
  }
  return "?";
}

inline SuggestMode suggest_mode_from_string(std::string_view s) {
  if (s == "baseline") return SuggestMode::Baseline;
  if (s == "length-ascending") return SuggestMode::LengthAscending;
  if (s == "length-descending") return SuggestMode::LengthDescending;
  if (s == "cap-high") return SuggestMode::CapHigh;
  if (s == "cap-low") return SuggestMode::CapLow;
  if (s == "accuracy-controlled") return SuggestMode::AccuracyControlled;
  throw std::runtime_error("unknown suggestion mode: " + std::string(s));
}

struct SuggestionConfig {
  // Weighted prefix ranking. The defaults were fixed by the bundled
  // calibration tool (tools/calibrate_weights) so that the baseline engine
  // suggests ~65% of the evaluation vocabulary, appearing on average after
  // ~54% of the word has been typed.
  double w_len = 0.025;
  double w_freq = 0.975;
  int algo_slots = 2;
  int fuzzy_max_distance = 2;
  SuggestMode mode = SuggestMode::Baseline;
  std::optional<double> target_accuracy;  // coverage rate; required for AccuracyControlled
  double appearance_fraction = 0.54;      // earliest point a covered word may appear
  bool autocorrect_enabled = true;
  double autocorrect_success = 0.80;
  double cap_demotion = 0.60;             // CapLow: chance a cap word is shown lowercase

  void validate() const {
    if (algo_slots < 1) throw std::runtime_error("suggest: algo_slots must be >= 1");
    if (fuzzy_max_distance < 0) throw std::runtime_error("suggest: fuzzy_max_distance < 0");
    const bool length_mode =
        mode == SuggestMode::LengthAscending || mode == SuggestMode::LengthDescending;
    if (!length_mode && w_len + w_freq <= 0.0)
      throw std::runtime_error("suggest: w_len + w_freq must be positive");
    if (mode == SuggestMode::AccuracyControlled && !target_accuracy)
      throw std::runtime_error("suggest: accuracy-controlled mode needs target_accuracy");
    if (target_accuracy && (*target_accuracy < 0.0 || *target_accuracy > 1.0))
      throw std::runtime_error("suggest: target_accuracy out of [0,1]");
    if (appearance_fraction <= 0.0 || appearance_fraction > 1.0)
      throw std::runtime_error("suggest: appearance_fraction out of (0,1]");
  }
};

struct SuggestionList {
  std::string literal;                  // mirror of the typed buffer
  std::vector<std::string> algorithmic; // algo_slots entries, "" when empty

  bool contains(std::string_view w) const {
    for (const auto& s : algorithmic)
      if (!s.empty() && s == w) return true;
    return false;
  }
  const std::string& slot1() const { return algorithmic.front(); }
};

// Per-word randomness, drawn once at word start so that suggest() itself is a
// pure function of (typed, target, progress, config).
struct WordProgress {
  bool covered = true;      // coverage draw when target_accuracy is set
  bool cap_demoted = false; // CapLow demotion draw for capitalized targets
};

struct AccuracyReport {
  double accuracy = 0.0;
  std::optional<double> mean_appearance_fraction;
};

class SuggestEngine {
 public:
  SuggestEngine(const Lexicon& lex, SuggestionConfig cfg) : lex_(lex), cfg_(std::move(cfg)) {
    cfg_.validate();
    // Unique k-prefixes of the vocabulary, grouped by k. Keeps the fuzzy scan
    // at one distance computation per distinct prefix instead of per word.
    prefix_groups_.resize(lex_.max_word_length() + 1);
    for (size_t k = 1; k <= lex_.max_word_length(); ++k) {
      auto& group = prefix_groups_[k];
      for (size_t i = 0; i < lex_.size(); ++i) {
        const std::string& w = lex_.entries()[i].word;
        // Words shorter than k are compared as a whole.
        group.emplace_back(w.substr(0, std::min(k, w.size())), i);
      }
      std::sort(group.begin(), group.end());
    }
    // Ranking of the whole vocabulary (empty-prefix case), computed once.
    std::vector<size_t> all(lex_.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    sort_by_mode(all);
    empty_prefix_ranked_.assign(all.begin(), all.begin() + std::min<size_t>(all.size(), 32));
  }

  const Lexicon& lexicon() const { return lex_; }
  const SuggestionConfig& config() const { return cfg_; }

  std::vector<std::string> candidates_for_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    for (size_t i : lex_.prefix_range(to_lower(prefix))) out.push_back(lex_.entries()[i].word);
    return out;
  }

  // Words whose k-prefix (k = typed length) is within max_d edits of the
  // typed text. Comparing at the typed length keeps long words reachable
  // after a typo.
  std::vector<std::string> fuzzy_candidates(std::string_view typed, int max_d) const {
    std::vector<std::string> out;
    for (size_t i : fuzzy_indices(to_lower(typed), max_d)) out.push_back(lex_.entries()[i].word);
    return out;
  }

  std::vector<std::string> rank(std::vector<std::string> candidates) const {
    if (candidates.empty()) throw std::runtime_error("rank: empty candidate list");
    std::vector<size_t> idx;
    idx.reserve(candidates.size());
    for (const auto& w : candidates) idx.push_back(entry_index(w));
    sort_by_mode(idx);
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(lex_.entries()[i].word);
    return out;
  }

  SuggestionList suggest(std::string_view typed, std::string_view target,
                         const WordProgress& progress) const {
    SuggestionList list;
    list.literal = std::string(typed);
    const std::string folded = to_lower(typed);
    const std::string target_lc = to_lower(target);
    const bool target_cap = is_capitalized(target);

    std::vector<size_t> ranked = ranked_candidates(folded);

    const bool coverage_active = cfg_.target_accuracy.has_value();
    const bool ac_mode = cfg_.mode == SuggestMode::AccuracyControlled;

    std::vector<std::string> slots;
    auto push_ranked = [&](bool drop_target) {
      for (size_t i : ranked) {
        if (static_cast<int>(slots.size()) >= cfg_.algo_slots) break;
        const std::string& w = lex_.entries()[i].word;
        if (w == folded) continue;  // never duplicate the literal slot
        if (drop_target && w == target_lc) continue;
        if (std::find(slots.begin(), slots.end(), w) != slots.end()) continue;
        slots.push_back(w);
      }
    };

    if (ac_mode) {
      const bool at_threshold =
          static_cast<double>(typed.size()) >=
          cfg_.appearance_fraction * static_cast<double>(target.size());
      if (progress.covered && at_threshold && folded != target_lc) {
        slots.push_back(std::string(target));
        push_ranked(/*drop_target=*/true);
      } else {
        // Covered words stay hidden until the appearance point; uncovered
        // words never show up at all.
        push_ranked(/*drop_target=*/true);
      }
    } else if (coverage_active && !progress.covered) {
      // Coverage wrapper over a non-AC ranking: uncovered words are filtered
      // out, covered words appear wherever the ranking naturally surfaces
      // them. Used to equalize overall accuracy across ranking variants.
      push_ranked(/*drop_target=*/true);
    } else {
      push_ranked(/*drop_target=*/false);
      if (target_cap) apply_cap_overlay(slots, ranked, folded, target_lc, progress);
    }

    while (static_cast<int>(slots.size()) < cfg_.algo_slots) slots.emplace_back();
    list.algorithmic = std::move(slots);
    return list;
  }

  // Committed-word auto-correction: fires only at edit distance exactly 1.
  std::pair<std::string, bool> autocorrect(std::string_view typed, std::string_view target,
                                           Rng& rng) const {
    if (!cfg_.autocorrect_enabled) return {std::string(typed), false};
    const int d = levenshtein(typed, target);
    if (d == 1 && rng.bernoulli(cfg_.autocorrect_success)) return {std::string(target), true};
    return {std::string(typed), false};
  }

  WordProgress draw_word_progress(std::string_view target, Rng& rng) const {
    WordProgress p;
    if (cfg_.target_accuracy) p.covered = rng.bernoulli(*cfg_.target_accuracy);
    if (cfg_.mode == SuggestMode::CapLow && is_capitalized(target))
      p.cap_demoted = rng.bernoulli(cfg_.cap_demotion);
    return p;
  }

  // Replays error-free typing of every word and records the first prefix at
  // which the target (exact case) occupies an algorithmic slot. Capitalized
  // targets are typed fully in lowercase, so the scan includes the complete
  // lowercase prefix for them.
  AccuracyReport measure_accuracy(const WordSet& set, uint64_t seed = 7) const {
    if (set.empty()) throw std::runtime_error("measure_accuracy: empty word set");
    Rng rng(derive_seed(seed, "measure-accuracy"));
    size_t covered = 0;
    double fraction_sum = 0.0;
    for (const auto& target : set.words) {
      const WordProgress progress = draw_word_progress(target, rng);
      const std::string lc = to_lower(target);
      const size_t kmax = is_capitalized(target) ? lc.size() : lc.size() - 1;
      for (size_t k = 0; k <= kmax; ++k) {
        if (suggest(lc.substr(0, k), target, progress).contains(target)) {
          ++covered;
          fraction_sum += static_cast<double>(k) / static_cast<double>(lc.size());
          break;
        }
      }
    }
    AccuracyReport report;
    report.accuracy = static_cast<double>(covered) / static_cast<double>(set.size());
    if (covered > 0) report.mean_appearance_fraction = fraction_sum / static_cast<double>(covered);
    return report;
  }

 private:
  size_t entry_index(std::string_view w) const {
    const LexiconEntry* e = lex_.find(w);
    if (!e) throw std::runtime_error("rank: word not in lexicon: " + std::string(w));
    return static_cast<size_t>(e->rank - 1);
  }

  double score(size_t i) const {
    const LexiconEntry& e = lex_.entries()[i];
    return cfg_.w_len * (static_cast<double>(e.word.size()) /
                         static_cast<double>(lex_.max_word_length())) +
           cfg_.w_freq * e.norm_freq;
  }

  void sort_by_mode(std::vector<size_t>& idx) const {
    const auto& entries = lex_.entries();
    if (cfg_.mode == SuggestMode::LengthAscending || cfg_.mode == SuggestMode::LengthDescending) {
      const bool asc = cfg_.mode == SuggestMode::LengthAscending;
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        const auto la = entries[a].word.size(), lb = entries[b].word.size();
        if (la != lb) return asc ? la < lb : la > lb;
        if (entries[a].count != entries[b].count) return entries[a].count > entries[b].count;
        return entries[a].word < entries[b].word;
      });
    } else {
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        const double sa = score(a), sb = score(b);
        if (sa != sb) return sa > sb;
        if (entries[a].count != entries[b].count) return entries[a].count > entries[b].count;
        return entries[a].word < entries[b].word;
      });
    }
  }

  // Exact prefix matches, extended by fuzzy matches only when the exact ones
  // cannot fill the visible slots.
  std::vector<size_t> ranked_candidates(const std::string& folded) const {
    if (folded.empty()) return empty_prefix_ranked_;
    std::vector<size_t> cand = lex_.prefix_range(folded);
    if (static_cast<int>(cand.size()) < cfg_.algo_slots && cfg_.fuzzy_max_distance > 0) {
      std::vector<size_t> fz = fuzzy_indices(folded, cfg_.fuzzy_max_distance);
      for (size_t i : fz)
        if (std::find(cand.begin(), cand.end(), i) == cand.end()) cand.push_back(i);
    }
    sort_by_mode(cand);
    return cand;
  }

  std::vector<size_t> fuzzy_indices(const std::string& typed, int max_d) const {
    std::vector<size_t> out;
    if (typed.empty()) return out;
    const size_t k = std::min(typed.size(), lex_.max_word_length());
    const auto& group = prefix_groups_[k];
    std::string_view last_prefix;
    bool last_ok = false;
    for (const auto& [prefix, word_idx] : group) {
      if (prefix != last_prefix) {
        last_prefix = prefix;
        last_ok = banded_leq(typed, prefix, max_d);
      }
      if (last_ok) out.push_back(word_idx);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Levenshtein(a, b) <= max_d, evaluated on a diagonal band.
  static bool banded_leq(std::string_view a, std::string_view b, int max_d) {
    const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
    if (std::abs(la - lb) > max_d) return false;
    const int inf = max_d + 1;
    std::array<int, 64> prev{}, cur{};
    if (lb + 1 > static_cast<int>(prev.size())) return levenshtein(a, b) <= max_d;
    for (int j = 0; j <= lb; ++j) prev[j] = j <= max_d ? j : inf;
    for (int i = 1; i <= la; ++i) {
      int row_min = inf;
      const int jlo = std::max(1, i - max_d), jhi = std::min(lb, i + max_d);
      cur[jlo - 1] = (i - (jlo - 1)) <= max_d && jlo - 1 == 0 ? i : inf;
      for (int j = jlo; j <= jhi; ++j) {
        const int sub = prev[j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0);
        const int del = prev[j] + 1;
        const int ins = cur[j - 1] + 1;
        cur[j] = std::min({sub, del, ins, inf});
        row_min = std::min(row_min, cur[j]);
      }
      if (jlo > 1) cur[jlo - 1] = inf;
      if (row_min >= inf) return false;
      std::swap(prev, cur);
    }
    return prev[lb] <= max_d;
  }

  void apply_cap_overlay(std::vector<std::string>& slots, const std::vector<size_t>& ranked,
                         const std::string& folded, const std::string& target_lc,
                         const WordProgress& progress) const {
    const std::string cap = capitalize(target_lc);
    auto shown = std::find(slots.begin(), slots.end(), target_lc);
    switch (cfg_.mode) {
      case SuggestMode::CapHigh: {
        // Promote the capitalized form once the lowercase form reaches the
        // top five of the internal ranking, or is an exact match of the
        // typed text (the buffer itself is not a listed suggestion, but its
        // capitalization fix is).
        bool in_top5 = false;
        for (size_t r = 0; r < std::min<size_t>(5, ranked.size()); ++r)
          if (lex_.entries()[ranked[r]].word == target_lc) in_top5 = true;
        if (in_top5 || folded == target_lc) {
          if (shown != slots.end()) slots.erase(shown);
          slots.insert(slots.begin(), cap);
          if (static_cast<int>(slots.size()) > cfg_.algo_slots) slots.resize(cfg_.algo_slots);
        }
        break;
      }
      case SuggestMode::CapLow:
        if (shown != slots.end() && !progress.cap_demoted) *shown = cap;
        break;
      default:
        if (shown != slots.end()) *shown = cap;
        break;
    }
  }

  const Lexicon& lex_;
  SuggestionConfig cfg_;
  std::vector<std::vector<std::pair<std::string, size_t>>> prefix_groups_;
  std::vector<size_t> empty_prefix_ranked_;
};

}  // namespace wst
