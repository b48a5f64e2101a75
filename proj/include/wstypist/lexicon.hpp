#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "wstypist/rng.hpp"

namespace wst {

struct LexiconEntry {
  std::string word;
  long long count = 0;
  int rank = 0;           // 1-based, dense
  double norm_freq = 0.0; // count / max count
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_capitalized(std::string_view w) {
  return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

inline std::string capitalize(std::string_view w) {
  std::string out(w);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

// Ranked word-frequency table. Entries are sorted by count descending with a
// lexicographic tie-break, so loading the same file always produces the same
// ranking. Immutable after construction.
class Lexicon {
 public:
  explicit Lexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::runtime_error("lexicon: no entries");
    std::sort(entries_.begin(), entries_.end(), [](const LexiconEntry& a, const LexiconEntry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.word < b.word;
    });
    const double max_count = static_cast<double>(entries_.front().count);
    max_len_ = 0;
    for (size_t i = 0; i < entries_.size(); ++i) {
      entries_[i].rank = static_cast<int>(i) + 1;
      entries_[i].norm_freq = static_cast<double>(entries_[i].count) / max_count;
      if (!index_.emplace(entries_[i].word, i).second)
        throw std::runtime_error("lexicon: duplicate word '" + entries_[i].word + "'");
      max_len_ = std::max(max_len_, entries_[i].word.size());
    }
    // Alphabetical view used for prefix range queries.
    alpha_order_.resize(entries_.size());
    for (size_t i = 0; i < alpha_order_.size(); ++i) alpha_order_[i] = i;
    std::sort(alpha_order_.begin(), alpha_order_.end(),
              [this](size_t a, size_t b) { return entries_[a].word < entries_[b].word; });
  }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t max_word_length() const { return max_len_; }

  const LexiconEntry* find(std::string_view word) const {
    auto it = index_.find(to_lower(word));
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  const LexiconEntry& at(std::string_view word) const {
    const LexiconEntry* e = find(word);
    if (!e) throw std::runtime_error("lexicon: unknown word '" + std::string(word) + "'");
    return *e;
  }

  bool contains(std::string_view word) const { return find(word) != nullptr; }

  // Indices (into entries()) of all words starting with `prefix`, in
  // alphabetical order. Empty prefix returns the whole lexicon.
  std::vector<size_t> prefix_range(std::string_view prefix) const {
    auto lo = std::lower_bound(alpha_order_.begin(), alpha_order_.end(), prefix,
                               [this](size_t i, std::string_view p) { return entries_[i].word < p; });
    std::vector<size_t> out;
    for (auto it = lo; it != alpha_order_.end(); ++it) {
      const std::string& w = entries_[*it].word;
      if (w.compare(0, prefix.size(), prefix) != 0) break;
      out.push_back(*it);
    }
    return out;
  }

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<size_t> alpha_order_;
  size_t max_len_ = 0;
};

// Parses a `word<TAB>count` frequency list. Lines starting with '#' are
// comments. Malformed lines are reported with their line number.
inline Lexicon load_frequency_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frequency list: " + path);
  std::vector<LexiconEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 'word<TAB>count'");
    LexiconEntry e;
    e.word = line.substr(0, tab);
    try {
      size_t pos = 0;
      e.count = std::stoll(line.substr(tab + 1), &pos);
      if (pos != line.size() - tab - 1 || e.count <= 0) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad count field");
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw std::runtime_error(path + ": empty frequency list");
  return Lexicon(std::move(entries));
}

struct WordSet {
  std::vector<std::string> words;
  std::string label;

  bool empty() const { return words.empty(); }
  size_t size() const { return words.size(); }
};

inline WordSet load_word_set(const std::string& path, const Lexicon& lex, std::string label = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word set: " + path);
  WordSet set;
  set.label = label.empty() ? path : std::move(label);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!lex.contains(line))
      throw std::runtime_error(path + ": word '" + line + "' not in lexicon");
    set.words.push_back(line);
  }
  if (set.empty()) throw std::runtime_error(path + ": empty word set");
  return set;
}

inline void save_word_set(const WordSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write word set: " + path);
  for (const auto& w : set.words) out << w << "\n";
}

inline const std::string& sample_word(const WordSet& set, Rng& rng) {
  if (set.empty()) throw std::runtime_error("sample_word: empty word set");
  return set.words[rng.uniform_int(set.words.size())];
}

struct WordStats {
  size_t length = 0;
  double norm_freq = 0.0;
};

inline WordStats word_stats(std::string_view word, const Lexicon& lex) {
  const LexiconEntry& e = lex.at(word);
  return {word.size(), e.norm_freq};
}

// Training vocabulary: a seeded uniform sample drawn from the mid-frequency
// band (ranks 200..5000), mimicking the length/frequency spread of a phrase
// set without the most trivial function words. One- and two-letter words are
// excluded; they are trivial to type and never suggested usefully.
inline WordSet build_training_word_set(const Lexicon& lex, size_t n = 1080,
                                       int min_rank = 200, uint64_t seed = 2024,
                                       size_t min_len = 3) {
  const int max_rank = static_cast<int>(lex.size());
  if (min_rank >= max_rank) throw std::runtime_error("training set: rank band empty");
  std::vector<size_t> pool;
  for (size_t i = static_cast<size_t>(min_rank - 1); i < lex.size(); ++i)
    if (lex.entries()[i].word.size() >= min_len) pool.push_back(i);
  if (pool.size() < n) throw std::runtime_error("training set: lexicon too small");
  Rng rng(derive_seed(seed, "train-wordset"));
  rng.shuffle(pool);
  WordSet set;
  set.label = "train";
  for (size_t i = 0; i < n; ++i) set.words.push_back(lex.entries()[pool[i]].word);
  std::sort(set.words.begin(), set.words.end());
  return set;
}

// Mixed-case vocabulary for the capitalization study: n_lower words kept as
// is plus n_cap words with the first letter uppercased, drawn from `base`.
inline WordSet build_capitalized_word_set(const WordSet& base, size_t n_lower = 216,
                                          size_t n_cap = 187, uint64_t seed = 2024) {
  if (base.size() < n_lower + n_cap)
    throw std::runtime_error("capitalized set: base word set too small");
  std::vector<size_t> pool(base.size());
  for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  Rng rng(derive_seed(seed, "cap-wordset"));
  rng.shuffle(pool);
  WordSet set;
  set.label = "capitalized";
  for (size_t i = 0; i < n_lower; ++i) set.words.push_back(base.words[pool[i]]);
  for (size_t i = n_lower; i < n_lower + n_cap; ++i)
    set.words.push_back(capitalize(base.words[pool[i]]));
  std::sort(set.words.begin(), set.words.end());
  return set;
}

}  // namespace wst
