#pragma once

#include <string>

#include "wstypist/lexicon.hpp"
#include "wstypist/suggest.hpp"

namespace wst::test {

inline std::string data_path(const std::string& rel) {
  return std::string(WST_SOURCE_DIR) + "/data/" + rel;
}

inline const Lexicon& bundled_lexicon() {
  static Lexicon lex = load_frequency_list(data_path("frequency_5k.tsv"));
  return lex;
}

inline const WordSet& bundled_train_words() {
  static WordSet set = load_word_set(data_path("wordset_train.txt"), bundled_lexicon(), "train");
  return set;
}

inline const WordSet& bundled_cap_words() {
  static WordSet set = load_word_set(data_path("wordset_cap.txt"), bundled_lexicon(), "cap");
  return set;
}

// Straightforward full-matrix edit distance, kept independent of the
// two-row implementation under test.
inline int levenshtein_oracle(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  return d[n][m];
}

inline std::string random_word(Rng& rng, size_t max_len, const std::string& alphabet = "abcdef") {
  const size_t len = rng.uniform_int(max_len + 1);
  std::string s;
  for (size_t i = 0; i < len; ++i) s += alphabet[rng.uniform_int(alphabet.size())];
  return s;
}

}  // namespace wst::test
