// Grid search for the ranking weights. Scans the length/frequency mix,
// measures engine accuracy and mean appearance point on the evaluation
// vocabulary, and reports the grid points landing in the target bands
// (accuracy 0.62..0.68, appearance 0.50..0.58). The chosen point is frozen
// into the default config.

#include <cstdio>
#include <string>
#include <vector>

#include "wstypist/lexicon.hpp"
#include "wstypist/suggest.hpp"

using namespace wst;

int main(int argc, char** argv) {
  std::string lexicon_path = std::string(WST_SOURCE_DIR) + "/data/frequency_5k.tsv";
  std::string words_path = std::string(WST_SOURCE_DIR) + "/data/wordset_train.txt";
  if (argc > 1) lexicon_path = argv[1];
  if (argc > 2) words_path = argv[2];

  const Lexicon lex = load_frequency_list(lexicon_path);
  const WordSet words = load_word_set(words_path, lex, "eval");

  std::printf("%8s %8s %10s %12s %s\n", "w_len", "w_freq", "accuracy", "appearance", "in-band");
  std::vector<double> grid;
  for (double w = 0.0; w <= 0.0401; w += 0.0025) grid.push_back(w);

  double best_w = -1.0, best_dist = 1e9;
  for (double w_len : grid) {
    SuggestionConfig cfg;
    cfg.w_len = w_len;
    cfg.w_freq = 1.0 - w_len;
    SuggestEngine engine(lex, cfg);
    const AccuracyReport rep = engine.measure_accuracy(words);
    const double appear = rep.mean_appearance_fraction.value_or(0.0);
    const bool in_band =
        rep.accuracy >= 0.62 && rep.accuracy <= 0.68 && appear >= 0.50 && appear <= 0.58;
    std::printf("%8.4f %8.4f %10.4f %12.4f %s\n", cfg.w_len, cfg.w_freq, rep.accuracy, appear,
                in_band ? "yes" : "");
    if (in_band) {
      // Prefer the point closest to the band centers.
      const double d = std::abs(rep.accuracy - 0.65) / 0.03 + std::abs(appear - 0.54) / 0.04;
      if (d < best_dist) {
        best_dist = d;
        best_w = w_len;
      }
    }
  }
  if (best_w >= 0.0)
    std::printf("\nrecommended: w_len=%.4f w_freq=%.4f\n", best_w, 1.0 - best_w);
  else
    std::printf("\nno grid point landed in both bands\n");
  return best_w >= 0.0 ? 0 : 1;
}
