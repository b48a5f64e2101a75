#pragma once

#include <algorithm>
#include <cstddef>
#include <string_view>
#include <vector>

namespace wst {

// Classic edit distance (insert / delete / substitute, unit costs), two-row DP.
inline int levenshtein(std::string_view a, std::string_view b) {
  if (a == b) return 0;
  if (a.size() > b.size()) std::swap(a, b);
  const size_t la = a.size(), lb = b.size();
  if (la == 0) return static_cast<int>(lb);
  std::vector<int> prev(la + 1), cur(la + 1);
  for (size_t i = 0; i <= la; ++i) prev[i] = static_cast<int>(i);
  for (size_t j = 1; j <= lb; ++j) {
    cur[0] = static_cast<int>(j);
    const char cb = b[j - 1];
    for (size_t i = 1; i <= la; ++i) {
      const int sub = prev[i - 1] + (a[i - 1] != cb ? 1 : 0);
      cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[la];
}

// Edit distance normalized by the longer string; 0 for two empty strings.
inline double normalized_edit_distance(std::string_view a, std::string_view b) {
  const size_t longer = std::max(a.size(), b.size());
  if (longer == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longer);
}

}  // namespace wst
