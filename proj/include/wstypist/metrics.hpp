#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wstypist/levenshtein.hpp"
#include "wstypist/record.hpp"

namespace wst {

inline const std::array<const char*, 9> kMetricNames = {
    "picked", "failed", "start", "gaze_sugg", "gaze_kbd", "bpc", "uer", "wpm", "ks"};

struct MetricReport {
  double picked = 0.0;
  double failed = 0.0;
  double start = std::numeric_limits<double>::quiet_NaN();  // NaN when no word checked the list
  double gaze_sugg = 0.0;
  double gaze_kbd = 0.0;
  double bpc = 0.0;
  double uer = 0.0;
  double wpm = 0.0;
  double ks = 0.0;

  double get(std::string_view name) const {
    if (name == "picked") return picked;
    if (name == "failed") return failed;
    if (name == "start") return start;
    if (name == "gaze_sugg") return gaze_sugg;
    if (name == "gaze_kbd") return gaze_kbd;
    if (name == "bpc") return bpc;
    if (name == "uer") return uer;
    if (name == "wpm") return wpm;
    if (name == "ks") return ks;
    throw std::runtime_error("unknown metric: " + std::string(name));
  }
};

// ---- per-record helpers ----------------------------------------------------

inline std::array<double, 3> region_dwell(const TypingRecord& rec) {
  std::array<double, 3> dwell{0.0, 0.0, 0.0};
  std::optional<Region> cur;
  double cur_since = 0.0;
  for (const Event& e : rec.events) {
    if (e.kind != EventKind::GazeEnter) continue;
    if (cur) dwell[static_cast<int>(*cur)] += e.t_s - cur_since;
    cur = e.region;
    cur_since = e.t_s;
  }
  if (cur) dwell[static_cast<int>(*cur)] += rec.elapsed_s - cur_since;
  return dwell;
}

inline bool fixated_sugg_region(const TypingRecord& rec) {
  for (const Event& e : rec.events)
    if (e.kind == EventKind::GazeEnter && e.region == rec.sugg_region) return true;
  return false;
}

inline bool has_pick(const TypingRecord& rec) {
  for (const Event& e : rec.events)
    if (e.kind == EventKind::Pick) return true;
  return false;
}

inline int count_events(const TypingRecord& rec, EventKind kind) {
  int n = 0;
  for (const Event& e : rec.events)
    if (e.kind == kind) ++n;
  return n;
}

// Keystrokes typed before the suggestion region is first fixated, as a
// fraction of the word length; empty when the region is never fixated.
inline std::optional<double> start_fraction(const TypingRecord& rec) {
  int keystrokes = 0;
  for (const Event& e : rec.events) {
    if (e.kind == EventKind::GazeEnter && e.region == rec.sugg_region)
      return static_cast<double>(keystrokes) / static_cast<double>(rec.target.size());
    if (e.kind == EventKind::Keystroke) ++keystrokes;
  }
  return std::nullopt;
}

inline int gaze_shift_count(const TypingRecord& rec) {
  return count_events(rec, EventKind::GazeEnter) - 1;
}

// ---- the nine benchmark metrics --------------------------------------------

inline double wpm(std::span<const TypingRecord> records) {
  double chars = 0.0, seconds = 0.0;
  for (const auto& r : records) {
    chars += static_cast<double>(r.final.size());
    seconds += r.elapsed_s;
  }
  if (seconds <= 0.0) throw std::runtime_error("wpm: zero total duration");
  return (chars / 5.0) / (seconds / 60.0);
}

inline double gaze_ratio(std::span<const TypingRecord> records, Region region) {
  double total = 0.0, in_region = 0.0;
  for (const auto& r : records) {
    const auto dwell = region_dwell(r);
    for (double d : dwell) total += d;
    in_region += dwell[static_cast<int>(region)];
  }
  return total > 0.0 ? in_region / total : 0.0;
}

inline double bpc(std::span<const TypingRecord> records) {
  double backspaces = 0.0, chars = 0.0;
  for (const auto& r : records) {
    backspaces += count_events(r, EventKind::Backspace);
    chars += static_cast<double>(r.final.size());
  }
  if (chars <= 0.0) throw std::runtime_error("bpc: zero final characters");
  return backspaces / chars;
}

inline double uer(std::span<const TypingRecord> records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) sum += normalized_edit_distance(r.final, r.target);
  return sum / static_cast<double>(records.size());
}

inline double picked_rate(std::span<const TypingRecord> records) {
  if (records.empty()) return 0.0;
  int n = 0;
  for (const auto& r : records)
    if (fixated_sugg_region(r) && has_pick(r)) ++n;
  return static_cast<double>(n) / static_cast<double>(records.size());
}

inline double failed_rate(std::span<const TypingRecord> records) {
  if (records.empty()) return 0.0;
  int n = 0;
  for (const auto& r : records)
    if (fixated_sugg_region(r) && !has_pick(r)) ++n;
  return static_cast<double>(n) / static_cast<double>(records.size());
}

inline std::optional<double> start_checking(std::span<const TypingRecord> records) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records) {
    if (auto f = start_fraction(r)) {
      sum += *f;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

// Keystroke presses include backspaces and exclude the committing space; a
// pick costs zero presses.
inline double keystroke_savings(std::span<const TypingRecord> records) {
  double presses = 0.0, chars = 0.0;
  for (const auto& r : records) {
    presses += count_events(r, EventKind::Keystroke) + count_events(r, EventKind::Backspace);
    chars += static_cast<double>(r.final.size());
  }
  if (chars <= 0.0) throw std::runtime_error("ks: zero final characters");
  return 1.0 - presses / chars;
}

inline MetricReport compute_report(std::span<const TypingRecord> records) {
  MetricReport rep;
  rep.picked = picked_rate(records);
  rep.failed = failed_rate(records);
  if (auto s = start_checking(records)) rep.start = *s;
  rep.gaze_sugg = gaze_ratio(records, Region::SuggList);
  rep.gaze_kbd = gaze_ratio(records, Region::Keyboard);
  rep.bpc = bpc(records);
  rep.uer = uer(records);
  rep.wpm = wpm(records);
  rep.ks = keystroke_savings(records);
  return rep;
}

// Per-word metric values used as fitting distributions. Words where a ratio
// is undefined (no time elapsed, empty final text) contribute no sample.
inline std::map<std::string, std::vector<double>> metric_samples(
    std::span<const TypingRecord> records) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : records) {
    const bool fixated = fixated_sugg_region(r);
    out["picked"].push_back(fixated && has_pick(r) ? 1.0 : 0.0);
    out["failed"].push_back(fixated && !has_pick(r) ? 1.0 : 0.0);
    if (auto s = start_fraction(r)) out["start"].push_back(*s);
    const auto dwell = region_dwell(r);
    const double total = dwell[0] + dwell[1] + dwell[2];
    if (total > 0.0) {
      out["gaze_sugg"].push_back(dwell[static_cast<int>(Region::SuggList)] / total);
      out["gaze_kbd"].push_back(dwell[static_cast<int>(Region::Keyboard)] / total);
    }
    out["uer"].push_back(normalized_edit_distance(r.final, r.target));
    if (!r.final.empty()) {
      out["bpc"].push_back(count_events(r, EventKind::Backspace) /
                           static_cast<double>(r.final.size()));
      out["ks"].push_back(1.0 - (count_events(r, EventKind::Keystroke) +
                                 count_events(r, EventKind::Backspace)) /
                                    static_cast<double>(r.final.size()));
    }
    if (r.elapsed_s > 0.0)
      out["wpm"].push_back((r.final.size() / 5.0) / (r.elapsed_s / 60.0));
  }
  return out;
}

// ---- reference tables and comparison ----------------------------------------

struct ReferenceTable {
  std::string group;
  std::map<std::string, std::pair<double, double>> stats;  // metric -> (mean, sd)

  bool has(std::string_view metric) const { return stats.count(std::string(metric)) > 0; }
  double mean(std::string_view metric) const { return stats.at(std::string(metric)).first; }
  double sd(std::string_view metric) const { return stats.at(std::string(metric)).second; }
};

// CSV rows: group,metric,mean,sd ('#' comments allowed).
inline std::map<std::string, ReferenceTable> load_reference_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference table: " + path);
  std::map<std::string, ReferenceTable> tables;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string group, metric, mean_s, sd_s;
    if (!std::getline(ss, group, ',') || !std::getline(ss, metric, ',') ||
        !std::getline(ss, mean_s, ',') || !std::getline(ss, sd_s, ','))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected group,metric,mean,sd");
    if (group == "group") continue;  // header
    auto& t = tables[group];
    t.group = group;
    t.stats[metric] = {std::stod(mean_s), std::stod(sd_s)};
  }
  if (tables.empty()) throw std::runtime_error(path + ": no reference rows");
  return tables;
}

struct MetricComparison {
  std::string metric;
  double model = 0.0;
  double human_mean = 0.0;
  double human_sd = 0.0;
  double z = 0.0;
  bool within_1sd = false;
};

inline std::vector<MetricComparison> compare(const MetricReport& report,
                                             const ReferenceTable& ref) {
  std::vector<MetricComparison> out;
  for (const char* name : kMetricNames) {
    if (!ref.has(name)) continue;
    MetricComparison c;
    c.metric = name;
    c.model = report.get(name);
    c.human_mean = ref.mean(name);
    c.human_sd = ref.sd(name);
    if (c.human_sd <= 0.0) throw std::runtime_error("compare: nonpositive sd for " + c.metric);
    c.z = (c.model - c.human_mean) / c.human_sd;
    // Tolerance keeps the boundary case (model exactly one sd away) stable
    // under floating-point rounding.
    c.within_1sd = std::isfinite(c.z) && std::abs(c.z) <= 1.0 + 1e-9;
    out.push_back(c);
  }
  return out;
}

// Jensen-Shannon divergence in bits; symmetric, bounded by 1.
inline double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw std::runtime_error("js_divergence: support mismatch");
  double ps = 0.0, qs = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::runtime_error("js_divergence: negative mass");
    ps += p[i];
    qs += q[i];
  }
  if (ps <= 0.0 || qs <= 0.0) throw std::runtime_error("js_divergence: empty distribution");
  double js = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / ps, qi = q[i] / qs;
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) js += 0.5 * pi * std::log2(pi / mi);
    if (qi > 0.0) js += 0.5 * qi * std::log2(qi / mi);
  }
  return std::max(0.0, js);
}

}  // namespace wst
