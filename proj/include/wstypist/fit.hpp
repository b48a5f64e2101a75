#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "wstypist/eval.hpp"
#include "wstypist/metrics.hpp"

namespace wst {

struct FitPoint {
  CognitiveParams params;
  double objective = 0.0;
};

struct FitResult {
  CognitiveParams best;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<FitPoint> trace;
  int budget_used = 0;
};

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

// Valid value range per metric, used to truncate the reference Normal before
// binning.
inline std::pair<double, double> metric_valid_range(std::string_view name) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (name == "picked" || name == "failed" || name == "gaze_sugg" || name == "gaze_kbd" ||
      name == "uer")
    return {0.0, 1.0};
  if (name == "ks") return {-inf, 1.0};
  return {0.0, inf};  // start, bpc, wpm
}

// Histogram of a truncated Normal over `bins` uniform cells spanning
// mean +- 4 sd intersected with the metric's valid range.
struct MetricBins {
  double lo = 0.0, hi = 1.0;
  int bins = 32;

  int index(double x) const {
    const double t = (x - lo) / (hi - lo);
    const int i = static_cast<int>(t * bins);
    return std::clamp(i, 0, bins - 1);
  }

  std::vector<double> normal_histogram(double mean, double sd) const {
    std::vector<double> h(static_cast<size_t>(bins), 0.0);
    const double width = (hi - lo) / bins;
    for (int i = 0; i < bins; ++i) {
      const double a = lo + i * width, b = a + width;
      h[static_cast<size_t>(i)] = normal_cdf(b, mean, sd) - normal_cdf(a, mean, sd);
    }
    double total = 0.0;
    for (double v : h) total += v;
    if (total <= 0.0) h.assign(static_cast<size_t>(bins), 1.0 / bins);
    else
      for (double& v : h) v /= total;
    return h;
  }

  std::vector<double> sample_histogram(std::span<const double> samples) const {
    std::vector<double> h(static_cast<size_t>(bins), 0.0);
    for (double x : samples) h[static_cast<size_t>(index(x))] += 1.0;
    return h;
  }
};

inline MetricBins make_metric_bins(std::string_view name, double mean, double sd, int bins) {
  const auto [vlo, vhi] = metric_valid_range(name);
  MetricBins b;
  b.bins = bins;
  b.lo = std::max(vlo, mean - 4.0 * sd);
  b.hi = std::min(vhi, mean + 4.0 * sd);
  if (!(b.hi > b.lo)) {
    b.lo = mean - 4.0 * sd;
    b.hi = mean + 4.0 * sd;
  }
  return b;
}

// Mean Jensen-Shannon divergence between per-word simulated metric
// distributions and binned reference Normals. A metric the simulation never
// produced a sample for (e.g. Start when the list is never checked) counts as
// maximally divergent rather than being dropped.
inline double fit_objective_from_records(const std::vector<TypingRecord>& records,
                                         const ReferenceTable& ref, int bins) {
  const auto samples = metric_samples(records);
  double total = 0.0;
  int used = 0;
  for (const char* name : kMetricNames) {
    if (!ref.has(name)) continue;
    const double mean = ref.mean(name), sd = ref.sd(name);
    if (sd <= 0.0) {
      std::cerr << "warning: degenerate sd for metric '" << name << "', skipped\n";
      continue;
    }
    const MetricBins b = make_metric_bins(name, mean, sd, bins);
    const auto it = samples.find(name);
    double js = 1.0;
    if (it != samples.end() && !it->second.empty())
      js = js_divergence(b.sample_histogram(it->second), b.normal_histogram(mean, sd));
    total += js;
    ++used;
  }
  if (used == 0) throw std::runtime_error("fit objective: no usable metrics in reference table");
  return total / used;
}

inline double fit_objective(const CognitiveParams& params, const PolicyParams& policy,
                            const SuggestEngine& engine, const EnvConfig& cfg,
                            const WordSet& words, const ReferenceTable& ref, int n_words,
                            int bins, uint64_t seed) {
  if (n_words < 100) throw std::runtime_error("fit objective: need at least 100 words");
  const EvalOutput out = evaluate_policy(policy, engine, cfg, words, params, n_words, seed);
  return fit_objective_from_records(out.records, ref, bins);
}

// ---- derivative-free box minimization -----------------------------------------

namespace detail {

inline Eigen::Vector4d to_unit(const CognitiveParams& p, const ParamRanges& box) {
  return {ParamRanges::scale(p.p_m, box.p_m_lo, box.p_m_hi),
          ParamRanges::scale(p.p_f, box.p_f_lo, box.p_f_hi),
          ParamRanges::scale(p.p_k, box.p_k_lo, box.p_k_hi),
          ParamRanges::scale(p.p_s, box.p_s_lo, box.p_s_hi)};
}

inline CognitiveParams from_unit(const Eigen::Vector4d& u, const ParamRanges& box) {
  auto lerp = [](double t, double lo, double hi) { return lo + std::clamp(t, 0.0, 1.0) * (hi - lo); };
  return {lerp(u(0), box.p_m_lo, box.p_m_hi), lerp(u(1), box.p_f_lo, box.p_f_hi),
          lerp(u(2), box.p_k_lo, box.p_k_hi), lerp(u(3), box.p_s_lo, box.p_s_hi)};
}

// Expected improvement under a fixed-hyperparameter RBF Gaussian process on
// the unit box. Returns empty on numerical failure so the caller can fall
// back to random search.
struct Surrogate {
  Eigen::MatrixXd x;      // n x 4
  Eigen::VectorXd alpha;  // K^-1 (y - mean)
  Eigen::LLT<Eigen::MatrixXd> llt;
  double y_mean = 0.0, y_sd = 1.0;
  double length_scale = 0.3;
  bool ok = false;

  static double kernel(const Eigen::RowVector4d& a, const Eigen::RowVector4d& b, double ls) {
    return std::exp(-(a - b).squaredNorm() / (2.0 * ls * ls));
  }

  void fit(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys) {
    const Eigen::Index n = xs.rows();
    x = xs;
    y_mean = ys.mean();
    y_sd = std::sqrt((ys.array() - y_mean).square().sum() / std::max<Eigen::Index>(1, n - 1));
    if (y_sd < 1e-12) y_sd = 1.0;
    Eigen::VectorXd y = (ys.array() - y_mean) / y_sd;
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        k(i, j) = kernel(x.row(i), x.row(j), length_scale) + (i == j ? 1e-6 : 0.0);
    llt.compute(k);
    ok = llt.info() == Eigen::Success;
    if (ok) alpha = llt.solve(y);
  }

  std::pair<double, double> predict(const Eigen::RowVector4d& q) const {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd kq(n);
    for (Eigen::Index i = 0; i < n; ++i) kq(i) = kernel(q, x.row(i), length_scale);
    const double mu = kq.dot(alpha);
    const Eigen::VectorXd v = llt.solve(kq);
    const double var = std::max(1e-12, 1.0 + 1e-6 - kq.dot(v));
    return {mu * y_sd + y_mean, std::sqrt(var) * y_sd};
  }

  double expected_improvement(const Eigen::RowVector4d& q, double best) const {
    const auto [mu, sd] = predict(q);
    if (sd < 1e-12) return std::max(0.0, best - mu);
    const double z = (best - mu) / sd;
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return (best - mu) * normal_cdf(z, 0.0, 1.0) + sd * phi;
  }
};

}  // namespace detail

// Latin-hypercube seeding for a quarter of the budget, then proposals by
// expected improvement over the surrogate, with periodic pure-random
// proposals as the fallback path.
inline FitResult minimize(const std::function<double(const CognitiveParams&)>& objective,
                          const ParamRanges& bounds, int budget, uint64_t seed) {
  if (budget < 20) throw std::runtime_error("minimize: budget must be at least 20");
  Rng rng(derive_seed(seed, "minimize"));
  FitResult result;
  result.trace.reserve(static_cast<size_t>(budget));

  auto evaluate = [&](const Eigen::Vector4d& u) {
    const CognitiveParams p = detail::from_unit(u, bounds);
    const double y = objective(p);
    result.trace.push_back({p, y});
    if (y < result.best_objective) {
      result.best_objective = y;
      result.best = p;
    }
    ++result.budget_used;
  };

  // Latin hypercube: each dimension gets one sample per stratum.
  const int n_init = std::max(4, budget / 4);
  std::vector<std::vector<int>> strata(4, std::vector<int>(n_init));
  for (auto& dim : strata) {
    for (int i = 0; i < n_init; ++i) dim[i] = i;
    rng.shuffle(dim);
  }
  for (int i = 0; i < n_init; ++i) {
    Eigen::Vector4d u;
    for (int d = 0; d < 4; ++d)
      u(d) = (strata[static_cast<size_t>(d)][static_cast<size_t>(i)] + rng.uniform01()) / n_init;
    evaluate(u);
  }

  while (result.budget_used < budget) {
    Eigen::Vector4d proposal;
    bool have_proposal = false;
    const bool force_random = result.budget_used % 4 == 3;
    if (!force_random) {
      const Eigen::Index n = static_cast<Eigen::Index>(result.trace.size());
      Eigen::MatrixXd xs(n, 4);
      Eigen::VectorXd ys(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        xs.row(i) = detail::to_unit(result.trace[static_cast<size_t>(i)].params, bounds);
        ys(i) = result.trace[static_cast<size_t>(i)].objective;
      }
      detail::Surrogate gp;
      gp.fit(xs, ys);
      if (gp.ok) {
        double best_ei = -1.0;
        for (int c = 0; c < 512; ++c) {
          Eigen::RowVector4d q;
          for (int d = 0; d < 4; ++d) q(d) = rng.uniform01();
          const double ei = gp.expected_improvement(q, result.best_objective);
          if (ei > best_ei) {
            best_ei = ei;
            proposal = q.transpose();
            have_proposal = true;
          }
        }
      }
    }
    if (!have_proposal) {
      for (int d = 0; d < 4; ++d) proposal(d) = rng.uniform01();
    }
    evaluate(proposal);
  }
  return result;
}

inline FitResult fit_group(const std::string& group,
                           const std::map<std::string, ReferenceTable>& tables,
                           const PolicyParams& policy, const SuggestEngine& engine,
                           const EnvConfig& cfg, const WordSet& words, int budget, int n_words,
                           int bins, uint64_t seed) {
  auto it = tables.find(group);
  if (it == tables.end()) {
    std::string known;
    for (const auto& [name, _] : tables) known += (known.empty() ? "" : ", ") + name;
    throw std::runtime_error("unknown reference group '" + group + "' (available: " + known + ")");
  }
  const ReferenceTable& ref = it->second;
  // Common random numbers: every evaluation simulates the same word sequence
  // and noise stream, so the optimizer sees a deterministic landscape.
  const uint64_t sim_seed = derive_seed(seed, "fit-objective");
  auto objective = [&](const CognitiveParams& p) {
    return fit_objective(p, policy, engine, cfg, words, ref, n_words, bins, sim_seed);
  };
  return minimize(objective, cfg.ranges, budget, seed);
}

}  // namespace wst
