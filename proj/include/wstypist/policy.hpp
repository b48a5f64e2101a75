#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wstypist/env.hpp"
#include "wstypist/rng.hpp"

namespace wst {

constexpr int kGazeActions = 3;
constexpr int kFingerActions = 4;

// Factored stochastic policy: tanh trunk (two hidden layers), independent
// categorical heads for gaze and finger, and a scalar value head.
struct PolicyParams {
  Eigen::MatrixXd w1, w2, wg, wf, wv;
  Eigen::VectorXd b1, b2, bg, bf, bv;

  int obs_dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }

  static PolicyParams init(int obs_dim, int hidden, uint64_t seed) {
    PolicyParams p;
    Rng rng(derive_seed(seed, "policy-init"));
    auto fill = [&rng](Eigen::MatrixXd& m, int rows, int cols, double scale) {
      m.resize(rows, cols);
      // Scaled random init, roughly orthogonal in expectation.
      const double s = scale / std::sqrt(static_cast<double>(cols));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = s * rng.normal(0.0, 1.0);
    };
    fill(p.w1, hidden, obs_dim, 1.0);
    fill(p.w2, hidden, hidden, 1.0);
    fill(p.wg, kGazeActions, hidden, 0.01);  // near-uniform heads at start
    fill(p.wf, kFingerActions, hidden, 0.01);
    fill(p.wv, 1, hidden, 1.0);
    p.b1 = Eigen::VectorXd::Zero(hidden);
    p.b2 = Eigen::VectorXd::Zero(hidden);
    p.bg = Eigen::VectorXd::Zero(kGazeActions);
    p.bf = Eigen::VectorXd::Zero(kFingerActions);
    p.bv = Eigen::VectorXd::Zero(1);
    return p;
  }

  std::vector<Eigen::Map<Eigen::VectorXd>> flat_views() {
    std::vector<Eigen::Map<Eigen::VectorXd>> v;
    for (Eigen::MatrixXd* m : {&w1, &w2, &wg, &wf, &wv})
      v.emplace_back(m->data(), m->size());
    for (Eigen::VectorXd* b : {&b1, &b2, &bg, &bf, &bv})
      v.emplace_back(b->data(), b->size());
    return v;
  }

  size_t parameter_count() const {
    return static_cast<size_t>(w1.size() + w2.size() + wg.size() + wf.size() + wv.size() +
                               b1.size() + b2.size() + bg.size() + bf.size() + bv.size());
  }

  Eigen::VectorXd to_vector() const {
    Eigen::VectorXd out(parameter_count());
    Eigen::Index at = 0;
    auto put = [&](const auto& m) {
      out.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      at += m.size();
    };
    put(w1); put(w2); put(wg); put(wf); put(wv);
    put(b1); put(b2); put(bg); put(bf); put(bv);
    return out;
  }

  void from_vector(const Eigen::VectorXd& v) {
    Eigen::Index at = 0;
    auto take = [&](auto& m) {
      Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = v.segment(at, m.size());
      at += m.size();
    };
    take(w1); take(w2); take(wg); take(wf); take(wv);
    take(b1); take(b2); take(bg); take(bf); take(bv);
    if (at != v.size()) throw std::runtime_error("policy: parameter vector size mismatch");
  }
};

// Gradients laid out exactly like PolicyParams.
struct PolicyGrads {
  Eigen::MatrixXd w1, w2, wg, wf, wv;
  Eigen::VectorXd b1, b2, bg, bf, bv;

  explicit PolicyGrads(const PolicyParams& p) {
    w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
    w2 = Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols());
    wg = Eigen::MatrixXd::Zero(p.wg.rows(), p.wg.cols());
    wf = Eigen::MatrixXd::Zero(p.wf.rows(), p.wf.cols());
    wv = Eigen::MatrixXd::Zero(p.wv.rows(), p.wv.cols());
    b1 = Eigen::VectorXd::Zero(p.b1.size());
    b2 = Eigen::VectorXd::Zero(p.b2.size());
    bg = Eigen::VectorXd::Zero(p.bg.size());
    bf = Eigen::VectorXd::Zero(p.bf.size());
    bv = Eigen::VectorXd::Zero(p.bv.size());
  }

  Eigen::VectorXd to_vector() const {
    PolicyParams tmp;
    tmp.w1 = w1; tmp.w2 = w2; tmp.wg = wg; tmp.wf = wf; tmp.wv = wv;
    tmp.b1 = b1; tmp.b2 = b2; tmp.bg = bg; tmp.bf = bf; tmp.bv = bv;
    return tmp.to_vector();
  }
};

struct ForwardPass {
  Eigen::VectorXd x, h1, h2;
  Eigen::VectorXd gaze_probs, finger_probs;
  Eigen::VectorXd gaze_logits, finger_logits;
  double value = 0.0;
};

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

inline ForwardPass forward(const PolicyParams& p, const Eigen::VectorXd& x) {
  ForwardPass f;
  f.x = x;
  f.h1 = (p.w1 * x + p.b1).array().tanh();
  f.h2 = (p.w2 * f.h1 + p.b2).array().tanh();
  f.gaze_logits = p.wg * f.h2 + p.bg;
  f.finger_logits = p.wf * f.h2 + p.bf;
  f.gaze_probs = softmax(f.gaze_logits);
  f.finger_probs = softmax(f.finger_logits);
  f.value = (p.wv * f.h2 + p.bv)(0);
  return f;
}

// Accumulates parameter gradients for one sample given the gradients w.r.t.
// the head logits and the value output.
inline void backward(const PolicyParams& p, const ForwardPass& f, const Eigen::VectorXd& d_gaze,
                     const Eigen::VectorXd& d_finger, double d_value, PolicyGrads& g) {
  g.wg.noalias() += d_gaze * f.h2.transpose();
  g.bg += d_gaze;
  g.wf.noalias() += d_finger * f.h2.transpose();
  g.bf += d_finger;
  g.wv.noalias() += d_value * f.h2.transpose();
  g.bv(0) += d_value;

  Eigen::VectorXd dh2 = p.wg.transpose() * d_gaze + p.wf.transpose() * d_finger +
                        p.wv.transpose() * Eigen::VectorXd::Constant(1, d_value);
  Eigen::VectorXd dz2 = dh2.array() * (1.0 - f.h2.array().square());
  g.w2.noalias() += dz2 * f.h1.transpose();
  g.b2 += dz2;
  Eigen::VectorXd dh1 = p.w2.transpose() * dz2;
  Eigen::VectorXd dz1 = dh1.array() * (1.0 - f.h1.array().square());
  g.w1.noalias() += dz1 * f.x.transpose();
  g.b1 += dz1;
}

struct ActResult {
  Action action;
  double logprob = 0.0;
  double value = 0.0;
};

inline int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  double u = rng.uniform01();
  for (int i = 0; i < probs.size(); ++i) {
    u -= probs(i);
    if (u < 0.0) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

inline ActResult act(const PolicyParams& p, const std::vector<double>& obs, Rng& rng,
                     bool greedy = false) {
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
  if (x.size() != p.obs_dim()) throw std::runtime_error("act: observation dimension mismatch");
  const ForwardPass f = forward(p, x);
  int ag, af;
  if (greedy) {
    f.gaze_probs.maxCoeff(&ag);
    f.finger_probs.maxCoeff(&af);
  } else {
    ag = sample_categorical(f.gaze_probs, rng);
    af = sample_categorical(f.finger_probs, rng);
  }
  ActResult r;
  r.action = Action{static_cast<Region>(ag), static_cast<Finger>(af)};
  r.logprob = std::log(f.gaze_probs(ag)) + std::log(f.finger_probs(af));
  r.value = f.value;
  return r;
}

// ---- Adam -------------------------------------------------------------------

struct Adam {
  double lr = 3e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd m, v;
  long t = 0;

  void init(size_t n) {
    m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    t = 0;
  }

  void update(PolicyParams& params, const Eigen::VectorXd& grad) {
    if (m.size() != grad.size()) init(static_cast<size_t>(grad.size()));
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    Eigen::VectorXd theta = params.to_vector();
    theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    params.from_vector(theta);
  }
};

// ---- PPO --------------------------------------------------------------------

struct Transition {
  Eigen::VectorXd obs;
  int gaze = 0, finger = 0;
  double logprob = 0.0;
  double value = 0.0;
  double reward = 0.0;  // env reward + training shaping
  bool done = false;
};

struct CurriculumStage {
  double progress = 0.0;
  int max_pick_distance = 0;
};

struct TrainConfig {
  int episodes = 5000;
  double lr = 3e-3;
  double clip_eps = 0.2;
  double gae_gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs_per_batch = 4;
  int batch_episodes = 32;
  int minibatch = 256;
  double entropy_coef = 0.01;  // annealed linearly to zero over training
  double value_coef = 0.5;
  double max_grad_norm = 5.0;
  double mask_penalty = -0.02;
  std::vector<CurriculumStage> curriculum = {{0.0, 0}, {0.25, 1}, {0.5, 2}, {0.75, 3}};
  uint64_t seed = 1;
  int hidden = 64;

  void validate() const {
    if (episodes <= 0 || batch_episodes <= 0 || epochs_per_batch <= 0 || minibatch <= 0)
      throw std::runtime_error("train: counts must be positive");
    if (clip_eps <= 0.0 || clip_eps >= 1.0) throw std::runtime_error("train: clip_eps out of (0,1)");
    double last = -1.0;
    int last_d = -1;
    for (const auto& s : curriculum) {
      if (s.progress <= last && !(last < 0.0)) throw std::runtime_error("train: curriculum progress not increasing");
      if (s.max_pick_distance < last_d) throw std::runtime_error("train: curriculum distances decreasing");
      last = s.progress;
      last_d = s.max_pick_distance;
    }
  }
};

inline int curriculum_max_distance(const std::vector<CurriculumStage>& stages, double progress) {
  int d = 0;
  for (const auto& s : stages)
    if (progress >= s.progress) d = s.max_pick_distance;
  return d;
}

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

// Generalized advantage estimation over episodes delimited by done flags;
// terminal values bootstrap at zero. Returns (advantages, returns).
inline std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<Transition>& batch, double gamma, double lambda) {
  const size_t n = batch.size();
  std::vector<double> advantages(n), returns(n);
  double gae = 0.0;
  for (size_t i = n; i-- > 0;) {
    const double next_value = (batch[i].done || i + 1 == n) ? 0.0 : batch[i + 1].value;
    const double next_nonterminal = batch[i].done ? 0.0 : 1.0;
    const double delta = batch[i].reward + gamma * next_value * next_nonterminal - batch[i].value;
    gae = delta + gamma * lambda * next_nonterminal * gae;
    advantages[i] = gae;
    returns[i] = advantages[i] + batch[i].value;
  }
  return {std::move(advantages), std::move(returns)};
}

struct LossGrad {
  double loss = 0.0;
  PpoStats stats;
  Eigen::VectorXd grad;
};

// Mean clipped-surrogate loss plus value error and entropy bonus over the
// selected transitions, with its gradient assembled by explicit backprop.
inline LossGrad ppo_loss_and_grad(const std::vector<Transition>& batch,
                                  std::span<const size_t> idx,
                                  std::span<const double> advantages,
                                  std::span<const double> returns, const PolicyParams& params,
                                  const TrainConfig& cfg, double entropy_coef) {
  LossGrad out;
  PolicyGrads grads(params);
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (size_t k : idx) {
    const Transition& tr = batch[k];
    const double adv = advantages[k];
    const ForwardPass f = forward(params, tr.obs);
    const double lp_new = std::log(f.gaze_probs(tr.gaze)) + std::log(f.finger_probs(tr.finger));
    const double ratio = std::exp(lp_new - tr.logprob);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
    // Gradient flows only through the unclipped branch when it is the active
    // minimum; a transition pushed past the clip range contributes nothing.
    const double dlp = unclipped <= clipped ? -adv * ratio * inv : 0.0;
    out.stats.policy_loss += -std::min(unclipped, clipped) * inv;

    const double hg = -(f.gaze_probs.array() * f.gaze_probs.array().log()).sum();
    const double hf = -(f.finger_probs.array() * f.finger_probs.array().log()).sum();
    out.stats.entropy += (hg + hf) * inv;

    Eigen::VectorXd d_gaze = -dlp * f.gaze_probs;
    d_gaze(tr.gaze) += dlp;
    Eigen::VectorXd d_finger = -dlp * f.finger_probs;
    d_finger(tr.finger) += dlp;
    // Entropy bonus: d(-c*H)/dlogit_k = c * p_k * (log p_k + H).
    d_gaze += entropy_coef * inv *
              (f.gaze_probs.array() * (f.gaze_probs.array().log() + hg)).matrix();
    d_finger += entropy_coef * inv *
                (f.finger_probs.array() * (f.finger_probs.array().log() + hf)).matrix();

    const double verr = f.value - returns[k];
    out.stats.value_loss += verr * verr * inv;
    const double d_value = cfg.value_coef * 2.0 * verr * inv;

    backward(params, f, d_gaze, d_finger, d_value, grads);
  }
  out.loss = out.stats.policy_loss + cfg.value_coef * out.stats.value_loss -
             entropy_coef * out.stats.entropy;
  out.grad = grads.to_vector();
  return out;
}

// One clipped-surrogate update over a batch of transitions.
inline PpoStats ppo_update(const std::vector<Transition>& batch, PolicyParams& params, Adam& opt,
                           const TrainConfig& cfg, Rng& rng, double entropy_coef) {
  const size_t n = batch.size();
  if (n == 0) return {};

  auto [advantages, returns] = compute_gae(batch, cfg.gae_gamma, cfg.gae_lambda);
  // Normalize advantages across the batch.
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n)) + 1e-8;
  for (double& a : advantages) a = (a - mean) / sd;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  PpoStats stats;
  int stat_count = 0;
  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.minibatch)) {
      const size_t stop = std::min(n, start + static_cast<size_t>(cfg.minibatch));
      const std::span<const size_t> idx(order.data() + start, stop - start);
      LossGrad lg = ppo_loss_and_grad(batch, idx, advantages, returns, params, cfg, entropy_coef);
      if (!lg.grad.allFinite())
        throw std::runtime_error("ppo_update: non-finite gradient (loss " +
                                 std::to_string(lg.loss) + ")");
      const double norm = lg.grad.norm();
      if (norm > cfg.max_grad_norm) lg.grad *= cfg.max_grad_norm / norm;
      opt.update(params, lg.grad);
      stats.policy_loss += lg.stats.policy_loss;
      stats.value_loss += lg.stats.value_loss;
      stats.entropy += lg.stats.entropy;
      ++stat_count;
    }
  }
  if (stat_count > 0) {
    stats.policy_loss /= stat_count;
    stats.value_loss /= stat_count;
    stats.entropy /= stat_count;
  }
  return stats;
}

// ---- environment interface used by the trainer -------------------------------

// Minimal rollout surface so the trainer also drives sanity environments in
// tests. reset(seed) fully determines an episode given the policy actions.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual int obs_dim() const = 0;
  virtual std::vector<double> reset(uint64_t episode_seed) = 0;
  // Returns (obs, reward, done, shaping).
  struct Out {
    std::vector<double> obs;
    double reward = 0.0;
    bool done = false;
    double shaping = 0.0;
  };
  virtual Out step(const Action& a) = 0;
  // Edit distance of the pickable suggestion to the target; used by the
  // curriculum mask. Environments without picking report a large value.
  virtual int pick_distance() const { return 1 << 20; }
  virtual bool picked() const { return false; }
  // Shaping rewards are dropped once training passes this progress fraction.
  virtual double shaping_anneal_fraction() const { return 0.0; }
};

// Adapter that samples a word and cognitive parameters per episode.
class TypingRolloutEnv : public RolloutEnv {
 public:
  TypingRolloutEnv(const SuggestEngine& engine, EnvConfig cfg, WordSet words)
      : env_(engine, std::move(cfg)), words_(std::move(words)) {}

  // Evaluation at fixed cognitive parameters instead of per-episode sampling.
  void fix_params(const CognitiveParams& p) { fixed_params_ = p; }

  int obs_dim() const override { return observation_dim(env_.config().variant); }

  std::vector<double> reset(uint64_t episode_seed) override {
    Rng setup(derive_seed(episode_seed, "episode-setup"));
    const std::string& word = sample_word(words_, setup);
    const CognitiveParams params =
        fixed_params_ ? *fixed_params_ : env_.config().ranges.sample(setup);
    const Observation obs = env_.reset(word, params, derive_seed(episode_seed, "episode-env"));
    return encode_observation(obs, env_.config().variant);
  }

  // The speed term of the episode reward is paid out per step during
  // training (the per-episode sum telescopes back to the terminal formula);
  // time costs are otherwise too diluted for the policy gradient to notice
  // individual gaze shifts.
  Out step(const Action& a) override {
    const double before = env_.state().elapsed_s;
    const StepResult r = env_.step(a);
    const double dt = env_.state().elapsed_s - before;
    const double wl = static_cast<double>(env_.state().target.size());
    const double gamma = env_.config().reward.gamma;
    double reward = -gamma * dt / wl;
    if (r.done) reward += r.reward + gamma * env_.state().elapsed_s / wl;
    return {encode_observation(r.obs, env_.config().variant), reward, r.done, r.shaping};
  }

  int pick_distance() const override { return env_.pick_distance(); }
  bool picked() const override { return env_.state().picked_target; }
  double shaping_anneal_fraction() const override {
    const RewardConfig& r = env_.config().reward;
    return r.shaping_enabled ? r.shaping_anneal_fraction : 0.0;
  }
  TypingEnv& env() { return env_; }

 private:
  TypingEnv env_;
  WordSet words_;
  std::optional<CognitiveParams> fixed_params_;
};

// ---- checkpoints --------------------------------------------------------------

struct Checkpoint {
  int version = 1;
  std::string config_fingerprint;
  long episode = 0;
  double progress = 0.0;  // curriculum position in [0,1]
  PolicyParams params;
  Adam adam;
  std::array<uint64_t, 4> rng_state{};

  static constexpr int kVersion = 1;
};

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = data;
  return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw std::runtime_error("checkpoint: matrix size mismatch");
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["version"] = Checkpoint::kVersion;
  j["config_fingerprint"] = ckpt.config_fingerprint;
  j["episode"] = ckpt.episode;
  j["progress"] = ckpt.progress;
  j["params"] = {{"w1", matrix_to_json(ckpt.params.w1)}, {"w2", matrix_to_json(ckpt.params.w2)},
                 {"wg", matrix_to_json(ckpt.params.wg)}, {"wf", matrix_to_json(ckpt.params.wf)},
                 {"wv", matrix_to_json(ckpt.params.wv)}, {"b1", vector_to_json(ckpt.params.b1)},
                 {"b2", vector_to_json(ckpt.params.b2)}, {"bg", vector_to_json(ckpt.params.bg)},
                 {"bf", vector_to_json(ckpt.params.bf)}, {"bv", vector_to_json(ckpt.params.bv)}};
  j["adam"] = {{"lr", ckpt.adam.lr},
               {"t", ckpt.adam.t},
               {"m", vector_to_json(ckpt.adam.m)},
               {"v", vector_to_json(ckpt.adam.v)}};
  j["rng_state"] = ckpt.rng_state;
  // Atomic write: temp file then rename.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::string& path,
                                  const std::string& expect_fingerprint = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
  }
  if (j.at("version").get<int>() != Checkpoint::kVersion)
    throw std::runtime_error("checkpoint version mismatch in " + path);
  Checkpoint ckpt;
  ckpt.config_fingerprint = j.at("config_fingerprint");
  ckpt.episode = j.at("episode");
  ckpt.progress = j.at("progress");
  const auto& p = j.at("params");
  ckpt.params.w1 = matrix_from_json(p.at("w1"));
  ckpt.params.w2 = matrix_from_json(p.at("w2"));
  ckpt.params.wg = matrix_from_json(p.at("wg"));
  ckpt.params.wf = matrix_from_json(p.at("wf"));
  ckpt.params.wv = matrix_from_json(p.at("wv"));
  ckpt.params.b1 = vector_from_json(p.at("b1"));
  ckpt.params.b2 = vector_from_json(p.at("b2"));
  ckpt.params.bg = vector_from_json(p.at("bg"));
  ckpt.params.bf = vector_from_json(p.at("bf"));
  ckpt.params.bv = vector_from_json(p.at("bv"));
  const auto& a = j.at("adam");
  ckpt.adam.lr = a.at("lr");
  ckpt.adam.t = a.at("t");
  ckpt.adam.m = vector_from_json(a.at("m"));
  ckpt.adam.v = vector_from_json(a.at("v"));
  ckpt.rng_state = j.at("rng_state");
  if (!expect_fingerprint.empty() && ckpt.config_fingerprint != expect_fingerprint)
    std::cerr << "warning: checkpoint " << path << " was trained under a different config ("
              << ckpt.config_fingerprint << " != " << expect_fingerprint << ")\n";
  return ckpt;
}

// ---- training ----------------------------------------------------------------

struct CurvePoint {
  long episode = 0;
  double mean_reward = 0.0;
  double mean_picked = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<CurvePoint> curve;
};

inline void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve: " + path);
  out << "episode,mean_reward,mean_picked\n";
  char buf[96];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%ld,%.6f,%.6f\n", p.episode, p.mean_reward, p.mean_picked);
    out << buf;
  }
}

struct EarlyStop {
  // Stop once the 200-episode moving-average reward improves by less than 1%
  // over two consecutive windows.
  int window = 200;
  double min_improvement = 0.01;
};

inline TrainResult train(RolloutEnv& env, const TrainConfig& cfg,
                         const std::string& config_fingerprint = {},
                         std::optional<PolicyParams> start_params = std::nullopt,
                         std::optional<EarlyStop> early_stop = std::nullopt,
                         const std::string& checkpoint_path = {}, int checkpoint_every = 0) {
  cfg.validate();
  TrainResult result;
  PolicyParams params =
      start_params ? std::move(*start_params) : PolicyParams::init(env.obs_dim(), cfg.hidden, cfg.seed);
  if (params.obs_dim() != env.obs_dim())
    throw std::runtime_error(
        "train: checkpoint observation dimensionality does not match this environment; "
        "train this variant from scratch instead of fine-tuning");
  Adam opt;
  opt.lr = cfg.lr;
  opt.init(params.parameter_count());
  Rng act_rng(derive_seed(cfg.seed, "train-act"));
  Rng ppo_rng(derive_seed(cfg.seed, "train-ppo"));

  std::vector<Transition> batch;
  long episode = 0;
  double window_reward = 0.0;
  long window_count = 0;
  std::vector<double> window_means;
  int stall = 0;

  while (episode < cfg.episodes) {
    batch.clear();
    double batch_reward = 0.0;
    double batch_picked = 0.0;
    int batch_eps = 0;
    const double progress = static_cast<double>(episode) / static_cast<double>(cfg.episodes);
    const int max_dist = curriculum_max_distance(cfg.curriculum, progress);
    for (int b = 0; b < cfg.batch_episodes && episode < cfg.episodes; ++b, ++episode) {
      std::vector<double> obs = env.reset(derive_seed(cfg.seed, "episode", episode));
      bool done = false;
      double ep_reward = 0.0;
      const bool shaping_active = progress < env.shaping_anneal_fraction();
      while (!done) {
        ActResult ar = act(params, obs, act_rng);
        Action exec = ar.action;
        double shaping_extra = 0.0;
        if (exec.finger == Finger::Pick && env.pick_distance() > max_dist) {
          exec.finger = Finger::NoAct;  // masked during training only
          shaping_extra += cfg.mask_penalty;
        }
        RolloutEnv::Out out = env.step(exec);
        Transition tr;
        tr.obs = Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size());
        tr.gaze = static_cast<int>(ar.action.gaze);
        tr.finger = static_cast<int>(ar.action.finger);
        tr.logprob = ar.logprob;
        tr.value = ar.value;
        tr.reward = out.reward + (shaping_active ? out.shaping : 0.0) + shaping_extra;
        tr.done = out.done;
        batch.push_back(std::move(tr));
        obs = std::move(out.obs);
        done = out.done;
        ep_reward += out.reward;
      }
      batch_reward += ep_reward;
      batch_picked += env.picked() ? 1.0 : 0.0;
      window_reward += ep_reward;
      ++window_count;
      ++batch_eps;
    }
    const double entropy_coef = cfg.entropy_coef * (1.0 - progress);
    ppo_update(batch, params, opt, cfg, ppo_rng, entropy_coef);

    result.curve.push_back({episode, batch_reward / batch_eps, batch_picked / batch_eps});

    if (checkpoint_every > 0 && !checkpoint_path.empty() &&
        episode % checkpoint_every < cfg.batch_episodes) {
      Checkpoint snap{1, config_fingerprint, episode, progress, params, opt, act_rng.state()};
      save_checkpoint(snap, checkpoint_path);
    }

    if (early_stop && window_count >= early_stop->window) {
      window_means.push_back(window_reward / window_count);
      window_reward = 0.0;
      window_count = 0;
      const size_t k = window_means.size();
      if (k >= 2) {
        const double prev = window_means[k - 2], curr = window_means[k - 1];
        const double rel = (curr - prev) / std::max(std::abs(prev), 1e-9);
        stall = rel < early_stop->min_improvement ? stall + 1 : 0;
        if (stall >= 2) break;
      }
    }
  }

  result.checkpoint.version = 1;
  result.checkpoint.config_fingerprint = config_fingerprint;
  result.checkpoint.episode = episode;
  result.checkpoint.progress = 1.0;
  result.checkpoint.params = std::move(params);
  result.checkpoint.adam = std::move(opt);
  result.checkpoint.rng_state = act_rng.state();
  return result;
}

// Fine-tuning restarts training from a checkpoint with a tenfold smaller
// learning rate and reward-stability early stopping.
inline TrainResult fine_tune(const Checkpoint& base, RolloutEnv& env, TrainConfig cfg,
                             const std::string& config_fingerprint = {}) {
  if (base.params.obs_dim() != env.obs_dim())
    throw std::runtime_error(
        "fine_tune: observation dimensionality mismatch between checkpoint and environment; "
        "this variant must be trained from scratch");
  cfg.lr /= 10.0;
  // The base policy already picks; no need to re-tighten the curriculum.
  cfg.curriculum = {{0.0, curriculum_max_distance(cfg.curriculum, 1.0)}};
  return train(env, cfg, config_fingerprint, base.params, EarlyStop{});
}

}  // namespace wst
