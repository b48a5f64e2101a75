#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "wstypist/policy.hpp"

using namespace wst;
namespace fs = std::filesystem;

namespace {

std::vector<double> random_obs(int dim, Rng& rng) {
  std::vector<double> x(static_cast<size_t>(dim));
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

// Two-armed bandit behind the rollout interface: typing is the good arm.
class BanditEnv : public RolloutEnv {
 public:
  int obs_dim() const override { return 3; }
  std::vector<double> reset(uint64_t) override {
    done_ = false;
    return {1.0, 0.0, 0.0};
  }
  Out step(const Action& a) override {
    done_ = true;
    const double reward = a.finger == Finger::Type ? 1.0 : 0.0;
    return {{1.0, 0.0, 0.0}, reward, true, 0.0};
  }

 private:
  bool done_ = false;
};

}  // namespace

TEST_CASE("head probabilities sum to one") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    PolicyParams p = PolicyParams::init(15, 16, 100 + trial);
    const auto obs = random_obs(15, rng);
    const ForwardPass f = forward(p, Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size()));
    REQUIRE(f.gaze_probs.sum() == Catch::Approx(1.0).epsilon(1e-9));
    REQUIRE(f.finger_probs.sum() == Catch::Approx(1.0).epsilon(1e-9));
    REQUIRE(f.gaze_probs.minCoeff() > 0.0);
    REQUIRE(f.finger_probs.minCoeff() > 0.0);
  }
}

TEST_CASE("uniform logits give uniform action probabilities") {
  PolicyParams p = PolicyParams::init(4, 8, 1);
  p.wg.setZero();
  p.wf.setZero();
  p.bg.setZero();
  p.bf.setZero();
  Rng rng(3);
  const auto obs = random_obs(4, rng);
  const ForwardPass f = forward(p, Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size()));
  for (int i = 0; i < kGazeActions; ++i)
    CHECK(f.gaze_probs(i) == Catch::Approx(1.0 / kGazeActions));
  for (int i = 0; i < kFingerActions; ++i)
    CHECK(f.finger_probs(i) == Catch::Approx(1.0 / kFingerActions));
}

TEST_CASE("greedy action is deterministic and logprob nonpositive") {
  PolicyParams p = PolicyParams::init(6, 12, 5);
  Rng rng(7);
  const auto obs = random_obs(6, rng);
  const ActResult a = act(p, obs, rng, /*greedy=*/true);
  const ActResult b = act(p, obs, rng, /*greedy=*/true);
  CHECK(a.action.gaze == b.action.gaze);
  CHECK(a.action.finger == b.action.finger);
  CHECK(a.logprob == b.logprob);
  for (int i = 0; i < 50; ++i) {
    const ActResult s = act(p, obs, rng);
    REQUIRE(s.logprob <= 0.0);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  // Small network, random batch; this is the backprop oracle.
  const int obs_dim = 5, hidden = 6;
  PolicyParams params = PolicyParams::init(obs_dim, hidden, 42);
  Rng rng(9);
  std::vector<Transition> batch;
  std::vector<double> advantages, returns;
  std::vector<size_t> idx;
  for (size_t i = 0; i < 12; ++i) {
    Transition tr;
    Eigen::VectorXd x(obs_dim);
    for (int d = 0; d < obs_dim; ++d) x(d) = rng.uniform(-1.0, 1.0);
    tr.obs = x;
    tr.gaze = static_cast<int>(rng.uniform_int(kGazeActions));
    tr.finger = static_cast<int>(rng.uniform_int(kFingerActions));
    const ForwardPass f = forward(params, x);
    // Perturb the stored logprob so ratios spread around 1.
    tr.logprob = std::log(f.gaze_probs(tr.gaze)) + std::log(f.finger_probs(tr.finger)) +
                 rng.uniform(-0.15, 0.15);
    tr.value = f.value;
    batch.push_back(std::move(tr));
    advantages.push_back(rng.uniform(-1.5, 1.5));
    returns.push_back(rng.uniform(-1.0, 1.0));
    idx.push_back(i);
  }
  TrainConfig cfg;
  const double entropy_coef = 0.013;

  const LossGrad lg =
      ppo_loss_and_grad(batch, idx, advantages, returns, params, cfg, entropy_coef);

  Eigen::VectorXd theta = params.to_vector();
  const double h = 1e-6;
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    PolicyParams plus = params, minus = params;
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    plus.from_vector(tp);
    minus.from_vector(tm);
    const double lp =
        ppo_loss_and_grad(batch, idx, advantages, returns, plus, cfg, entropy_coef).loss;
    const double lm =
        ppo_loss_and_grad(batch, idx, advantages, returns, minus, cfg, entropy_coef).loss;
    const double fd = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(lg.grad(i)), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - lg.grad(i)) / denom);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("clipped-out transitions contribute no policy gradient") {
  PolicyParams params = PolicyParams::init(4, 6, 3);
  TrainConfig cfg;
  cfg.value_coef = 0.0;

  Rng rng(4);
  Transition tr;
  Eigen::VectorXd x(4);
  for (int d = 0; d < 4; ++d) x(d) = rng.uniform(-1.0, 1.0);
  tr.obs = x;
  tr.gaze = 0;
  tr.finger = 0;
  const ForwardPass f = forward(params, x);
  const double lp_new = std::log(f.gaze_probs(0)) + std::log(f.finger_probs(0));
  // ratio = exp(lp_new - logprob) = e well above 1 + clip_eps, advantage
  // positive and pushing further out
  tr.logprob = lp_new - 1.0;
  tr.value = f.value;
  std::vector<Transition> batch{tr};
  std::vector<double> adv{2.0}, ret{f.value};  // value error zero
  std::vector<size_t> idx{0};
  const LossGrad lg = ppo_loss_and_grad(batch, idx, adv, ret, params, cfg, 0.0);
  CHECK(lg.grad.norm() == Catch::Approx(0.0).margin(1e-14));

  // the same transition inside the clip range does produce gradient
  batch[0].logprob = lp_new;
  const LossGrad lg2 = ppo_loss_and_grad(batch, idx, adv, ret, params, cfg, 0.0);
  CHECK(lg2.grad.norm() > 1e-6);
}

TEST_CASE("single in-range transition raises the chosen action's logit") {
  PolicyParams params = PolicyParams::init(4, 6, 8);
  TrainConfig cfg;
  cfg.value_coef = 0.0;
  Rng rng(6);
  Eigen::VectorXd x(4);
  for (int d = 0; d < 4; ++d) x(d) = rng.uniform(-1.0, 1.0);
  Transition tr;
  tr.obs = x;
  tr.gaze = 1;
  tr.finger = 2;
  const ForwardPass f0 = forward(params, x);
  tr.logprob = std::log(f0.gaze_probs(1)) + std::log(f0.finger_probs(2));
  tr.value = f0.value;
  std::vector<Transition> batch{tr};
  std::vector<double> adv{1.0}, ret{f0.value};
  std::vector<size_t> idx{0};
  const LossGrad lg = ppo_loss_and_grad(batch, idx, adv, ret, params, cfg, 0.0);
  // A small step along -grad must increase the chosen action probability.
  PolicyParams stepped = params;
  stepped.from_vector(params.to_vector() - 0.01 * lg.grad);
  const ForwardPass f1 = forward(stepped, x);
  CHECK(f1.gaze_probs(1) > f0.gaze_probs(1));
  CHECK(f1.finger_probs(2) > f0.finger_probs(2));
}

TEST_CASE("gae on a simple two-episode batch") {
  // episode 1 = two steps, episode 2 = one step
  std::vector<Transition> batch(3);
  batch[0].reward = 0.0;
  batch[0].value = 0.5;
  batch[0].done = false;
  batch[1].reward = 1.0;
  batch[1].value = 0.4;
  batch[1].done = true;
  batch[2].reward = 2.0;
  batch[2].value = 0.1;
  batch[2].done = true;
  const auto [adv, ret] = compute_gae(batch, 0.9, 0.8);
  // episode 2: delta = 2.0 - 0.1
  CHECK(adv[2] == Catch::Approx(1.9));
  // episode 1 step 2: delta = 1.0 - 0.4
  CHECK(adv[1] == Catch::Approx(0.6));
  // episode 1 step 1: delta = 0 + 0.9*0.4 - 0.5 = -0.14; gae = delta + 0.72*0.6
  CHECK(adv[0] == Catch::Approx(-0.14 + 0.72 * 0.6));
  for (size_t i = 0; i < 3; ++i) CHECK(ret[i] == Catch::Approx(adv[i] + batch[i].value));
}

TEST_CASE("curriculum schedule") {
  const std::vector<CurriculumStage> stages = {{0.0, 0}, {0.25, 1}, {0.5, 2}, {0.75, 3}};
  CHECK(curriculum_max_distance(stages, 0.0) == 0);
  CHECK(curriculum_max_distance(stages, 0.1) == 0);
  CHECK(curriculum_max_distance(stages, 0.25) == 1);
  CHECK(curriculum_max_distance(stages, 0.6) == 2);
  CHECK(curriculum_max_distance(stages, 0.8) == 3);
  // nondecreasing in progress
  int last = -1;
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    const int d = curriculum_max_distance(stages, p);
    REQUIRE(d >= last);
    last = d;
  }
}

TEST_CASE("checkpoint round trip") {
  const fs::path dir = fs::temp_directory_path();
  const std::string p1 = (dir / "ckpt_a.json").string();
  const std::string p2 = (dir / "ckpt_b.json").string();

  Checkpoint ck;
  ck.config_fingerprint = "cafe0123cafe0123";
  ck.episode = 1234;
  ck.progress = 0.7;
  ck.params = PolicyParams::init(15, 64, 77);
  ck.adam.init(ck.params.parameter_count());
  ck.adam.lr = 0.003;
  ck.adam.t = 42;
  Rng rng(5);
  ck.rng_state = rng.state();

  save_checkpoint(ck, p1);
  const Checkpoint loaded = load_checkpoint(p1, "cafe0123cafe0123");
  save_checkpoint(loaded, p2);

  std::ifstream f1(p1), f2(p2);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);  // byte-identical

  // greedy decisions survive the round trip
  Rng obs_rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto obs = random_obs(15, obs_rng);
    Rng r1(1), r2(1);
    const ActResult a = act(ck.params, obs, r1, true);
    const ActResult b = act(loaded.params, obs, r2, true);
    REQUIRE(a.action.gaze == b.action.gaze);
    REQUIRE(a.action.finger == b.action.finger);
    REQUIRE(a.value == b.value);
  }

  CHECK_THROWS(load_checkpoint((dir / "missing_ckpt.json").string()));
  std::ofstream(dir / "corrupt.json") << "{ not json";
  CHECK_THROWS(load_checkpoint((dir / "corrupt.json").string()));
}

TEST_CASE("training runs are reproducible") {
  TrainConfig cfg;
  cfg.episodes = 120;
  cfg.batch_episodes = 16;
  cfg.minibatch = 64;
  cfg.seed = 99;
  cfg.hidden = 16;
  BanditEnv env1, env2;
  const TrainResult a = train(env1, cfg);
  const TrainResult b = train(env2, cfg);
  REQUIRE(a.curve.size() == b.curve.size());
  for (size_t i = 0; i < a.curve.size(); ++i) {
    REQUIRE(a.curve[i].episode == b.curve[i].episode);
    REQUIRE(a.curve[i].mean_reward == b.curve[i].mean_reward);
  }
  REQUIRE(a.checkpoint.params.to_vector() == b.checkpoint.params.to_vector());
}

TEST_CASE("bandit sanity: the trainer finds the good arm") {
  TrainConfig cfg;
  cfg.episodes = 2000;
  cfg.batch_episodes = 32;
  cfg.minibatch = 64;
  cfg.seed = 7;
  cfg.hidden = 16;
  cfg.curriculum = {{0.0, 1 << 20}};  // no masking in the bandit
  BanditEnv env;
  const TrainResult result = train(env, cfg);
  Rng rng(1);
  const ActResult greedy = act(result.checkpoint.params, {1.0, 0.0, 0.0}, rng, true);
  CHECK(greedy.action.finger == Finger::Type);
  CHECK(result.curve.back().mean_reward > 0.9);
}

TEST_CASE("fine-tuning rejects mismatched observation spaces") {
  Checkpoint base;
  base.params = PolicyParams::init(15, 16, 3);
  BanditEnv env;  // obs_dim 3 != 15
  TrainConfig cfg;
  cfg.episodes = 10;
  CHECK_THROWS_WITH(fine_tune(base, env, cfg),
                    Catch::Matchers::ContainsSubstring("from scratch"));
}

TEST_CASE("masked pick converts to noact with a penalty") {
  // Covered behaviorally in the training loop; here the action mask decision
  // point: pick distance above the stage limit must veto the pick.
  const std::vector<CurriculumStage> stages = {{0.0, 0}, {0.25, 1}, {0.5, 2}, {0.75, 3}};
  CHECK(curriculum_max_distance(stages, 0.1) == 0);
  // distance 0 (exact match) is allowed at progress 0.1, distance 2 is not
  CHECK(0 <= curriculum_max_distance(stages, 0.1));
  CHECK(2 > curriculum_max_distance(stages, 0.1));
  CHECK(3 <= curriculum_max_distance(stages, 0.8));
}
