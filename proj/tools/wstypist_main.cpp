// wstypist: train, evaluate, fit, and run design studies for the typing
// simulator. Every command is reproducible from config + flags + seed.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wstypist/cases.hpp"
#include "wstypist/config.hpp"
#include "wstypist/eval.hpp"
#include "wstypist/fit.hpp"
#include "wstypist/metrics.hpp"
#include "wstypist/policy.hpp"

namespace fs = std::filesystem;
using namespace wst;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_data_path(const std::string& rel) {
  if (fs::exists(rel)) return rel;
  const std::string src = std::string(WST_SOURCE_DIR) + "/" + rel;
  return src;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("file not found: " + path);
}

struct Cli {
  std::string config_path;
  std::optional<uint64_t> seed_flag;
  std::string run_dir;
  int jobs = 0;
  RunConfig cfg;

  void finalize() {
    if (!config_path.empty()) {
      require_file(config_path);
      cfg = RunConfig::load(config_path);
    } else {
      const std::string def = default_data_path("data/default_config.json");
      if (fs::exists(def)) cfg = RunConfig::load(def);
    }
    if (seed_flag) cfg.seed = *seed_flag;
    else if (const char* env = std::getenv("WSTYPIST_SEED")) cfg.seed = std::stoull(env);
    if (jobs > 0) cfg.jobs = jobs;
    cfg.lexicon_path = default_data_path(cfg.lexicon_path);
    cfg.train_words_path = default_data_path(cfg.train_words_path);
    cfg.cap_words_path = default_data_path(cfg.cap_words_path);
    cfg.reference_path = default_data_path(cfg.reference_path);
    cfg.train.seed = cfg.seed;
  }

  fs::path make_run_dir(const std::string& command) {
    fs::path dir;
    if (!run_dir.empty()) {
      dir = run_dir;
    } else {
      const auto now = std::chrono::system_clock::now();
      const auto t = std::chrono::system_clock::to_time_t(now);
      char stamp[32];
      std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&t));
      dir = fs::path(cfg.out_dir) / (std::string(stamp) + "-" + command);
    }
    fs::create_directories(dir);
    cfg.save((dir / "config.json").string());
    return dir;
  }

  Lexicon load_lexicon() {
    require_file(cfg.lexicon_path);
    return load_frequency_list(cfg.lexicon_path);
  }
};

CognitiveParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open params file: " + path);
  json j;
  in >> j;
  if (j.contains("best_params")) return params_from_json(j.at("best_params"));
  return params_from_json(j);
}

void write_report_json(const MetricReport& rep, const fs::path& path) {
  json j;
  for (const char* name : kMetricNames) j[name] = rep.get(name);
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

void write_comparison_csv(const std::string& group, const std::vector<MetricComparison>& rows,
                          const fs::path& path) {
  std::ofstream out(path);
  out << "group,metric,mean,sd,z,within_1sd\n";
  for (const auto& c : rows)
    out << group << "," << c.metric << "," << c.human_mean << "," << c.human_sd << "," << c.z
        << "," << (c.within_1sd ? 1 : 0) << "\n";
}

// ---- lexicon ------------------------------------------------------------------

int cmd_lexicon(Cli& cli, const std::string& action, const std::string& out_dir) {
  Lexicon lex = cli.load_lexicon();
  if (action == "stats") {
    const auto& first = lex.entries().front();
    std::cout << "entries: " << lex.size() << "\n"
              << "rank 1: '" << first.word << "' count " << first.count << " norm_freq "
              << first.norm_freq << "\n"
              << "longest word: " << lex.max_word_length() << " chars\n";
    return 0;
  }
  if (action != "build") throw UsageError("lexicon: unknown action '" + action + "'");
  const fs::path dir = out_dir.empty() ? fs::path("data") : fs::path(out_dir);
  fs::create_directories(dir);
  const WordSet train = build_training_word_set(lex);
  save_word_set(train, (dir / "wordset_train.txt").string());
  const WordSet cap = build_capitalized_word_set(train);
  save_word_set(cap, (dir / "wordset_cap.txt").string());
  std::cout << "wordset_train.txt: " << train.size() << " words\n"
            << "wordset_cap.txt: " << cap.size() << " words\n";
  return 0;
}

// ---- suggest-bench ---------------------------------------------------------------

int cmd_suggest_bench(Cli& cli, std::optional<double> target_accuracy, const std::string& mode) {
  Lexicon lex = cli.load_lexicon();
  require_file(cli.cfg.train_words_path);
  const WordSet words = load_word_set(cli.cfg.train_words_path, lex, "eval");
  SuggestionConfig scfg = cli.cfg.env.suggest;
  if (!mode.empty()) scfg.mode = suggest_mode_from_string(mode);
  if (target_accuracy) {
    scfg.mode = SuggestMode::AccuracyControlled;
    scfg.target_accuracy = *target_accuracy;
  }
  SuggestEngine engine(lex, scfg);
  const AccuracyReport rep = engine.measure_accuracy(words, cli.cfg.seed);
  const fs::path dir = cli.make_run_dir("suggest-bench");
  json j{{"accuracy", rep.accuracy}};
  if (rep.mean_appearance_fraction) j["mean_appearance_fraction"] = *rep.mean_appearance_fraction;
  else j["mean_appearance_fraction"] = nullptr;
  std::ofstream(dir / "accuracy_report.json") << j.dump(2) << "\n";
  std::ofstream csv(dir / "accuracy_report.csv");
  csv << "accuracy,mean_appearance_fraction\n"
      << rep.accuracy << ","
      << (rep.mean_appearance_fraction ? std::to_string(*rep.mean_appearance_fraction) : "")
      << "\n";
  std::cout << "accuracy: " << rep.accuracy << "\n";
  if (rep.mean_appearance_fraction)
    std::cout << "mean appearance fraction: " << *rep.mean_appearance_fraction << "\n";
  std::cout << "report: " << (dir / "accuracy_report.json").string() << "\n";
  return 0;
}

// ---- train / finetune ----------------------------------------------------------------

const WordSet& words_for_variant(const Cli& cli, EnvVariant variant, Lexicon& lex,
                                 std::optional<WordSet>& train_words,
                                 std::optional<WordSet>& cap_words) {
  if (variant == EnvVariant::Capitalization) {
    if (!cap_words) {
      require_file(cli.cfg.cap_words_path);
      cap_words = load_word_set(cli.cfg.cap_words_path, lex, "cap");
    }
    return *cap_words;
  }
  if (!train_words) {
    require_file(cli.cfg.train_words_path);
    train_words = load_word_set(cli.cfg.train_words_path, lex, "train");
  }
  return *train_words;
}

int cmd_train(Cli& cli, int episodes, const std::string& variant, const std::vector<std::string>& ablations,
              const std::string& base_ckpt) {
  Lexicon lex = cli.load_lexicon();
  RunConfig& cfg = cli.cfg;
  if (!variant.empty()) cfg.env.variant = env_variant_from_string(variant);
  if (!ablations.empty()) cfg.env.ablations = ablations_from_json(json(ablations));
  if (episodes > 0) cfg.train.episodes = episodes;

  std::optional<WordSet> train_words, cap_words;
  const WordSet& words = words_for_variant(cli, cfg.env.variant, lex, train_words, cap_words);

  SuggestEngine engine(lex, cfg.env.suggest);
  TypingRolloutEnv env(engine, cfg.env, words);
  const fs::path dir = cli.make_run_dir(base_ckpt.empty() ? "train" : "finetune");

  TrainResult result;
  if (base_ckpt.empty()) {
    result = train(env, cfg.train, cfg.fingerprint(), std::nullopt, std::nullopt,
                   (dir / "checkpoint_partial.json").string(), 1000);
  } else {
    require_file(base_ckpt);
    const Checkpoint base = load_checkpoint(base_ckpt, cfg.fingerprint());
    result = fine_tune(base, env, cfg.train, cfg.fingerprint());
  }
  save_checkpoint(result.checkpoint, (dir / "checkpoint.json").string());
  write_curve_csv(result.curve, (dir / "curve.csv").string());
  std::cout << "episodes: " << result.checkpoint.episode << "\n"
            << "final mean reward: "
            << (result.curve.empty() ? 0.0 : result.curve.back().mean_reward) << "\n"
            << "checkpoint: " << (dir / "checkpoint.json").string() << "\n";
  return 0;
}

// ---- eval -----------------------------------------------------------------------------

int cmd_eval(Cli& cli, const std::string& ckpt_path, const std::string& group, int words_n,
             const std::string& params_path, const std::string& variant,
             const std::vector<std::string>& ablations) {
  Lexicon lex = cli.load_lexicon();
  RunConfig& cfg = cli.cfg;
  if (!variant.empty()) cfg.env.variant = env_variant_from_string(variant);
  if (!ablations.empty()) cfg.env.ablations = ablations_from_json(json(ablations));
  if (words_n > 0) cfg.eval_words = words_n;
  require_file(ckpt_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path, cfg.fingerprint());

  std::optional<WordSet> train_words, cap_words;
  const WordSet& words = words_for_variant(cli, cfg.env.variant, lex, train_words, cap_words);
  const CognitiveParams params =
      params_path.empty() ? cfg.env.ranges.midpoint() : load_params_file(params_path);

  SuggestEngine engine(lex, cfg.env.suggest);
  const EvalOutput out = evaluate_policy(ckpt.params, engine, cfg.env, words, params,
                                         cfg.eval_words, derive_seed(cfg.seed, "cmd-eval"));
  const fs::path dir = cli.make_run_dir("eval");
  write_jsonl((dir / "episodes.jsonl").string(), out.records);
  write_report_json(out.report, dir / "report.json");
  for (const char* name : kMetricNames)
    std::cout << name << ": " << out.report.get(name) << "\n";
  if (!group.empty()) {
    require_file(cfg.reference_path);
    const auto tables = load_reference_tables(cfg.reference_path);
    auto it = tables.find(group);
    if (it == tables.end()) {
      std::string known;
      for (const auto& [name, _] : tables) known += (known.empty() ? "" : ", ") + name;
      throw UsageError("unknown group '" + group + "' (available: " + known + ")");
    }
    const auto rows = compare(out.report, it->second);
    write_comparison_csv(group, rows, dir / "comparison.csv");
    int within = 0;
    for (const auto& c : rows) {
      std::cout << "z[" << c.metric << "] = " << c.z << (c.within_1sd ? "  (within 1 sd)" : "")
                << "\n";
      within += c.within_1sd ? 1 : 0;
    }
    std::cout << within << "/" << rows.size() << " metrics within one human sd\n";
  }
  std::cout << "outputs: " << dir.string() << "\n";
  return 0;
}

// ---- fit ------------------------------------------------------------------------------

int cmd_fit(Cli& cli, const std::string& ckpt_path, const std::string& group, int budget) {
  Lexicon lex = cli.load_lexicon();
  RunConfig& cfg = cli.cfg;
  require_file(ckpt_path);
  require_file(cfg.reference_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path, cfg.fingerprint());
  const auto tables = load_reference_tables(cfg.reference_path);
  std::optional<WordSet> train_words, cap_words;
  const WordSet& words = words_for_variant(cli, cfg.env.variant, lex, train_words, cap_words);
  SuggestEngine engine(lex, cfg.env.suggest);
  if (budget > 0) cfg.fit_budget = budget;

  FitResult result;
  try {
    result = fit_group(group, tables, ckpt.params, engine, cfg.env, words, cfg.fit_budget,
                       cfg.fit_words, cfg.fit_bins, cfg.seed);
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).rfind("unknown reference group", 0) == 0) throw UsageError(e.what());
    throw;
  }

  const fs::path dir = cli.make_run_dir("fit");
  json trace = json::array();
  for (const auto& p : result.trace)
    trace.push_back({{"params", params_to_json(p.params)}, {"objective", p.objective}});
  json j{{"group", group},
         {"best_params", params_to_json(result.best)},
         {"best_objective", result.best_objective},
         {"budget_used", result.budget_used},
         {"trace", trace}};
  std::ofstream(dir / "fit_result.json") << j.dump(2) << "\n";
  std::cout << "best objective: " << result.best_objective << "\n"
            << "best params: p_m=" << result.best.p_m << " p_f=" << result.best.p_f
            << " p_k=" << result.best.p_k << " p_s=" << result.best.p_s << "\n"
            << "result: " << (dir / "fit_result.json").string() << "\n";
  return 0;
}

// ---- case -----------------------------------------------------------------------------

int cmd_case(Cli& cli, const std::string& name, const std::vector<double>& levels, int replicates,
             int episodes, const std::vector<std::string>& base_paths,
             const std::string& params_path) {
  Lexicon lex = cli.load_lexicon();
  RunConfig& cfg = cli.cfg;
  require_file(cfg.train_words_path);
  require_file(cfg.cap_words_path);

  CaseContext ctx{.lex = lex,
                  .cfg = cfg,
                  .train_words = load_word_set(cfg.train_words_path, lex, "train"),
                  .cap_words = load_word_set(cfg.cap_words_path, lex, "cap"),
                  .replicates = replicates,
                  .eval_params = params_path.empty() ? cfg.env.ranges.midpoint()
                                                     : load_params_file(params_path),
                  .seed = cfg.seed,
                  .jobs = cfg.jobs};

  const int base_episodes = episodes > 0 ? episodes : cfg.train.episodes;

  auto base_checkpoints = [&]() {
    std::vector<Checkpoint> base(static_cast<size_t>(ctx.replicates));
    if (!base_paths.empty()) {
      if (static_cast<int>(base_paths.size()) != ctx.replicates)
        throw UsageError("case: need one --base per replicate");
      for (size_t i = 0; i < base_paths.size(); ++i) {
        require_file(base_paths[i]);
        base[i] = load_checkpoint(base_paths[i], cfg.fingerprint());
      }
      return base;
    }
    parallel_for(ctx.replicates, ctx.jobs, [&](int r) {
      base[static_cast<size_t>(r)] = train_agent(ctx, cfg.env, ctx.train_words, base_episodes,
                                                 derive_seed(ctx.seed, "case-base",
                                                             static_cast<uint64_t>(r)));
    });
    return base;
  };

  CaseResult result;
  if (name == "accuracy-sweep") {
    const std::vector<double> lv = levels.empty()
                                       ? std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0}
                                       : levels;
    result = run_accuracy_sweep(ctx, base_checkpoints(), lv);
  } else if (name == "length-priority") {
    result = run_length_priority(ctx, base_checkpoints());
  } else if (name == "capitalization") {
    result = run_capitalization(ctx, base_episodes);
  } else if (name == "interface") {
    result = run_interface(ctx, base_checkpoints());
  } else if (name == "word-length") {
    result = run_word_length_analysis(ctx, base_checkpoints().front());
  } else if (name == "ablations") {
    result = run_ablations(ctx, base_episodes);
  } else {
    throw UsageError(
        "unknown case '" + name +
        "' (available: accuracy-sweep, length-priority, capitalization, interface, "
        "word-length, ablations)");
  }

  const fs::path dir = cli.make_run_dir("case-" + name);
  result.write_csv((dir / (name + ".csv")).string());
  std::ofstream(dir / (name + ".json")) << result.to_json().dump(2) << "\n";
  std::cout << "case " << name << ": " << result.rows.size() << " rows\n"
            << "outputs: " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wstypist: a simulator of mobile typing with word suggestions"};
  app.require_subcommand(1);

  Cli cli;
  app.add_option("--config", cli.config_path, "top-level JSON config");
  uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "global seed (overrides config)");
  app.add_option("--run-dir", cli.run_dir, "output directory (default: <out_dir>/<stamp>-<cmd>)");
  app.add_option("--jobs", cli.jobs, "max concurrent environments");

  // lexicon
  auto* lexicon_cmd = app.add_subcommand("lexicon", "build or inspect the word-frequency data");
  std::string lex_action = "stats", lex_out;
  lexicon_cmd->add_option("action", lex_action, "stats | build")->required();
  lexicon_cmd->add_option("--out-dir", lex_out, "directory for generated word sets");

  // suggest-bench
  auto* bench_cmd = app.add_subcommand("suggest-bench", "measure suggestion engine accuracy");
  std::optional<double> bench_target;
  std::string bench_mode;
  bench_cmd->add_option("--target-accuracy", bench_target, "accuracy-controlled coverage level");
  bench_cmd->add_option("--mode", bench_mode, "engine mode override");

  // train / finetune
  auto* train_cmd = app.add_subcommand("train", "train a policy from scratch");
  auto* finetune_cmd = app.add_subcommand("finetune", "adapt a trained policy to a new system");
  int train_episodes = 0;
  std::string train_variant;
  std::vector<std::string> train_ablations;
  std::string finetune_base;
  for (CLI::App* c : {train_cmd, finetune_cmd}) {
    c->add_option("--episodes", train_episodes, "episode budget");
    c->add_option("--variant", train_variant,
                  "full | no-suggestions | no-autocorrect | capitalization | input-sugg | "
                  "input-sugg-shortcut");
    c->add_option("--ablation", train_ablations, "no-ps | no-pk | no-com (repeatable)");
  }
  finetune_cmd->add_option("--base", finetune_base, "base checkpoint")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "greedy evaluation and human comparison");
  std::string eval_ckpt, eval_group, eval_params, eval_variant;
  std::vector<std::string> eval_ablations;
  int eval_words = 0;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "policy checkpoint")->required();
  eval_cmd->add_option("--group", eval_group, "reference group to compare against");
  eval_cmd->add_option("--words", eval_words, "number of evaluation words");
  eval_cmd->add_option("--params", eval_params, "cognitive params JSON (or fit result)");
  eval_cmd->add_option("--variant", eval_variant, "environment variant override");
  eval_cmd->add_option("--ablation", eval_ablations, "no-ps | no-pk | no-com (repeatable)");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit cognitive parameters to a human group");
  std::string fit_ckpt, fit_group_name;
  int fit_budget = 0;
  fit_cmd->add_option("--checkpoint", fit_ckpt, "policy checkpoint")->required();
  fit_cmd->add_option("--group", fit_group_name, "reference group")->required();
  fit_cmd->add_option("--budget", fit_budget, "objective evaluation budget");

  // case
  auto* case_cmd = app.add_subcommand("case", "run a design study");
  std::string case_name, case_params;
  std::vector<double> case_levels;
  std::vector<std::string> case_bases;
  int case_replicates = 4, case_episodes = 0;
  case_cmd->add_option("name", case_name, "case id")->required();
  case_cmd->add_option("--levels", case_levels, "accuracy levels")->delimiter(',');
  case_cmd->add_option("--replicates", case_replicates, "agents per condition");
  case_cmd->add_option("--episodes", case_episodes, "training episodes for base agents");
  case_cmd->add_option("--base", case_bases, "base checkpoints (one per replicate)");
  case_cmd->add_option("--params", case_params, "cognitive params JSON for evaluation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (seed_flag->count() > 0) cli.seed_flag = seed_opt;
    cli.finalize();
    if (lexicon_cmd->parsed()) return cmd_lexicon(cli, lex_action, lex_out);
    if (bench_cmd->parsed()) return cmd_suggest_bench(cli, bench_target, bench_mode);
    if (train_cmd->parsed())
      return cmd_train(cli, train_episodes, train_variant, train_ablations, "");
    if (finetune_cmd->parsed())
      return cmd_train(cli, train_episodes, train_variant, train_ablations, finetune_base);
    if (eval_cmd->parsed())
      return cmd_eval(cli, eval_ckpt, eval_group, eval_words, eval_params, eval_variant,
                      eval_ablations);
    if (fit_cmd->parsed()) return cmd_fit(cli, fit_ckpt, fit_group_name, fit_budget);
    if (case_cmd->parsed())
      return cmd_case(cli, case_name, case_levels, case_replicates, case_episodes, case_bases,
                      case_params);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
