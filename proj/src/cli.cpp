#include "rlc/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rlc/baselines.hpp"
#include "rlc/config.hpp"
#include "rlc/embedder.hpp"
#include "rlc/error.hpp"
#include "rlc/harness.hpp"
#include "rlc/judge.hpp"
#include "rlc/metrics.hpp"
#include "rlc/remote_model.hpp"
#include "rlc/run_dir.hpp"
#include "rlc/toy_policy.hpp"
#include "rlc/trainer.hpp"

namespace rlc {
namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed while writing " + path.string());
}

// Character vocabulary covering everything the toy backend may need to
// read or write: rendered prompts, references, evaluation-prompt text
// and the newline stop token.
std::string derive_vocab(const Dataset& data, const PromptLibrary& lib) {
  std::set<char> chars;
  const auto add = [&chars](const std::string& s) { chars.insert(s.begin(), s.end()); };
  for (const TaskInstance& item : data.items) {
    add(render_prompt(item));
    add(question_text(item));
    add(item.reference);
  }
  for (const EvalMode mode : {EvalMode::Verdict, EvalMode::Quality, EvalMode::Compare})
    for (const TaskKind kind : {TaskKind::ReasoningMultichoice, TaskKind::ReasoningGeneration,
                                TaskKind::Translation, TaskKind::Summarization})
      add(lib.tmpl(mode, kind));
  chars.insert('\n');
  return std::string(chars.begin(), chars.end());
}

ToyPolicy make_policy(const RunConfig& cfg, const Dataset& data, const PromptLibrary& lib) {
  if (!cfg.load_dir.empty()) return ToyPolicy::load(cfg.load_dir);
  ToyPolicy::Options opt;
  opt.width = cfg.model_width;
  opt.max_prompt_chars = cfg.model_max_prompt;
  opt.stop = "\n";
  return ToyPolicy(derive_vocab(data, lib), opt, cfg.seed);
}

std::shared_ptr<TokenEmbedder> make_embedder(const RunConfig& cfg) {
  if (cfg.embedder_url.empty()) return std::make_shared<HashedEmbedder>();
  return std::make_shared<RemoteEmbedder>(cfg.embedder_url);
}

// Model used by the non-training commands; toy backends are frozen.
std::shared_ptr<TextModel> make_eval_model(const RunConfig& cfg, const Dataset& data,
                                           const PromptLibrary& lib) {
  if (cfg.scripted_model.rfind("accuracy:", 0) == 0) {
    const double p = std::stod(cfg.scripted_model.substr(9));
    return std::make_shared<StochasticAccuracyModel>(data, p, cfg.seed + 7);
  }
  if (cfg.scripted_model == "pool") return std::make_shared<CandidatePoolModel>(data, cfg.seed + 7);
  if (cfg.backend == "remote") return std::make_shared<RemoteModel>(cfg.backend_url);
  return std::make_shared<ToyPolicy>(make_policy(cfg, data, lib).clone_frozen());
}

std::unique_ptr<Judge> make_judge(const RunConfig& cfg, std::shared_ptr<TextModel> self_model,
                                  const PromptLibrary& lib,
                                  const std::shared_ptr<TokenEmbedder>& embedder) {
  const std::string spec = evaluator_behavior(cfg.evaluator);
  if (spec == "self")
    return std::make_unique<ModelJudge>(std::move(self_model), lib, cfg.seed + 11);
  if (spec == "oracle") return std::make_unique<OracleJudge>(0.0, cfg.seed + 11);
  if (spec.rfind("noisy:", 0) == 0)
    return std::make_unique<OracleJudge>(std::stod(spec.substr(6)), cfg.seed + 11);
  if (spec == "always-yes") return std::make_unique<AlwaysYesJudge>();
  const std::string rest = spec.substr(std::string("prefer:").size());
  const size_t colon = rest.find(':');
  const std::string metric = rest.substr(0, colon);
  const double q = std::stod(rest.substr(colon + 1));
  return std::make_unique<MetricJudge>(metric_by_name(metric, embedder), metric, q,
                                       cfg.seed + 11);
}

RewardFn make_self_eval_reward(const RunConfig& cfg, Judge& judge) {
  const bool forced = cfg.eval_mode != "auto";
  const EvalMode forced_mode = forced ? parse_eval_mode(cfg.eval_mode) : EvalMode::Verdict;
  return [&judge, forced, forced_mode](const TaskInstance& item, const std::string& completion) {
    const EvalMode mode = forced ? forced_mode : default_eval_mode(item.kind);
    return self_eval_reward(judge, mode, item, completion);
  };
}

// --- commands ----------------------------------------------------------

void cmd_train(const RunConfig& cfg, const Dataset& data) {
  const PromptLibrary lib = make_prompt_library(cfg);
  RunDir run(cfg.out_dir);
  run.write_resolved_config(serialize_config(cfg));
  ToyPolicy policy = make_policy(cfg, data, lib);

  if (cfg.method == "lmsi") {
    FinetuneOptions fopt;
    fopt.epochs = cfg.lmsi_epochs;
    fopt.batch_size = cfg.ppo.batch_size;
    fopt.learning_rate = cfg.ppo.learning_rate;
    const LmsiResult r = lmsi_round(policy, data, cfg.paths, cfg.decoding, fopt, cfg.seed);
    save_pseudo_labels(r.labels, run.file("pseudo_labels.jsonl"));
    std::string csv = "epoch,mean_nll\n";
    for (size_t i = 0; i < r.finetune.epoch_losses.size(); ++i)
      csv += std::to_string(i + 1) + "," + std::to_string(r.finetune.epoch_losses[i]) + "\n";
    write_text(run.file("finetune.csv"), csv);
    policy.save(run.file("model"));
    std::cout << "train lmsi: " << r.labels.size() << " pseudo-labels, "
              << r.finetune.grad_steps << " gradient steps";
    if (!r.finetune.epoch_losses.empty())
      std::cout << ", final nll " << r.finetune.epoch_losses.back();
    std::cout << "\noutputs: " << run.dir().string() << "\n";
    return;
  }

  const std::shared_ptr<TokenEmbedder> embedder = make_embedder(cfg);
  std::unique_ptr<Judge> judge;
  RewardFn reward;
  if (cfg.method == "sirlc") {
    judge = make_judge(cfg, std::make_shared<ToyPolicy>(policy.clone_frozen()), lib, embedder);
    reward = make_self_eval_reward(cfg, *judge);
  } else {  // rlft
    reward = make_metric_reward(cfg.rlft_metric, embedder);
  }

  TrainerOptions topt;
  topt.out_dir = run.dir();
  topt.log_interval = cfg.log_interval;
  topt.checkpoint_interval = cfg.checkpoint_interval;
  topt.eval_probe_instances = cfg.eval_probe;
  const TrainResult result = train(policy, data, cfg.ppo, cfg.decoding, reward, cfg.seed, topt);
  policy.save(run.file("model"));
  if (cfg.plot && !result.curves.empty())
    write_curve_plot_svg(result.curves, run.file("curves.svg"));

  std::cout << "train " << cfg.method << ": " << result.grad_steps << " gradient steps over "
            << result.episodes << " episodes";
  if (!result.curves.empty())
    std::cout << ", final mean reward " << result.curves.back().mean_reward << ", eval score "
              << result.curves.back().eval_score;
  if (judge && judge->unparsed_count() > 0)
    std::cout << ", " << judge->unparsed_count() << " unparsed judgments";
  std::cout << "\noutputs: " << run.dir().string() << "\n";
}

void cmd_evaluate(const RunConfig& cfg, const Dataset& data) {
  const PromptLibrary lib = make_prompt_library(cfg);
  RunDir run(cfg.out_dir);
  run.write_resolved_config(serialize_config(cfg));
  const std::shared_ptr<TextModel> model = make_eval_model(cfg, data, lib);
  const std::shared_ptr<TokenEmbedder> embedder = make_embedder(cfg);

  std::vector<std::string> completions;
  completions.reserve(data.size());
  if (cfg.method == "dg") {
    for (size_t i = 0; i < data.size(); ++i)
      completions.push_back(direct_generation(*model, data[i], cfg.decoding, cfg.seed + i));
  } else {  // sc
    const std::vector<VoteRecord> votes =
        pseudo_labels(*model, data, cfg.paths, cfg.decoding, cfg.seed);
    save_pseudo_labels(votes, run.file("votes.jsonl"));
    for (const VoteRecord& v : votes) completions.push_back(v.answer);
  }

  const MetricReport report = build_report(data, completions, cfg.metrics, embedder);
  report.write_csv(run.file("report.csv"));
  std::cout << "evaluate " << cfg.method << " (" << model->identity() << ") over " << data.size()
            << " instances\n";
  for (const auto& [metric, mean] : report.aggregates())
    std::cout << "  " << metric << ": " << mean << "\n";
  std::cout << "outputs: " << run.dir().string() << "\n";
}

void cmd_verify(const RunConfig& cfg, const Dataset& data) {
  const PromptLibrary lib = make_prompt_library(cfg);
  RunDir run(cfg.out_dir);
  run.write_resolved_config(serialize_config(cfg));
  const std::shared_ptr<TextModel> model = make_eval_model(cfg, data, lib);
  const std::shared_ptr<TokenEmbedder> embedder = make_embedder(cfg);
  const std::unique_ptr<Judge> judge = make_judge(cfg, model, lib, embedder);

  if (cfg.experiment == "se-resample") {
    const SeResampleResult r = run_se_resample(*model, *judge, data, cfg.decoding, cfg.seed);
    write_text(run.file("se_resample.csv"), se_resample_csv(r));
    std::cout << "se-resample over " << r.n << " instances: accuracy " << r.acc_without << " -> "
              << r.acc_with << " (" << r.resampled << " resampled)\n";
  } else {  // best-of-k
    const MetricFn metric = metric_by_name(cfg.metrics.front(), embedder);
    const BestOfKResult r =
        run_best_of_k(*model, *judge, data, cfg.verify_k, metric, cfg.decoding, cfg.seed);
    write_text(run.file("best_of_k.csv"), best_of_k_csv(r));
    std::cout << "best-of-" << cfg.verify_k << " on " << cfg.metrics.front() << ": mean "
              << r.mean_without << " -> selected " << r.mean_with << "\n";
  }
  if (judge->unparsed_count() > 0)
    std::cout << "judge unparsed replies: " << judge->unparsed_count() << "\n";
  std::cout << "outputs: " << run.dir().string() << "\n";
}

void cmd_correlate(const RunConfig& cfg, const Dataset& data) {
  const PromptLibrary lib = make_prompt_library(cfg);
  RunDir run(cfg.out_dir);
  run.write_resolved_config(serialize_config(cfg));
  const std::shared_ptr<TextModel> model = make_eval_model(cfg, data, lib);
  const std::shared_ptr<TokenEmbedder> embedder = make_embedder(cfg);
  const std::unique_ptr<Judge> judge = make_judge(cfg, model, lib, embedder);

  std::map<std::string, MetricFn> metrics;
  for (const std::string& name : cfg.metrics) metrics.emplace(name, metric_by_name(name, embedder));
  const CorrelationResult r = run_correlation(*model, *judge, data, metrics, cfg.decoding, cfg.seed);
  write_text(run.file("correlation.csv"), correlation_csv(r));

  std::cout << "correlation over " << r.used << "/" << data.size() << " parsed preferences\n";
  for (const auto& [name, coef] : r.coefficients) {
    std::cout << "  " << name << ": ";
    if (coef)
      std::cout << *coef << "\n";
    else
      std::cout << "undefined\n";
  }
  std::cout << "outputs: " << run.dir().string() << "\n";
}

void cmd_pseudolabel(const RunConfig& cfg, const Dataset& data) {
  const PromptLibrary lib = make_prompt_library(cfg);
  RunDir run(cfg.out_dir);
  run.write_resolved_config(serialize_config(cfg));
  const std::shared_ptr<TextModel> model = make_eval_model(cfg, data, lib);
  const std::vector<VoteRecord> votes =
      pseudo_labels(*model, data, cfg.paths, cfg.decoding, cfg.seed);
  save_pseudo_labels(votes, run.file("pseudo_labels.jsonl"));
  std::cout << "pseudolabel: " << votes.size() << " records from " << cfg.paths
            << " paths each\noutputs: " << run.dir().string() << "\n";
}

struct NamedFlag {
  const char* flag;
  const char* key;
  const char* help;
};

const NamedFlag kNamedFlags[] = {
    {"--dataset", "dataset", "NDJSON dataset path"},
    {"--kind", "kind", "default task kind for records without one"},
    {"--method", "method", "sirlc | dg | sc | lmsi | rlft"},
    {"--backend", "backend", "toy | remote"},
    {"--backend-url", "backend.url", "remote inference server base URL"},
    {"--evaluator", "evaluator",
     "self | oracle | noisy:<p> | always-yes | prefer:<metric>:<q> (optional scripted: prefix)"},
    {"--eval-mode", "eval.mode", "auto | verdict | quality"},
    {"--scripted-model", "scripted.model", "backend | accuracy:<p> | pool"},
    {"--seed", "seed", "RNG seed"},
    {"--out-dir,--out", "out_dir", "run output directory (locked for exclusive use)"},
    {"--load", "load", "saved model directory to restore"},
    {"--steps", "ppo.total_grad_steps", "total optimizer updates"},
    {"--temperature", "decoding.temperature", "sampling temperature (0 = greedy)"},
    {"--paths", "sc.paths", "sampled reasoning paths for sc / lmsi"},
    {"--k", "verify.k", "candidates per instance for best-of-k"},
    {"--experiment", "experiment", "se-resample | best-of-k"},
    {"--metrics", "metrics", "comma-separated metric list (bleu, rouge_l, bertscore, accuracy)"},
    {"--rlft-metric", "rlft.metric", "reward metric for rlft (accuracy or a text metric)"},
    {"--embedder-url", "embedder.url", "remote embedding server (default: offline hashed)"},
    {"--width", "model.width", "toy policy hidden width"},
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Reinforcement learning from self-checking: trains a text policy with\n"
               "self-evaluation rewards, runs baselines and verifies judge quality."};
  app.require_subcommand(1);

  std::string config_file;
  app.add_option("--config", config_file, "flat key = value config file");
  const auto first_name = [](const char* flag) {
    const std::string names(flag);
    return names.substr(0, names.find(','));
  };
  std::map<std::string, std::string> holders;
  for (const NamedFlag& nf : kNamedFlags)
    app.add_option(nf.flag, holders[first_name(nf.flag)], nf.help);
  std::string max_new_tokens;
  app.add_option("--max-new-tokens", max_new_tokens,
                 "generation length cap (sets ppo.max_new_tokens and decoding.max_new_tokens)");
  bool plot = false;
  app.add_flag("--plot", plot, "also render curves.svg");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "extra dotted.key=value setting (repeatable)")
      ->allow_extra_args(false);

  const char* const names[] = {"train", "evaluate", "verify", "correlate", "pseudolabel"};
  const char* const briefs[] = {
      "fine-tune the toy policy (sirlc / rlft / lmsi)",
      "run a generation baseline (dg / sc) and report metrics",
      "scripted self-evaluation experiment (se-resample / best-of-k)",
      "judge preference vs. metric-difference correlation",
      "write self-consistency pseudo-labels",
  };
  for (size_t i = 0; i < std::size(names); ++i)
    app.add_subcommand(names[i], briefs[i])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  std::string command;
  for (const CLI::App* sub : app.get_subcommands()) command = sub->get_name();

  RunConfig cfg;
  try {
    if (!config_file.empty()) load_config_file(cfg, config_file);
    if (const char* env = std::getenv("RLC_BACKEND_URL"); env && *env) cfg.backend_url = env;
    for (const NamedFlag& nf : kNamedFlags) {
      const std::string name = first_name(nf.flag);
      if (app.count(name) > 0) apply_config_key(cfg, nf.key, holders[name]);
    }
    if (app.count("--max-new-tokens") > 0) {
      apply_config_key(cfg, "ppo.max_new_tokens", max_new_tokens);
      apply_config_key(cfg, "decoding.max_new_tokens", max_new_tokens);
    }
    if (plot) cfg.plot = true;
    for (const std::string& pair : sets) {
      const size_t eq = pair.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError("--set expects key=value, got \"" + pair + "\"");
      apply_config_key(cfg, pair.substr(0, eq), pair.substr(eq + 1));
    }
    validate_run_config(cfg, command);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  Dataset data;
  try {
    data = load_dataset(cfg.dataset, cfg.kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  // Invariants that need the data in hand still count as config errors.
  try {
    if (command == "train" && cfg.method == "rlft")
      for (const TaskInstance& item : data.items)
        if (!item.has_reference)
          throw ParseError("rlft requires references: instance \"" + item.id + "\" has none");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (command == "train")
      cmd_train(cfg, data);
    else if (command == "evaluate")
      cmd_evaluate(cfg, data);
    else if (command == "verify")
      cmd_verify(cfg, data);
    else if (command == "correlate")
      cmd_correlate(cfg, data);
    else
      cmd_pseudolabel(cfg, data);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rlc
