#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rlc/dataset.hpp"
#include "rlc/decoding.hpp"
#include "rlc/eval.hpp"
#include "rlc/ppo.hpp"

namespace rlc {

// Everything a run needs, resolved from (defaults < config file <
// environment < command-line flags).
struct RunConfig {
  // data
  std::filesystem::path dataset;    // "dataset"
  std::optional<TaskKind> kind;     // "kind" (default kind for records without one)

  // method & backend
  std::string method = "sirlc";     // "method": sirlc | dg | sc | lmsi | rlft
  std::string backend = "toy";      // "backend": toy | remote
  std::string backend_url;          // "backend.url"; env RLC_BACKEND_URL overrides
  std::string evaluator = "self";   // "evaluator": self | oracle | noisy:<p> |
                                    //              always-yes | prefer:<metric>:<q>
  std::string eval_mode = "auto";   // "eval.mode": auto | verdict | quality
  std::string scripted_model = "backend";  // "scripted.model": backend | accuracy:<p> | pool

  // io / rng
  uint64_t seed = 0;                          // "seed"
  std::filesystem::path out_dir = "runs/out"; // "out_dir"
  std::filesystem::path load_dir;             // "load": model directory to restore
  bool plot = false;                          // --plot

  // optimization & decoding
  PPOConfig ppo;            // "ppo.*"
  DecodingParams decoding;  // "decoding.*" (sampling during rollouts/evaluation)

  // trainer cadence
  int log_interval = 10;         // "train.log_interval"
  int checkpoint_interval = 0;   // "train.checkpoint_interval"
  int eval_probe = 64;           // "train.eval_probe"

  // baselines & experiments
  int paths = 3;                         // "sc.paths": SC / LMSI sampled paths
  int lmsi_epochs = 3;                   // "lmsi.epochs"
  std::string rlft_metric = "accuracy";  // "rlft.metric"
  std::vector<std::string> metrics = {"bleu", "rouge_l", "bertscore"};  // "metrics"
  std::string embedder_url;              // "embedder.url" (empty: offline hashed embedder)
  int verify_k = 3;                      // "verify.k"
  std::string experiment;                // "experiment": se-resample | best-of-k

  // toy model shape
  int model_width = 32;          // "model.width"
  int model_max_prompt = 512;    // "model.max_prompt_chars"

  // evaluation template overrides: "eval.template.<mode>.<kind>"
  std::vector<std::tuple<EvalMode, TaskKind, std::string>> template_overrides;
};

// Applies one dotted key.  Unknown keys and unparsable values raise
// ParseError mentioning the key.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Reads a flat "dotted.key = value" file ('#' starts a comment).
// Errors carry the line number.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

// The full resolved key/value view (stable order, reusable as a config file).
std::vector<std::pair<std::string, std::string>> serialize_config(const RunConfig& cfg);

// Command-independent sanity checks plus per-command requirements;
// throws ParseError on bad combinations.
void validate_run_config(const RunConfig& cfg, const std::string& command);

// Evaluator specs may carry an optional "scripted:" prefix
// ("scripted:oracle" means "oracle"); this strips it.
std::string evaluator_behavior(const std::string& spec);

// Builds the prompt library with any overrides applied.
PromptLibrary make_prompt_library(const RunConfig& cfg);

}  // namespace rlc
