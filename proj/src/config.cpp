#include "rlc/config.hpp"

#include <cstdio>
#include <fstream>

#include "rlc/error.hpp"

namespace rlc {

namespace {

std::string trim_ws(const std::string& s) {
  const size_t lo = s.find_first_not_of(" \t\r");
  if (lo == std::string::npos) return "";
  const size_t hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ParseError("config key \"" + key + "\": invalid value \"" + value + "\"");
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

uint64_t to_uint64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= value.size()) {
    size_t comma = value.find(',', start);
    if (comma == std::string::npos) comma = value.size();
    const std::string piece = trim_ws(value.substr(start, comma - start));
    if (!piece.empty()) out.push_back(piece);
    start = comma + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "dataset") { cfg.dataset = value; return; }
  if (key == "kind") {
    try {
      cfg.kind = parse_task_kind(value);
    } catch (const ParseError&) {
      bad_value(key, value);
    }
    return;
  }
  if (key == "method") { cfg.method = value; return; }
  if (key == "backend") { cfg.backend = value; return; }
  if (key == "backend.url") { cfg.backend_url = value; return; }
  if (key == "evaluator") { cfg.evaluator = value; return; }
  if (key == "eval.mode") { cfg.eval_mode = value; return; }
  if (key == "scripted.model") { cfg.scripted_model = value; return; }
  if (key == "seed") { cfg.seed = to_uint64(key, value); return; }
  if (key == "out_dir") { cfg.out_dir = value; return; }
  if (key == "load") { cfg.load_dir = value; return; }
  if (key == "plot") { cfg.plot = to_bool(key, value); return; }

  if (key == "ppo.gamma") { cfg.ppo.gamma = to_double(key, value); return; }
  if (key == "ppo.lam") { cfg.ppo.lam = to_double(key, value); return; }
  if (key == "ppo.clip_eps") { cfg.ppo.clip_eps = to_double(key, value); return; }
  if (key == "ppo.ppo_epochs") { cfg.ppo.ppo_epochs = static_cast<int>(to_long(key, value)); return; }
  if (key == "ppo.batch_size") { cfg.ppo.batch_size = static_cast<int>(to_long(key, value)); return; }
  if (key == "ppo.value_coef") { cfg.ppo.value_coef = to_double(key, value); return; }
  if (key == "ppo.learning_rate") { cfg.ppo.learning_rate = to_double(key, value); return; }
  if (key == "ppo.kl_coef") { cfg.ppo.kl_coef = to_double(key, value); return; }
  if (key == "ppo.entropy_coef") { cfg.ppo.entropy_coef = to_double(key, value); return; }
  if (key == "ppo.total_grad_steps") { cfg.ppo.total_grad_steps = to_long(key, value); return; }
  if (key == "ppo.max_new_tokens") { cfg.ppo.max_new_tokens = static_cast<int>(to_long(key, value)); return; }

  if (key == "decoding.temperature") { cfg.decoding.temperature = to_double(key, value); return; }
  if (key == "decoding.top_k") { cfg.decoding.top_k = static_cast<int>(to_long(key, value)); return; }
  if (key == "decoding.top_p") { cfg.decoding.top_p = to_double(key, value); return; }
  if (key == "decoding.max_new_tokens") { cfg.decoding.max_new_tokens = static_cast<int>(to_long(key, value)); return; }

  if (key == "train.log_interval") { cfg.log_interval = static_cast<int>(to_long(key, value)); return; }
  if (key == "train.checkpoint_interval") { cfg.checkpoint_interval = static_cast<int>(to_long(key, value)); return; }
  if (key == "train.eval_probe") { cfg.eval_probe = static_cast<int>(to_long(key, value)); return; }

  if (key == "sc.paths") { cfg.paths = static_cast<int>(to_long(key, value)); return; }
  if (key == "lmsi.epochs") { cfg.lmsi_epochs = static_cast<int>(to_long(key, value)); return; }
  if (key == "rlft.metric") { cfg.rlft_metric = value; return; }
  if (key == "metrics") {
    cfg.metrics = split_list(value);
    if (cfg.metrics.empty()) bad_value(key, value);
    return;
  }
  if (key == "embedder.url") { cfg.embedder_url = value; return; }
  if (key == "verify.k") { cfg.verify_k = static_cast<int>(to_long(key, value)); return; }
  if (key == "experiment") { cfg.experiment = value; return; }

  if (key == "model.width") { cfg.model_width = static_cast<int>(to_long(key, value)); return; }
  if (key == "model.max_prompt_chars") { cfg.model_max_prompt = static_cast<int>(to_long(key, value)); return; }

  constexpr const char* kTemplatePrefix = "eval.template.";
  if (key.rfind(kTemplatePrefix, 0) == 0) {
    const std::string rest = key.substr(std::string(kTemplatePrefix).size());
    const size_t dot = rest.find('.');
    if (dot == std::string::npos)
      throw ParseError("config key \"" + key + "\": expected eval.template.<mode>.<kind>");
    try {
      const EvalMode mode = parse_eval_mode(rest.substr(0, dot));
      const TaskKind kind = parse_task_kind(rest.substr(dot + 1));
      cfg.template_overrides.emplace_back(mode, kind, value);
    } catch (const ParseError& e) {
      throw ParseError("config key \"" + key + "\": " + e.what());
    }
    return;
  }

  throw ParseError("unknown config key \"" + key + "\"");
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim_ws(line);
    if (body.empty()) continue;
    const size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim_ws(body.substr(0, eq));
    const std::string value = trim_ws(body.substr(eq + 1));
    if (key.empty())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    try {
      apply_config_key(cfg, key, value);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> serialize_config(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("dataset", cfg.dataset.string());
  if (cfg.kind) kv.emplace_back("kind", task_kind_name(*cfg.kind));
  kv.emplace_back("method", cfg.method);
  kv.emplace_back("backend", cfg.backend);
  if (!cfg.backend_url.empty()) kv.emplace_back("backend.url", cfg.backend_url);
  kv.emplace_back("evaluator", cfg.evaluator);
  kv.emplace_back("eval.mode", cfg.eval_mode);
  kv.emplace_back("scripted.model", cfg.scripted_model);
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("out_dir", cfg.out_dir.string());
  if (!cfg.load_dir.empty()) kv.emplace_back("load", cfg.load_dir.string());
  kv.emplace_back("plot", cfg.plot ? "true" : "false");

  kv.emplace_back("ppo.gamma", fmt_double(cfg.ppo.gamma));
  kv.emplace_back("ppo.lam", fmt_double(cfg.ppo.lam));
  kv.emplace_back("ppo.clip_eps", fmt_double(cfg.ppo.clip_eps));
  kv.emplace_back("ppo.ppo_epochs", std::to_string(cfg.ppo.ppo_epochs));
  kv.emplace_back("ppo.batch_size", std::to_string(cfg.ppo.batch_size));
  kv.emplace_back("ppo.value_coef", fmt_double(cfg.ppo.value_coef));
  kv.emplace_back("ppo.learning_rate", fmt_double(cfg.ppo.learning_rate));
  kv.emplace_back("ppo.kl_coef", fmt_double(cfg.ppo.kl_coef));
  kv.emplace_back("ppo.entropy_coef", fmt_double(cfg.ppo.entropy_coef));
  kv.emplace_back("ppo.total_grad_steps", std::to_string(cfg.ppo.total_grad_steps));
  kv.emplace_back("ppo.max_new_tokens", std::to_string(cfg.ppo.max_new_tokens));

  kv.emplace_back("decoding.temperature", fmt_double(cfg.decoding.temperature));
  kv.emplace_back("decoding.top_k", std::to_string(cfg.decoding.top_k));
  kv.emplace_back("decoding.top_p", fmt_double(cfg.decoding.top_p));
  kv.emplace_back("decoding.max_new_tokens", std::to_string(cfg.decoding.max_new_tokens));

  kv.emplace_back("train.log_interval", std::to_string(cfg.log_interval));
  kv.emplace_back("train.checkpoint_interval", std::to_string(cfg.checkpoint_interval));
  kv.emplace_back("train.eval_probe", std::to_string(cfg.eval_probe));

  kv.emplace_back("sc.paths", std::to_string(cfg.paths));
  kv.emplace_back("lmsi.epochs", std::to_string(cfg.lmsi_epochs));
  kv.emplace_back("rlft.metric", cfg.rlft_metric);
  std::string metric_list;
  for (size_t i = 0; i < cfg.metrics.size(); ++i) {
    if (i) metric_list += ",";
    metric_list += cfg.metrics[i];
  }
  kv.emplace_back("metrics", metric_list);
  if (!cfg.embedder_url.empty()) kv.emplace_back("embedder.url", cfg.embedder_url);
  kv.emplace_back("verify.k", std::to_string(cfg.verify_k));
  if (!cfg.experiment.empty()) kv.emplace_back("experiment", cfg.experiment);

  kv.emplace_back("model.width", std::to_string(cfg.model_width));
  kv.emplace_back("model.max_prompt_chars", std::to_string(cfg.model_max_prompt));

  for (const auto& [mode, kind, tmpl] : cfg.template_overrides)
    kv.emplace_back("eval.template." + eval_mode_name(mode) + "." + task_kind_name(kind), tmpl);
  return kv;
}

namespace {

bool is_one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

void check_evaluator_spec(const std::string& raw) {
  const std::string spec = evaluator_behavior(raw);
  if (spec == "self" || spec == "oracle" || spec == "always-yes") return;
  if (spec.rfind("noisy:", 0) == 0) {
    to_double("evaluator", spec.substr(6));
    return;
  }
  if (spec.rfind("prefer:", 0) == 0) {
    const std::string rest = spec.substr(7);
    const size_t colon = rest.find(':');
    if (colon == std::string::npos)
      throw ParseError("evaluator \"" + spec + "\": expected prefer:<metric>:<q>");
    to_double("evaluator", rest.substr(colon + 1));
    return;
  }
  throw ParseError("unknown evaluator \"" + spec + "\"");
}

void check_scripted_model_spec(const std::string& spec) {
  if (spec == "backend" || spec == "pool") return;
  if (spec.rfind("accuracy:", 0) == 0) {
    to_double("scripted.model", spec.substr(9));
    return;
  }
  throw ParseError("unknown scripted.model \"" + spec + "\"");
}

}  // namespace

std::string evaluator_behavior(const std::string& spec) {
  constexpr const char* kPrefix = "scripted:";
  if (spec.rfind(kPrefix, 0) == 0) return spec.substr(std::string(kPrefix).size());
  return spec;
}

void validate_run_config(const RunConfig& cfg, const std::string& command) {
  if (!is_one_of(cfg.backend, {"toy", "remote"}))
    throw ParseError("backend must be toy or remote, got \"" + cfg.backend + "\"");
  if (cfg.backend == "remote" && cfg.backend_url.empty())
    throw ParseError("remote backend needs backend.url (or RLC_BACKEND_URL)");
  if (!is_one_of(cfg.eval_mode, {"auto", "verdict", "quality"}))
    throw ParseError("eval.mode must be auto, verdict or quality");
  check_evaluator_spec(cfg.evaluator);
  check_scripted_model_spec(cfg.scripted_model);
  if (cfg.dataset.empty()) throw ParseError("a dataset path is required");
  if (cfg.out_dir.empty()) throw ParseError("out_dir must not be empty");
  if (cfg.paths < 1) throw ParseError("sc.paths must be at least 1");
  if (cfg.verify_k < 1) throw ParseError("verify.k must be at least 1");
  if (cfg.lmsi_epochs < 1) throw ParseError("lmsi.epochs must be at least 1");
  if (cfg.model_width < 1) throw ParseError("model.width must be positive");
  if (cfg.decoding.max_new_tokens < 1) throw ParseError("decoding.max_new_tokens must be positive");

  if (command == "train") {
    if (!is_one_of(cfg.method, {"sirlc", "rlft", "lmsi"}))
      throw ParseError("train supports methods sirlc, rlft and lmsi, got \"" + cfg.method + "\"");
    if (cfg.backend != "toy")
      throw ParseError("training requires the trainable toy backend, got \"" + cfg.backend + "\"");
    if (cfg.method != "lmsi") {
      try {
        validate(cfg.ppo);
      } catch (const Error& e) {
        throw ParseError(e.what());
      }
    }
  } else if (command == "evaluate") {
    if (!is_one_of(cfg.method, {"dg", "sc"}))
      throw ParseError("evaluate supports methods dg and sc, got \"" + cfg.method + "\"");
  } else if (command == "verify") {
    if (!is_one_of(cfg.experiment, {"se-resample", "best-of-k"}))
      throw ParseError("verify needs experiment se-resample or best-of-k, got \"" +
                       cfg.experiment + "\"");
  } else if (command == "correlate" || command == "pseudolabel") {
    // no extra requirements
  } else {
    throw ParseError("unknown command \"" + command + "\"");
  }
}

PromptLibrary make_prompt_library(const RunConfig& cfg) {
  PromptLibrary lib;
  for (const auto& [mode, kind, tmpl] : cfg.template_overrides) lib.set(mode, kind, tmpl);
  return lib;
}

}  // namespace rlc
