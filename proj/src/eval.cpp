#include "rlc/eval.hpp"

#include <cctype>

#include "rlc/error.hpp"
#include "rlc/text.hpp"

namespace rlc {

std::string eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::Verdict: return "verdict";
    case EvalMode::Quality: return "quality";
    case EvalMode::Compare: return "compare";
  }
  throw Error("invalid eval mode value");
}

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "verdict") return EvalMode::Verdict;
  if (name == "quality") return EvalMode::Quality;
  if (name == "compare") return EvalMode::Compare;
  throw ParseError("unknown eval mode: " + name);
}

EvalMode default_eval_mode(TaskKind kind) {
  return is_reasoning(kind) ? EvalMode::Verdict : EvalMode::Quality;
}

PromptLibrary::PromptLibrary() {
  const std::string verdict =
      "Is the answer to the question correct? The question is: [Q]. The answer is: [A]";
  for (TaskKind kind : {TaskKind::ReasoningMultichoice, TaskKind::ReasoningGeneration,
                        TaskKind::Translation, TaskKind::Summarization})
    templates_[{EvalMode::Verdict, kind}] = verdict;

  const std::string quality_generic =
      "Please evaluate the answer to the question and give me an evaluation score from 1 to 10. "
      "The question is: [Q]. The answer is [A]";
  templates_[{EvalMode::Quality, TaskKind::ReasoningMultichoice}] = quality_generic;
  templates_[{EvalMode::Quality, TaskKind::ReasoningGeneration}] = quality_generic;
  templates_[{EvalMode::Quality, TaskKind::Translation}] =
      "Please help me evaluate the translation results. Only give a score from 1 to 10, without "
      "explanation. Text: [Q] Translation: [A]";
  templates_[{EvalMode::Quality, TaskKind::Summarization}] =
      "Please help me evaluate the summary results of the following text. Only give a score from "
      "1 to 10, without explanation. Text: [Q] Summary: [A]";

  const std::string compare_generic =
      "Suppose you are a reviewer. You will be given two answers to a question, please tell me "
      "which one is better. If you think Answer (1) is better, reply (1). If you think Answer "
      "(2) is better, reply (2). Question: [Q] Answer (1): [A1] Answer (2): [A2]. Which one is "
      "better.";
  templates_[{EvalMode::Compare, TaskKind::ReasoningMultichoice}] = compare_generic;
  templates_[{EvalMode::Compare, TaskKind::ReasoningGeneration}] = compare_generic;
  templates_[{EvalMode::Compare, TaskKind::Translation}] =
      "Suppose you are a reviewer of the text translation. You will be given two translations of "
      "a text, please tell me which one is better according to the conciseness, integrality of "
      "the translation. If you think Translation (1) is better, reply (1). If you think "
      "Translation (2) is better, reply (2). Text:[Q] Translation (1): [A1] Translation (2): "
      "[A2]. Which one is better.";
  templates_[{EvalMode::Compare, TaskKind::Summarization}] =
      "Suppose you are a reviewer of the text summary. You will be given two summaries of a "
      "text, please tell me which one is better according to the conciseness, integrality of the "
      "summary. If you think Summary (1) is better, reply (1). If you think Summary (2) is "
      "better, reply (2). Text: [Q] Summary (1): [A1] Summary (2): [A2]. Which one is better.";
}

const std::string& PromptLibrary::tmpl(EvalMode mode, TaskKind kind) const {
  auto it = templates_.find({mode, kind});
  if (it == templates_.end())
    throw Error("no evaluation template for " + eval_mode_name(mode) + "/" + task_kind_name(kind));
  return it->second;
}

void PromptLibrary::set(EvalMode mode, TaskKind kind, std::string tmpl) {
  templates_[{mode, kind}] = std::move(tmpl);
}

std::string question_text(const TaskInstance& item) {
  std::string text = item.problem;
  if (!item.choices.empty()) {
    text += " Answer Choices:";
    for (size_t i = 0; i < item.choices.size(); ++i) {
      text += " (";
      text += static_cast<char>('A' + i);
      text += ") " + item.choices[i];
    }
  }
  return text;
}

namespace {

void replace_all(std::string& s, const std::string& slot, const std::string& value) {
  size_t pos = 0;
  while ((pos = s.find(slot, pos)) != std::string::npos) {
    s.replace(pos, slot.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string build_eval_prompt(const PromptLibrary& lib, EvalMode mode, const TaskInstance& item,
                              const std::string& answer) {
  if (mode == EvalMode::Compare)
    throw Error("compare prompts need two answers; use build_compare_prompt");
  std::string prompt = lib.tmpl(mode, item.kind);
  replace_all(prompt, "[Q]", question_text(item));
  replace_all(prompt, "[A]", answer);
  return prompt;
}

std::string build_compare_prompt(const PromptLibrary& lib, const TaskInstance& item,
                                 const std::string& first, const std::string& second) {
  std::string prompt = lib.tmpl(EvalMode::Compare, item.kind);
  replace_all(prompt, "[Q]", question_text(item));
  replace_all(prompt, "[A1]", first);
  replace_all(prompt, "[A2]", second);
  return prompt;
}

Verdict parse_verdict(const std::string& reply) {
  const std::vector<std::string> words = alpha_words(reply);
  if (words.empty()) return Verdict::Unparsed;
  if (words.front() == "yes") return Verdict::Yes;
  if (words.front() == "no") return Verdict::No;
  bool has_yes = false, has_no = false;
  for (const std::string& w : words) {
    if (w == "yes") has_yes = true;
    if (w == "no") has_no = true;
  }
  if (has_yes && !has_no) return Verdict::Yes;
  if (has_no && !has_yes) return Verdict::No;
  return Verdict::Unparsed;
}

std::optional<int> parse_score(const std::string& reply) {
  size_t i = 0;
  while (i < reply.size()) {
    if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
      size_t j = i;
      while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
      const std::string run = reply.substr(i, j - i);
      if (run.size() <= 9) {  // longer runs cannot be in [1, 10]
        const long value = std::stol(run);
        if (value >= 1 && value <= 10) return static_cast<int>(value);
      }
      i = j;
    } else {
      ++i;
    }
  }
  return std::nullopt;
}

Preference parse_preference(const std::string& reply) {
  const size_t p1 = reply.find("(1)");
  const size_t p2 = reply.find("(2)");
  if (p1 != std::string::npos || p2 != std::string::npos) {
    if (p2 == std::string::npos || (p1 != std::string::npos && p1 < p2)) return Preference::First;
    return Preference::Second;
  }
  size_t i = 0;
  while (i < reply.size()) {
    if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
      size_t j = i;
      while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
      const std::string run = reply.substr(i, j - i);
      if (run == "1") return Preference::First;
      if (run == "2") return Preference::Second;
      i = j;
    } else {
      ++i;
    }
  }
  return Preference::Unparsed;
}

double verdict_reward(Verdict v) { return v == Verdict::Yes ? 1.0 : 0.0; }

double score_reward(int score) {
  if (score < 1 || score > 10) throw Error("quality score out of range");
  return static_cast<double>(score - 1) / 9.0;
}

}  // namespace rlc
