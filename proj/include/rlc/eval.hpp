#pragma once

#include <map>
#include <optional>
#include <string>

#include "rlc/dataset.hpp"

namespace rlc {

// How a frozen model is asked to judge an answer:
//   Verdict  - yes/no correctness question, reward in {0, 1}
//   Quality  - score from 1 to 10, reward (score - 1) / 9
//   Compare  - pairwise preference between two answers
enum class EvalMode { Verdict, Quality, Compare };

std::string eval_mode_name(EvalMode mode);
EvalMode parse_eval_mode(const std::string& name);  // throws ParseError

// Reasoning tasks default to the yes/no verdict; translation and
// summarization default to the 1-10 quality score.
EvalMode default_eval_mode(TaskKind kind);

// Evaluation prompt templates keyed by (mode, kind).  Slots: [Q] is the
// task content, [A] the answer under judgment, [A1]/[A2] the two
// candidates of a comparison.  Ships with built-in wording for every
// combination; individual entries can be overridden from config.
class PromptLibrary {
 public:
  PromptLibrary();  // built-in defaults

  const std::string& tmpl(EvalMode mode, TaskKind kind) const;
  void set(EvalMode mode, TaskKind kind, std::string tmpl);

 private:
  std::map<std::pair<EvalMode, TaskKind>, std::string> templates_;
};

// The task content used as [Q]: the problem statement, with lettered
// choices appended for multichoice tasks.
std::string question_text(const TaskInstance& item);

// Renders the evaluation prompt for a single answer (Verdict/Quality).
std::string build_eval_prompt(const PromptLibrary& lib, EvalMode mode, const TaskInstance& item,
                              const std::string& answer);

// Renders the pairwise comparison prompt (Compare mode).
std::string build_compare_prompt(const PromptLibrary& lib, const TaskInstance& item,
                                 const std::string& first, const std::string& second);

// --- evaluator reply parsing --------------------------------------------

enum class Verdict { Yes, No, Unparsed };
enum class Preference { First, Second, Unparsed };

// Word-level yes/no detection: the first word wins if it is "yes" or
// "no"; otherwise exactly one of the two word types must occur.  Replies
// like "I cannot tell" stay unparsed.
Verdict parse_verdict(const std::string& reply);

// First integer between 1 and 10 found when scanning digit runs.
std::optional<int> parse_score(const std::string& reply);

// Earliest "(1)" / "(2)" marker; failing that, the first digit run whose
// value is 1 or 2.
Preference parse_preference(const std::string& reply);

// Maps a parsed judgment to a scalar reward: Verdict yes -> 1.0 / no -> 0.0,
// Quality score s -> (s - 1) / 9.  Unparseable replies yield 0.0.
double verdict_reward(Verdict v);
double score_reward(int score);

}  // namespace rlc
