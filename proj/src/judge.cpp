#include "rlc/judge.hpp"

#include "rlc/error.hpp"

namespace rlc {

ModelJudge::ModelJudge(std::shared_ptr<TextModel> model, PromptLibrary library, uint64_t seed,
                       int max_reply_tokens)
    : model_(std::move(model)), library_(std::move(library)), rng_(seed) {
  if (!model_) throw Error("model judge needs a model");
  if (model_->mode() != ModelMode::Frozen)
    throw Error("model judge requires a frozen model, got " + model_->identity());
  greedy_.temperature = 0.0;
  greedy_.top_k = 0;
  greedy_.top_p = 1.0;
  greedy_.max_new_tokens = max_reply_tokens;
}

std::string ModelJudge::ask(const std::string& prompt) {
  // Greedy decoding: the seed has no effect, pass a fixed one.
  return model_->generate(prompt, greedy_, 0);
}

Verdict ModelJudge::verdict(const TaskInstance& item, const std::string& answer) {
  const Verdict v = parse_verdict(ask(build_eval_prompt(library_, EvalMode::Verdict, item, answer)));
  if (v == Verdict::Unparsed) note_unparsed();
  return v;
}

std::optional<int> ModelJudge::quality(const TaskInstance& item, const std::string& answer) {
  const auto score =
      parse_score(ask(build_eval_prompt(library_, EvalMode::Quality, item, answer)));
  if (!score) note_unparsed();
  return score;
}

Preference ModelJudge::compare(const TaskInstance& item, const std::string& a,
                               const std::string& b) {
  const bool swapped = (rng_() & 1u) != 0;
  const std::string& first = swapped ? b : a;
  const std::string& second = swapped ? a : b;
  const Preference seen = parse_preference(ask(build_compare_prompt(library_, item, first, second)));
  if (seen == Preference::Unparsed) {
    note_unparsed();
    return seen;
  }
  if (!swapped) return seen;
  return seen == Preference::First ? Preference::Second : Preference::First;
}

std::string ModelJudge::identity() const { return "judge(" + model_->identity() + ")"; }

double self_eval_reward(Judge& judge, EvalMode mode, const TaskInstance& item,
                        const std::string& completion) {
  switch (mode) {
    case EvalMode::Verdict:
      return verdict_reward(judge.verdict(item, completion));
    case EvalMode::Quality: {
      const auto score = judge.quality(item, completion);
      return score ? score_reward(*score) : 0.0;
    }
    case EvalMode::Compare:
      break;
  }
  throw Error("compare mode does not define a single-answer reward");
}

}  // namespace rlc
