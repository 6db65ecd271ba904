#include "rlc/baselines.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rlc/error.hpp"
#include "rlc/text.hpp"

namespace rlc {

using nlohmann::json;

std::string direct_generation(TextModel& model, const TaskInstance& item,
                              const DecodingParams& params, uint64_t seed) {
  return model.generate(render_prompt(item), params, seed);
}

VoteRecord self_consistency_vote(TextModel& model, const TaskInstance& item, int k,
                                 const DecodingParams& params, std::mt19937_64& rng) {
  if (k < 1) throw Error("self-consistency needs at least one path");
  const bool multichoice = item.kind == TaskKind::ReasoningMultichoice;
  const std::string prompt = render_prompt(item);

  std::map<std::string, int> votes;  // ordered: ties pick the smallest key
  for (int i = 0; i < k; ++i)
    ++votes[extract_final_answer(model.generate(prompt, params, rng()), multichoice)];

  VoteRecord rec;
  rec.instance_id = item.id;
  rec.vote_total = k;
  for (const auto& [answer, count] : votes) {
    if (count > rec.vote_count) {
      rec.answer = answer;
      rec.vote_count = count;
    }
  }
  return rec;
}

std::vector<VoteRecord> pseudo_labels(TextModel& model, const Dataset& data, int k,
                                      const DecodingParams& params, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<VoteRecord> records;
  records.reserve(data.size());
  for (const TaskInstance& item : data.items)
    records.push_back(self_consistency_vote(model, item, k, params, rng));
  return records;
}

void save_pseudo_labels(const std::vector<VoteRecord>& records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const VoteRecord& rec : records) {
    json line;
    line["instance_id"] = rec.instance_id;
    line["answer"] = rec.answer;
    line["vote_count"] = rec.vote_count;
    line["vote_total"] = rec.vote_total;
    out << line.dump() << '\n';
  }
  if (!out) throw Error("failed while writing " + path.string());
}

std::vector<VoteRecord> load_pseudo_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::vector<VoteRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    try {
      VoteRecord v;
      v.instance_id = rec.at("instance_id").get<std::string>();
      v.answer = rec.at("answer").get<std::string>();
      v.vote_count = rec.at("vote_count").get<int>();
      v.vote_total = rec.at("vote_total").get<int>();
      records.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

FinetuneResult finetune_supervised(ToyPolicy& policy,
                                   const std::vector<std::pair<std::string, std::string>>& pairs,
                                   const FinetuneOptions& opt, uint64_t seed) {
  if (opt.epochs < 1) throw Error("finetune: epochs must be at least 1");
  if (opt.batch_size < 1) throw Error("finetune: batch_size must be at least 1");
  if (opt.learning_rate <= 0.0) throw Error("finetune: learning_rate must be positive");

  // Tokenize up front; pairs outside the vocabulary are skipped.
  struct Example {
    std::vector<int> prompt, target;
  };
  std::vector<Example> examples;
  FinetuneResult result;
  for (const auto& [prompt, target] : pairs) {
    try {
      std::string full = target;
      if (policy.stop_token() >= 0 && !policy.vocab().empty())
        full.push_back(policy.vocab()[static_cast<size_t>(policy.stop_token())]);
      Example ex{policy.tokenize(prompt), policy.tokenize(full)};
      if (ex.target.empty()) throw Error("empty target");
      examples.push_back(std::move(ex));
    } catch (const Error&) {
      ++result.skipped_pairs;
    }
  }
  if (examples.empty()) throw Error("finetune: no usable training pairs");

  std::mt19937_64 rng(seed);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    // Deterministic shuffle, then fixed-size batches.
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_index(i, rng)]);

    double loss_sum = 0.0;
    long token_count = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch_size));
      Eigen::Index batch_tokens = 0;
      for (size_t i = start; i < end; ++i)
        batch_tokens += static_cast<Eigen::Index>(examples[order[i]].target.size());

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.num_params());
      for (size_t i = start; i < end; ++i) {
        const Example& ex = examples[order[i]];
        const auto n = static_cast<Eigen::Index>(ex.target.size());
        const ToyPolicy::SeqEval ev = policy.evaluate(ex.prompt, ex.target);
        loss_sum -= ev.logprobs.sum();
        token_count += n;
        // d(-mean log p)/d log p_t = -1 / batch_tokens
        const Eigen::VectorXd d_lp =
            Eigen::VectorXd::Constant(n, -1.0 / static_cast<double>(batch_tokens));
        const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(n);
        policy.accumulate_grad(ex.prompt, ex.target, d_lp, zeros, zeros, grad);
      }
      policy.adam_step(grad, opt.learning_rate);
      ++result.grad_steps;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(token_count));
  }
  return result;
}

LmsiResult lmsi_round(ToyPolicy& policy, const Dataset& data, int paths,
                      const DecodingParams& params, const FinetuneOptions& opt, uint64_t seed) {
  LmsiResult result;
  result.labels = pseudo_labels(policy, data, paths, params, seed);

  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(result.labels.size());
  for (size_t i = 0; i < result.labels.size(); ++i)
    pairs.emplace_back(render_prompt(data[i]), result.labels[i].answer);
  result.finetune = finetune_supervised(policy, pairs, opt, seed + 1);
  return result;
}

RewardFn make_metric_reward(const std::string& metric_name,
                            std::shared_ptr<TokenEmbedder> embedder) {
  if (metric_name == "accuracy") {
    return [](const TaskInstance& item, const std::string& completion) {
      if (!item.has_reference) throw Error("metric reward needs references: " + item.id);
      return exact_answer_match(item, completion);
    };
  }
  MetricFn metric = metric_by_name(metric_name, std::move(embedder));
  return [metric, metric_name](const TaskInstance& item, const std::string& completion) {
    if (!item.has_reference) throw Error("metric reward needs references: " + item.id);
    return metric(completion, item.reference);
  };
}

MetricReport build_report(const Dataset& data, const std::vector<std::string>& completions,
                          const std::vector<std::string>& metric_names,
                          std::shared_ptr<TokenEmbedder> embedder) {
  if (completions.size() != data.size())
    throw Error("build_report: one completion per instance required");
  MetricReport report;
  for (const std::string& name : metric_names) {
    if (name == "accuracy") {
      for (size_t i = 0; i < data.size(); ++i) {
        if (!data[i].has_reference) continue;
        report.add(data[i].id, name, exact_answer_match(data[i], completions[i]));
      }
    } else {
      const MetricFn metric = metric_by_name(name, embedder);
      for (size_t i = 0; i < data.size(); ++i) {
        if (!data[i].has_reference) continue;
        report.add(data[i].id, name, metric(completions[i], data[i].reference));
      }
    }
  }
  return report;
}

}  // namespace rlc
