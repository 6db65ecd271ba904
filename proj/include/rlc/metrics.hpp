#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rlc/dataset.hpp"
#include "rlc/embedder.hpp"

namespace rlc {

// Sentence BLEU with n-grams up to 4, uniform weights and a brevity
// penalty.  Orders n >= 2 use add-one smoothing ((m + 1) / (t + 1)); a
// zero unigram overlap scores 0 and an exact match scores exactly 1.
double bleu(const std::string& candidate, const std::string& reference);

// ROUGE-L F1 over whitespace tokens (longest common subsequence);
// empty inputs score 0 by convention.
double rouge_l(const std::string& candidate, const std::string& reference);

// BERTScore-style F1: greedy cosine matching between contextual token
// embeddings in both directions, cosines clamped to [0, 1].
double bert_score(const std::string& candidate, const std::string& reference,
                  TokenEmbedder& embedder);

// Sample Pearson correlation.  Requires at least two points; a series
// with zero variance raises Error("degenerate series ...").
double pearson(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

// 1.0 when the completion's extracted final answer matches the
// reference under canonical normalization, else 0.0.
double exact_answer_match(const TaskInstance& item, const std::string& completion);

// (candidate, reference) -> score in [0, 1].
using MetricFn = std::function<double(const std::string&, const std::string&)>;

// Known names: "bleu", "rouge_l", "bertscore".  The embedder is only
// captured for "bertscore".
MetricFn metric_by_name(const std::string& name, std::shared_ptr<TokenEmbedder> embedder);

// Per-instance metric values plus per-metric means, serialized as CSV
// with header id,metric,value and an aggregates footer (id "aggregate").
struct MetricReport {
  struct Row {
    std::string id;
    std::string metric;
    double value = 0.0;
  };
  std::vector<Row> rows;

  void add(std::string id, std::string metric, double value);
  std::map<std::string, double> aggregates() const;
  void write_csv(const std::filesystem::path& path) const;
  std::string to_csv() const;
};

}  // namespace rlc
