#include "rlc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "rlc/error.hpp"
#include "rlc/text.hpp"

namespace rlc {

namespace {

// n-gram keys as separator-joined strings (tokens never contain '\x1f').
std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& toks, size_t n) {
  std::unordered_map<std::string, int> counts;
  if (toks.size() < n) return counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (size_t j = 1; j < n; ++j) {
      key += '\x1f';
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> cand = split_tokens(candidate);
  const std::vector<std::string> ref = split_tokens(reference);
  if (cand.empty()) return 0.0;

  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    const auto cand_counts = ngram_counts(cand, n);
    auto ref_counts = ngram_counts(ref, n);
    long matched = 0, total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;  // no unigram overlap: no smoothing rescue
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_sum += std::log(p);
  }

  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_sum / 4.0);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> cand = split_tokens(candidate);
  const std::vector<std::string> ref = split_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  const size_t m = cand.size(), n = ref.size();
  std::vector<size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(m);
  const double r = lcs / static_cast<double>(n);
  return 2.0 * p * r / (p + r);
}

double bert_score(const std::string& candidate, const std::string& reference,
                  TokenEmbedder& embedder) {
  const std::vector<std::string> cand = split_tokens(candidate);
  const std::vector<std::string> ref = split_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  const Eigen::MatrixXd ec = embedder.embed(cand);
  const Eigen::MatrixXd er = embedder.embed(ref);
  if (ec.rows() != static_cast<Eigen::Index>(cand.size()) || er.rows() != static_cast<Eigen::Index>(ref.size()))
    throw Error("embedder returned the wrong number of vectors");
  if (ec.cols() != er.cols()) throw Error("embedder returned inconsistent dimensions");

  // Unit-norm rows make the dot product the cosine; clamp to [0, 1].
  const Eigen::MatrixXd sim =
      (ec * er.transpose()).cwiseMax(0.0).cwiseMin(1.0);
  const double precision = sim.rowwise().maxCoeff().mean();
  const double recall = sim.colwise().maxCoeff().mean();
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double pearson(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  if (xs.size() != ys.size()) throw Error("pearson: series differ in length");
  if (xs.size() < 2) throw Error("pearson: need at least two points");
  const Eigen::ArrayXd dx = xs.array() - xs.mean();
  const Eigen::ArrayXd dy = ys.array() - ys.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx == 0.0 || syy == 0.0) throw Error("degenerate series: zero variance");
  return dx.cwiseProduct(dy).sum() / std::sqrt(sxx * syy);
}

double exact_answer_match(const TaskInstance& item, const std::string& completion) {
  const bool multichoice = item.kind == TaskKind::ReasoningMultichoice;
  return extract_final_answer(completion, multichoice) == normalize_answer(item.reference) ? 1.0
                                                                                           : 0.0;
}

MetricFn metric_by_name(const std::string& name, std::shared_ptr<TokenEmbedder> embedder) {
  if (name == "bleu") return [](const std::string& c, const std::string& r) { return bleu(c, r); };
  if (name == "rouge_l")
    return [](const std::string& c, const std::string& r) { return rouge_l(c, r); };
  if (name == "bertscore") {
    if (!embedder) throw Error("bertscore needs an embedder");
    return [embedder](const std::string& c, const std::string& r) {
      return bert_score(c, r, *embedder);
    };
  }
  throw Error("unknown metric: " + name);
}

void MetricReport::add(std::string id, std::string metric, double value) {
  rows.push_back(Row{std::move(id), std::move(metric), value});
}

std::map<std::string, double> MetricReport::aggregates() const {
  std::map<std::string, double> sums;
  std::map<std::string, long> counts;
  for (const Row& row : rows) {
    sums[row.metric] += row.value;
    ++counts[row.metric];
  }
  for (auto& [metric, sum] : sums) sum /= static_cast<double>(counts[metric]);
  return sums;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string MetricReport::to_csv() const {
  std::string out = "id,metric,value\n";
  for (const Row& row : rows)
    out += row.id + "," + row.metric + "," + fmt_double(row.value) + "\n";
  for (const auto& [metric, mean] : aggregates())
    out += "aggregate," + metric + "," + fmt_double(mean) + "\n";
  return out;
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_csv();
  if (!out) throw Error("failed while writing " + path.string());
}

}  // namespace rlc
