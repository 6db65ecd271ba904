#include "rlc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rlc/error.hpp"
#include "rlc/text.hpp"

namespace rlc {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::unordered_map<std::string, const TaskInstance*> index_by_prompt(const Dataset& data) {
  std::unordered_map<std::string, const TaskInstance*> map;
  for (const TaskInstance& item : data.items) map[render_prompt(item)] = &item;
  return map;
}

const TaskInstance& prompt_lookup(
    const std::unordered_map<std::string, const TaskInstance*>& map, const std::string& prompt,
    const char* who) {
  auto it = map.find(prompt);
  if (it == map.end()) throw Error(std::string(who) + ": prompt does not belong to the suite");
  return *it->second;
}

}  // namespace

// --- suites ---------------------------------------------------------------

Dataset make_copy_suite(int n, int alphabet, int max_length, uint64_t seed,
                        std::string* vocab_out) {
  if (n < 1) throw Error("make_copy_suite: need at least one instance");
  if (alphabet < 1 || alphabet > 26) throw Error("make_copy_suite: alphabet must be in [1, 26]");
  if (max_length < 1) throw Error("make_copy_suite: max_length must be positive");

  std::mt19937_64 rng(seed);
  Dataset data;
  data.items.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Square-skewed lengths (half the draws land on length 1): short
    // prompts are the only episodes a fresh policy can complete by
    // chance, and what they teach transfers to every position.
    const double u = uniform_unit(rng);
    const size_t len = 1 + static_cast<size_t>(u * u * max_length);
    std::string word;
    for (size_t j = 0; j < len; ++j)
      word.push_back(static_cast<char>('a' + uniform_index(static_cast<size_t>(alphabet), rng)));
    TaskInstance item;
    item.id = "copy-" + std::to_string(i);
    item.instruction = "[TEXT]";
    item.problem = word;
    item.reference = word;
    item.has_reference = true;
    item.kind = TaskKind::ReasoningGeneration;
    data.items.push_back(std::move(item));
  }
  if (vocab_out) {
    vocab_out->clear();
    for (int i = 0; i < alphabet; ++i) vocab_out->push_back(static_cast<char>('a' + i));
    vocab_out->push_back('\n');
  }
  return data;
}

namespace {

const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "the",  "a",     "cat",  "dog",   "bird",    "sat",    "ran",  "jumped", "on",  "under",
      "mat",  "tree",  "house", "river", "quickly", "slowly", "big",  "small",  "red", "blue",
      "green", "early", "late", "far",   "near"};
  return pool;
}

}  // namespace

Dataset make_text_suite(int n, TaskKind kind, uint64_t seed) {
  if (n < 1) throw Error("make_text_suite: need at least one instance");
  if (kind == TaskKind::ReasoningMultichoice)
    throw Error("make_text_suite: multichoice suites are not supported");

  const std::vector<std::string>& pool = word_pool();
  std::mt19937_64 rng(seed);
  Dataset data;
  data.items.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const size_t len = 4 + uniform_index(5, rng);  // references of 4-8 words
    std::string reference;
    for (size_t j = 0; j < len; ++j) {
      if (j) reference += ' ';
      reference += pool[uniform_index(pool.size(), rng)];
    }
    TaskInstance item;
    item.id = "text-" + std::to_string(i);
    item.instruction = default_instruction(kind);
    item.problem = "passage " + std::to_string(i) + ": " + reference;
    item.reference = reference;
    item.has_reference = true;
    item.kind = kind;
    data.items.push_back(std::move(item));
  }
  return data;
}

// --- scripted models --------------------------------------------------------

StochasticAccuracyModel::StochasticAccuracyModel(const Dataset& data, double p, uint64_t seed)
    : by_prompt_(index_by_prompt(data)), p_(p), rng_(seed) {
  if (p_ < 0.0 || p_ > 1.0) throw Error("accuracy probability must be in [0, 1]");
  for (const TaskInstance& item : data.items)
    if (!item.has_reference)
      throw Error("scripted accuracy model needs references: " + item.id);
}

const TaskInstance& StochasticAccuracyModel::lookup(const std::string& prompt) const {
  return prompt_lookup(by_prompt_, prompt, "scripted accuracy model");
}

std::string StochasticAccuracyModel::wrong_answer(const TaskInstance& item) {
  return "not " + item.reference;
}

std::string StochasticAccuracyModel::generate(const std::string& prompt, const DecodingParams&,
                                              uint64_t) {
  const TaskInstance& item = lookup(prompt);
  return uniform_unit(rng_) < p_ ? item.reference : wrong_answer(item);
}

LogProbSeq StochasticAccuracyModel::score(const std::string&, const std::string&) {
  throw CapabilityError("scripted accuracy model does not support scoring");
}

std::string StochasticAccuracyModel::identity() const {
  return "scripted-accuracy(p=" + fmt_double(p_) + ")";
}

CandidatePoolModel::CandidatePoolModel(const Dataset& data, uint64_t seed)
    : by_prompt_(index_by_prompt(data)), word_pool_(word_pool()), rng_(seed) {
  for (const TaskInstance& item : data.items)
    if (!item.has_reference) throw Error("candidate pool model needs references: " + item.id);
}

std::string CandidatePoolModel::generate(const std::string& prompt, const DecodingParams&,
                                         uint64_t) {
  const TaskInstance& item = prompt_lookup(by_prompt_, prompt, "candidate pool model");
  static const double kLevels[] = {0.0, 0.15, 0.3, 0.5};
  const double level = kLevels[uniform_index(4, rng_)];

  std::vector<std::string> words = split_tokens(item.reference);
  std::vector<std::string> out;
  for (std::string& w : words) {
    if (uniform_unit(rng_) < level) {
      if (uniform_unit(rng_) < 0.5) continue;  // drop
      out.push_back(word_pool_[uniform_index(word_pool_.size(), rng_)]);
    } else {
      out.push_back(std::move(w));
    }
  }
  if (out.empty()) out.push_back(word_pool_[uniform_index(word_pool_.size(), rng_)]);

  std::string text = out[0];
  for (size_t i = 1; i < out.size(); ++i) text += " " + out[i];
  return text;
}

LogProbSeq CandidatePoolModel::score(const std::string&, const std::string&) {
  throw CapabilityError("candidate pool model does not support scoring");
}

std::string CandidatePoolModel::identity() const { return "scripted-candidate-pool"; }

// --- scripted judges ---------------------------------------------------------

OracleJudge::OracleJudge(double flip_prob, uint64_t seed) : flip_prob_(flip_prob), rng_(seed) {
  if (flip_prob_ < 0.0 || flip_prob_ > 1.0) throw Error("flip probability must be in [0, 1]");
}

Verdict OracleJudge::verdict(const TaskInstance& item, const std::string& answer) {
  if (!item.has_reference) throw Error("oracle judge needs a reference: " + item.id);
  bool correct = exact_answer_match(item, answer) == 1.0;
  if (flip()) correct = !correct;
  return correct ? Verdict::Yes : Verdict::No;
}

std::optional<int> OracleJudge::quality(const TaskInstance& item, const std::string& answer) {
  return verdict(item, answer) == Verdict::Yes ? 10 : 1;
}

Preference OracleJudge::compare(const TaskInstance& item, const std::string& a,
                                const std::string& b) {
  if (!item.has_reference) throw Error("oracle judge needs a reference: " + item.id);
  const double ma = exact_answer_match(item, a);
  const double mb = exact_answer_match(item, b);
  if (ma == mb) {
    note_unparsed();  // the oracle cannot rank equals
    return Preference::Unparsed;
  }
  Preference pref = ma > mb ? Preference::First : Preference::Second;
  if (flip()) pref = pref == Preference::First ? Preference::Second : Preference::First;
  return pref;
}

std::string OracleJudge::identity() const {
  return flip_prob_ == 0.0 ? "scripted-oracle"
                           : "scripted-noisy(flip=" + fmt_double(flip_prob_) + ")";
}

MetricJudge::MetricJudge(MetricFn metric, std::string metric_name, double q, uint64_t seed)
    : metric_(std::move(metric)), metric_name_(std::move(metric_name)), q_(q), rng_(seed) {
  if (!metric_) throw Error("metric judge needs a metric");
  if (q_ < 0.0 || q_ > 1.0) throw Error("metric judge accuracy must be in [0, 1]");
}

Verdict MetricJudge::verdict(const TaskInstance& item, const std::string& answer) {
  if (!item.has_reference) throw Error("metric judge needs a reference: " + item.id);
  const bool good = metric_(answer, item.reference) >= 0.5;
  const bool truthful = uniform_unit(rng_) < q_;
  return good == truthful ? Verdict::Yes : Verdict::No;
}

std::optional<int> MetricJudge::quality(const TaskInstance& item, const std::string& answer) {
  if (!item.has_reference) throw Error("metric judge needs a reference: " + item.id);
  const double m = metric_(answer, item.reference);
  return std::clamp(static_cast<int>(std::lround(1.0 + 9.0 * m)), 1, 10);
}

Preference MetricJudge::compare(const TaskInstance& item, const std::string& a,
                                const std::string& b) {
  if (!item.has_reference) throw Error("metric judge needs a reference: " + item.id);
  const double ma = metric_(a, item.reference);
  const double mb = metric_(b, item.reference);
  Preference better;
  if (ma == mb) {
    better = (rng_() & 1u) != 0 ? Preference::First : Preference::Second;
    return better;  // a pure coin flip; q cannot help on exact ties
  }
  better = ma > mb ? Preference::First : Preference::Second;
  if (uniform_unit(rng_) < q_) return better;
  return better == Preference::First ? Preference::Second : Preference::First;
}

std::string MetricJudge::identity() const {
  return "scripted-prefer-" + metric_name_ + "(q=" + fmt_double(q_) + ")";
}

// --- experiments ---------------------------------------------------------------

SeResampleResult run_se_resample(TextModel& model, Judge& judge, const Dataset& data,
                                 const DecodingParams& params, uint64_t seed) {
  std::mt19937_64 rng(seed);
  DecodingParams first_params = params;
  first_params.temperature = 0.0;  // the draft is the model's best guess
  DecodingParams retry_params = params;
  retry_params.temperature = 1.0;  // the retry explores

  SeResampleResult res;
  for (const TaskInstance& item : data.items) {
    const std::string prompt = render_prompt(item);
    const std::string first = model.generate(prompt, first_params, rng());

    SeResampleResult::Row row;
    row.id = item.id;
    row.first_correct = exact_answer_match(item, first) == 1.0;

    std::string final = first;
    if (judge.verdict(item, first) == Verdict::No) {
      final = model.generate(prompt, retry_params, rng());
      row.resampled = true;
      ++res.resampled;
    }
    row.final_correct = exact_answer_match(item, final) == 1.0;

    res.acc_without += row.first_correct ? 1.0 : 0.0;
    res.acc_with += row.final_correct ? 1.0 : 0.0;
    res.rows.push_back(std::move(row));
  }
  res.n = static_cast<long>(data.size());
  res.acc_without /= static_cast<double>(res.n);
  res.acc_with /= static_cast<double>(res.n);
  return res;
}

BestOfKResult run_best_of_k(TextModel& model, Judge& judge, const Dataset& data, int k,
                            const MetricFn& metric, const DecodingParams& params, uint64_t seed) {
  if (k < 1) throw Error("best-of-k needs k >= 1");
  if (!metric) throw Error("best-of-k needs a metric");
  std::mt19937_64 rng(seed);

  BestOfKResult res;
  for (const TaskInstance& item : data.items) {
    if (!item.has_reference) throw Error("best-of-k needs references: " + item.id);
    const std::string prompt = render_prompt(item);

    BestOfKResult::Row row;
    row.id = item.id;
    for (int i = 0; i < k; ++i) {
      row.candidates.push_back(model.generate(prompt, params, rng()));
      row.metric_values.push_back(metric(row.candidates.back(), item.reference));
      row.mean_metric += row.metric_values.back();
    }
    row.mean_metric /= static_cast<double>(k);

    // Winner-stays round-robin; the judge never sees metric values.
    for (int i = 1; i < k; ++i) {
      if (judge.compare(item, row.candidates[static_cast<size_t>(row.winner)],
                        row.candidates[static_cast<size_t>(i)]) == Preference::Second)
        row.winner = i;
    }
    row.winner_metric = row.metric_values[static_cast<size_t>(row.winner)];

    res.mean_without += row.mean_metric;
    res.mean_with += row.winner_metric;
    res.rows.push_back(std::move(row));
  }
  res.mean_without /= static_cast<double>(res.rows.size());
  res.mean_with /= static_cast<double>(res.rows.size());
  return res;
}

CorrelationResult run_correlation(TextModel& model, Judge& judge, const Dataset& data,
                                  const std::map<std::string, MetricFn>& metrics,
                                  const DecodingParams& params, uint64_t seed) {
  if (metrics.empty()) throw Error("correlation needs at least one metric");
  std::mt19937_64 rng(seed);

  CorrelationResult res;
  for (const TaskInstance& item : data.items) {
    if (!item.has_reference) throw Error("correlation needs references: " + item.id);
    const std::string prompt = render_prompt(item);

    CorrelationResult::Row row;
    row.id = item.id;
    row.first = model.generate(prompt, params, rng());
    row.second = model.generate(prompt, params, rng());
    switch (judge.compare(item, row.first, row.second)) {
      case Preference::First: row.preference = 1; break;
      case Preference::Second: row.preference = -1; break;
      case Preference::Unparsed: row.preference = 0; break;
    }
    if (row.preference != 0) ++res.used;
    res.rows.push_back(std::move(row));
  }

  for (const auto& [name, metric] : metrics) {
    std::vector<double> prefs, signs;
    for (size_t i = 0; i < res.rows.size(); ++i) {  // rows align with data.items
      const CorrelationResult::Row& row = res.rows[i];
      if (row.preference == 0) continue;
      const std::string& reference = data[i].reference;
      const double diff = metric(row.first, reference) - metric(row.second, reference);
      prefs.push_back(static_cast<double>(row.preference));
      signs.push_back(diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0);
    }
    std::optional<double> coeff;
    if (prefs.size() >= 2) {
      try {
        coeff = pearson(Eigen::Map<const Eigen::VectorXd>(prefs.data(),
                                                          static_cast<Eigen::Index>(prefs.size())),
                        Eigen::Map<const Eigen::VectorXd>(signs.data(),
                                                          static_cast<Eigen::Index>(signs.size())));
      } catch (const Error&) {
        coeff = std::nullopt;  // degenerate series: report "undefined"
      }
    }
    res.coefficients[name] = coeff;
  }
  return res;
}

// --- CSV renderings --------------------------------------------------------------

std::string se_resample_csv(const SeResampleResult& r) {
  std::string out = "id,first_correct,resampled,final_correct\n";
  for (const auto& row : r.rows)
    out += row.id + "," + (row.first_correct ? "1" : "0") + "," + (row.resampled ? "1" : "0") +
           "," + (row.final_correct ? "1" : "0") + "\n";
  out += "summary,acc_without," + fmt_double(r.acc_without) + "\n";
  out += "summary,acc_with," + fmt_double(r.acc_with) + "\n";
  out += "summary,resampled," + std::to_string(r.resampled) + "\n";
  return out;
}

std::string best_of_k_csv(const BestOfKResult& r) {
  std::string out = "id,winner,mean_metric,winner_metric\n";
  for (const auto& row : r.rows)
    out += row.id + "," + std::to_string(row.winner) + "," + fmt_double(row.mean_metric) + "," +
           fmt_double(row.winner_metric) + "\n";
  out += "summary,mean_without," + fmt_double(r.mean_without) + "\n";
  out += "summary,mean_with," + fmt_double(r.mean_with) + "\n";
  return out;
}

std::string correlation_csv(const CorrelationResult& r) {
  std::string out = "id,preference\n";
  for (const auto& row : r.rows) out += row.id + "," + std::to_string(row.preference) + "\n";
  for (const auto& [name, coeff] : r.coefficients)
    out += "coefficient," + name + "," + (coeff ? fmt_double(*coeff) : std::string("undefined")) +
           "\n";
  out += "summary,used," + std::to_string(r.used) + "\n";
  return out;
}

}  // namespace rlc
