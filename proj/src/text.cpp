#include "rlc/text.hpp"

#include <array>
#include <cctype>

namespace rlc {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim_edges(std::string_view s) {
  size_t lo = 0, hi = s.size();
  while (lo < hi && (is_space(s[lo]) || is_punct(s[lo]))) ++lo;
  while (hi > lo && (is_space(s[hi - 1]) || is_punct(s[hi - 1]))) --hi;
  return std::string(s.substr(lo, hi - lo));
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> alpha_words(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_alpha(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && is_alpha(s[j])) ++j;
    if (j > i) out.push_back(to_lower(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string normalize_answer(std::string_view s) { return to_lower(trim_edges(s)); }

namespace {

// Reduces multiple-choice decorations to the bare option letter.
std::string reduce_choice(const std::string& normalized) {
  std::vector<std::string> words = alpha_words(normalized);
  if (words.empty()) return normalized;
  const std::string& last = words.back();
  if (last.size() != 1) return normalized;
  if (words.size() == 1) return last;
  if (words.size() == 2 && words.front() == "option") return last;
  return normalized;
}

}  // namespace

std::string extract_final_answer(std::string_view completion, bool multichoice) {
  static const std::array<std::string_view, 4> kCues = {
      "the answer is", "the answer:", "answer is", "answer:"};

  const std::string lowered = to_lower(completion);
  size_t best_end = std::string::npos;
  for (std::string_view cue : kCues) {
    size_t pos = lowered.rfind(cue);
    if (pos == std::string::npos) continue;
    size_t end = pos + cue.size();
    if (best_end == std::string::npos || end > best_end) best_end = end;
  }

  std::string_view tail = completion;
  if (best_end != std::string::npos) {
    tail = completion.substr(best_end);
    size_t cut = tail.find_first_of(".!?\n");
    if (cut != std::string_view::npos) tail = tail.substr(0, cut);
  }

  std::string answer = normalize_answer(tail);
  if (multichoice) answer = reduce_choice(answer);
  return answer;
}

}  // namespace rlc
