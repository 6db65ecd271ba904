#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rlc {

std::string to_lower(std::string_view s);

// Strips whitespace and punctuation from both ends.
std::string trim_edges(std::string_view s);

// Whitespace-separated tokens (for n-gram metrics).
std::vector<std::string> split_tokens(std::string_view s);

// Maximal alphabetic runs, lowercased (for yes/no style parsing).
std::vector<std::string> alpha_words(std::string_view s);

// Canonical comparison form of an answer: edge-trimmed and lowercased.
std::string normalize_answer(std::string_view s);

// Pulls the final short answer out of a chain-of-thought completion.
//
// Scans case-insensitively for the answer cues "the answer is",
// "the answer:", "answer is" and "answer:"; the occurrence whose end is
// rightmost wins.  The text after the cue, up to the first sentence
// terminator ('.', '!', '?' or newline), is taken as the answer and
// normalized.  Without any cue the whole completion is normalized.
// When `multichoice` is set, forms like "(C)", "C)" or "option C" are
// reduced to the bare letter.  The function is idempotent.
std::string extract_final_answer(std::string_view completion, bool multichoice = false);

}  // namespace rlc
