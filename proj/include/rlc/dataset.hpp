#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rlc {

enum class TaskKind {
  ReasoningMultichoice,
  ReasoningGeneration,
  Translation,
  Summarization,
};

// Throws ParseError on an unknown name.
TaskKind parse_task_kind(const std::string& name);
std::string task_kind_name(TaskKind kind);

bool is_reasoning(TaskKind kind);

struct TaskInstance {
  std::string id;
  std::string instruction;  // prompt template with exactly one [TEXT] slot
  std::string problem;
  std::string reference;  // empty when unlabeled
  bool has_reference = false;
  std::vector<std::string> choices;  // multichoice kinds only, >= 2 entries
  TaskKind kind = TaskKind::ReasoningGeneration;
};

struct Dataset {
  std::vector<TaskInstance> items;

  bool empty() const { return items.empty(); }
  size_t size() const { return items.size(); }
  const TaskInstance& operator[](size_t i) const { return items[i]; }
};

// Loads newline-delimited JSON records.  Each record carries
// {id, instruction, problem} plus optional reference, choices and kind;
// records without their own kind fall back to `default_kind`.  Malformed
// input raises ParseError with the offending line number; an input with
// no records raises "empty dataset".
Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<TaskKind> default_kind = std::nullopt);

// Writes the canonical NDJSON form; save -> load -> save is byte-stable.
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// Fills the instruction's [TEXT] slot with the problem statement
// (multichoice problems get their lettered answer choices appended).
std::string render_prompt(const TaskInstance& item);

// Stock instruction template for a task kind (chain-of-thought cue for
// reasoning, translate/summarize requests otherwise).
std::string default_instruction(TaskKind kind);

// Uniform sample of `n` instances with replacement; deterministic in `rng`.
std::vector<const TaskInstance*> sample_batch(const Dataset& data, int n, std::mt19937_64& rng);

// Deterministic near-uniform draw from [0, size); avoids the
// implementation-defined behaviour of std::uniform_int_distribution.
size_t uniform_index(size_t size, std::mt19937_64& rng);

}  // namespace rlc
