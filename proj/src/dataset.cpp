#include "rlc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "rlc/error.hpp"

namespace rlc {

using nlohmann::json;

TaskKind parse_task_kind(const std::string& name) {
  if (name == "reasoning-multichoice") return TaskKind::ReasoningMultichoice;
  if (name == "reasoning-generation") return TaskKind::ReasoningGeneration;
  if (name == "translation") return TaskKind::Translation;
  if (name == "summarization") return TaskKind::Summarization;
  throw ParseError("unknown task kind: " + name);
}

std::string task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::ReasoningMultichoice: return "reasoning-multichoice";
    case TaskKind::ReasoningGeneration: return "reasoning-generation";
    case TaskKind::Translation: return "translation";
    case TaskKind::Summarization: return "summarization";
  }
  throw Error("invalid task kind value");
}

bool is_reasoning(TaskKind kind) {
  return kind == TaskKind::ReasoningMultichoice || kind == TaskKind::ReasoningGeneration;
}

namespace {

[[noreturn]] void fail_line(size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

size_t count_slots(const std::string& instruction) {
  size_t n = 0, pos = 0;
  while ((pos = instruction.find("[TEXT]", pos)) != std::string::npos) {
    ++n;
    pos += 6;
  }
  return n;
}

TaskInstance parse_record(const json& rec, size_t line, std::optional<TaskKind> default_kind) {
  if (!rec.is_object()) fail_line(line, "record is not a JSON object");

  static const std::vector<std::string> known = {"id",        "instruction", "problem",
                                                 "reference", "choices",     "kind"};
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      fail_line(line, "unknown field \"" + it.key() + "\"");
  }

  TaskInstance item;
  for (const char* field : {"id", "instruction", "problem"}) {
    if (!rec.contains(field) || !rec[field].is_string())
      fail_line(line, std::string("missing string field \"") + field + "\"");
  }
  item.id = rec["id"].get<std::string>();
  item.instruction = rec["instruction"].get<std::string>();
  item.problem = rec["problem"].get<std::string>();
  if (item.id.empty()) fail_line(line, "empty id");

  if (rec.contains("reference")) {
    if (!rec["reference"].is_string()) fail_line(line, "reference must be a string");
    item.reference = rec["reference"].get<std::string>();
    item.has_reference = true;
  }
  if (rec.contains("choices")) {
    if (!rec["choices"].is_array()) fail_line(line, "choices must be an array");
    for (const auto& c : rec["choices"]) {
      if (!c.is_string()) fail_line(line, "choices must contain strings");
      item.choices.push_back(c.get<std::string>());
    }
  }
  if (rec.contains("kind")) {
    if (!rec["kind"].is_string()) fail_line(line, "kind must be a string");
    try {
      item.kind = parse_task_kind(rec["kind"].get<std::string>());
    } catch (const ParseError& e) {
      fail_line(line, e.what());
    }
  } else if (default_kind) {
    item.kind = *default_kind;
  } else {
    fail_line(line, "record has no kind and no default kind was given");
  }

  if (count_slots(item.instruction) != 1)
    fail_line(line, "instruction must contain exactly one [TEXT] slot");
  if (item.kind == TaskKind::ReasoningMultichoice) {
    if (item.choices.size() < 2) fail_line(line, "multichoice record needs at least two choices");
  } else if (!item.choices.empty()) {
    fail_line(line, "choices are only valid for multichoice records");
  }
  return item;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, std::optional<TaskKind> default_kind) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset: " + path.string());

  Dataset data;
  std::string line;
  size_t line_no = 0;
  std::unordered_set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(line_no, std::string("invalid JSON: ") + e.what());
    }
    TaskInstance item = parse_record(rec, line_no, default_kind);
    if (!seen_ids.insert(item.id).second) fail_line(line_no, "duplicate id \"" + item.id + "\"");
    data.items.push_back(std::move(item));
  }
  if (data.items.empty()) throw ParseError("empty dataset: " + path.string());
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset: " + path.string());
  for (const TaskInstance& item : data.items) {
    json rec;
    rec["id"] = item.id;
    rec["instruction"] = item.instruction;
    rec["problem"] = item.problem;
    if (item.has_reference) rec["reference"] = item.reference;
    if (!item.choices.empty()) rec["choices"] = item.choices;
    rec["kind"] = task_kind_name(item.kind);
    out << rec.dump() << '\n';
  }
  if (!out) throw Error("failed while writing dataset: " + path.string());
}

std::string render_prompt(const TaskInstance& item) {
  std::string text = item.problem;
  if (!item.choices.empty()) {
    text += " Answer Choices:";
    for (size_t i = 0; i < item.choices.size(); ++i) {
      text += " (";
      text += static_cast<char>('A' + i);
      text += ") " + item.choices[i];
    }
  }
  std::string prompt = item.instruction;
  size_t pos = prompt.find("[TEXT]");
  if (pos == std::string::npos) throw Error("instruction lost its [TEXT] slot: " + item.id);
  prompt.replace(pos, 6, text);
  return prompt;
}

std::string default_instruction(TaskKind kind) {
  switch (kind) {
    case TaskKind::ReasoningMultichoice:
    case TaskKind::ReasoningGeneration:
      return "[TEXT] Let's think step by step.";
    case TaskKind::Translation:
      return "Please help me translate the following Chinese text into English. Text: [TEXT] "
             "Answer:";
    case TaskKind::Summarization:
      return "Please give a summary of the following text. Text: [TEXT] Answer:";
  }
  throw Error("invalid task kind value");
}

size_t uniform_index(size_t size, std::mt19937_64& rng) {
  if (size == 0) throw Error("uniform_index over empty range");
  return static_cast<size_t>((static_cast<unsigned __int128>(rng()) * size) >> 64);
}

std::vector<const TaskInstance*> sample_batch(const Dataset& data, int n, std::mt19937_64& rng) {
  if (data.empty()) throw Error("cannot sample from an empty dataset");
  std::vector<const TaskInstance*> batch;
  batch.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) batch.push_back(&data.items[uniform_index(data.size(), rng)]);
  return batch;
}

}  // namespace rlc
