#include "selfreport/datasets.hpp"

#include <fstream>
#include <sstream>

#include "selfreport/context_io.hpp"
#include "selfreport/error.hpp"
#include "selfreport/prompts.hpp"

namespace selfreport {
namespace {

constexpr std::array<std::string_view, 3> kRoles = {"system", "user", "assistant"};

const WeightVector& target_for(const WeightMap& targets, const DecisionContext& context) {
  auto it = targets.find(context.context_id);
  if (it == targets.end()) raise(ErrorKind::config, "no target weights for context " + context.context_id);
  return it->second;
}

FinetuneRecord make_record(const PromptBundle& prompt, std::string answer) {
  FinetuneRecord record;
  record.messages = {ChatMessage{"system", prompt.system_text}, ChatMessage{"user", prompt.user_text},
                     ChatMessage{"assistant", std::move(answer)}};
  record.context_id = prompt.context_id;
  return record;
}

}  // namespace

std::string_view to_string(DatasetKind kind) { return kind == DatasetKind::preference ? "preference" : "introspection"; }

DatasetKind dataset_kind_from_string(std::string_view text) {
  if (text == "preference") return DatasetKind::preference;
  if (text == "introspection") return DatasetKind::introspection;
  raise(ErrorKind::usage, "dataset kind must be preference or introspection, got " + std::string(text));
}

std::vector<FinetuneRecord> emit_preference_dataset(const ContextSet& contexts, const WeightMap& targets,
                                                    int per_agent, std::uint64_t seed) {
  if (per_agent < 1) raise(ErrorKind::domain, "per_agent must be at least 1");
  std::vector<FinetuneRecord> records;
  records.reserve(contexts.size() * static_cast<std::size_t>(per_agent));
  for (const auto& context : contexts) {
    const WeightVector& target = target_for(targets, context);
    for (int i = 0; i < per_agent; ++i) {
      const ChoicePair pair = sample_pair(seed, "preference-dataset", context, static_cast<std::uint64_t>(i));
      records.push_back(make_record(render_decision_prompt(context, pair),
                                    std::string(to_string(decide(target, pair, context)))));
    }
  }
  return records;
}

std::string render_target_weights(const WeightVector& weights, const DecisionContext& context) {
  std::string out = "{";
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (i > 0) out += ", ";
    out += '"' + context.attributes[i].name + "\": " + format_fixed(weights.values[i], 1);
  }
  return out + "}";
}

std::vector<FinetuneRecord> emit_introspection_dataset(std::span<const DecisionContext* const> contexts,
                                                       const WeightMap& targets, std::uint64_t seed) {
  std::vector<FinetuneRecord> records;
  records.reserve(contexts.size());
  for (const DecisionContext* context : contexts) {
    const WeightVector& target = target_for(targets, *context);
    const ChoicePair pair = sample_pair(seed, "introspection-dataset", *context, 0);
    records.push_back(make_record(render_introspection_prompt(*context, pair), render_target_weights(target, *context)));
  }
  return records;
}

std::string to_jsonl_line(const FinetuneRecord& record) {
  Json messages = Json::array();
  for (const auto& m : record.messages) messages.push_back(Json{{"role", m.role}, {"content", m.content}});
  return Json{{"messages", std::move(messages)}}.dump();
}

FinetuneRecord parse_jsonl_line(std::string_view line) {
  const auto document = Json::parse(line.begin(), line.end(), nullptr, false);
  if (document.is_discarded() || !document.is_object()) raise(ErrorKind::domain, "not a JSON object");
  if (document.size() != 1 || !document.contains("messages")) raise(ErrorKind::domain, "record must hold only \"messages\"");
  const Json& messages = document["messages"];
  if (!messages.is_array() || messages.size() != 3) raise(ErrorKind::domain, "\"messages\" must hold exactly 3 entries");
  FinetuneRecord record;
  for (std::size_t i = 0; i < 3; ++i) {
    const Json& m = messages[i];
    if (!m.is_object() || m.size() != 2 || !m.contains("role") || !m.contains("content") || !m["role"].is_string() ||
        !m["content"].is_string()) {
      raise(ErrorKind::domain, "message " + std::to_string(i) + " must be {\"role\", \"content\"} strings");
    }
    record.messages[i] = ChatMessage{m["role"].get<std::string>(), m["content"].get<std::string>()};
    if (record.messages[i].role != kRoles[i]) {
      raise(ErrorKind::domain, "message " + std::to_string(i) + " must have role " + std::string(kRoles[i]));
    }
  }
  const std::string& answer = record.messages[2].content;
  if (answer != "A" && answer != "B") {
    const auto weights = Json::parse(answer, nullptr, false);
    bool ok = weights.is_object() && weights.size() == kAttributeCount;
    if (ok) {
      for (const auto& [_, v] : weights.items()) ok = ok && v.is_number();
    }
    if (!ok) raise(ErrorKind::domain, "assistant content must be \"A\", \"B\", or a 5-key JSON object of numbers");
  }
  return record;
}

std::string dataset_to_string(std::span<const FinetuneRecord> records) {
  std::string out;
  for (const auto& record : records) {
    out += to_jsonl_line(record);
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const FinetuneRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out << dataset_to_string(records);
  if (!out) raise(ErrorKind::io, "failed writing " + path.string());
}

std::vector<FinetuneRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  std::vector<FinetuneRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    try {
      records.push_back(parse_jsonl_line(line));
    } catch (const Error& e) {
      raise(ErrorKind::domain, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  if (records.empty()) raise(ErrorKind::domain, path.string() + " holds no records");
  return records;
}

}  // namespace selfreport
