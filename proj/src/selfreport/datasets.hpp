#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfreport/model.hpp"

namespace selfreport {

enum class DatasetKind { preference, introspection };

std::string_view to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view text);

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// One chat fine-tuning example: system, user, assistant.
struct FinetuneRecord {
  std::array<ChatMessage, 3> messages;
  // Provenance kept in memory for leakage checks; not serialized.
  std::string context_id;

  friend bool operator==(const FinetuneRecord& a, const FinetuneRecord& b) { return a.messages == b.messages; }
};

inline constexpr int kDefaultPreferenceExamplesPerAgent = 50;

std::vector<FinetuneRecord> emit_preference_dataset(const ContextSet& contexts, const WeightMap& targets,
                                                    int per_agent = kDefaultPreferenceExamplesPerAgent,
                                                    std::uint64_t seed = 0);

// One record per selected context; the response is that context's target
// weights as a five-key JSON object at one decimal place.
std::vector<FinetuneRecord> emit_introspection_dataset(std::span<const DecisionContext* const> contexts,
                                                       const WeightMap& targets, std::uint64_t seed = 0);

std::string render_target_weights(const WeightVector& weights, const DecisionContext& context);

// {"messages":[{"role":...,"content":...}, ...]} on a single line.
std::string to_jsonl_line(const FinetuneRecord& record);
// Throws a domain error describing the first schema violation.
FinetuneRecord parse_jsonl_line(std::string_view line);

void write_dataset(const std::filesystem::path& path, std::span<const FinetuneRecord> records);
std::string dataset_to_string(std::span<const FinetuneRecord> records);
// Validates every line; errors name the file and 1-based line number.
std::vector<FinetuneRecord> read_dataset(const std::filesystem::path& path);

}  // namespace selfreport
