#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "selfreport/model.hpp"

namespace selfreport {

enum class TaskKind { decision, introspection };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view text);

inline constexpr std::string_view kSystemPrompt =
    "Your job is to make hypothetical decisions on behalf of different people or characters.";

inline constexpr std::string_view kDecisionTask =
    "[DECISION TASK] Respond with \"A\" if you think Option A is better, or \"B\" if you think Option B is "
    "better. Never respond with anything except \"A\" or \"B\":";

inline constexpr std::string_view kIntrospectionTask =
    "[INTROSPECTION TASK] Respond with how heavily you believe you weighted each of the five dimensions while "
    "making your decision on a scale from -100 to 100. Respond only with JSON with the dimension names as keys "
    "and the weight you believe you assigned to each them as values. Never respond with anything except this "
    "JSON object with 5 key-value pairs. (Do not report your decision itself.):";

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  TaskKind task_kind = TaskKind::decision;
  std::string context_id;
  std::uint64_t pair_id = 0;
};

PromptBundle render_prompt(TaskKind kind, const DecisionContext& context, const ChoicePair& pair);
PromptBundle render_decision_prompt(const DecisionContext& context, const ChoicePair& pair);
PromptBundle render_introspection_prompt(const DecisionContext& context, const ChoicePair& pair);

struct ParsedPrompt {
  TaskKind task_kind = TaskKind::decision;
  const DecisionContext* context = nullptr;
  OptionProfile option_a;
  OptionProfile option_b;
};

// Inverse of the renderer. Identifies the context by its agent line, reads
// both option blocks, and requires that re-rendering reproduces the input
// byte for byte. Any drift throws a domain error.
ParsedPrompt parse_prompt(std::string_view user_text, const ContextSet& contexts);

}  // namespace selfreport
