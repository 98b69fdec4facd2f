#include "selfreport/prompts.hpp"

#include <charconv>
#include <vector>

#include "selfreport/error.hpp"

namespace selfreport {
namespace {

void append_option(std::string& out, const DecisionContext& context, const OptionProfile& option) {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& spec = context.attributes[i];
    out += '\n';
    out += spec.name;
    out += ": ";
    out += format_fixed(option.values[i], spec.display_precision);
    out += ' ';
    out += spec.unit;
  }
}

std::string agent_line(const DecisionContext& context) {
  return "Imagine you are " + context.agent_name + ". " + context.item_question;
}

std::string render_user_text(TaskKind kind, const DecisionContext& context, const OptionProfile& a,
                             const OptionProfile& b) {
  std::string out(kind == TaskKind::decision ? kDecisionTask : kIntrospectionTask);
  out += "\n\n";
  out += agent_line(context);
  out += "\n\nA:";
  append_option(out, context, a);
  out += "\n\nB:";
  append_option(out, context, b);
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      return lines;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
}

[[noreturn]] void drift(const std::string& what) { raise(ErrorKind::domain, "prompt drift: " + what); }

OptionProfile read_option(const std::vector<std::string_view>& lines, std::size_t first,
                          const DecisionContext& context) {
  OptionProfile option;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& spec = context.attributes[i];
    std::string_view line = lines[first + i];
    const std::string prefix = spec.name + ": ";
    const std::string suffix = " " + spec.unit;
    if (line.size() < prefix.size() + suffix.size() || line.substr(0, prefix.size()) != prefix ||
        line.substr(line.size() - suffix.size()) != suffix) {
      drift("attribute line \"" + std::string(line) + "\" does not match " + spec.name);
    }
    std::string_view number = line.substr(prefix.size(), line.size() - prefix.size() - suffix.size());
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc() || ptr != number.data() + number.size()) {
      drift("value \"" + std::string(number) + "\" for " + spec.name + " is not a number");
    }
    option.values[i] = value;
  }
  try {
    validate(option, context);
  } catch (const Error& e) {
    drift(e.what());
  }
  return option;
}

}  // namespace

std::string_view to_string(TaskKind kind) { return kind == TaskKind::decision ? "decision" : "introspection"; }

TaskKind task_kind_from_string(std::string_view text) {
  if (text == "decision") return TaskKind::decision;
  if (text == "introspection") return TaskKind::introspection;
  raise(ErrorKind::usage, "task must be decision or introspection, got " + std::string(text));
}

PromptBundle render_prompt(TaskKind kind, const DecisionContext& context, const ChoicePair& pair) {
  validate(pair, context);
  PromptBundle bundle;
  bundle.system_text = std::string(kSystemPrompt);
  bundle.user_text = render_user_text(kind, context, pair.option_a, pair.option_b);
  bundle.task_kind = kind;
  bundle.context_id = context.context_id;
  bundle.pair_id = pair.pair_id;
  return bundle;
}

PromptBundle render_decision_prompt(const DecisionContext& context, const ChoicePair& pair) {
  return render_prompt(TaskKind::decision, context, pair);
}

PromptBundle render_introspection_prompt(const DecisionContext& context, const ChoicePair& pair) {
  return render_prompt(TaskKind::introspection, context, pair);
}

ParsedPrompt parse_prompt(std::string_view user_text, const ContextSet& contexts) {
  // task, "", agent, "", "A:", 5 lines, "", "B:", 5 lines
  constexpr std::size_t kLineCount = 4 + 1 + kAttributeCount + 2 + kAttributeCount;
  const auto lines = split_lines(user_text);
  if (lines.size() != kLineCount) {
    drift("expected " + std::to_string(kLineCount) + " lines, found " + std::to_string(lines.size()));
  }

  ParsedPrompt parsed;
  if (lines[0] == kDecisionTask) {
    parsed.task_kind = TaskKind::decision;
  } else if (lines[0] == kIntrospectionTask) {
    parsed.task_kind = TaskKind::introspection;
  } else {
    drift("unrecognized task block");
  }
  if (!lines[1].empty() || !lines[3].empty() || lines[4] != "A:" || !lines[10].empty() || lines[11] != "B:") {
    drift("option block layout");
  }

  constexpr std::string_view kLead = "Imagine you are ";
  for (const auto& context : contexts) {
    std::string_view line = lines[2];
    if (line.size() == kLead.size() + context.agent_name.size() + 2 + context.item_question.size() &&
        line.starts_with(kLead) && line.substr(kLead.size()).starts_with(context.agent_name) &&
        line.substr(kLead.size() + context.agent_name.size()).starts_with(". ") &&
        line.ends_with(context.item_question)) {
      parsed.context = &context;
      break;
    }
  }
  if (parsed.context == nullptr) drift("no known context matches \"" + std::string(lines[2]) + "\"");

  parsed.option_a = read_option(lines, 5, *parsed.context);
  parsed.option_b = read_option(lines, 12, *parsed.context);

  if (render_user_text(parsed.task_kind, *parsed.context, parsed.option_a, parsed.option_b) != user_text) {
    drift("re-rendered prompt differs from input");
  }
  return parsed;
}

}  // namespace selfreport
