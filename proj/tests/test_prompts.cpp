#include <gtest/gtest.h>

#include "selfreport/error.hpp"
#include "selfreport/prompts.hpp"
#include "support/oracles.hpp"
#include "support/test_data.hpp"

using namespace selfreport;
using namespace selfreport::testing;

namespace {

std::size_t count_lines_with(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = 0; (pos = text.find(needle, pos)) != std::string::npos; pos += needle.size()) ++n;
  return n;
}

}  // namespace

TEST(Prompts, DecisionTemplateMatchesGoldenFile) {
  const auto prompt = render_decision_prompt(jason_bourne(), bourne_pair());
  EXPECT_EQ(prompt.system_text, read_fixture("system_prompt.txt"));
  EXPECT_EQ(prompt.user_text, read_fixture("jason_bourne_decision.txt"));
  EXPECT_NE(prompt.user_text.find("suction_power: 597.0 air watts"), std::string::npos);
  EXPECT_NE(prompt.user_text.find("hose_reach: 31.0 feet"), std::string::npos);
  EXPECT_EQ(prompt.task_kind, TaskKind::decision);
  EXPECT_EQ(prompt.context_id, jason_bourne().context_id);
}

TEST(Prompts, IntrospectionTemplateMatchesGoldenFile) {
  const auto prompt = render_introspection_prompt(jason_bourne(), bourne_pair());
  EXPECT_EQ(prompt.system_text, read_fixture("system_prompt.txt"));
  EXPECT_EQ(prompt.user_text, read_fixture("jason_bourne_introspection.txt"));
  EXPECT_NE(prompt.user_text.find("on a scale from -100 to 100"), std::string::npos);
}

TEST(Prompts, TemplatesDifferOnlyInTaskBlock) {
  for (const auto& context : original_contexts()) {
    const auto pair = sample_pair(5, "diff", context, 0);
    auto decision = render_decision_prompt(context, pair).user_text;
    auto introspection = render_introspection_prompt(context, pair).user_text;
    ASSERT_TRUE(decision.starts_with(kDecisionTask));
    ASSERT_TRUE(introspection.starts_with(kIntrospectionTask));
    EXPECT_EQ(decision.substr(kDecisionTask.size()), introspection.substr(kIntrospectionTask.size()));
  }
}

TEST(Prompts, TenAttributeLinesAndPureRendering) {
  for (const auto& context : transfer_contexts()) {
    const auto pair = sample_pair(6, "lines", context, 3);
    const auto text = render_decision_prompt(context, pair).user_text;
    std::size_t lines = 0;
    for (const auto& attribute : context.attributes) lines += count_lines_with(text, "\n" + attribute.name + ": ");
    EXPECT_EQ(lines, 10u);
    EXPECT_EQ(text, render_decision_prompt(context, pair).user_text);
  }
}

TEST(Prompts, RenderParseRenderRoundTripOverFiveThousandPrompts) {
  const auto& contexts = original_contexts();
  std::size_t checked = 0;
  for (const auto& context : contexts) {
    for (std::uint64_t id = 0; id < 50; ++id) {
      const auto pair = sample_pair(7, "round-trip", context, id);
      const auto kind = id % 2 == 0 ? TaskKind::decision : TaskKind::introspection;
      const auto prompt = render_prompt(kind, context, pair);
      const auto parsed = parse_prompt(prompt.user_text, contexts);
      ASSERT_EQ(parsed.context, &contexts.at(context.context_id));
      ASSERT_EQ(parsed.task_kind, kind);
      ASSERT_EQ(parsed.option_a, pair.option_a);
      ASSERT_EQ(parsed.option_b, pair.option_b);
      ChoicePair again{context.context_id, parsed.option_a, parsed.option_b, id};
      ASSERT_EQ(render_prompt(kind, *parsed.context, again).user_text, prompt.user_text);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 5000u);
}

TEST(Prompts, TamperedOrForeignPromptsFailLoudly) {
  const auto& contexts = original_contexts();
  const auto text = render_decision_prompt(jason_bourne(), bourne_pair()).user_text;

  auto tampered = text;
  tampered.replace(tampered.find("597.0"), 5, "597.00");
  EXPECT_THROW(parse_prompt(tampered, contexts), Error);

  auto renamed = text;
  renamed.replace(renamed.find("hose_reach"), 10, "hose_length");
  EXPECT_THROW(parse_prompt(renamed, contexts), Error);

  auto stranger = text;
  stranger.replace(stranger.find("Jason Bourne"), 12, "Nobody Known");
  EXPECT_THROW(parse_prompt(stranger, contexts), Error);

  EXPECT_THROW(parse_prompt(text + "\n", contexts), Error);
  EXPECT_THROW(parse_prompt("", contexts), Error);
}

TEST(Prompts, TaskKindNames) {
  EXPECT_EQ(task_kind_from_string("decision"), TaskKind::decision);
  EXPECT_EQ(task_kind_from_string("introspection"), TaskKind::introspection);
  EXPECT_THROW(task_kind_from_string("chat"), Error);
}
