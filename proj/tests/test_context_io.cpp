#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "selfreport/context_io.hpp"
#include "selfreport/error.hpp"
#include "support/test_data.hpp"

using namespace selfreport;
using namespace selfreport::testing;

TEST(ContextSets, ShippedSetsHaveOneHundredDisjointContexts) {
  const auto names = shipped_context_sets();
  EXPECT_NE(std::find(names.begin(), names.end(), "original-100"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "transfer-100"), names.end());
  EXPECT_EQ(original_contexts().size(), 100u);
  EXPECT_EQ(transfer_contexts().size(), 100u);
  std::set<std::string> agents;
  for (const auto& c : original_contexts()) agents.insert(c.agent_name);
  EXPECT_EQ(agents.size(), 100u);
  for (const auto& c : transfer_contexts()) {
    EXPECT_EQ(original_contexts().find(c.context_id), nullptr) << c.context_id;
  }
}

TEST(ContextSets, CentralVacuumContextMatchesPromptExample) {
  const auto& c = jason_bourne();
  EXPECT_EQ(c.agent_name, "Jason Bourne");
  EXPECT_EQ(c.item_question, "Which central vacuum system would you prefer?");
  const std::array<std::string, 5> names{"suction_power", "noise_level", "dirt_capacity", "hose_reach",
                                         "filtration_efficiency"};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(c.attributes[i].name, names[i]);
  EXPECT_EQ(c.attributes[0].unit, "air watts");
}

TEST(ContextSets, JsonRoundTripThroughFile) {
  TempDir dir;
  const auto path = dir.path() / "set.json";
  std::ofstream(path) << to_json(original_contexts()).dump(2);
  const auto loaded = load_context_set(path.string());
  ASSERT_EQ(loaded.size(), original_contexts().size());
  EXPECT_EQ(to_json(loaded), to_json(original_contexts()));
}

TEST(ContextSets, UnknownNameIsConfigError) {
  try {
    load_context_set("no-such-set");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(ContextSets, RejectsWrongAttributeCountAndDuplicates) {
  Json doc = to_json(original_contexts().prefix(2));
  Json broken = doc;
  broken[0]["attributes"].erase(broken[0]["attributes"].size() - 1);
  EXPECT_THROW(context_set_from_json("x", broken), Error);
  Json dup = doc;
  dup[1]["context_id"] = dup[0]["context_id"];
  EXPECT_THROW(context_set_from_json("x", dup), Error);
}

TEST(ContextSets, PrefixKeepsOrder) {
  const auto first = original_contexts().prefix(20);
  ASSERT_EQ(first.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(first.contexts()[i].context_id, original_contexts().contexts()[i].context_id);
  }
}

TEST(WeightsFile, RoundTripsAndKeepsAttributeOrder) {
  const auto targets = targets_for(original_contexts(), 9);
  const Json doc = weight_map_to_json(targets, original_contexts());
  const auto& first = original_contexts().contexts().front();
  auto it = doc.at(first.context_id).begin();
  for (const auto& attribute : first.attributes) EXPECT_EQ((it++).key(), attribute.name);
  const auto back = weight_map_from_json(Json::parse(doc.dump()), original_contexts(), WeightRole::target);
  EXPECT_EQ(back, targets);
}

TEST(WeightsFile, MissingExtraOrUnknownEntriesAreDomainErrors) {
  const auto& c = jason_bourne();
  Json w = weights_to_json(sample_weights(1, c), c);
  Json missing = w;
  missing.erase("hose_reach");
  EXPECT_THROW(weights_from_json(missing, c, WeightRole::target), Error);
  Json extra = w;
  extra["color"] = 1.0;
  EXPECT_THROW(weights_from_json(extra, c, WeightRole::target), Error);
  Json file{{"not-a-context", w}};
  EXPECT_THROW(weight_map_from_json(file, original_contexts(), WeightRole::target), Error);
}

TEST(WeightsFile, OptionRoundTrip) {
  const auto& c = jason_bourne();
  const auto pair = sample_pair(2, "io", c, 0);
  EXPECT_EQ(option_from_json(option_to_json(pair.option_a, c), c), pair.option_a);
}

TEST(Files, MissingFileIsIoError) {
  try {
    read_file("/nonexistent/selfreport/file");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
