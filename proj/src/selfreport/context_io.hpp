#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selfreport/model.hpp"

namespace selfreport {

using Json = nlohmann::ordered_json;

// Names of the context sets compiled into the library.
std::vector<std::string> shipped_context_sets();

// Accepts a shipped set name ("original-100", "transfer-100") or a path to a
// JSON array of DecisionContext records.
ContextSet load_context_set(std::string_view name_or_path);

ContextSet context_set_from_json(std::string name, const Json& document);
Json to_json(const ContextSet& set);
Json to_json(const DecisionContext& context);

// {attribute: value} in the context's attribute order.
Json weights_to_json(const WeightVector& weights, const DecisionContext& context);
WeightVector weights_from_json(const Json& object, const DecisionContext& context, WeightRole role);

// Weights file: {context_id: {attribute: weight}}.
Json weight_map_to_json(const WeightMap& weights, const ContextSet& contexts);
WeightMap weight_map_from_json(const Json& document, const ContextSet& contexts, WeightRole role);

Json option_to_json(const OptionProfile& option, const DecisionContext& context);
OptionProfile option_from_json(const Json& object, const DecisionContext& context);

std::string read_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

}  // namespace selfreport
