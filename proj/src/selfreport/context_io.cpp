#include "selfreport/context_io.hpp"

#include <fstream>
#include <sstream>

#include "selfreport/error.hpp"

namespace selfreport {
namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_context_sets();
}

namespace {

const Json& require(const Json& object, std::string_view key, std::string_view where) {
  auto it = object.find(key);
  if (it == object.end()) {
    raise(ErrorKind::domain, std::string(where) + " is missing field \"" + std::string(key) + "\"");
  }
  return *it;
}

template <typename T>
T field(const Json& object, std::string_view key, std::string_view where) {
  try {
    return require(object, key, where).get<T>();
  } catch (const nlohmann::json::exception&) {
    raise(ErrorKind::domain, std::string(where) + " has a malformed \"" + std::string(key) + "\" field");
  }
}

AttributeSpec attribute_from_json(const Json& object, std::string_view where) {
  AttributeSpec spec;
  spec.name = field<std::string>(object, "name", where);
  spec.unit = field<std::string>(object, "unit", where);
  spec.range_min = field<double>(object, "range_min", where);
  spec.range_max = field<double>(object, "range_max", where);
  spec.display_precision = object.contains("display_precision") ? field<int>(object, "display_precision", where) : 1;
  return spec;
}

DecisionContext context_from_json(const Json& object, std::size_t position) {
  const std::string where = "context record " + std::to_string(position);
  if (!object.is_object()) raise(ErrorKind::domain, where + " is not an object");
  DecisionContext context;
  context.context_id = field<std::string>(object, "context_id", where);
  context.agent_name = field<std::string>(object, "agent_name", where);
  context.decision_type = field<std::string>(object, "decision_type", where);
  context.item_question = field<std::string>(object, "item_question", where);
  const Json& attributes = require(object, "attributes", where);
  if (!attributes.is_array() || attributes.size() != kAttributeCount) {
    raise(ErrorKind::domain, "context " + context.context_id + " must have exactly 5 attributes");
  }
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    context.attributes[i] = attribute_from_json(attributes[i], "attribute " + std::to_string(i) + " of " + context.context_id);
  }
  return context;
}

}  // namespace

std::vector<std::string> shipped_context_sets() {
  std::vector<std::string> names;
  for (const auto& [name, _] : detail::embedded_context_sets()) names.emplace_back(name);
  return names;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorKind::domain, path.string() + ": " + e.what());
  }
}

ContextSet context_set_from_json(std::string name, const Json& document) {
  if (!document.is_array()) raise(ErrorKind::domain, "context set " + name + " must be a JSON array");
  std::vector<DecisionContext> contexts;
  contexts.reserve(document.size());
  for (std::size_t i = 0; i < document.size(); ++i) contexts.push_back(context_from_json(document[i], i));
  return ContextSet(std::move(name), std::move(contexts));
}

ContextSet load_context_set(std::string_view name_or_path) {
  for (const auto& [name, text] : detail::embedded_context_sets()) {
    if (name == name_or_path) return context_set_from_json(std::string(name), Json::parse(text));
  }
  const std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path)) {
    raise(ErrorKind::config, "no shipped context set or file named " + std::string(name_or_path));
  }
  return context_set_from_json(path.stem().string(), read_json_file(path));
}

Json to_json(const DecisionContext& context) {
  Json attributes = Json::array();
  for (const auto& a : context.attributes) {
    attributes.push_back(Json{{"name", a.name},
                              {"unit", a.unit},
                              {"range_min", a.range_min},
                              {"range_max", a.range_max},
                              {"display_precision", a.display_precision}});
  }
  return Json{{"context_id", context.context_id},
              {"agent_name", context.agent_name},
              {"decision_type", context.decision_type},
              {"item_question", context.item_question},
              {"attributes", std::move(attributes)}};
}

Json to_json(const ContextSet& set) {
  Json out = Json::array();
  for (const auto& context : set) out.push_back(to_json(context));
  return out;
}

Json weights_to_json(const WeightVector& weights, const DecisionContext& context) {
  Json out = Json::object();
  for (std::size_t i = 0; i < kAttributeCount; ++i) out[context.attributes[i].name] = weights.values[i];
  return out;
}

WeightVector weights_from_json(const Json& object, const DecisionContext& context, WeightRole role) {
  if (!object.is_object()) raise(ErrorKind::domain, "weights for " + context.context_id + " must be an object");
  WeightVector weights;
  weights.role = role;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& name = context.attributes[i].name;
    auto it = object.find(name);
    if (it == object.end() || !it->is_number()) {
      raise(ErrorKind::domain, "weights for " + context.context_id + " lack a numeric \"" + name + "\"");
    }
    weights.values[i] = it->get<double>();
    ++matched;
  }
  if (object.size() != matched) {
    raise(ErrorKind::domain, "weights for " + context.context_id + " carry attributes the context does not define");
  }
  if (role == WeightRole::target) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      if (std::abs(weights.values[i]) > kWeightLimit) {
        raise(ErrorKind::domain, "target weight for " + context.attributes[i].name + " of " + context.context_id +
                                     " lies outside [-100, 100]");
      }
    }
  }
  return weights;
}

Json weight_map_to_json(const WeightMap& weights, const ContextSet& contexts) {
  Json out = Json::object();
  for (const auto& context : contexts) {
    auto it = weights.find(context.context_id);
    if (it != weights.end()) out[context.context_id] = weights_to_json(it->second, context);
  }
  return out;
}

WeightMap weight_map_from_json(const Json& document, const ContextSet& contexts, WeightRole role) {
  if (!document.is_object()) raise(ErrorKind::domain, "weights file must be a JSON object keyed by context_id");
  WeightMap out;
  for (const auto& [context_id, entry] : document.items()) {
    const DecisionContext* context = contexts.find(context_id);
    if (context == nullptr) raise(ErrorKind::domain, "weights file names unknown context " + context_id);
    out.emplace(context_id, weights_from_json(entry, *context, role));
  }
  return out;
}

Json option_to_json(const OptionProfile& option, const DecisionContext& context) {
  Json out = Json::object();
  for (std::size_t i = 0; i < kAttributeCount; ++i) out[context.attributes[i].name] = option.values[i];
  return out;
}

OptionProfile option_from_json(const Json& object, const DecisionContext& context) {
  OptionProfile option;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    auto it = object.find(context.attributes[i].name);
    if (it == object.end() || !it->is_number()) {
      raise(ErrorKind::domain, "option for " + context.context_id + " lacks \"" + context.attributes[i].name + "\"");
    }
    option.values[i] = it->get<double>();
  }
  validate(option, context);
  return option;
}

}  // namespace selfreport
