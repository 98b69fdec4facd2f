#include "selfreport/report_parser.hpp"

#include <algorithm>

#include <json.hpp>

namespace selfreport {
namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

std::string_view strip_code_fence(std::string_view s) {
  s = trim(s);
  if (!s.starts_with("```") || s.size() < 6 || !s.ends_with("```")) return s;
  s.remove_suffix(3);
  s.remove_prefix(3);
  // Optional language tag on the opening fence line.
  const auto newline = s.find('\n');
  if (newline != std::string_view::npos && s.substr(0, newline).find('{') == std::string_view::npos) {
    s.remove_prefix(newline + 1);
  }
  return trim(s);
}

}  // namespace

std::string_view to_string(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::not_json: return "not_json";
    case InvalidReason::missing_attribute: return "missing_attribute";
    case InvalidReason::extra_attribute: return "extra_attribute";
    case InvalidReason::non_numeric: return "non_numeric";
    case InvalidReason::wrong_count: return "wrong_count";
  }
  return "not_json";
}

std::optional<InvalidReason> invalid_reason_from_string(std::string_view text) {
  for (auto reason : {InvalidReason::not_json, InvalidReason::missing_attribute, InvalidReason::extra_attribute,
                      InvalidReason::non_numeric, InvalidReason::wrong_count}) {
    if (to_string(reason) == text) return reason;
  }
  return std::nullopt;
}

ReportRecord parse_report(std::string_view raw, const DecisionContext& context) {
  ReportRecord record;
  record.context_id = context.context_id;
  record.raw_text = std::string(raw);

  const std::string_view body = strip_code_fence(raw);
  const auto document = nlohmann::json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
  if (document.is_discarded()) {
    record.invalid_reason = InvalidReason::not_json;
    return record;
  }
  if (document.is_array()) {
    // Several objects (or none) where exactly one was asked for.
    const bool all_objects = std::all_of(document.begin(), document.end(), [](const auto& v) { return v.is_object(); });
    record.invalid_reason = all_objects ? InvalidReason::wrong_count : InvalidReason::not_json;
    return record;
  }
  if (!document.is_object()) {
    record.invalid_reason = InvalidReason::not_json;
    return record;
  }

  for (const auto& [key, _] : document.items()) {
    if (context.attribute_index(key) == kAttributeCount) {
      record.invalid_reason = InvalidReason::extra_attribute;
      return record;
    }
  }
  if (document.size() != kAttributeCount) {
    record.invalid_reason = InvalidReason::missing_attribute;
    return record;
  }

  WeightVector weights;
  weights.role = WeightRole::reported;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& value = document.at(context.attributes[i].name);
    if (!value.is_number()) {
      record.invalid_reason = InvalidReason::non_numeric;
      return record;
    }
    const double v = value.get<double>();
    const double clamped = std::clamp(v, -kWeightLimit, kWeightLimit);
    if (clamped != v) record.clamped = true;
    weights.values[i] = clamped;
  }
  record.parsed = weights;
  return record;
}

}  // namespace selfreport
