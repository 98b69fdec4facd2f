#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "selfreport/model.hpp"

namespace selfreport {

enum class InvalidReason { not_json, missing_attribute, extra_attribute, non_numeric, wrong_count };

std::string_view to_string(InvalidReason reason);
std::optional<InvalidReason> invalid_reason_from_string(std::string_view text);

struct ReportRecord {
  std::string context_id;
  std::uint64_t trial_index = 0;
  std::string raw_text;
  std::optional<WeightVector> parsed;
  std::optional<InvalidReason> invalid_reason;
  // Set when at least one value fell outside [-100, 100] and was clamped.
  bool clamped = false;

  bool valid() const { return parsed.has_value(); }
};

// Accepts exactly one JSON object whose keys are the context's five
// attribute names with numeric values. Whitespace and Markdown code fences
// around the object are stripped first. Invalidity is reported in the
// record, never thrown.
ReportRecord parse_report(std::string_view raw, const DecisionContext& context);

}  // namespace selfreport
