#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace selfreport {

inline constexpr std::size_t kAttributeCount = 5;

struct AttributeSpec {
  std::string name;
  std::string unit;
  double range_min = 0.0;
  double range_max = 1.0;
  int display_precision = 1;

  double width() const { return range_max - range_min; }
};

struct DecisionContext {
  std::string context_id;
  std::string agent_name;
  std::string decision_type;
  std::string item_question;
  std::array<AttributeSpec, kAttributeCount> attributes;

  // Index of the named attribute, or kAttributeCount when absent.
  std::size_t attribute_index(std::string_view name) const;
};

// Throws a domain error naming the context when an invariant is violated.
void validate(const DecisionContext& context);

class ContextSet {
 public:
  ContextSet() = default;
  ContextSet(std::string name, std::vector<DecisionContext> contexts);

  const std::string& name() const { return name_; }
  const std::vector<DecisionContext>& contexts() const { return contexts_; }
  std::size_t size() const { return contexts_.size(); }
  auto begin() const { return contexts_.begin(); }
  auto end() const { return contexts_.end(); }

  const DecisionContext* find(std::string_view context_id) const;
  const DecisionContext& at(std::string_view context_id) const;

  // The first `count` contexts, preserving order.
  ContextSet prefix(std::size_t count) const;

 private:
  std::string name_;
  std::vector<DecisionContext> contexts_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

enum class WeightRole { target, learned, reported };

std::string_view to_string(WeightRole role);

// Weights are stored in the owning context's attribute order; names are
// attached at the serialization boundary.
struct WeightVector {
  std::array<double, kAttributeCount> values{};
  WeightRole role = WeightRole::target;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;
};

using WeightMap = std::map<std::string, WeightVector, std::less<>>;

struct OptionProfile {
  std::array<double, kAttributeCount> values{};

  friend bool operator==(const OptionProfile&, const OptionProfile&) = default;
};

struct ChoicePair {
  std::string context_id;
  OptionProfile option_a;
  OptionProfile option_b;
  std::uint64_t pair_id = 0;

  friend bool operator==(const ChoicePair&, const ChoicePair&) = default;
};

enum class Selection { A, B };

std::string_view to_string(Selection selection);

inline constexpr double kWeightLimit = 100.0;

void validate(const OptionProfile& option, const DecisionContext& context);
void validate(const ChoicePair& pair, const DecisionContext& context);

WeightVector sample_weights(std::uint64_t seed, const DecisionContext& context,
                            std::string_view purpose = "target-weights");

double normalize_value(double value, const AttributeSpec& spec);

double utility(const WeightVector& weights, const OptionProfile& option,
               const DecisionContext& context);

// Higher utility wins; exact ties go to A.
Selection decide(const WeightVector& weights, const ChoicePair& pair,
                 const DecisionContext& context);

ChoicePair sample_pair(std::uint64_t seed, std::string_view purpose,
                       const DecisionContext& context, std::uint64_t pair_id);

// Fixed-point rendering used in prompts, e.g. 597 at precision 1 -> "597.0".
std::string format_fixed(double value, int precision);

// The double that format_fixed(value) parses back to.
double quantize(double value, int precision);

}  // namespace selfreport
