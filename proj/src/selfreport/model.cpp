#include "selfreport/model.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "selfreport/error.hpp"
#include "selfreport/rng.hpp"

namespace selfreport {

std::size_t DecisionContext::attribute_index(std::string_view name) const {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (attributes[i].name == name) return i;
  }
  return kAttributeCount;
}

void validate(const DecisionContext& context) {
  if (context.context_id.empty()) raise(ErrorKind::domain, "context has an empty context_id");
  std::set<std::string_view> names;
  for (const auto& attribute : context.attributes) {
    if (attribute.name.empty()) {
      raise(ErrorKind::domain, "context " + context.context_id + " has an unnamed attribute");
    }
    if (!names.insert(attribute.name).second) {
      raise(ErrorKind::domain, "context " + context.context_id + " repeats attribute " + attribute.name);
    }
    if (!(attribute.range_min < attribute.range_max)) {
      raise(ErrorKind::domain, "attribute " + attribute.name + " of context " + context.context_id +
                                   " needs range_min < range_max");
    }
    if (attribute.display_precision < 0 || attribute.display_precision > 9) {
      raise(ErrorKind::domain, "attribute " + attribute.name + " has display_precision outside [0, 9]");
    }
  }
}

ContextSet::ContextSet(std::string name, std::vector<DecisionContext> contexts)
    : name_(std::move(name)), contexts_(std::move(contexts)) {
  for (std::size_t i = 0; i < contexts_.size(); ++i) {
    validate(contexts_[i]);
    if (!index_.emplace(contexts_[i].context_id, i).second) {
      raise(ErrorKind::domain, "duplicate context_id " + contexts_[i].context_id + " in set " + name_);
    }
  }
}

const DecisionContext* ContextSet::find(std::string_view context_id) const {
  auto it = index_.find(context_id);
  return it == index_.end() ? nullptr : &contexts_[it->second];
}

const DecisionContext& ContextSet::at(std::string_view context_id) const {
  if (const auto* context = find(context_id)) return *context;
  raise(ErrorKind::config, "unknown context_id " + std::string(context_id));
}

ContextSet ContextSet::prefix(std::size_t count) const {
  if (count >= contexts_.size()) return *this;
  return ContextSet(name_, std::vector<DecisionContext>(contexts_.begin(), contexts_.begin() + count));
}

std::string_view to_string(WeightRole role) {
  switch (role) {
    case WeightRole::target: return "target";
    case WeightRole::learned: return "learned";
    case WeightRole::reported: return "reported";
  }
  return "target";
}

std::string_view to_string(Selection selection) { return selection == Selection::A ? "A" : "B"; }

void validate(const OptionProfile& option, const DecisionContext& context) {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& spec = context.attributes[i];
    const double v = option.values[i];
    if (!std::isfinite(v) || v < spec.range_min || v > spec.range_max) {
      raise(ErrorKind::domain, "value for attribute " + spec.name + " of context " + context.context_id +
                                   " lies outside its range");
    }
  }
}

void validate(const ChoicePair& pair, const DecisionContext& context) {
  if (pair.context_id != context.context_id) {
    raise(ErrorKind::domain, "pair belongs to " + pair.context_id + ", not " + context.context_id);
  }
  validate(pair.option_a, context);
  validate(pair.option_b, context);
}

WeightVector sample_weights(std::uint64_t seed, const DecisionContext& context, std::string_view purpose) {
  Rng rng(SeedKey{seed, purpose, context.context_id, 0});
  WeightVector weights;
  weights.role = WeightRole::target;
  for (auto& w : weights.values) {
    w = quantize(rng.uniform(-kWeightLimit, kWeightLimit), 1);
    if (w == 0.0) w = 0.0;  // drop negative zero
  }
  return weights;
}

double normalize_value(double value, const AttributeSpec& spec) {
  if (!(value >= spec.range_min && value <= spec.range_max)) {
    raise(ErrorKind::domain, "value outside the range of attribute " + spec.name);
  }
  return (value - spec.range_min) / spec.width();
}

double utility(const WeightVector& weights, const OptionProfile& option, const DecisionContext& context) {
  double total = 0.0;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    total += weights.values[i] * normalize_value(option.values[i], context.attributes[i]);
  }
  return total;
}

Selection decide(const WeightVector& weights, const ChoicePair& pair, const DecisionContext& context) {
  const double ua = utility(weights, pair.option_a, context);
  const double ub = utility(weights, pair.option_b, context);
  return ub > ua ? Selection::B : Selection::A;
}

std::string format_fixed(double value, int precision) {
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::fixed, precision);
  std::string text(buffer, result.ptr);
  // "-0.0" reads badly in prompts.
  if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) text.erase(0, 1);
  return text;
}

double quantize(double value, int precision) {
  const std::string text = format_fixed(value, precision);
  double parsed = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), parsed);
  return parsed;
}

ChoicePair sample_pair(std::uint64_t seed, std::string_view purpose, const DecisionContext& context,
                       std::uint64_t pair_id) {
  Rng rng(SeedKey{seed, purpose, context.context_id, pair_id});
  ChoicePair pair;
  pair.context_id = context.context_id;
  pair.pair_id = pair_id;
  auto draw = [&](OptionProfile& option) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      const auto& spec = context.attributes[i];
      double v = quantize(rng.uniform(spec.range_min, spec.range_max), spec.display_precision);
      // Range endpoints that are not representable at the display precision
      // can round outward; step back inside.
      const double step = std::pow(10.0, -spec.display_precision);
      if (v < spec.range_min) v = quantize(v + step, spec.display_precision);
      if (v > spec.range_max) v = quantize(v - step, spec.display_precision);
      option.values[i] = v;
    }
  };
  draw(pair.option_a);
  draw(pair.option_b);
  return pair;
}

}  // namespace selfreport
