#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "selfreport/context_io.hpp"
#include "selfreport/model.hpp"

namespace selfreport {

// Stochastic stand-in for a fine-tuned model with known latent weights.
//
// Choices follow a logit rule P(A) = logistic(sharpness * (u_A - u_B)); an
// infinite sharpness reproduces decide() exactly. Reports are
// clamp(shrinkage * w + Normal(0, noise_sd^2), -100, 100), replaced by a
// malformed response with probability invalid_report_rate.
struct SubjectConfig {
  WeightMap latent_weights;
  double choice_sharpness = std::numeric_limits<double>::infinity();
  double report_noise_sd = 0.0;
  double report_shrinkage = 1.0;
  double invalid_report_rate = 0.0;

  void validate() const;
  const WeightVector& latent(const DecisionContext& context) const;
};

Selection subject_decide(const SubjectConfig& config, const DecisionContext& context, const ChoicePair& pair,
                         std::uint64_t seed);

std::string subject_report(const SubjectConfig& config, const DecisionContext& context, std::uint64_t seed);

// The exact introspection-response format: {"name": value, ...} in attribute
// order, values rendered with the shortest round-trip representation.
std::string render_report_json(const WeightVector& weights, const DecisionContext& context);

// SubjectConfig file. Latent weights are either inline ("latent_weights") or
// referenced by a weights file path ("latent_weights_path", resolved relative
// to the config file). Infinite sharpness is written as the string "inf".
Json subject_config_to_json(const SubjectConfig& config, const ContextSet& contexts);
SubjectConfig subject_config_from_json(const Json& document, const ContextSet& contexts,
                                       const std::filesystem::path& base_dir = {});
SubjectConfig load_subject_config(const std::filesystem::path& path, const ContextSet& contexts);

}  // namespace selfreport
