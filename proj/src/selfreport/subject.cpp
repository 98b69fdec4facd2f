#include "selfreport/subject.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "selfreport/error.hpp"
#include "selfreport/rng.hpp"

namespace selfreport {
namespace {

std::string shortest(double value) {
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double read_real(const Json& value, std::string_view key) {
  if (value.is_string() && (value == "inf" || value == "infinity")) return std::numeric_limits<double>::infinity();
  if (!value.is_number()) raise(ErrorKind::config, "subject config field " + std::string(key) + " must be numeric");
  return value.get<double>();
}

}  // namespace

void SubjectConfig::validate() const {
  if (!(choice_sharpness >= 0.0)) raise(ErrorKind::config, "choice_sharpness must be >= 0");
  if (!(report_noise_sd >= 0.0) || std::isinf(report_noise_sd)) raise(ErrorKind::config, "report_noise_sd must be finite and >= 0");
  if (!(report_shrinkage >= 0.0 && report_shrinkage <= 1.0)) raise(ErrorKind::config, "report_shrinkage must lie in [0, 1]");
  if (!(invalid_report_rate >= 0.0 && invalid_report_rate <= 1.0)) {
    raise(ErrorKind::config, "invalid_report_rate must lie in [0, 1]");
  }
}

const WeightVector& SubjectConfig::latent(const DecisionContext& context) const {
  auto it = latent_weights.find(context.context_id);
  if (it == latent_weights.end()) {
    raise(ErrorKind::config, "synthetic subject has no latent weights for context " + context.context_id);
  }
  return it->second;
}

Selection subject_decide(const SubjectConfig& config, const DecisionContext& context, const ChoicePair& pair,
                         std::uint64_t seed) {
  const WeightVector& weights = config.latent(context);
  if (std::isinf(config.choice_sharpness)) return decide(weights, pair, context);
  const double gap = utility(weights, pair.option_a, context) - utility(weights, pair.option_b, context);
  Rng rng(seed);
  return rng.bernoulli(logistic(config.choice_sharpness * gap)) ? Selection::A : Selection::B;
}

std::string render_report_json(const WeightVector& weights, const DecisionContext& context) {
  std::string out = "{";
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (i > 0) out += ", ";
    out += '"' + context.attributes[i].name + "\": " + shortest(weights.values[i]);
  }
  out += '}';
  return out;
}

std::string subject_report(const SubjectConfig& config, const DecisionContext& context, std::uint64_t seed) {
  const WeightVector& latent = config.latent(context);
  Rng rng(seed);
  WeightVector reported;
  reported.role = WeightRole::reported;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    double v = config.report_shrinkage * latent.values[i];
    if (config.report_noise_sd > 0.0) v += config.report_noise_sd * rng.normal();
    reported.values[i] = std::clamp(v, -kWeightLimit, kWeightLimit);
  }
  if (config.invalid_report_rate > 0.0 && rng.bernoulli(config.invalid_report_rate)) {
    // Rotate through the failure modes seen in practice.
    switch (rng.below(4)) {
      case 0: {
        std::string text = "{";
        for (std::size_t i = 0; i + 1 < kAttributeCount; ++i) {
          if (i > 0) text += ", ";
          text += '"' + context.attributes[i].name + "\": " + shortest(reported.values[i]);
        }
        return text + "}";
      }
      case 1: {
        std::string text = render_report_json(reported, context);
        text.pop_back();
        return text + ", \"overall_impression\": 50}";
      }
      case 2:
        return "I weighed " + context.attributes[0].name + " most heavily.";
      default: {
        std::string text = "{";
        for (std::size_t i = 0; i < kAttributeCount; ++i) {
          if (i > 0) text += ", ";
          text += '"' + context.attributes[i].name + "\": " + (i == 2 ? std::string("\"high\"") : shortest(reported.values[i]));
        }
        return text + "}";
      }
    }
  }
  return render_report_json(reported, context);
}

Json subject_config_to_json(const SubjectConfig& config, const ContextSet& contexts) {
  Json out = Json::object();
  if (std::isinf(config.choice_sharpness)) {
    out["choice_sharpness"] = "inf";
  } else {
    out["choice_sharpness"] = config.choice_sharpness;
  }
  out["report_noise_sd"] = config.report_noise_sd;
  out["report_shrinkage"] = config.report_shrinkage;
  out["invalid_report_rate"] = config.invalid_report_rate;
  out["latent_weights"] = weight_map_to_json(config.latent_weights, contexts);
  return out;
}

SubjectConfig subject_config_from_json(const Json& document, const ContextSet& contexts,
                                       const std::filesystem::path& base_dir) {
  if (!document.is_object()) raise(ErrorKind::config, "subject config must be a JSON object");
  SubjectConfig config;
  if (auto it = document.find("choice_sharpness"); it != document.end()) config.choice_sharpness = read_real(*it, "choice_sharpness");
  if (auto it = document.find("report_noise_sd"); it != document.end()) config.report_noise_sd = read_real(*it, "report_noise_sd");
  if (auto it = document.find("report_shrinkage"); it != document.end()) config.report_shrinkage = read_real(*it, "report_shrinkage");
  if (auto it = document.find("invalid_report_rate"); it != document.end()) {
    config.invalid_report_rate = read_real(*it, "invalid_report_rate");
  }
  if (auto it = document.find("latent_weights"); it != document.end()) {
    config.latent_weights = weight_map_from_json(*it, contexts, WeightRole::learned);
  } else if (auto path = document.find("latent_weights_path"); path != document.end()) {
    const std::filesystem::path file = base_dir / path->get<std::string>();
    config.latent_weights = weight_map_from_json(read_json_file(file), contexts, WeightRole::learned);
  } else {
    raise(ErrorKind::config, "subject config needs latent_weights or latent_weights_path");
  }
  config.validate();
  return config;
}

SubjectConfig load_subject_config(const std::filesystem::path& path, const ContextSet& contexts) {
  return subject_config_from_json(read_json_file(path), contexts, path.parent_path());
}

}  // namespace selfreport
