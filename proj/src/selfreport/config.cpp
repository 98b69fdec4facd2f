#include "selfreport/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <vector>

#include "selfreport/context_io.hpp"
#include "selfreport/error.hpp"

namespace selfreport {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

bool bare_key(std::string_view key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::optional<TomlValue> parse_scalar(std::string_view text) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      if (text[i] == '\\' && i + 2 < text.size()) {
        const char next = text[++i];
        switch (next) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: return std::nullopt;
        }
      } else if (text[i] == '"') {
        return std::nullopt;
      } else {
        out += text[i];
      }
    }
    return out;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan" || text == "+nan" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
  std::string digits;
  for (char c : text) {
    if (c != '_') digits += c;
  }
  if (digits.empty()) return std::nullopt;
  const char* begin = digits.data() + (digits.front() == '+' ? 1 : 0);
  const char* end = digits.data() + digits.size();
  if (digits.find_first_of(".eE") == std::string::npos) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec == std::errc() && ptr == end) return value;
    return std::nullopt;
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec == std::errc() && ptr == end) return value;
  return std::nullopt;
}

double as_real(const TomlValue& value, std::string_view key) {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  raise(ErrorKind::config, "config key " + std::string(key) + " must be a number");
}

std::int64_t as_integer(const TomlValue& value, std::string_view key) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  raise(ErrorKind::config, "config key " + std::string(key) + " must be an integer");
}

std::string as_string(const TomlValue& value, std::string_view key) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  raise(ErrorKind::config, "config key " + std::string(key) + " must be a string");
}

int as_int(const TomlValue& value, std::string_view key) {
  const auto v = as_integer(value, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    raise(ErrorKind::config, "config key " + std::string(key) + " is out of range");
  }
  return static_cast<int>(v);
}

using Setter = std::function<void(RunConfig&, const TomlValue&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed.value", [](RunConfig& c, const TomlValue& v, auto k) {
         const auto seed = as_integer(v, k);
         if (seed < 0) raise(ErrorKind::config, "seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(seed);
       }},
      {"backend.kind", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.kind = backend_kind_from_string(as_string(v, k)); }},
      {"backend.model_id", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.model_id = as_string(v, k); }},
      {"backend.endpoint_url", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.endpoint_url = as_string(v, k); }},
      {"backend.credential_env_var", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.credential_env_var = as_string(v, k); }},
      {"backend.subject_config_path", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.subject_config_path = as_string(v, k); }},
      {"backend.request_timeout", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.request_timeout = as_real(v, k); }},
      {"backend.max_retries", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.max_retries = as_int(v, k); }},
      {"backend.max_in_flight", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.max_in_flight = as_int(v, k); }},
      {"backend.initial_backoff", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.initial_backoff = as_real(v, k); }},
      {"backend.max_backoff", [](RunConfig& c, const TomlValue& v, auto k) { c.backend.max_backoff = as_real(v, k); }},
      {"backend.finetune_poll_interval", [](RunConfig& c, const TomlValue& v, auto k) { c.finetune_poll_interval = as_real(v, k); }},
      {"backend.finetune_max_wait", [](RunConfig& c, const TomlValue& v, auto k) { c.finetune_max_wait = as_real(v, k); }},
      {"contexts.original", [](RunConfig& c, const TomlValue& v, auto k) { c.original_contexts = as_string(v, k); }},
      {"contexts.transfer", [](RunConfig& c, const TomlValue& v, auto k) { c.transfer_contexts = as_string(v, k); }},
      {"contexts.limit", [](RunConfig& c, const TomlValue& v, auto k) {
         const auto limit = as_integer(v, k);
         if (limit < 0) raise(ErrorKind::config, "contexts.limit must be non-negative");
         c.context_limit = static_cast<std::size_t>(limit);
       }},
      {"counts.preference_examples_per_agent", [](RunConfig& c, const TomlValue& v, auto k) { c.preference_examples_per_agent = as_int(v, k); }},
      {"counts.decisions_per_agent", [](RunConfig& c, const TomlValue& v, auto k) { c.decisions_per_agent = as_int(v, k); }},
      {"counts.reports_per_agent", [](RunConfig& c, const TomlValue& v, auto k) { c.reports_per_agent = as_int(v, k); }},
      {"counts.native_decisions_per_agent", [](RunConfig& c, const TomlValue& v, auto k) { c.native_decisions_per_agent = as_int(v, k); }},
      {"counts.aggregation", [](RunConfig& c, const TomlValue& v, auto k) {
         const auto text = as_string(v, k);
         if (text == "mean") {
           c.aggregation = ReportAggregation::mean;
         } else if (text == "median") {
           c.aggregation = ReportAggregation::median;
         } else {
           raise(ErrorKind::config, "counts.aggregation must be mean or median");
         }
       }},
      {"bootstrap.draws", [](RunConfig& c, const TomlValue& v, auto k) {
         const auto draws = as_integer(v, k);
         if (draws < 20) raise(ErrorKind::config, "bootstrap.draws must be at least 20");
         c.bootstrap.draws = static_cast<std::size_t>(draws);
       }},
      {"bootstrap.mass", [](RunConfig& c, const TomlValue& v, auto k) { c.bootstrap.mass = as_real(v, k); }},
      {"subject.choice_sharpness", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.choice_sharpness = as_real(v, k); }},
      {"subject.report_noise_sd", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.report_noise_sd = as_real(v, k); }},
      {"subject.report_shrinkage", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.report_shrinkage = as_real(v, k); }},
      {"subject.invalid_report_rate", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.invalid_report_rate = as_real(v, k); }},
      {"subject.trained_report_noise_sd", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.trained_report_noise_sd = as_real(v, k); }},
      {"subject.trained_report_shrinkage", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.trained_report_shrinkage = as_real(v, k); }},
      {"subject.trained_invalid_report_rate", [](RunConfig& c, const TomlValue& v, auto k) { c.subject.trained_invalid_report_rate = as_real(v, k); }},
  };
  return table;
}

}  // namespace

TomlTable parse_toml(std::string_view text, std::string_view source) {
  TomlTable table;
  std::string section;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    ++line_number;
    const std::string_view line = trim(strip_comment(text.substr(start, end - start)));
    start = end + 1;
    const std::string where = std::string(source) + ":" + std::to_string(line_number);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.starts_with("[[")) raise(ErrorKind::config, where + ": malformed table header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!bare_key(section)) raise(ErrorKind::config, where + ": unsupported table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) raise(ErrorKind::config, where + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    if (!bare_key(key)) raise(ErrorKind::config, where + ": unsupported key");
    const auto value = parse_scalar(trim(line.substr(eq + 1)));
    if (!value) raise(ErrorKind::config, where + ": unsupported value");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (!table.emplace(full, *value).second) raise(ErrorKind::config, where + ": duplicate key " + full);
  }
  return table;
}

void RunConfig::validate() const {
  backend.validate();
  if (preference_examples_per_agent < 1 || decisions_per_agent < 1 || reports_per_agent < 1 ||
      native_decisions_per_agent < 1) {
    raise(ErrorKind::config, "all per-agent counts must be at least 1");
  }
  if (!(bootstrap.mass > 0.0 && bootstrap.mass < 1.0)) raise(ErrorKind::config, "bootstrap.mass must lie in (0, 1)");
}

Json RunConfig::to_json() const {
  auto real = [](double v) -> Json { return std::isinf(v) ? Json("inf") : Json(v); };
  return Json{{"seed", seed},
              {"backend", backend.describe()},
              {"contexts", Json{{"original", original_contexts}, {"transfer", transfer_contexts}, {"limit", context_limit}}},
              {"counts", Json{{"preference_examples_per_agent", preference_examples_per_agent},
                              {"decisions_per_agent", decisions_per_agent},
                              {"reports_per_agent", reports_per_agent},
                              {"native_decisions_per_agent", native_decisions_per_agent},
                              {"aggregation", aggregation == ReportAggregation::mean ? "mean" : "median"}}},
              {"bootstrap", Json{{"draws", bootstrap.draws}, {"mass", bootstrap.mass}}},
              {"subject", Json{{"choice_sharpness", real(subject.choice_sharpness)},
                               {"report_noise_sd", subject.report_noise_sd},
                               {"report_shrinkage", subject.report_shrinkage},
                               {"invalid_report_rate", subject.invalid_report_rate},
                               {"trained_report_noise_sd", subject.trained_report_noise_sd},
                               {"trained_report_shrinkage", subject.trained_report_shrinkage},
                               {"trained_invalid_report_rate", subject.trained_invalid_report_rate}}}};
}

RunConfig run_config_from_toml(const TomlTable& table) {
  RunConfig config;
  for (const auto& [key, value] : table) {
    auto it = setters().find(key);
    if (it == setters().end()) raise(ErrorKind::config, "unknown config key " + key);
    it->second(config, value, key);
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_toml(parse_toml(read_file(path), path.string()));
}

void apply_override(RunConfig& config, std::string_view key, std::string_view value) {
  auto it = setters().find(key);
  if (it == setters().end()) raise(ErrorKind::usage, "unknown setting " + std::string(key));
  auto parsed = parse_scalar(trim(value));
  // Bare words are accepted as strings on the command line.
  if (!parsed) parsed = std::string(trim(value));
  try {
    it->second(config, *parsed, key);
  } catch (const Error&) {
    // A string setting whose value happens to look numeric.
    if (std::holds_alternative<std::string>(*parsed)) throw;
    it->second(config, std::string(trim(value)), key);
  }
}

std::string to_toml(const RunConfig& config) {
  auto real = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buffer[32];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    std::string text(buffer, ptr);
    if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
    return text;
  };
  auto quoted = [](std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
      if (c == '"' || c == '\\') out += '\\';
      if (c == '\n') {
        out += "\\n";
      } else if (c == '\t') {
        out += "\\t";
      } else {
        out += c;
      }
    }
    return out + "\"";
  };
  const BackendSpec& b = config.backend;
  const SubjectParameters& s = config.subject;
  std::string out;
  out += "[seed]\nvalue = " + std::to_string(config.seed) + "\n\n";
  out += "[backend]\n";
  out += "kind = " + quoted(to_string(b.kind)) + "\n";
  out += "model_id = " + quoted(b.model_id) + "\n";
  out += "endpoint_url = " + quoted(b.endpoint_url) + "\n";
  out += "credential_env_var = " + quoted(b.credential_env_var) + "\n";
  out += "subject_config_path = " + quoted(b.subject_config_path) + "\n";
  out += "request_timeout = " + real(b.request_timeout) + "\n";
  out += "max_retries = " + std::to_string(b.max_retries) + "\n";
  out += "max_in_flight = " + std::to_string(b.max_in_flight) + "\n";
  out += "initial_backoff = " + real(b.initial_backoff) + "\n";
  out += "max_backoff = " + real(b.max_backoff) + "\n";
  out += "finetune_poll_interval = " + real(config.finetune_poll_interval) + "\n";
  out += "finetune_max_wait = " + real(config.finetune_max_wait) + "\n\n";
  out += "[contexts]\n";
  out += "original = " + quoted(config.original_contexts) + "\n";
  out += "transfer = " + quoted(config.transfer_contexts) + "\n";
  out += "limit = " + std::to_string(config.context_limit) + "\n\n";
  out += "[counts]\n";
  out += "preference_examples_per_agent = " + std::to_string(config.preference_examples_per_agent) + "\n";
  out += "decisions_per_agent = " + std::to_string(config.decisions_per_agent) + "\n";
  out += "reports_per_agent = " + std::to_string(config.reports_per_agent) + "\n";
  out += "native_decisions_per_agent = " + std::to_string(config.native_decisions_per_agent) + "\n";
  out += std::string("aggregation = ") + (config.aggregation == ReportAggregation::mean ? "\"mean\"" : "\"median\"") + "\n\n";
  out += "[bootstrap]\n";
  out += "draws = " + std::to_string(config.bootstrap.draws) + "\n";
  out += "mass = " + real(config.bootstrap.mass) + "\n\n";
  out += "[subject]\n";
  out += "choice_sharpness = " + real(s.choice_sharpness) + "\n";
  out += "report_noise_sd = " + real(s.report_noise_sd) + "\n";
  out += "report_shrinkage = " + real(s.report_shrinkage) + "\n";
  out += "invalid_report_rate = " + real(s.invalid_report_rate) + "\n";
  out += "trained_report_noise_sd = " + real(s.trained_report_noise_sd) + "\n";
  out += "trained_report_shrinkage = " + real(s.trained_report_shrinkage) + "\n";
  out += "trained_invalid_report_rate = " + real(s.trained_invalid_report_rate) + "\n";
  return out;
}

}  // namespace selfreport
