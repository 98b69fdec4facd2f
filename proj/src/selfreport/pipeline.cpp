#include "selfreport/pipeline.hpp"

#include <random>

#include "selfreport/error.hpp"
#include "selfreport/remote_backend.hpp"

namespace selfreport {
namespace {

constexpr std::string_view kConfigFile = "config.toml";
constexpr std::string_view kOriginal = "contexts/original.json";
constexpr std::string_view kTransfer = "contexts/transfer.json";
constexpr std::string_view kTargets = "weights/targets.json";
constexpr std::string_view kNativeLatent = "weights/native_latent.json";
constexpr std::string_view kBaseSubject = "subjects/base.json";
constexpr std::string_view kTrainedSubject = "subjects/trained.json";
constexpr std::string_view kPreference = "datasets/preference.jsonl";
constexpr std::string_view kFold1 = "datasets/introspection-fold1.jsonl";
constexpr std::string_view kFold2 = "datasets/introspection-fold2.jsonl";
constexpr std::string_view kIntrospectionAll = "datasets/introspection-all.jsonl";
constexpr std::string_view kVerifyChoices = "choices/verify.jsonl";
constexpr std::string_view kVerifyEstimates = "estimates/verify.json";
constexpr std::string_view kBaseReports = "reports/base.jsonl";
constexpr std::string_view kReportedBase = "weights/reported-base.json";
constexpr std::string_view kCrossfoldReports1 = "reports/crossfold-fold1.jsonl";
constexpr std::string_view kCrossfoldReports2 = "reports/crossfold-fold2.jsonl";
constexpr std::string_view kReportedCrossfold = "weights/reported-crossfold.json";
constexpr std::string_view kNativeChoices = "choices/native.jsonl";
constexpr std::string_view kNativeEstimates = "estimates/native.json";
constexpr std::string_view kNativeBeforeReports = "reports/native-before.jsonl";
constexpr std::string_view kNativeAfterReports = "reports/native-after.jsonl";
constexpr std::string_view kReportedNativeBefore = "weights/reported-native-before.json";
constexpr std::string_view kReportedNativeAfter = "weights/reported-native-after.json";
constexpr std::string_view kReport = "analysis/report.json";
constexpr std::string_view kDraws = "analysis/draws.json";
constexpr std::string_view kSummary = "analysis/summary.md";

std::string pretty(const Json& document) { return document.dump(2) + "\n"; }

// Validates before the run directory is touched.
std::filesystem::path checked_root(const RunConfig& config, std::filesystem::path run_dir) {
  config.validate();
  return run_dir;
}

std::string new_run_id() {
  std::string stamp = utc_timestamp();
  std::erase_if(stamp, [](char c) { return c == '-' || c == ':'; });
  std::random_device device;
  char suffix[9];
  std::snprintf(suffix, sizeof(suffix), "%08x", device());
  return "run-" + stamp + "-" + suffix;
}

std::string choices_jsonl(const DecisionBatch& batch, const ContextSet& contexts) {
  std::string out;
  for (const auto& record : batch.records) out += choice_to_jsonl(record, contexts.at(record.context_id)) + "\n";
  return out;
}

std::string reports_jsonl(const ReportBatch& batch, const ContextSet& contexts) {
  std::string out;
  for (const auto& report : batch.reports) {
    out += report_to_jsonl(report, contexts.at(report.record.context_id)) + "\n";
  }
  return out;
}

Json estimate_to_json(const CorrelationEstimate& estimate, std::size_t rows, double mass) {
  return Json{{"point_r", estimate.point_r}, {"hdi_low", estimate.hdi_low}, {"hdi_high", estimate.hdi_high},
              {"mass", mass},               {"draws", estimate.draws},    {"redraws", estimate.redraws},
              {"rows", rows}};
}

std::string aggregation_name(ReportAggregation aggregation) {
  return aggregation == ReportAggregation::median ? "median" : "mean";
}

AggregatedReports aggregated_from_json(const Json& document, const ContextSet& contexts) {
  AggregatedReports out;
  out.reported = reported_from_json(document, contexts);
  const Json counts = document.value("valid_counts", Json::object());
  for (const auto& [id, count] : counts.items()) {
    out.valid_counts.emplace(id, count.get<std::size_t>());
  }
  for (const auto& id : document.value("excluded", Json::array())) out.excluded.push_back(id.get<std::string>());
  return out;
}

Json jobs_json(const RemoteBackendFactory& factory) {
  Json jobs = Json::array();
  for (const auto& job : factory.jobs()) jobs.push_back(job.to_json());
  return jobs;
}

// Tallies over one JSON-Lines file of choices or reports.
Json tally_file(std::string_view text) {
  std::size_t emitted = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::size_t failed = 0;
  std::size_t clamped = 0;
  std::map<std::string, std::size_t> reasons;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const Json record = Json::parse(line);
    ++emitted;
    if (record.value("transport_status", "ok") == "failed") {
      ++failed;
      continue;
    }
    const bool ok = record.contains("valid") ? record.at("valid").get<bool>() : !record.at("selection").is_null();
    ++(ok ? valid : invalid);
    if (record.value("clamped", false)) ++clamped;
    if (auto it = record.find("invalid_reason"); it != record.end() && it->is_string()) {
      ++reasons[it->get<std::string>()];
    }
  }
  Json out{{"emitted", emitted}, {"valid", valid}, {"invalid", invalid}, {"transport_failed", failed}};
  if (!reasons.empty() || text.find("\"invalid_reason\"") != std::string_view::npos) {
    Json by_reason = Json::object();
    for (const auto& [reason, count] : reasons) by_reason[reason] = count;
    out["invalid_reasons"] = std::move(by_reason);
    out["clamped"] = clamped;
  }
  return out;
}

std::string fixed3(double value) { return format_fixed(value, 3); }

}  // namespace

std::optional<RunConfig> stored_run_config(const std::filesystem::path& run_dir) {
  const auto path = run_dir / kConfigFile;
  if (!std::filesystem::exists(path)) return std::nullopt;
  return load_run_config(path);
}

Pipeline::Pipeline(std::filesystem::path run_dir, RunConfig config, std::string command)
    : run_(checked_root(config, std::move(run_dir))), config_(std::move(config)), command_(std::move(command)) {
  Json header{{"run_id", new_run_id()},
              {"created_at", utc_timestamp()},
              {"tool_version", SELFREPORT_VERSION},
              {"seed", config_.seed},
              {"backend", config_.backend.describe()},
              {"context_sets", Json{{"original", config_.original_contexts},
                                    {"transfer", config_.transfer_contexts},
                                    {"limit", config_.context_limit}}}};
  run_.initialize(header);
  run_.verify();
}

StageOutcome Pipeline::run_stage(const std::string& name, const std::string& kind, const Json& params,
                                 const std::vector<std::string>& inputs,
                                 const std::function<std::pair<StageOutputs, Json>()>& body) {
  std::map<std::string, std::string> digests;
  for (const auto& path : inputs) {
    if (!run_.exists(path)) raise(ErrorKind::config, "stage " + name + " needs " + path + ", which is missing");
    digests[path] = run_.digest(path);
  }
  const std::string digest = RunDirectory::input_digest(name, params, digests);
  if (auto done = run_.completed_stage(name, digest)) return StageOutcome{*done, true};

  auto [outputs, counts] = body();
  StageRecord record;
  record.name = name;
  record.kind = kind;
  record.input_digest = digest;
  record.params = params;
  record.inputs = std::move(digests);
  record.counts = std::move(counts);
  record.command = command_;
  return StageOutcome{run_.persist_stage(std::move(record), outputs), false};
}

StageOutcome Pipeline::configure() {
  const std::string text = to_toml(config_);
  return run_stage("configure", "configure", Json{{"config_sha256", sha256_hex(text)}}, {}, [&] {
    return std::pair{StageOutputs{{std::string(kConfigFile), text}}, Json::object()};
  });
}

StageOutcome Pipeline::contexts() {
  configure();
  ContextSet original = load_context_set(config_.original_contexts);
  ContextSet transfer = load_context_set(config_.transfer_contexts);
  if (config_.context_limit > 0) {
    original = original.prefix(config_.context_limit);
    transfer = transfer.prefix(config_.context_limit);
  }
  const std::string original_text = pretty(to_json(original));
  const std::string transfer_text = pretty(to_json(transfer));
  const Json params{{"original", config_.original_contexts},
                    {"transfer", config_.transfer_contexts},
                    {"limit", config_.context_limit},
                    {"original_sha256", sha256_hex(original_text)},
                    {"transfer_sha256", sha256_hex(transfer_text)}};
  return run_stage("contexts", "contexts", params, {}, [&] {
    return std::pair{StageOutputs{{std::string(kOriginal), original_text}, {std::string(kTransfer), transfer_text}},
                     Json{{"original", original.size()}, {"transfer", transfer.size()}}};
  });
}

ContextSet Pipeline::original_set() {
  contexts();
  return context_set_from_json(config_.original_contexts, read_json_file(run_.resolve(kOriginal)));
}

ContextSet Pipeline::transfer_set() {
  contexts();
  return context_set_from_json(config_.transfer_contexts, read_json_file(run_.resolve(kTransfer)));
}

ContextSet Pipeline::union_set() {
  const ContextSet original = original_set();
  std::vector<DecisionContext> all(original.begin(), original.end());
  for (const auto& context : transfer_set()) {
    if (original.find(context.context_id) == nullptr) all.push_back(context);
  }
  return ContextSet("all", std::move(all));
}

StageOutcome Pipeline::gen_weights() {
  contexts();
  return run_stage("gen_weights", "gen_weights", Json{{"seed", config_.seed}},
                   {std::string(kOriginal), std::string(kTransfer)}, [&] {
                     const ContextSet original = original_set();
                     const ContextSet transfer = transfer_set();
                     WeightMap targets;
                     for (const auto& context : original) {
                       targets.emplace(context.context_id, sample_weights(config_.seed, context));
                     }
                     WeightMap native;
                     for (const auto& context : transfer) {
                       native.emplace(context.context_id, sample_weights(config_.seed, context, "native-weights"));
                     }
                     return std::pair{StageOutputs{{std::string(kTargets), pretty(weight_map_to_json(targets, original))},
                                                   {std::string(kNativeLatent), pretty(weight_map_to_json(native, transfer))}},
                                      Json{{"targets", targets.size()}, {"native_latent", native.size()}}};
                   });
}

StageOutcome Pipeline::synthetic_subject() {
  if (config_.backend.kind != BackendKind::synthetic) {
    raise(ErrorKind::config, "synthetic subjects are only used with the synthetic backend");
  }
  gen_weights();
  const auto& s = config_.subject;
  auto real = [](double v) { return std::isinf(v) ? Json("inf") : Json(v); };
  Json params{{"choice_sharpness", real(s.choice_sharpness)},
              {"report_noise_sd", s.report_noise_sd},
              {"report_shrinkage", s.report_shrinkage},
              {"invalid_report_rate", s.invalid_report_rate},
              {"trained_report_noise_sd", s.trained_report_noise_sd},
              {"trained_report_shrinkage", s.trained_report_shrinkage},
              {"trained_invalid_report_rate", s.trained_invalid_report_rate}};
  if (!config_.backend.subject_config_path.empty()) {
    params["subject_config_sha256"] = sha256_hex(read_file(config_.backend.subject_config_path));
  }
  return run_stage(
      "synthetic_subject", "synthetic_subject", params,
      {std::string(kOriginal), std::string(kTransfer), std::string(kTargets), std::string(kNativeLatent)}, [&] {
        const ContextSet all = union_set();
        SubjectConfig base;
        if (!config_.backend.subject_config_path.empty()) {
          base = load_subject_config(config_.backend.subject_config_path, all);
        } else {
          base.latent_weights = weight_map_from_json(read_json_file(run_.resolve(kTargets)), all, WeightRole::target);
          for (auto& [id, weights] :
               weight_map_from_json(read_json_file(run_.resolve(kNativeLatent)), all, WeightRole::target)) {
            base.latent_weights.emplace(id, weights);
          }
          base.choice_sharpness = s.choice_sharpness;
          base.report_noise_sd = s.report_noise_sd;
          base.report_shrinkage = s.report_shrinkage;
          base.invalid_report_rate = s.invalid_report_rate;
        }
        SubjectConfig trained = base;
        trained.report_noise_sd = s.trained_report_noise_sd;
        trained.report_shrinkage = s.trained_report_shrinkage;
        trained.invalid_report_rate = s.trained_invalid_report_rate;
        base.validate();
        trained.validate();
        return std::pair{StageOutputs{{std::string(kBaseSubject), pretty(subject_config_to_json(base, all))},
                                      {std::string(kTrainedSubject), pretty(subject_config_to_json(trained, all))}},
                         Json{{"latent_contexts", base.latent_weights.size()}}};
      });
}

std::vector<std::string> Pipeline::subject_inputs() const {
  if (config_.backend.kind != BackendKind::synthetic) return {};
  return {std::string(kBaseSubject), std::string(kTrainedSubject)};
}

std::unique_ptr<BackendFactory> Pipeline::factory() {
  if (config_.backend.kind == BackendKind::remote) {
    return std::make_unique<RemoteBackendFactory>(config_.backend, run_.resolve("datasets"),
                                                  config_.finetune_poll_interval, config_.finetune_max_wait);
  }
  synthetic_subject();
  const ContextSet all = union_set();
  SubjectConfig base = subject_config_from_json(read_json_file(run_.resolve(kBaseSubject)), all, run_.root());
  SubjectConfig trained = subject_config_from_json(read_json_file(run_.resolve(kTrainedSubject)), all, run_.root());
  return std::make_unique<SyntheticBackendFactory>(std::move(base), std::move(trained), all, config_.seed,
                                                   config_.backend.max_in_flight);
}

StageOutcome Pipeline::make_dataset(DatasetKind kind) {
  gen_weights();
  const std::vector<std::string> inputs{std::string(kOriginal), std::string(kTargets)};
  if (kind == DatasetKind::preference) {
    const Json params{{"seed", config_.seed}, {"per_agent", config_.preference_examples_per_agent}};
    return run_stage("make_dataset_preference", "make_dataset", params, inputs, [&] {
      const ContextSet original = original_set();
      const WeightMap targets = weight_map_from_json(read_json_file(run_.resolve(kTargets)), original, WeightRole::target);
      const auto records =
          emit_preference_dataset(original, targets, config_.preference_examples_per_agent, config_.seed);
      return std::pair{StageOutputs{{std::string(kPreference), dataset_to_string(records)}},
                       Json{{"records", records.size()}}};
    });
  }
  return run_stage("make_dataset_introspection", "make_dataset", Json{{"seed", config_.seed}}, inputs, [&] {
    const ContextSet original = original_set();
    const WeightMap targets = weight_map_from_json(read_json_file(run_.resolve(kTargets)), original, WeightRole::target);
    const auto folds = two_folds(original);
    const auto fold1 = emit_introspection_dataset(folds[0].train, targets, config_.seed);
    const auto fold2 = emit_introspection_dataset(folds[1].train, targets, config_.seed);
    std::vector<const DecisionContext*> everyone;
    for (const auto& context : original) everyone.push_back(&context);
    const auto all = emit_introspection_dataset(everyone, targets, config_.seed);
    return std::pair{StageOutputs{{std::string(kFold1), dataset_to_string(fold1)},
                                  {std::string(kFold2), dataset_to_string(fold2)},
                                  {std::string(kIntrospectionAll), dataset_to_string(all)}},
                     Json{{"fold1", fold1.size()}, {"fold2", fold2.size()}, {"all", all.size()}}};
  });
}

StageOutcome Pipeline::verify_preferences() {
  gen_weights();
  if (config_.backend.kind == BackendKind::synthetic) synthetic_subject();
  std::vector<std::string> inputs{std::string(kOriginal), std::string(kTargets)};
  for (auto& path : subject_inputs()) inputs.push_back(path);
  const Json params{{"seed", config_.seed},
                    {"decisions_per_agent", config_.decisions_per_agent},
                    {"backend", config_.backend.describe()}};
  return run_stage("verify_preferences", "verify_preferences", params, inputs, [&] {
    const ContextSet original = original_set();
    auto backend = factory()->base();
    const auto batch = collect_decisions(*backend, original, config_.decisions_per_agent, config_.seed,
                                         "verify-decisions", config_.backend.kind == BackendKind::remote
                                                                 ? config_.backend.model_id
                                                                 : "synthetic");
    const auto estimates = estimate_from_choices(batch.records, original);
    Json counts = batch.counts.to_json();
    counts["excluded_contexts"] = estimates.excluded.size();
    return std::pair{
        StageOutputs{{std::string(kVerifyChoices), choices_jsonl(batch, original)},
                     {std::string(kVerifyEstimates), pretty(estimates_to_json(estimates, original, FitOptions{}))}},
        counts};
  });
}

StageOutcome Pipeline::elicit_reports() {
  contexts();
  if (config_.backend.kind == BackendKind::synthetic) synthetic_subject();
  std::vector<std::string> inputs{std::string(kOriginal)};
  for (auto& path : subject_inputs()) inputs.push_back(path);
  const Json params{{"seed", config_.seed},
                    {"reports_per_agent", config_.reports_per_agent},
                    {"aggregation", aggregation_name(config_.aggregation)},
                    {"backend", config_.backend.describe()}};
  return run_stage("elicit_reports", "elicit_reports", params, inputs, [&] {
    const ContextSet original = original_set();
    auto backend = factory()->base();
    const auto result = run_elicit_reports(*backend, original, config_.reports_per_agent, config_.seed,
                                           config_.aggregation, "base");
    Json counts = result.batch.counts.to_json();
    counts["excluded_contexts"] = result.aggregated.excluded.size();
    return std::pair{StageOutputs{{std::string(kBaseReports), reports_jsonl(result.batch, original)},
                                  {std::string(kReportedBase),
                                   pretty(reported_to_json(result.aggregated, original, config_.aggregation))}},
                     counts};
  });
}

StageOutcome Pipeline::crossfold() {
  make_dataset(DatasetKind::introspection);
  verify_preferences();
  elicit_reports();
  std::vector<std::string> inputs{std::string(kOriginal),     std::string(kTargets), std::string(kVerifyEstimates),
                                  std::string(kReportedBase), std::string(kFold1),   std::string(kFold2)};
  for (auto& path : subject_inputs()) inputs.push_back(path);
  const Json params{{"seed", config_.seed},
                    {"reports_per_agent", config_.reports_per_agent},
                    {"aggregation", aggregation_name(config_.aggregation)},
                    {"backend", config_.backend.describe()}};
  return run_stage("crossfold_introspection", "crossfold_introspection", params, inputs, [&] {
    const ContextSet original = original_set();
    const WeightMap targets = weight_map_from_json(read_json_file(run_.resolve(kTargets)), original, WeightRole::target);
    const WeightMap learned = learned_from_estimates_json(read_json_file(run_.resolve(kVerifyEstimates)), original);
    const AggregatedReports before = aggregated_from_json(read_json_file(run_.resolve(kReportedBase)), original);
    auto f = factory();
    const auto result = run_crossfold_introspection(*f, original, targets, learned, config_.reports_per_agent,
                                                    config_.seed, config_.aggregation, config_.bootstrap, &before);
    StageOutputs outputs{{std::string(kCrossfoldReports1), reports_jsonl(result.after[0].batch, original)},
                         {std::string(kCrossfoldReports2), reports_jsonl(result.after[1].batch, original)},
                         {std::string(kReportedCrossfold),
                          pretty(reported_to_json(result.after_pooled, original, config_.aggregation))}};
    if (const auto* remote = dynamic_cast<const RemoteBackendFactory*>(f.get())) {
      outputs.emplace_back("finetune/crossfold-jobs.json", pretty(jobs_json(*remote)));
    }
    Json counts{{"fold1", result.after[0].batch.counts.to_json()},
                {"fold2", result.after[1].batch.counts.to_json()},
                {"train_records", Json::array({result.datasets[0].size(), result.datasets[1].size()})}};
    return std::pair{outputs, counts};
  });
}

StageOutcome Pipeline::transfer() {
  make_dataset(DatasetKind::introspection);
  std::vector<std::string> inputs{std::string(kOriginal), std::string(kTransfer), std::string(kIntrospectionAll)};
  for (auto& path : subject_inputs()) inputs.push_back(path);
  if (config_.backend.kind == BackendKind::synthetic) synthetic_subject();
  const Json params{{"seed", config_.seed},
                    {"native_decisions_per_agent", config_.native_decisions_per_agent},
                    {"reports_per_agent", config_.reports_per_agent},
                    {"aggregation", aggregation_name(config_.aggregation)},
                    {"backend", config_.backend.describe()}};
  return run_stage("native_generalization", "native_generalization", params, inputs, [&] {
    const ContextSet original = original_set();
    const ContextSet transfer = transfer_set();
    check_disjoint(transfer, original);
    auto f = factory();
    auto before = f->base();
    const auto dataset = read_dataset(run_.resolve(kIntrospectionAll));
    auto after = f->trained("all", dataset);
    const auto result =
        run_native_generalization(*before, *after, transfer, original, config_.native_decisions_per_agent,
                                  config_.reports_per_agent, config_.seed, config_.aggregation, config_.bootstrap);
    StageOutputs outputs{
        {std::string(kNativeChoices), choices_jsonl(result.decisions, transfer)},
        {std::string(kNativeEstimates), pretty(estimates_to_json(result.native, transfer, FitOptions{}))},
        {std::string(kNativeBeforeReports), reports_jsonl(result.before.batch, transfer)},
        {std::string(kNativeAfterReports), reports_jsonl(result.after.batch, transfer)},
        {std::string(kReportedNativeBefore), pretty(reported_to_json(result.before.aggregated, transfer, config_.aggregation))},
        {std::string(kReportedNativeAfter), pretty(reported_to_json(result.after.aggregated, transfer, config_.aggregation))}};
    if (const auto* remote = dynamic_cast<const RemoteBackendFactory*>(f.get())) {
      outputs.emplace_back("finetune/transfer-jobs.json", pretty(jobs_json(*remote)));
    }
    Json counts{{"decisions", result.decisions.counts.to_json()},
                {"reports_before", result.before.batch.counts.to_json()},
                {"reports_after", result.after.batch.counts.to_json()}};
    return std::pair{outputs, counts};
  });
}

StageOutcome Pipeline::estimate(const std::string& choices_path) {
  const std::filesystem::path stem = std::filesystem::path(choices_path).stem();
  const std::string output = "estimates/" + stem.string() + ".json";
  const bool have_contexts = run_.exists(kOriginal) && run_.exists(kTransfer);
  std::vector<std::string> inputs{choices_path};
  if (have_contexts) {
    inputs.emplace_back(kOriginal);
    inputs.emplace_back(kTransfer);
  }
  const Json params{{"prior_sd", FitOptions{}.prior_sd}};
  return run_stage("estimate:" + stem.string(), "estimate", params, inputs, [&] {
    ContextSet all;
    if (have_contexts) {
      all = union_set();
    } else {
      std::vector<DecisionContext> merged;
      for (const auto& name : shipped_context_sets()) {
        for (const auto& context : load_context_set(name)) merged.push_back(context);
      }
      all = ContextSet("shipped", std::move(merged));
    }
    const auto records = parse_choices(run_.read(choices_path), all, choices_path);
    const auto estimates = estimate_from_choices(records, all);
    Json counts{{"records", records.size()}, {"contexts", estimates.learned.size()},
                {"excluded_contexts", estimates.excluded.size()}};
    return std::pair{StageOutputs{{output, pretty(estimates_to_json(estimates, all, FitOptions{}))}}, counts};
  });
}

StageOutcome Pipeline::analyze() {
  contexts();
  std::vector<std::string> inputs{std::string(kOriginal), std::string(kTransfer)};
  for (auto path : {kTargets, kVerifyEstimates, kVerifyChoices, kReportedBase, kBaseReports, kReportedCrossfold,
                    kCrossfoldReports1, kCrossfoldReports2, kNativeEstimates, kNativeChoices, kReportedNativeBefore,
                    kReportedNativeAfter, kNativeBeforeReports, kNativeAfterReports}) {
    if (run_.exists(path)) inputs.emplace_back(path);
  }
  auto have = [&](std::string_view path) {
    return std::find(inputs.begin(), inputs.end(), path) != inputs.end();
  };
  if (!have(kVerifyEstimates) && !have(kReportedBase) && !have(kNativeEstimates)) {
    raise(ErrorKind::config, "nothing to analyze in " + run_.root().string() + "; run elicit, crossfold, or transfer first");
  }
  const Json params{{"seed", config_.seed}, {"draws", config_.bootstrap.draws}, {"mass", config_.bootstrap.mass}};
  return run_stage("analyze", "analyze", params, inputs, [&] {
    const ContextSet original = original_set();
    const ContextSet transfer = transfer_set();
    const double mass = config_.bootstrap.mass;
    Json report{{"seed", config_.seed},
                {"bootstrap", Json{{"method", "bayesian"}, {"draws", config_.bootstrap.draws}, {"mass", mass}}},
                {"estimates", Json::object()},
                {"contrasts", Json::object()},
                {"tallies", Json::object()},
                {"excluded", Json::object()}};
    Json draws = Json::object();
    struct Line {
      std::string section;
      std::string condition;
      CorrelationEstimate estimate;
      std::size_t rows;
    };
    std::vector<Line> lines;

    auto correlate = [&](const std::string& name, const std::string& section, const std::string& condition,
                         const PairedWeightSample& sample) {
      if (sample.rows.size() < 3) return;
      auto estimate = bootstrap_correlation(sample, analysis_seed(config_.seed, name), config_.bootstrap);
      report["estimates"][name] = estimate_to_json(estimate, sample.rows.size(), mass);
      draws[name] = estimate.draw_values;
      lines.push_back(Line{section, condition, std::move(estimate), sample.rows.size()});
    };
    auto contrast = [&](const std::string& name, const std::string& section, const PairedWeightSample& a,
                        const PairedWeightSample& b) {
      const auto [ca, cb] = common_rows(a, b);
      if (ca.rows.size() < 3) return;
      auto estimate = correlation_contrast(ca, cb, analysis_seed(config_.seed, name), config_.bootstrap);
      report["contrasts"][name] = estimate_to_json(estimate, ca.rows.size(), mass);
      draws[name] = estimate.draw_values;
      lines.push_back(Line{section, "improvement (after - before)", std::move(estimate), ca.rows.size()});
    };
    auto load_reported = [&](std::string_view path, const ContextSet& set, const std::string& label) {
      const Json document = read_json_file(run_.resolve(path));
      report["excluded"][label] = document.value("excluded", Json::array());
      return reported_from_json(document, set);
    };

    std::optional<WeightMap> targets;
    std::optional<WeightMap> learned;
    if (have(kTargets)) targets = weight_map_from_json(read_json_file(run_.resolve(kTargets)), original, WeightRole::target);
    if (have(kVerifyEstimates)) {
      const Json document = read_json_file(run_.resolve(kVerifyEstimates));
      learned = learned_from_estimates_json(document, original);
      report["excluded"]["verify_estimates"] = document.value("excluded", Json::array());
    }
    if (targets && learned) {
      correlate("target-vs-learned", "Instilled preferences", "target vs learned",
                paired_sample(*targets, *learned, original, "subject", false));
    }
    std::optional<PairedWeightSample> before;
    if (have(kReportedBase)) {
      const WeightMap reported = load_reported(kReportedBase, original, "reported_base");
      if (learned) {
        before = paired_sample(*learned, reported, original, "subject", false);
        correlate("reported-vs-learned", "Self-report accuracy", "reported vs learned", *before);
      }
      if (targets) {
        correlate("reported-vs-target", "Self-report accuracy", "reported vs target",
                  paired_sample(*targets, reported, original, "subject", false));
      }
    }
    if (have(kReportedCrossfold) && learned && before) {
      const WeightMap reported = load_reported(kReportedCrossfold, original, "reported_crossfold");
      const auto after = paired_sample(*learned, reported, original, "subject", true);
      correlate("crossfold-before", "Introspection training (held-out folds)", "before training", *before);
      correlate("crossfold-after", "Introspection training (held-out folds)", "after training", after);
      contrast("crossfold-improvement", "Introspection training (held-out folds)", *before, after);
    }
    if (have(kNativeEstimates) && have(kReportedNativeBefore) && have(kReportedNativeAfter)) {
      const Json document = read_json_file(run_.resolve(kNativeEstimates));
      const WeightMap native = learned_from_estimates_json(document, transfer);
      report["excluded"]["native_estimates"] = document.value("excluded", Json::array());
      const auto a = paired_sample(native, load_reported(kReportedNativeBefore, transfer, "reported_native_before"),
                                   transfer, "subject", false);
      const auto b = paired_sample(native, load_reported(kReportedNativeAfter, transfer, "reported_native_after"),
                                   transfer, "subject", true);
      correlate("native-before", "Native preferences (new agents)", "before training", a);
      correlate("native-after", "Native preferences (new agents)", "after training", b);
      contrast("native-improvement", "Native preferences (new agents)", a, b);
    }
    for (auto path : {kVerifyChoices, kBaseReports, kCrossfoldReports1, kCrossfoldReports2, kNativeChoices,
                      kNativeBeforeReports, kNativeAfterReports}) {
      if (have(path)) report["tallies"][std::string(path)] = tally_file(run_.read(path));
    }

    std::string md = "# Self-report analysis\n\n";
    md += "Seed " + std::to_string(config_.seed) + "; Bayesian bootstrap with " +
          std::to_string(config_.bootstrap.draws) + " draws; intervals are " + format_fixed(mass * 100.0, 0) +
          "% highest-density intervals.\n\n";
    std::string current;
    for (const auto& line : lines) {
      if (line.section != current) {
        current = line.section;
        md += "## " + current + "\n\n| Condition | r | HDI low | HDI high | Rows |\n|---|---:|---:|---:|---:|\n";
      }
      md += "| " + line.condition + " | " + fixed3(line.estimate.point_r) + " | " + fixed3(line.estimate.hdi_low) +
            " | " + fixed3(line.estimate.hdi_high) + " | " + std::to_string(line.rows) + " |\n";
      if (&line == &lines.back() || (&line + 1)->section != current) md += "\n";
    }
    md += "## Tallies\n\n| File | Emitted | Valid | Invalid | Transport failed |\n|---|---:|---:|---:|---:|\n";
    for (const auto& [file, tally] : report["tallies"].items()) {
      md += "| " + file + " | " + std::to_string(tally.at("emitted").get<std::size_t>()) + " | " +
            std::to_string(tally.at("valid").get<std::size_t>()) + " | " +
            std::to_string(tally.at("invalid").get<std::size_t>()) + " | " +
            std::to_string(tally.at("transport_failed").get<std::size_t>()) + " |\n";
    }
    std::string excluded;
    for (const auto& [label, ids] : report["excluded"].items()) {
      for (const auto& id : ids) excluded += "- " + id.get<std::string>() + " (" + label + ")\n";
    }
    md += "\n## Excluded contexts\n\n" + (excluded.empty() ? std::string("None.\n") : excluded);

    Json counts{{"estimates", report["estimates"].size()}, {"contrasts", report["contrasts"].size()}};
    return std::pair{StageOutputs{{std::string(kReport), pretty(report)},
                                  {std::string(kDraws), draws.dump() + "\n"},
                                  {std::string(kSummary), md}},
                     counts};
  });
}

StageOutcome Pipeline::simulate() {
  configure();
  contexts();
  gen_weights();
  if (config_.backend.kind == BackendKind::synthetic) synthetic_subject();
  make_dataset(DatasetKind::preference);
  make_dataset(DatasetKind::introspection);
  verify_preferences();
  elicit_reports();
  crossfold();
  transfer();
  return analyze();
}

}  // namespace selfreport
