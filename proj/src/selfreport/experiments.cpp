#include "selfreport/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "selfreport/error.hpp"
#include "selfreport/prompts.hpp"
#include "selfreport/remote_backend.hpp"
#include "selfreport/rng.hpp"
#include "selfreport/run_directory.hpp"

namespace selfreport {
namespace {

constexpr std::string_view kIntrospectionTrial = "introspection-trial";

void require_positive(int count, std::string_view what) {
  if (count < 1) raise(ErrorKind::domain, std::string(what) + " must be at least 1, got " + std::to_string(count));
}

void check_transport(const StageCounts& counts, std::string_view stage) {
  if (counts.emitted == 0) return;
  const double rate = static_cast<double>(counts.transport_failed) / static_cast<double>(counts.emitted);
  if (rate > kMaxTransportFailureRate) {
    raise(ErrorKind::transport, std::string(stage) + ": " + std::to_string(counts.transport_failed) + " of " +
                                    std::to_string(counts.emitted) + " calls failed in transport");
  }
}

ContextSet subset(const std::string& name, std::span<const DecisionContext* const> members) {
  std::vector<DecisionContext> out;
  out.reserve(members.size());
  for (const auto* context : members) out.push_back(*context);
  return ContextSet(name, std::move(out));
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

TransportStatus transport_status_from_string(std::string_view text) {
  if (text == "ok") return TransportStatus::ok;
  if (text == "retried_ok") return TransportStatus::retried_ok;
  if (text == "failed") return TransportStatus::failed;
  raise(ErrorKind::domain, "unknown transport_status " + std::string(text));
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void StageCounts::add(const CompletionResult& result) {
  ++emitted;
  attempts += static_cast<std::size_t>(std::max(1, result.attempt_count));
  if (result.attempt_count > 1) ++retried;
  if (!result.delivered()) ++transport_failed;
}

Json StageCounts::to_json() const {
  return Json{{"emitted", emitted},   {"valid", valid},     {"invalid", invalid},
              {"transport_failed", transport_failed}, {"retried", retried}, {"attempts", attempts}};
}

std::optional<Selection> parse_selection(std::string_view response) {
  const auto text = trim(response);
  if (text == "A") return Selection::A;
  if (text == "B") return Selection::B;
  return std::nullopt;
}

std::string choice_to_jsonl(const ChoiceRecord& record, const DecisionContext& context) {
  Json line{{"context_id", record.context_id},
            {"pair_id", record.pair_id},
            {"model", record.model},
            {"option_a", option_to_json(record.option_a, context)},
            {"option_b", option_to_json(record.option_b, context)},
            {"response", record.response},
            {"selection", record.selection ? Json(to_string(*record.selection)) : Json(nullptr)},
            {"transport_status", to_string(record.transport_status)},
            {"attempts", record.attempts}};
  if (!record.diagnostic.empty()) line["diagnostic"] = record.diagnostic;
  return line.dump();
}

ChoiceRecord choice_from_json(const Json& document, const ContextSet& contexts) {
  if (!document.is_object()) raise(ErrorKind::domain, "choice record must be a JSON object");
  ChoiceRecord record;
  try {
    record.context_id = document.at("context_id").get<std::string>();
    const DecisionContext& context = contexts.at(record.context_id);
    record.pair_id = document.at("pair_id").get<std::uint64_t>();
    record.model = document.value("model", "");
    record.option_a = option_from_json(document.at("option_a"), context);
    record.option_b = option_from_json(document.at("option_b"), context);
    record.response = document.value("response", "");
    const Json& selection = document.at("selection");
    if (!selection.is_null()) {
      const auto text = selection.get<std::string>();
      if (text != "A" && text != "B") raise(ErrorKind::domain, "selection must be A, B, or null");
      record.selection = text == "A" ? Selection::A : Selection::B;
    }
    record.transport_status = transport_status_from_string(document.value("transport_status", "ok"));
    record.attempts = document.value("attempts", 1);
    record.diagnostic = document.value("diagnostic", "");
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::domain, std::string("malformed choice record: ") + e.what());
  }
  return record;
}

std::vector<ChoiceRecord> parse_choices(std::string_view jsonl, const ContextSet& contexts, std::string_view source) {
  std::vector<ChoiceRecord> out;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (trim(line).empty()) continue;
    try {
      const Json document = Json::parse(line);
      out.push_back(choice_from_json(document, contexts));
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::domain, std::string(source) + ":" + std::to_string(line_number) + ": " + e.what());
    } catch (const Error& e) {
      raise(e.kind(), std::string(source) + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return out;
}

std::string report_to_jsonl(const ElicitedReport& report, const DecisionContext& context) {
  const ReportRecord& record = report.record;
  Json line{{"context_id", record.context_id},
            {"trial_index", record.trial_index},
            {"pair_id", report.pair_id},
            {"model", report.model},
            {"response", record.raw_text},
            {"valid", record.valid()},
            {"invalid_reason", record.invalid_reason ? Json(to_string(*record.invalid_reason)) : Json(nullptr)},
            {"clamped", record.clamped},
            {"weights", record.parsed ? weights_to_json(*record.parsed, context) : Json(nullptr)},
            {"transport_status", to_string(report.transport_status)},
            {"attempts", report.attempts}};
  if (!report.diagnostic.empty()) line["diagnostic"] = report.diagnostic;
  return line.dump();
}

DecisionBatch collect_decisions(Backend& backend, const ContextSet& contexts, int per_agent, std::uint64_t seed,
                                std::string_view purpose, const std::string& model) {
  require_positive(per_agent, "decisions_per_agent");
  std::vector<ChoicePair> pairs;
  std::vector<PromptBundle> prompts;
  pairs.reserve(contexts.size() * static_cast<std::size_t>(per_agent));
  prompts.reserve(pairs.capacity());
  for (const auto& context : contexts) {
    for (int i = 0; i < per_agent; ++i) {
      pairs.push_back(sample_pair(seed, purpose, context, static_cast<std::uint64_t>(i)));
      prompts.push_back(render_decision_prompt(context, pairs.back()));
    }
  }
  const auto results = complete_batch(backend, prompts);

  DecisionBatch batch;
  batch.records.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    ChoiceRecord record;
    record.context_id = pairs[k].context_id;
    record.pair_id = pairs[k].pair_id;
    record.model = model;
    record.option_a = pairs[k].option_a;
    record.option_b = pairs[k].option_b;
    record.transport_status = results[k].transport_status;
    record.attempts = results[k].attempt_count;
    record.diagnostic = results[k].diagnostic;
    batch.counts.add(results[k]);
    if (results[k].delivered()) {
      record.response = results[k].text;
      record.selection = parse_selection(record.response);
      ++(record.selection ? batch.counts.valid : batch.counts.invalid);
    }
    batch.records.push_back(std::move(record));
  }
  check_transport(batch.counts, "decision elicitation");
  return batch;
}

LearnedEstimates estimate_from_choices(std::span<const ChoiceRecord> records, const ContextSet& contexts,
                                       const FitOptions& options) {
  std::map<std::string, std::vector<DiffRow>, std::less<>> rows;
  for (const auto& record : records) {
    const DecisionContext& context = contexts.at(record.context_id);
    if (!record.selection) continue;
    ChoicePair pair{record.context_id, record.option_a, record.option_b, record.pair_id};
    rows[record.context_id].push_back(DiffRow{compute_diffs(pair, context), *record.selection == Selection::A});
  }
  std::set<std::string, std::less<>> seen;
  for (const auto& record : records) seen.insert(record.context_id);

  LearnedEstimates out;
  for (const auto& context : contexts) {
    if (!seen.contains(context.context_id)) continue;
    auto it = rows.find(context.context_id);
    if (it == rows.end()) {
      out.excluded.push_back(context.context_id);
      continue;
    }
    WeightFit fit = fit_logistic(it->second, options);
    WeightVector learned = fit.slopes();
    learned.role = WeightRole::learned;
    out.learned.emplace(context.context_id, learned);
    out.valid_choices.emplace(context.context_id, it->second.size());
    out.fits.emplace(context.context_id, std::move(fit));
  }
  return out;
}

Json estimates_to_json(const LearnedEstimates& estimates, const ContextSet& contexts, const FitOptions& options) {
  Json per_context = Json::object();
  for (const auto& context : contexts) {
    auto it = estimates.fits.find(context.context_id);
    if (it == estimates.fits.end()) continue;
    const WeightFit& fit = it->second;
    Json entry = Json::object();
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      entry[context.attributes[i].name] = fit.slope(i);
      entry[context.attributes[i].name + "_se"] = fit.slope_se(i);
    }
    entry["intercept"] = fit.intercept();
    entry["intercept_se"] = fit.standard_errors[0];
    entry["converged"] = fit.converged;
    entry["iterations"] = fit.iterations;
    entry["valid_choices"] = estimates.valid_choices.at(context.context_id);
    per_context[context.context_id] = std::move(entry);
  }
  return Json{{"method", "logistic-map"},
              {"prior_sd", options.prior_sd},
              {"contexts", std::move(per_context)},
              {"excluded", estimates.excluded}};
}

WeightMap learned_from_estimates_json(const Json& document, const ContextSet& contexts) {
  WeightMap out;
  try {
    for (const auto& [id, entry] : document.at("contexts").items()) {
      const DecisionContext& context = contexts.at(id);
      WeightVector weights;
      weights.role = WeightRole::learned;
      for (std::size_t i = 0; i < kAttributeCount; ++i) {
        weights.values[i] = entry.at(context.attributes[i].name).get<double>();
      }
      out.emplace(id, weights);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::domain, std::string("malformed estimates file: ") + e.what());
  }
  return out;
}

ReportBatch collect_reports(Backend& backend, const ContextSet& contexts, int per_agent, std::uint64_t seed,
                            std::string_view purpose, const std::string& model) {
  require_positive(per_agent, "reports_per_agent");
  std::vector<const DecisionContext*> owners;
  std::vector<PromptBundle> prompts;
  std::vector<std::uint64_t> trials;
  for (const auto& context : contexts) {
    for (int t = 0; t < per_agent; ++t) {
      const auto trial = static_cast<std::uint64_t>(t);
      prompts.push_back(render_introspection_prompt(context, sample_pair(seed, purpose, context, trial)));
      owners.push_back(&context);
      trials.push_back(trial);
    }
  }
  const auto results = complete_batch(backend, prompts);

  ReportBatch batch;
  batch.reports.reserve(prompts.size());
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    ElicitedReport report;
    report.pair_id = trials[k];
    report.model = model;
    report.transport_status = results[k].transport_status;
    report.attempts = results[k].attempt_count;
    report.diagnostic = results[k].diagnostic;
    batch.counts.add(results[k]);
    if (results[k].delivered()) {
      report.record = parse_report(results[k].text, *owners[k]);
      ++(report.record.valid() ? batch.counts.valid : batch.counts.invalid);
    } else {
      report.record.context_id = owners[k]->context_id;
    }
    report.record.trial_index = trials[k];
    batch.reports.push_back(std::move(report));
  }
  check_transport(batch.counts, "report elicitation");
  return batch;
}

AggregatedReports aggregate_reports(std::span<const ElicitedReport> reports, const ContextSet& contexts,
                                    ReportAggregation aggregation) {
  std::map<std::string, std::vector<const WeightVector*>, std::less<>> valid;
  std::set<std::string, std::less<>> seen;
  for (const auto& report : reports) {
    contexts.at(report.record.context_id);
    seen.insert(report.record.context_id);
    if (report.record.parsed) valid[report.record.context_id].push_back(&*report.record.parsed);
  }
  AggregatedReports out;
  for (const auto& context : contexts) {
    if (!seen.contains(context.context_id)) continue;
    auto it = valid.find(context.context_id);
    if (it == valid.end()) {
      out.excluded.push_back(context.context_id);
      out.valid_counts.emplace(context.context_id, 0);
      continue;
    }
    WeightVector combined;
    combined.role = WeightRole::reported;
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      std::vector<double> column;
      column.reserve(it->second.size());
      for (const auto* weights : it->second) column.push_back(weights->values[i]);
      if (aggregation == ReportAggregation::median) {
        combined.values[i] = median(std::move(column));
      } else {
        double sum = 0.0;
        for (double v : column) sum += v;
        combined.values[i] = sum / static_cast<double>(column.size());
      }
    }
    out.reported.emplace(context.context_id, combined);
    out.valid_counts.emplace(context.context_id, it->second.size());
  }
  return out;
}

Json reported_to_json(const AggregatedReports& reports, const ContextSet& contexts, ReportAggregation aggregation) {
  Json weights = Json::object();
  Json counts = Json::object();
  for (const auto& context : contexts) {
    if (auto it = reports.reported.find(context.context_id); it != reports.reported.end()) {
      weights[context.context_id] = weights_to_json(it->second, context);
    }
    if (auto it = reports.valid_counts.find(context.context_id); it != reports.valid_counts.end()) {
      counts[context.context_id] = it->second;
    }
  }
  return Json{{"aggregation", aggregation == ReportAggregation::median ? "median" : "mean"},
              {"weights", std::move(weights)},
              {"valid_counts", std::move(counts)},
              {"excluded", reports.excluded}};
}

WeightMap reported_from_json(const Json& document, const ContextSet& contexts) {
  WeightMap out;
  try {
    for (const auto& [id, entry] : document.at("weights").items()) {
      out.emplace(id, weights_from_json(entry, contexts.at(id), WeightRole::reported));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::domain, std::string("malformed reported-weights file: ") + e.what());
  }
  return out;
}

PairedWeightSample paired_sample(const WeightMap& x, const WeightMap& y, const ContextSet& contexts,
                                 const std::string& model, bool trained) {
  PairedWeightSample sample;
  for (const auto& context : contexts) {
    auto xi = x.find(context.context_id);
    auto yi = y.find(context.context_id);
    if (xi == x.end() || yi == y.end()) continue;
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      sample.rows.push_back(PairedRow{xi->second.values[i], yi->second.values[i], context.context_id,
                                      context.attributes[i].name, model, trained});
    }
  }
  return sample;
}

std::pair<PairedWeightSample, PairedWeightSample> common_rows(const PairedWeightSample& a,
                                                              const PairedWeightSample& b) {
  std::set<std::pair<std::string, std::string>> in_a;
  std::set<std::pair<std::string, std::string>> in_b;
  for (const auto& row : a.rows) in_a.emplace(row.context_id, row.attribute);
  for (const auto& row : b.rows) in_b.emplace(row.context_id, row.attribute);
  std::pair<PairedWeightSample, PairedWeightSample> out;
  for (const auto& row : a.rows) {
    if (in_b.contains({row.context_id, row.attribute})) out.first.rows.push_back(row);
  }
  for (const auto& row : b.rows) {
    if (in_a.contains({row.context_id, row.attribute})) out.second.rows.push_back(row);
  }
  return out;
}

std::uint64_t analysis_seed(std::uint64_t root, std::string_view estimate) {
  return derive_seed(SeedKey{root, "analysis", estimate, 0});
}

VerifyResult run_verify_preferences(Backend& backend, const ContextSet& contexts, const WeightMap& targets,
                                    int decisions_per_agent, std::uint64_t seed, const BootstrapOptions& bootstrap,
                                    const std::string& model) {
  require_positive(decisions_per_agent, "decisions_per_agent");
  for (const auto& context : contexts) {
    if (!targets.contains(context.context_id)) {
      raise(ErrorKind::config, "no target weights for context " + context.context_id);
    }
  }
  VerifyResult result;
  result.decisions = collect_decisions(backend, contexts, decisions_per_agent, seed, "verify-decisions", model);
  result.estimates = estimate_from_choices(result.decisions.records, contexts);
  result.target_vs_learned = bootstrap_correlation(paired_sample(targets, result.estimates.learned, contexts, model, false),
                                                   analysis_seed(seed, "target-vs-learned"), bootstrap);
  return result;
}

ElicitResult run_elicit_reports(Backend& backend, const ContextSet& contexts, int reports_per_agent,
                                std::uint64_t seed, ReportAggregation aggregation, const std::string& model) {
  ElicitResult result;
  result.batch = collect_reports(backend, contexts, reports_per_agent, seed, kIntrospectionTrial, model);
  result.aggregated = aggregate_reports(result.batch.reports, contexts, aggregation);
  return result;
}

SyntheticBackendFactory::SyntheticBackendFactory(SubjectConfig base, SubjectConfig trained, ContextSet contexts,
                                                 std::uint64_t seed, int max_in_flight)
    : base_(std::move(base)),
      trained_(std::move(trained)),
      contexts_(std::move(contexts)),
      seed_(seed),
      max_in_flight_(max_in_flight) {}

std::unique_ptr<Backend> SyntheticBackendFactory::base() {
  return std::make_unique<SyntheticBackend>(base_, contexts_, derive_seed(SeedKey{seed_, "synthetic-subject", "base", 0}),
                                            max_in_flight_);
}

std::unique_ptr<Backend> SyntheticBackendFactory::trained(const std::string& tag,
                                                          std::span<const FinetuneRecord> dataset) {
  if (dataset.empty()) raise(ErrorKind::domain, "introspection dataset for " + tag + " is empty");
  return std::make_unique<SyntheticBackend>(trained_, contexts_,
                                            derive_seed(SeedKey{seed_, "synthetic-subject", tag, 1}), max_in_flight_);
}

RemoteBackendFactory::RemoteBackendFactory(BackendSpec spec, std::filesystem::path dataset_dir, double poll_interval,
                                           double max_wait)
    : spec_(std::move(spec)), dataset_dir_(std::move(dataset_dir)), poll_interval_(poll_interval), max_wait_(max_wait) {
  spec_.validate();
}

std::unique_ptr<Backend> RemoteBackendFactory::base() { return make_remote_backend(spec_); }

std::unique_ptr<Backend> RemoteBackendFactory::trained(const std::string& tag,
                                                       std::span<const FinetuneRecord> dataset) {
  const auto path = dataset_dir_ / ("introspection-" + tag + ".jsonl");
  write_file_atomic(path, dataset_to_string(dataset));
  FinetuneJob job = submit_finetune(spec_, path, DatasetKind::introspection, std::nullopt, "introspection-" + tag);
  job = wait_for_finetune(spec_, job.id, std::chrono::duration<double>(poll_interval_),
                          std::chrono::duration<double>(max_wait_));
  jobs_.push_back(job);
  if (!job.succeeded() || job.fine_tuned_model.empty()) {
    raise(ErrorKind::transport, "fine-tuning job " + job.id + " ended with status " + job.status);
  }
  BackendSpec trained = spec_;
  trained.model_id = job.fine_tuned_model;
  return make_remote_backend(trained);
}

std::array<Fold, 2> two_folds(const ContextSet& contexts) {
  if (contexts.size() < 2) raise(ErrorKind::domain, "two-fold cross-validation needs at least 2 contexts");
  const std::size_t half = contexts.size() / 2;
  std::array<Fold, 2> folds;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const DecisionContext* context = &contexts.contexts()[i];
    (i < half ? folds[0].train : folds[0].test).push_back(context);
    (i < half ? folds[1].test : folds[1].train).push_back(context);
  }
  return folds;
}

void check_fold_leakage(std::span<const FinetuneRecord> dataset, std::span<const DecisionContext* const> test) {
  std::set<std::string_view> held_out;
  for (const auto* context : test) held_out.insert(context->context_id);
  for (const auto& record : dataset) {
    if (held_out.contains(record.context_id)) {
      raise(ErrorKind::domain, "fold leakage: test context " + record.context_id + " appears in the training dataset");
    }
    for (const auto* context : test) {
      if (record.messages[1].content.find("Imagine you are " + context->agent_name + ".") != std::string::npos) {
        raise(ErrorKind::domain, "fold leakage: test agent " + context->agent_name + " appears in the training dataset");
      }
    }
  }
}

CrossfoldResult run_crossfold_introspection(BackendFactory& factory, const ContextSet& contexts,
                                            const WeightMap& targets, const WeightMap& learned, int reports_per_agent,
                                            std::uint64_t seed, ReportAggregation aggregation,
                                            const BootstrapOptions& bootstrap, const AggregatedReports* before_reports) {
  CrossfoldResult result;
  result.folds = two_folds(contexts);
  const std::string label = factory.label();
  if (before_reports != nullptr) {
    result.before.aggregated = *before_reports;
  } else {
    auto base = factory.base();
    result.before = run_elicit_reports(*base, contexts, reports_per_agent, seed, aggregation, label + "-base");
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const Fold& fold = result.folds[k];
    const std::string tag = "fold" + std::to_string(k + 1);
    result.datasets[k] = emit_introspection_dataset(fold.train, targets, seed);
    check_fold_leakage(result.datasets[k], fold.test);
    auto trained = factory.trained(tag, result.datasets[k]);
    const ContextSet held_out = subset(contexts.name() + "-" + tag + "-test", fold.test);
    result.after[k] = run_elicit_reports(*trained, held_out, reports_per_agent, seed, aggregation, label + "-" + tag);
  }
  for (const auto& part : result.after) {
    for (const auto& [id, weights] : part.aggregated.reported) result.after_pooled.reported.emplace(id, weights);
    for (const auto& [id, count] : part.aggregated.valid_counts) result.after_pooled.valid_counts.emplace(id, count);
    result.after_pooled.excluded.insert(result.after_pooled.excluded.end(), part.aggregated.excluded.begin(),
                                        part.aggregated.excluded.end());
  }

  const auto before = paired_sample(learned, result.before.aggregated.reported, contexts, label, false);
  const auto after = paired_sample(learned, result.after_pooled.reported, contexts, label, true);
  result.before_r = bootstrap_correlation(before, analysis_seed(seed, "crossfold-before"), bootstrap);
  result.after_r = bootstrap_correlation(after, analysis_seed(seed, "crossfold-after"), bootstrap);
  const auto [a, b] = common_rows(before, after);
  result.improvement = correlation_contrast(a, b, analysis_seed(seed, "crossfold-improvement"), bootstrap);
  return result;
}

void check_disjoint(const ContextSet& transfer, const ContextSet& original) {
  for (const auto& context : transfer) {
    if (original.find(context.context_id) != nullptr) {
      raise(ErrorKind::domain, "context " + context.context_id + " appears in both " + transfer.name() + " and " +
                                   original.name());
    }
  }
}

NativeResult run_native_generalization(Backend& before, Backend& after, const ContextSet& transfer,
                                       const ContextSet& original, int decisions_per_agent, int reports_per_agent,
                                       std::uint64_t seed, ReportAggregation aggregation,
                                       const BootstrapOptions& bootstrap) {
  check_disjoint(transfer, original);
  require_positive(decisions_per_agent, "native decisions_per_agent");
  NativeResult result;
  result.decisions = collect_decisions(before, transfer, decisions_per_agent, seed, "native-decisions", "before");
  result.native = estimate_from_choices(result.decisions.records, transfer);
  result.before = run_elicit_reports(before, transfer, reports_per_agent, seed, aggregation, "before");
  result.after = run_elicit_reports(after, transfer, reports_per_agent, seed, aggregation, "after");

  const auto a = paired_sample(result.native.learned, result.before.aggregated.reported, transfer, "before", false);
  const auto b = paired_sample(result.native.learned, result.after.aggregated.reported, transfer, "after", true);
  result.before_r = bootstrap_correlation(a, analysis_seed(seed, "native-before"), bootstrap);
  result.after_r = bootstrap_correlation(b, analysis_seed(seed, "native-after"), bootstrap);
  const auto [ca, cb] = common_rows(a, b);
  result.improvement = correlation_contrast(ca, cb, analysis_seed(seed, "native-improvement"), bootstrap);
  return result;
}

}  // namespace selfreport
