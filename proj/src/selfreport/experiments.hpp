#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfreport/backend.hpp"
#include "selfreport/config.hpp"
#include "selfreport/datasets.hpp"
#include "selfreport/estimation.hpp"
#include "selfreport/finetune.hpp"
#include "selfreport/report_parser.hpp"
#include "selfreport/stats.hpp"

namespace selfreport {

// Tally for one stage: emitted = valid + invalid + transport_failed.
struct StageCounts {
  std::size_t emitted = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::size_t transport_failed = 0;
  // Calls that needed more than one attempt, and attempts over all calls.
  std::size_t retried = 0;
  std::size_t attempts = 0;

  void add(const CompletionResult& result);
  Json to_json() const;
};

// Calls may fail in transport; a stage tolerates up to this fraction.
inline constexpr double kMaxTransportFailureRate = 0.10;

struct ChoiceRecord {
  std::string context_id;
  std::uint64_t pair_id = 0;
  std::string model;
  OptionProfile option_a;
  OptionProfile option_b;
  std::string response;
  std::optional<Selection> selection;
  TransportStatus transport_status = TransportStatus::ok;
  int attempts = 1;
  std::string diagnostic;
};

// Exactly "A" or "B" after trimming whitespace.
std::optional<Selection> parse_selection(std::string_view response);

std::string choice_to_jsonl(const ChoiceRecord& record, const DecisionContext& context);
ChoiceRecord choice_from_json(const Json& document, const ContextSet& contexts);
std::vector<ChoiceRecord> parse_choices(std::string_view jsonl, const ContextSet& contexts,
                                        std::string_view source = "choices");

struct ElicitedReport {
  ReportRecord record;
  std::uint64_t pair_id = 0;
  std::string model;
  TransportStatus transport_status = TransportStatus::ok;
  int attempts = 1;
  std::string diagnostic;
};

std::string report_to_jsonl(const ElicitedReport& report, const DecisionContext& context);

struct DecisionBatch {
  std::vector<ChoiceRecord> records;
  StageCounts counts;
};

// One decision per sampled pair, each in an independent call.
DecisionBatch collect_decisions(Backend& backend, const ContextSet& contexts, int per_agent, std::uint64_t seed,
                                std::string_view purpose, const std::string& model);

struct LearnedEstimates {
  WeightMap learned;
  std::map<std::string, WeightFit, std::less<>> fits;
  std::map<std::string, std::size_t, std::less<>> valid_choices;
  // Contexts without a single valid choice.
  std::vector<std::string> excluded;
};

LearnedEstimates estimate_from_choices(std::span<const ChoiceRecord> records, const ContextSet& contexts,
                                       const FitOptions& options = {});

Json estimates_to_json(const LearnedEstimates& estimates, const ContextSet& contexts, const FitOptions& options);
WeightMap learned_from_estimates_json(const Json& document, const ContextSet& contexts);

struct ReportBatch {
  std::vector<ElicitedReport> reports;
  StageCounts counts;
};

// A fresh seeded pair per trial.
ReportBatch collect_reports(Backend& backend, const ContextSet& contexts, int per_agent, std::uint64_t seed,
                            std::string_view purpose, const std::string& model);

struct AggregatedReports {
  WeightMap reported;
  std::map<std::string, std::size_t, std::less<>> valid_counts;
  // Contexts where every report was invalid or undelivered.
  std::vector<std::string> excluded;
};

AggregatedReports aggregate_reports(std::span<const ElicitedReport> reports, const ContextSet& contexts,
                                    ReportAggregation aggregation);

Json reported_to_json(const AggregatedReports& reports, const ContextSet& contexts, ReportAggregation aggregation);
WeightMap reported_from_json(const Json& document, const ContextSet& contexts);

// Rows for every context present in both maps, in context-set order.
PairedWeightSample paired_sample(const WeightMap& x, const WeightMap& y, const ContextSet& contexts,
                                 const std::string& model, bool trained);

// Restricts both samples to their common (context, attribute) keys.
std::pair<PairedWeightSample, PairedWeightSample> common_rows(const PairedWeightSample& a,
                                                              const PairedWeightSample& b);

struct VerifyResult {
  DecisionBatch decisions;
  LearnedEstimates estimates;
  CorrelationEstimate target_vs_learned;
};

VerifyResult run_verify_preferences(Backend& backend, const ContextSet& contexts, const WeightMap& targets,
                                    int decisions_per_agent, std::uint64_t seed,
                                    const BootstrapOptions& bootstrap = {}, const std::string& model = "subject");

struct ElicitResult {
  ReportBatch batch;
  AggregatedReports aggregated;
};

ElicitResult run_elicit_reports(Backend& backend, const ContextSet& contexts, int reports_per_agent,
                                std::uint64_t seed, ReportAggregation aggregation,
                                const std::string& model = "subject");

// Produces the model before introspection training and the model after
// training on a given introspection dataset.
class BackendFactory {
 public:
  virtual ~BackendFactory() = default;
  virtual std::unique_ptr<Backend> base() = 0;
  virtual std::unique_ptr<Backend> trained(const std::string& tag, std::span<const FinetuneRecord> dataset) = 0;
  virtual std::string label() const = 0;
};

// Training is modeled as a change in report fidelity.
class SyntheticBackendFactory final : public BackendFactory {
 public:
  SyntheticBackendFactory(SubjectConfig base, SubjectConfig trained, ContextSet contexts, std::uint64_t seed,
                          int max_in_flight = 1);

  std::unique_ptr<Backend> base() override;
  std::unique_ptr<Backend> trained(const std::string& tag, std::span<const FinetuneRecord> dataset) override;
  std::string label() const override { return "synthetic"; }

 private:
  SubjectConfig base_;
  SubjectConfig trained_;
  ContextSet contexts_;
  std::uint64_t seed_;
  int max_in_flight_;
};

// Writes each dataset under dataset_dir, fine-tunes spec.model_id on it, and
// serves the resulting model.
class RemoteBackendFactory final : public BackendFactory {
 public:
  RemoteBackendFactory(BackendSpec spec, std::filesystem::path dataset_dir, double poll_interval, double max_wait);

  std::unique_ptr<Backend> base() override;
  std::unique_ptr<Backend> trained(const std::string& tag, std::span<const FinetuneRecord> dataset) override;
  std::string label() const override { return spec_.model_id; }

  const std::vector<FinetuneJob>& jobs() const { return jobs_; }

 private:
  BackendSpec spec_;
  std::filesystem::path dataset_dir_;
  double poll_interval_;
  double max_wait_;
  std::vector<FinetuneJob> jobs_;
};

struct Fold {
  std::vector<const DecisionContext*> train;
  std::vector<const DecisionContext*> test;
};

// Two folds: the first half of the set, then the rest.
std::array<Fold, 2> two_folds(const ContextSet& contexts);

// Throws a domain error if any training record belongs to a test context.
void check_fold_leakage(std::span<const FinetuneRecord> dataset, std::span<const DecisionContext* const> test);

struct CrossfoldResult {
  std::array<Fold, 2> folds;
  std::array<std::vector<FinetuneRecord>, 2> datasets;
  ElicitResult before;
  std::array<ElicitResult, 2> after;  // held-out fold reports
  AggregatedReports after_pooled;
  CorrelationEstimate before_r;
  CorrelationEstimate after_r;
  CorrelationEstimate improvement;
};

// When `before` is given it supplies the pre-training reports instead of a
// fresh elicitation from factory.base().
CrossfoldResult run_crossfold_introspection(BackendFactory& factory, const ContextSet& contexts,
                                            const WeightMap& targets, const WeightMap& learned, int reports_per_agent,
                                            std::uint64_t seed, ReportAggregation aggregation,
                                            const BootstrapOptions& bootstrap = {},
                                            const AggregatedReports* before = nullptr);

struct NativeResult {
  DecisionBatch decisions;
  LearnedEstimates native;
  ElicitResult before;
  ElicitResult after;
  CorrelationEstimate before_r;
  CorrelationEstimate after_r;
  CorrelationEstimate improvement;
};

// Throws a domain error when any transfer context id also names an original
// context.
void check_disjoint(const ContextSet& transfer, const ContextSet& original);

NativeResult run_native_generalization(Backend& before, Backend& after, const ContextSet& transfer,
                                       const ContextSet& original, int decisions_per_agent, int reports_per_agent,
                                       std::uint64_t seed, ReportAggregation aggregation,
                                       const BootstrapOptions& bootstrap = {});

// Contributions to the seed of each analysis estimate.
std::uint64_t analysis_seed(std::uint64_t root, std::string_view estimate);

}  // namespace selfreport
