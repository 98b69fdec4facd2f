#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "selfreport/error.hpp"
#include "selfreport/experiments.hpp"
#include "support/test_data.hpp"

using namespace selfreport;
using namespace selfreport::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BootstrapOptions quick() {
  BootstrapOptions options;
  options.draws = 1000;
  return options;
}

// Fails every call whose prompt digest hits the modulus; answers the rest.
class FlakyBackend final : public Backend {
 public:
  FlakyBackend(SyntheticBackend inner, std::uint64_t modulus) : inner_(std::move(inner)), modulus_(modulus) {}
  CompletionResult complete(const PromptBundle& prompt) override {
    if (text_digest(prompt.user_text) % modulus_ == 0) {
      CompletionResult failed;
      failed.transport_status = TransportStatus::failed;
      failed.attempt_count = 3;
      failed.diagnostic = "http 503";
      return failed;
    }
    return inner_.complete(prompt);
  }
  int max_in_flight() const override { return 1; }
  Json describe() const override { return inner_.describe(); }

 private:
  static std::uint64_t text_digest(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) h = (h ^ c) * 1099511628211ULL;
    return h;
  }
  SyntheticBackend inner_;
  std::uint64_t modulus_;
};

// Answers every decision with a fixed string.
class ConstantBackend final : public Backend {
 public:
  explicit ConstantBackend(std::string text) : text_(std::move(text)) {}
  CompletionResult complete(const PromptBundle&) override { return CompletionResult{text_}; }
  int max_in_flight() const override { return 1; }
  Json describe() const override { return Json{{"kind", "constant"}}; }

 private:
  std::string text_;
};

}  // namespace

TEST(ParseSelection, ExactlyAOrBAfterTrimming) {
  EXPECT_EQ(parse_selection("A"), Selection::A);
  EXPECT_EQ(parse_selection(" B\n"), Selection::B);
  EXPECT_FALSE(parse_selection("a").has_value());
  EXPECT_FALSE(parse_selection("A.").has_value());
  EXPECT_FALSE(parse_selection("Option A").has_value());
  EXPECT_FALSE(parse_selection("").has_value());
}

TEST(CollectDecisions, CountsReconcileAndRecordsRoundTrip) {
  const auto contexts = original_contexts().prefix(10);
  FlakyBackend backend(SyntheticBackend(subject_for(targets_for(contexts, 1), kInf), contexts, 1), 23);
  const auto batch = collect_decisions(backend, contexts, 30, 1, "verify-decisions", "subject");
  ASSERT_EQ(batch.records.size(), 300u);
  EXPECT_EQ(batch.counts.emitted, 300u);
  EXPECT_EQ(batch.counts.emitted, batch.counts.valid + batch.counts.invalid + batch.counts.transport_failed);
  EXPECT_GT(batch.counts.transport_failed, 0u);
  std::size_t failed = 0;
  std::string jsonl;
  for (const auto& record : batch.records) {
    failed += record.transport_status == TransportStatus::failed;
    if (record.transport_status == TransportStatus::failed) {
      EXPECT_FALSE(record.selection.has_value());
      EXPECT_EQ(record.attempts, 3);
    }
    jsonl += choice_to_jsonl(record, contexts.at(record.context_id)) + "\n";
  }
  EXPECT_EQ(failed, batch.counts.transport_failed);
  const auto back = parse_choices(jsonl, contexts);
  ASSERT_EQ(back.size(), batch.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].context_id, batch.records[i].context_id);
    EXPECT_EQ(back[i].pair_id, batch.records[i].pair_id);
    EXPECT_EQ(back[i].option_a, batch.records[i].option_a);
    EXPECT_EQ(back[i].option_b, batch.records[i].option_b);
    EXPECT_EQ(back[i].selection, batch.records[i].selection);
    EXPECT_EQ(back[i].transport_status, batch.records[i].transport_status);
    EXPECT_EQ(back[i].attempts, batch.records[i].attempts);
  }
}

TEST(CollectDecisions, TooManyTransportFailuresFailTheStage) {
  const auto contexts = original_contexts().prefix(5);
  FlakyBackend backend(SyntheticBackend(subject_for(targets_for(contexts, 2), kInf), contexts, 2), 3);
  try {
    collect_decisions(backend, contexts, 40, 2, "verify-decisions", "subject");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::transport);
  }
}

TEST(CollectDecisions, InvalidResponsesAreKeptButNotSelected) {
  const auto contexts = original_contexts().prefix(3);
  ConstantBackend backend("Option A");
  const auto batch = collect_decisions(backend, contexts, 4, 3, "verify-decisions", "subject");
  EXPECT_EQ(batch.counts.invalid, 12u);
  EXPECT_EQ(batch.counts.valid, 0u);
  const auto estimates = estimate_from_choices(batch.records, contexts);
  EXPECT_EQ(estimates.excluded.size(), 3u);
  EXPECT_TRUE(estimates.learned.empty());
}

TEST(ParseChoices, ErrorsCarrySourceAndLine) {
  const auto contexts = original_contexts().prefix(2);
  try {
    parse_choices("{}\n", contexts, "choices/x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("choices/x.jsonl:1"), std::string::npos) << e.what();
  }
}

TEST(VerifyPreferences, NoiselessRecoveryIsStrong) {
  const auto& contexts = original_contexts();
  const auto targets = targets_for(contexts, 7);
  SyntheticBackend backend(subject_for(targets, kInf), contexts, 7, 4);
  const auto result = run_verify_preferences(backend, contexts, targets, 50, 7, quick());
  EXPECT_EQ(result.decisions.records.size(), 5000u);
  EXPECT_EQ(result.estimates.learned.size(), 100u);
  EXPECT_GT(result.target_vs_learned.point_r, 0.9);
  for (const auto& [id, fit] : result.estimates.fits) EXPECT_TRUE(fit.converged) << id;
}

TEST(VerifyPreferences, ModerateSharpnessLandsInBand) {
  const auto& contexts = original_contexts();
  const auto targets = targets_for(contexts, 8);
  SyntheticBackend backend(subject_for(targets, 0.025), contexts, 8, 4);
  const auto result = run_verify_preferences(backend, contexts, targets, 50, 8, quick());
  EXPECT_GE(result.target_vs_learned.point_r, 0.8);
  EXPECT_LE(result.target_vs_learned.point_r, 0.9);
}

TEST(VerifyPreferences, ZeroDecisionsIsRejected) {
  const auto contexts = original_contexts().prefix(2);
  const auto targets = targets_for(contexts, 1);
  SyntheticBackend backend(subject_for(targets, kInf), contexts, 1);
  EXPECT_THROW(run_verify_preferences(backend, contexts, targets, 0, 1, quick()), Error);
}

TEST(EstimatesFile, CarriesSlopesErrorsAndConvergence) {
  const auto contexts = original_contexts().prefix(4);
  const auto targets = targets_for(contexts, 9);
  SyntheticBackend backend(subject_for(targets, 0.05), contexts, 9);
  const auto batch = collect_decisions(backend, contexts, 50, 9, "verify-decisions", "subject");
  const auto estimates = estimate_from_choices(batch.records, contexts);
  const Json doc = estimates_to_json(estimates, contexts, FitOptions{});
  const auto& c = contexts.contexts()[0];
  const auto& entry = doc.at("contexts").at(c.context_id);
  EXPECT_EQ(doc.at("method"), "logistic-map");
  EXPECT_EQ(doc.at("prior_sd"), 1.0);
  for (const auto& attribute : c.attributes) {
    EXPECT_TRUE(entry.at(attribute.name).is_number());
    EXPECT_GT(entry.at(attribute.name + "_se").get<double>(), 0.0);
  }
  EXPECT_TRUE(entry.at("converged").get<bool>());
  EXPECT_EQ(entry.at("valid_choices"), 50);
  EXPECT_EQ(learned_from_estimates_json(Json::parse(doc.dump()), contexts), estimates.learned);
}

TEST(ElicitReports, NoiselessAveragesEqualLatent) {
  const auto& contexts = original_contexts();
  const auto targets = targets_for(contexts, 10);
  SyntheticBackend backend(subject_for(targets, kInf), contexts, 10, 4);
  const auto result = run_elicit_reports(backend, contexts, 10, 10, ReportAggregation::mean);
  EXPECT_EQ(result.batch.reports.size(), 1000u);
  EXPECT_TRUE(result.aggregated.excluded.empty());
  for (const auto& context : contexts) {
    const auto& reported = result.aggregated.reported.at(context.context_id).values;
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      EXPECT_NEAR(reported[i], targets.at(context.context_id).values[i], 1e-9);
    }
    EXPECT_EQ(result.aggregated.valid_counts.at(context.context_id), 10u);
  }
}

TEST(ElicitReports, InvalidRateMatchesBinomialExpectation) {
  const auto& contexts = original_contexts();
  SyntheticBackend backend(subject_for(targets_for(contexts, 11), kInf, 0.0, 1.0, 0.3), contexts, 11, 4);
  const auto result = run_elicit_reports(backend, contexts, 10, 11, ReportAggregation::mean);
  std::size_t valid = 0;
  for (const auto& [id, n] : result.aggregated.valid_counts) valid += n;
  // 1000 trials at p = 0.7: mean 700, sd sqrt(210) ~ 14.5
  EXPECT_NEAR(static_cast<double>(valid), 700.0, 3.0 * std::sqrt(210.0));
  EXPECT_EQ(result.batch.counts.valid, valid);
  EXPECT_EQ(result.batch.counts.invalid, 1000u - valid);
}

TEST(ElicitReports, AllInvalidContextIsExcludedByName) {
  const auto contexts = original_contexts().prefix(3);
  SyntheticBackend backend(subject_for(targets_for(contexts, 12), kInf, 0.0, 1.0, 1.0), contexts, 12);
  const auto result = run_elicit_reports(backend, contexts, 5, 12, ReportAggregation::mean);
  EXPECT_EQ(result.aggregated.excluded.size(), 3u);
  EXPECT_TRUE(result.aggregated.reported.empty());
  const Json doc = reported_to_json(result.aggregated, contexts, ReportAggregation::mean);
  EXPECT_EQ(doc.at("excluded").size(), 3u);
  EXPECT_EQ(doc.at("excluded")[0], contexts.contexts()[0].context_id);
}

TEST(AggregateReports, MeanAndMedian) {
  const auto& c = jason_bourne();
  ContextSet one("one", {c});
  std::vector<ElicitedReport> reports(3);
  const std::array<std::array<double, 5>, 3> values{{{0, 10, 20, 30, 40}, {3, 10, 20, 30, 41}, {30, -50, 20, 30, 42}}};
  for (std::size_t i = 0; i < 3; ++i) {
    reports[i].record.context_id = c.context_id;
    reports[i].record.parsed = WeightVector{values[i], WeightRole::reported};
  }
  const auto mean = aggregate_reports(reports, one, ReportAggregation::mean);
  EXPECT_EQ(mean.reported.at(c.context_id).values, (std::array<double, 5>{11, -10, 20, 30, 41}));
  const auto median = aggregate_reports(reports, one, ReportAggregation::median);
  EXPECT_EQ(median.reported.at(c.context_id).values, (std::array<double, 5>{3, 10, 20, 30, 41}));
  const Json doc = reported_to_json(mean, one, ReportAggregation::mean);
  EXPECT_EQ(reported_from_json(Json::parse(doc.dump()), one), mean.reported);
}

TEST(Folds, PartitionWithoutLeakage) {
  const auto& contexts = original_contexts();
  const auto folds = two_folds(contexts);
  std::set<std::string> train0, test0;
  for (const auto* c : folds[0].train) train0.insert(c->context_id);
  for (const auto* c : folds[0].test) test0.insert(c->context_id);
  EXPECT_EQ(train0.size(), 50u);
  EXPECT_EQ(test0.size(), 50u);
  for (const auto& id : train0) EXPECT_FALSE(test0.contains(id));
  EXPECT_EQ(folds[1].train.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(folds[1].train[i], folds[0].test[i]);
    EXPECT_EQ(folds[1].test[i], folds[0].train[i]);
  }
}

TEST(Folds, LeakageIsAHardError) {
  const auto& contexts = original_contexts();
  const auto targets = targets_for(contexts, 13);
  const auto folds = two_folds(contexts);
  const auto clean = emit_introspection_dataset(folds[0].train, targets, 13);
  check_fold_leakage(clean, folds[0].test);
  auto leaky = clean;
  leaky.push_back(emit_introspection_dataset(std::span(folds[0].test).first(1), targets, 13).front());
  EXPECT_THROW(check_fold_leakage(leaky, folds[0].test), Error);
  // Provenance stripped: caught by the agent line instead.
  leaky.back().context_id.clear();
  EXPECT_THROW(check_fold_leakage(leaky, folds[0].test), Error);
}

TEST(Crossfold, TrainedFidelityImprovesCorrelation) {
  const auto& contexts = original_contexts();
  const auto targets = targets_for(contexts, 14);
  const auto base = subject_for(targets, kInf, 250.0, 1.0, 0.02);
  const auto trained = subject_for(targets, kInf, 110.0, 1.0, 0.01);
  SyntheticBackendFactory factory(base, trained, contexts, 14, 4);
  const auto result = run_crossfold_introspection(factory, contexts, targets, targets, 10, 14,
                                                  ReportAggregation::mean, quick());
  EXPECT_EQ(result.datasets[0].size(), 50u);
  EXPECT_EQ(result.datasets[1].size(), 50u);
  EXPECT_EQ(result.after[0].aggregated.reported.size() + result.after[1].aggregated.reported.size() +
                result.after_pooled.excluded.size(),
            100u);
  EXPECT_GT(result.after_r.point_r, result.before_r.point_r);
  EXPECT_GT(result.improvement.hdi_low, 0.0);
  EXPECT_NEAR(result.improvement.point_r, result.after_r.point_r - result.before_r.point_r, 0.05);
}

TEST(Crossfold, ReusesSuppliedBeforeReports) {
  const auto contexts = original_contexts().prefix(20);
  const auto targets = targets_for(contexts, 15);
  SyntheticBackendFactory factory(subject_for(targets, kInf, 50.0), subject_for(targets, kInf), contexts, 15);
  const auto base = factory.base();
  const auto before = run_elicit_reports(*base, contexts, 3, 15, ReportAggregation::mean);
  const auto fresh = run_crossfold_introspection(factory, contexts, targets, targets, 3, 15, ReportAggregation::mean,
                                                 quick());
  const auto reused = run_crossfold_introspection(factory, contexts, targets, targets, 3, 15,
                                                  ReportAggregation::mean, quick(), &before.aggregated);
  EXPECT_EQ(reused.before_r.point_r, fresh.before_r.point_r);
  EXPECT_TRUE(reused.before.batch.reports.empty());
}

TEST(NativeGeneralization, ContrastPositiveAndOverlapRejected) {
  const auto& transfer = transfer_contexts();
  const auto latent = targets_for(transfer, 16);
  SyntheticBackend before(subject_for(latent, 0.025, 250.0), transfer, 16, 4);
  SyntheticBackend after(subject_for(latent, 0.025, 110.0), transfer, 17, 4);
  const auto result = run_native_generalization(before, after, transfer, original_contexts(), 100, 10, 16,
                                                ReportAggregation::mean, quick());
  EXPECT_EQ(result.decisions.records.size(), 10000u);
  EXPECT_EQ(result.native.learned.size(), 100u);
  EXPECT_GT(result.improvement.point_r, 0.0);

  std::vector<DecisionContext> mixed(transfer.begin(), transfer.begin() + 3);
  mixed.push_back(original_contexts().contexts().front());
  const ContextSet overlapping("mixed", mixed);
  EXPECT_THROW(run_native_generalization(before, after, overlapping, original_contexts(), 10, 2, 16,
                                         ReportAggregation::mean, quick()),
               Error);
  EXPECT_THROW(check_disjoint(overlapping, original_contexts()), Error);
}

TEST(PairedSample, RowsCoverCommonContextsInSetOrder) {
  const auto contexts = original_contexts().prefix(4);
  auto x = targets_for(contexts, 18);
  auto y = targets_for(contexts, 19);
  y.erase(contexts.contexts()[1].context_id);
  const auto sample = paired_sample(x, y, contexts, "m", true);
  ASSERT_EQ(sample.rows.size(), 15u);
  EXPECT_EQ(sample.rows[0].context_id, contexts.contexts()[0].context_id);
  EXPECT_EQ(sample.rows[5].context_id, contexts.contexts()[2].context_id);
  EXPECT_EQ(sample.rows[0].attribute, contexts.contexts()[0].attributes[0].name);
  EXPECT_TRUE(sample.rows[0].trained);
  const auto full = paired_sample(x, x, contexts, "m", false);
  const auto [a, b] = common_rows(full, sample);
  EXPECT_EQ(a.rows.size(), 15u);
  EXPECT_EQ(b.rows.size(), 15u);
}
