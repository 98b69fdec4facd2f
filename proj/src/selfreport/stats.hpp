#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace selfreport {

struct PairedRow {
  double x = 0.0;
  double y = 0.0;
  std::string context_id;
  std::string attribute;
  std::string model;
  bool trained = false;
};

struct PairedWeightSample {
  std::vector<PairedRow> rows;
};

struct CorrelationEstimate {
  double point_r = 0.0;
  double hdi_low = 0.0;
  double hdi_high = 0.0;
  std::size_t draws = 0;
  // Draws that had to be repeated because the weighted variance vanished.
  std::size_t redraws = 0;
  std::vector<double> draw_values;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct BootstrapOptions {
  std::size_t draws = 10000;
  double mass = 0.95;
  std::size_t retained_cap = 10000;
  int max_redraws = 100;  // per iteration
};

enum class ContrastMode { paired, unpaired };

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation under observation weights; nullopt when either weighted
// variance is zero.
std::optional<double> weighted_pearson(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> weights);

// Narrowest window holding ceil(mass * n) consecutive sorted values; ties go
// to the lowest window.
Interval hdi(std::span<const double> values, double mass = 0.95);

// Bayesian bootstrap: each draw reweights rows by Dirichlet(1, ..., 1).
// Rows are keyed by (context_id, attribute), so input order is irrelevant.
CorrelationEstimate bootstrap_correlation(const PairedWeightSample& sample, std::uint64_t seed,
                                          const BootstrapOptions& options = {});

// Distribution of r_b - r_a. Paired mode shares each Dirichlet draw across
// both samples, which must cover the same (context_id, attribute) keys.
CorrelationEstimate correlation_contrast(const PairedWeightSample& sample_a, const PairedWeightSample& sample_b,
                                         std::uint64_t seed, const BootstrapOptions& options = {},
                                         ContrastMode mode = ContrastMode::paired);

}  // namespace selfreport
