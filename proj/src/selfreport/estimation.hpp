#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "selfreport/model.hpp"

namespace selfreport {

inline constexpr std::size_t kCoefficientCount = kAttributeCount + 1;  // intercept first

struct DiffRow {
  std::array<double, kAttributeCount> d{};
  bool selected_a = false;
};

using Coefficients = std::array<double, kCoefficientCount>;

struct WeightFit {
  Coefficients coefficients{};
  Coefficients standard_errors{};
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;

  double intercept() const { return coefficients[0]; }
  double slope(std::size_t attribute) const { return coefficients[attribute + 1]; }
  double slope_se(std::size_t attribute) const { return standard_errors[attribute + 1]; }
  WeightVector slopes() const;
};

struct FitOptions {
  double prior_sd = 1.0;
  double gradient_tolerance = 1e-8;  // max-norm
  int max_iterations = 100;
};

// Normalized per-attribute difference (a_i - b_i) / (range_max_i - range_min_i).
std::array<double, kAttributeCount> compute_diffs(const ChoicePair& pair, const DecisionContext& context);

// Penalized log-likelihood of the logistic model P(A) = logistic(w0 + sum w_i d_i)
// with independent Normal(0, prior_sd^2) priors on every coefficient.
double log_posterior(std::span<const DiffRow> rows, const Coefficients& w, double prior_sd);
Coefficients log_posterior_gradient(std::span<const DiffRow> rows, const Coefficients& w, double prior_sd);

// Posterior mode by Newton's method with step halving, starting from zero.
// Standard errors come from the inverse negative Hessian at the mode.
WeightFit fit_logistic(std::span<const DiffRow> rows, const FitOptions& options = {});

// Rescales to sample mean 0 and sample standard deviation 1 (n - 1 divisor).
std::vector<double> standardize(std::span<const double> values, std::string_view series = "values");

}  // namespace selfreport
