#include "selfreport/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "selfreport/error.hpp"

namespace selfreport {
namespace {

using Vector = Eigen::Matrix<double, kCoefficientCount, 1>;
using Matrix = Eigen::Matrix<double, kCoefficientCount, kCoefficientCount>;

Vector features(const DiffRow& row) {
  Vector x;
  x[0] = 1.0;
  for (std::size_t i = 0; i < kAttributeCount; ++i) x[i + 1] = row.d[i];
  return x;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector to_vector(const Coefficients& w) { return Eigen::Map<const Vector>(w.data()); }

Coefficients to_array(const Vector& v) {
  Coefficients out;
  for (std::size_t i = 0; i < kCoefficientCount; ++i) out[i] = v[i];
  return out;
}

double objective(std::span<const DiffRow> rows, const Vector& w, double prior_sd) {
  double total = -0.5 * w.squaredNorm() / (prior_sd * prior_sd);
  for (const auto& row : rows) {
    const double z = features(row).dot(w);
    total += row.selected_a ? -softplus(-z) : -softplus(z);
  }
  return total;
}

Vector gradient(std::span<const DiffRow> rows, const Vector& w, double prior_sd) {
  Vector g = -w / (prior_sd * prior_sd);
  for (const auto& row : rows) {
    const Vector x = features(row);
    g += ((row.selected_a ? 1.0 : 0.0) - sigmoid(x.dot(w))) * x;
  }
  return g;
}

// Negative Hessian of the log posterior (positive definite).
Matrix curvature(std::span<const DiffRow> rows, const Vector& w, double prior_sd) {
  Matrix h = Matrix::Identity() / (prior_sd * prior_sd);
  for (const auto& row : rows) {
    const Vector x = features(row);
    const double p = sigmoid(x.dot(w));
    h.noalias() += p * (1.0 - p) * x * x.transpose();
  }
  return h;
}

void check_inputs(std::span<const DiffRow> rows, double prior_sd) {
  if (!(prior_sd > 0.0) || !std::isfinite(prior_sd)) raise(ErrorKind::domain, "prior_sd must be positive and finite");
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (double v : rows[j].d) {
      if (!std::isfinite(v)) raise(ErrorKind::domain, "row " + std::to_string(j) + " holds a non-finite difference");
    }
  }
}

}  // namespace

WeightVector WeightFit::slopes() const {
  WeightVector out;
  out.role = WeightRole::learned;
  for (std::size_t i = 0; i < kAttributeCount; ++i) out.values[i] = slope(i);
  return out;
}

std::array<double, kAttributeCount> compute_diffs(const ChoicePair& pair, const DecisionContext& context) {
  std::array<double, kAttributeCount> d{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    d[i] = (pair.option_a.values[i] - pair.option_b.values[i]) / context.attributes[i].width();
  }
  return d;
}

double log_posterior(std::span<const DiffRow> rows, const Coefficients& w, double prior_sd) {
  return objective(rows, to_vector(w), prior_sd);
}

Coefficients log_posterior_gradient(std::span<const DiffRow> rows, const Coefficients& w, double prior_sd) {
  return to_array(gradient(rows, to_vector(w), prior_sd));
}

WeightFit fit_logistic(std::span<const DiffRow> rows, const FitOptions& options) {
  if (rows.empty()) raise(ErrorKind::domain, "fit_logistic needs at least one row");
  check_inputs(rows, options.prior_sd);

  Vector w = Vector::Zero();
  double value = objective(rows, w, options.prior_sd);
  Vector g = gradient(rows, w, options.prior_sd);
  WeightFit fit;

  int iteration = 0;
  while (g.cwiseAbs().maxCoeff() > options.gradient_tolerance && iteration < options.max_iterations) {
    ++iteration;
    const Vector step = curvature(rows, w, options.prior_sd).ldlt().solve(g);
    // Near the optimum the predicted gain drops below what the objective can
    // resolve; the quadratic model is exact there, so take the full step.
    const double predicted_gain = 0.5 * g.dot(step);
    if (predicted_gain < 1e-10 * (1.0 + std::abs(value))) {
      w += step;
      value = objective(rows, w, options.prior_sd);
      g = gradient(rows, w, options.prior_sd);
      continue;
    }
    double scale = 1.0;
    Vector candidate = w + step;
    double candidate_value = objective(rows, candidate, options.prior_sd);
    // The objective is strictly concave, so halving always finds ascent
    // unless we are already at floating-point resolution.
    for (int halving = 0; halving < 40 && !(candidate_value >= value); ++halving) {
      scale *= 0.5;
      candidate = w + scale * step;
      candidate_value = objective(rows, candidate, options.prior_sd);
    }
    if (!(candidate_value >= value)) break;
    w = candidate;
    value = candidate_value;
    g = gradient(rows, w, options.prior_sd);
  }

  fit.final_gradient_norm = g.cwiseAbs().maxCoeff();
  fit.converged = fit.final_gradient_norm <= options.gradient_tolerance;
  fit.iterations = iteration;
  fit.coefficients = to_array(w);
  const Matrix covariance = curvature(rows, w, options.prior_sd).inverse();
  for (std::size_t i = 0; i < kCoefficientCount; ++i) fit.standard_errors[i] = std::sqrt(covariance(i, i));
  return fit;
}

std::vector<double> standardize(std::span<const double> values, std::string_view series) {
  if (values.size() < 2) raise(ErrorKind::domain, "standardize needs at least two values in " + std::string(series));
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  if (!(sd > 0.0)) raise(ErrorKind::domain, "series " + std::string(series) + " has zero variance");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - mean) / sd);
  return out;
}

}  // namespace selfreport
