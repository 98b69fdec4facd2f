#include "selfreport/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "selfreport/error.hpp"
#include "selfreport/rng.hpp"

namespace selfreport {
namespace {

struct Columns {
  std::vector<double> x;
  std::vector<double> y;
};

std::vector<const PairedRow*> sorted_rows(const PairedWeightSample& sample) {
  std::vector<const PairedRow*> rows;
  rows.reserve(sample.rows.size());
  for (const auto& row : sample.rows) {
    if (!std::isfinite(row.x) || !std::isfinite(row.y)) {
      raise(ErrorKind::domain, "non-finite weight for " + row.context_id + "/" + row.attribute);
    }
    rows.push_back(&row);
  }
  std::sort(rows.begin(), rows.end(), [](const PairedRow* a, const PairedRow* b) {
    return std::tie(a->context_id, a->attribute, a->model, a->trained) <
           std::tie(b->context_id, b->attribute, b->model, b->trained);
  });
  return rows;
}

Columns columns(const std::vector<const PairedRow*>& rows) {
  Columns out;
  for (const auto* row : rows) {
    out.x.push_back(row->x);
    out.y.push_back(row->y);
  }
  return out;
}

double clamp_r(double r) { return std::clamp(r, -1.0, 1.0); }

// Dirichlet(1, ..., 1) via normalized unit exponentials.
void draw_dirichlet(Rng& rng, std::vector<double>& weights) {
  double total = 0.0;
  for (auto& w : weights) total += (w = rng.exponential());
  for (auto& w : weights) w /= total;
}

std::vector<double> retained(const std::vector<double>& draws, std::size_t cap) {
  if (draws.size() <= cap) return draws;
  return std::vector<double>(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(cap));
}

void check_options(const BootstrapOptions& options) {
  if (options.draws < 20) raise(ErrorKind::domain, "bootstrap needs at least 20 draws");
  if (!(options.mass > 0.0 && options.mass < 1.0)) raise(ErrorKind::domain, "HDI mass must lie in (0, 1)");
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) raise(ErrorKind::domain, "pearson needs equal-length series");
  if (x.size() < 3) raise(ErrorKind::domain, "pearson needs at least 3 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) raise(ErrorKind::domain, "pearson: first series has zero variance");
  if (!(syy > 0.0)) raise(ErrorKind::domain, "pearson: second series has zero variance");
  return clamp_r(sxy / std::sqrt(sxx * syy));
}

std::optional<double> weighted_pearson(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> weights) {
  double total = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += weights[i];
    mx += weights[i] * x[i];
    my += weights[i] * y[i];
  }
  mx /= total;
  my /= total;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += weights[i] * dx * dy;
    sxx += weights[i] * dx * dx;
    syy += weights[i] * dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return clamp_r(sxy / std::sqrt(sxx * syy));
}

Interval hdi(std::span<const double> values, double mass) {
  if (values.size() < 20) raise(ErrorKind::domain, "hdi needs at least 20 values");
  if (!(mass > 0.0 && mass < 1.0)) raise(ErrorKind::domain, "hdi mass must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Guard against 0.95 * 100 landing a hair above 95.
  const auto window = std::min(n, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)));
  const std::size_t span = std::max<std::size_t>(window, 1);
  std::size_t best = 0;
  double best_width = sorted[span - 1] - sorted[0];
  for (std::size_t i = 1; i + span <= n; ++i) {
    const double width = sorted[i + span - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return Interval{sorted[best], sorted[best + span - 1]};
}

CorrelationEstimate bootstrap_correlation(const PairedWeightSample& sample, std::uint64_t seed,
                                          const BootstrapOptions& options) {
  check_options(options);
  const auto rows = sorted_rows(sample);
  if (rows.size() < 3) raise(ErrorKind::domain, "bootstrap_correlation needs at least 3 rows");
  const Columns data = columns(rows);

  CorrelationEstimate estimate;
  estimate.point_r = pearson(data.x, data.y);
  estimate.draws = options.draws;
  std::vector<double> draws(options.draws);
  std::vector<double> weights(rows.size());
  for (std::size_t i = 0; i < options.draws; ++i) {
    Rng rng(SeedKey{seed, "bayesian-bootstrap", {}, i});
    std::optional<double> r;
    for (int attempt = 0; !r; ++attempt) {
      if (attempt > options.max_redraws) {
        raise(ErrorKind::domain, "bootstrap draw " + std::to_string(i) + " stayed degenerate after " +
                                     std::to_string(options.max_redraws) + " redraws");
      }
      if (attempt > 0) ++estimate.redraws;
      draw_dirichlet(rng, weights);
      r = weighted_pearson(data.x, data.y, weights);
    }
    draws[i] = *r;
  }
  const Interval interval = hdi(draws, options.mass);
  estimate.hdi_low = interval.low;
  estimate.hdi_high = interval.high;
  estimate.draw_values = retained(draws, options.retained_cap);
  return estimate;
}

CorrelationEstimate correlation_contrast(const PairedWeightSample& sample_a, const PairedWeightSample& sample_b,
                                         std::uint64_t seed, const BootstrapOptions& options, ContrastMode mode) {
  check_options(options);
  const auto rows_a = sorted_rows(sample_a);
  const auto rows_b = sorted_rows(sample_b);
  if (rows_a.size() < 3 || rows_b.size() < 3) raise(ErrorKind::domain, "correlation_contrast needs at least 3 rows per sample");
  if (mode == ContrastMode::paired) {
    bool same_keys = rows_a.size() == rows_b.size();
    for (std::size_t i = 0; same_keys && i < rows_a.size(); ++i) {
      same_keys = rows_a[i]->context_id == rows_b[i]->context_id && rows_a[i]->attribute == rows_b[i]->attribute;
    }
    if (!same_keys) raise(ErrorKind::domain, "paired contrast needs both samples to cover the same (context, attribute) rows");
  }
  const Columns a = columns(rows_a);
  const Columns b = columns(rows_b);

  CorrelationEstimate estimate;
  estimate.point_r = pearson(b.x, b.y) - pearson(a.x, a.y);
  estimate.draws = options.draws;
  std::vector<double> draws(options.draws);
  std::vector<double> weights_a(rows_a.size());
  std::vector<double> weights_b(rows_b.size());
  for (std::size_t i = 0; i < options.draws; ++i) {
    Rng rng(SeedKey{seed, "bayesian-bootstrap-contrast", {}, i});
    std::optional<double> ra, rb;
    for (int attempt = 0; !ra || !rb; ++attempt) {
      if (attempt > options.max_redraws) {
        raise(ErrorKind::domain, "contrast draw " + std::to_string(i) + " stayed degenerate after " +
                                     std::to_string(options.max_redraws) + " redraws");
      }
      if (attempt > 0) ++estimate.redraws;
      draw_dirichlet(rng, weights_a);
      if (mode == ContrastMode::paired) {
        weights_b = weights_a;
      } else {
        draw_dirichlet(rng, weights_b);
      }
      ra = weighted_pearson(a.x, a.y, weights_a);
      rb = weighted_pearson(b.x, b.y, weights_b);
    }
    draws[i] = *rb - *ra;
  }
  const Interval interval = hdi(draws, options.mass);
  estimate.hdi_low = interval.low;
  estimate.hdi_high = interval.high;
  estimate.draw_values = retained(draws, options.retained_cap);
  return estimate;
}

}  // namespace selfreport
