#include "support/oracles.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "support/test_data.hpp"

namespace selfreport::testing {

double oracle_objective(const std::vector<DiffRow>& rows, const std::array<double, 3>& w) {
  double total = -(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]) / 2.0;
  for (const auto& row : rows) {
    const double eta = w[0] + w[1] * row.d[0] + w[2] * row.d[1];
    // log(logistic(s)) = -log(1 + exp(-s))
    const double s = row.selected_a ? eta : -eta;
    total -= s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  }
  return total;
}

std::array<double, 3> grid_search(const std::vector<DiffRow>& rows) {
  std::array<double, 3> center{0, 0, 0};
  double half = 8.0;
  const int n = 16;
  while (half > 1e-6) {
    const double step = half / n;
    std::array<double, 3> best = center;
    double best_value = -1e300;
    for (int i = -n; i <= n; ++i) {
      for (int j = -n; j <= n; ++j) {
        for (int k = -n; k <= n; ++k) {
          const std::array<double, 3> w{center[0] + i * step, center[1] + j * step, center[2] + k * step};
          const double v = oracle_objective(rows, w);
          if (v > best_value) best_value = v, best = w;
        }
      }
    }
    center = best;
    half = 2.0 * step;
  }
  return center;
}

std::vector<DiffRow> two_attribute_rows(std::uint64_t seed, std::size_t n, bool separable) {
  Rng rng(seed);
  const double w1 = rng.uniform(-3, 3), w2 = rng.uniform(-3, 3);
  std::vector<DiffRow> rows;
  for (std::size_t j = 0; j < n; ++j) {
    DiffRow row;
    row.d[0] = rng.uniform(-1, 1);
    row.d[1] = rng.uniform(-1, 1);
    const double eta = w1 * row.d[0] + w2 * row.d[1];
    row.selected_a = separable ? eta > 0 : rng.bernoulli(1.0 / (1.0 + std::exp(-eta)));
    rows.push_back(row);
  }
  return rows;
}

DecisionContext grid_context() {
  DecisionContext context;
  context.context_id = "grid";
  context.agent_name = "Grid";
  context.decision_type = "grid";
  context.item_question = "Which grid point would you prefer?";
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    context.attributes[i] = AttributeSpec{"a" + std::to_string(i), "u", 0.0, 4.0, 0};
  }
  return context;
}

GridCheck exhaustive_decide_check() {
  const auto context = grid_context();
  auto product = [](std::vector<int> levels) {
    std::vector<std::array<int, 5>> out;
    std::array<int, 5> v{};
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == 5) {
        out.push_back(v);
        return;
      }
      for (int level : levels) {
        v[i] = level;
        rec(i + 1);
      }
    };
    rec(0);
    return out;
  };
  const auto w_grid = product({-1, 0, 1});
  const auto a_grid = product({0, 2, 4});
  const auto b_grid = product({0, 4});
  GridCheck result;
  for (const auto& wi : w_grid) {
    WeightVector w;
    for (std::size_t i = 0; i < 5; ++i) w.values[i] = wi[i];
    for (const auto& ai : a_grid) {
      ChoicePair pair;
      pair.context_id = context.context_id;
      for (std::size_t i = 0; i < 5; ++i) pair.option_a.values[i] = ai[i];
      for (const auto& bi : b_grid) {
        for (std::size_t i = 0; i < 5; ++i) pair.option_b.values[i] = bi[i];
        int ua = 0, ub = 0;
        for (std::size_t i = 0; i < 5; ++i) {
          ua += wi[i] * ai[i];
          ub += wi[i] * bi[i];
        }
        const Selection oracle = ub > ua ? Selection::B : Selection::A;
        result.mismatches += decide(w, pair, context) != oracle;
        ++result.checked;
      }
    }
  }
  return result;
}

std::optional<std::pair<std::array<double, 5>, std::array<double, 5>>> scrape_options(const std::string& text,
                                                                                      const DecisionContext& context) {
  std::array<double, 5> a{}, b{};
  std::istringstream in(text);
  std::string line;
  std::array<double, 5>* target = nullptr;
  std::size_t next = 0, seen = 0;
  while (std::getline(in, line)) {
    if (line == "A:") {
      target = &a, next = 0;
    } else if (line == "B:") {
      target = &b, next = 0;
    } else if (target != nullptr && next < 5) {
      const std::string prefix = context.attributes[next].name + ": ";
      if (!line.starts_with(prefix)) return std::nullopt;
      (*target)[next++] = std::stod(line.substr(prefix.size()));
      ++seen;
    }
  }
  if (seen != 10) return std::nullopt;
  return std::pair{a, b};
}

ChoicePair bourne_pair() {
  const auto& c = jason_bourne();
  return ChoicePair{c.context_id, OptionProfile{{597.0, 68.0, 5.0, 45.0, 97.0}},
                    OptionProfile{{926.0, 65.0, 3.0, 31.0, 95.0}}, 0};
}

PairedWeightSample make_sample(const std::vector<double>& x, const std::vector<double>& y) {
  PairedWeightSample sample;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sample.rows.push_back({x[i], y[i], "ctx-" + std::to_string(i / 5), "attr-" + std::to_string(i % 5)});
  }
  return sample;
}

PairedWeightSample attenuated(Rng& rng, std::size_t n, double r) {
  const double s = std::sqrt(1.0 / (r * r) - 1.0);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + s * rng.normal();
  }
  return make_sample(x, y);
}

}  // namespace selfreport::testing
