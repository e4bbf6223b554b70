// SPDX-License-Identifier: Apache-2.0
#include "qrv/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qrv/errors.hpp"
#include "qrv/rng.hpp"
#include "qrv/threading.hpp"

namespace qrv::explain {

SelectionTrace forward_select(const FeaturePool& pool,
                              const ModelFactory& factory,
                              const SelectData& data,
                              std::size_t max_features) {
  if (pool.names.empty()) throw ConfigError("feature pool is empty");
  if (max_features > pool.names.size()) {
    throw ConfigError("max_features exceeds the pool size");
  }
  {
    std::vector<std::string> sorted = pool.names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("feature pool contains duplicate names");
    }
  }

  SelectionTrace trace;
  std::vector<std::string> remaining = pool.names;
  while (trace.selected.size() < max_features && !remaining.empty()) {
    double best_mse = 0.0;
    std::size_t best_idx = remaining.size();
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      std::vector<std::string> candidate = trace.selected;
      candidate.push_back(remaining[c]);
      auto model = factory(candidate);
      const double candidate_mse = bench::backtest_mse(
          *model, *data.frame, data.plan, data.threads, data.single_split);
      if (best_idx == remaining.size() || candidate_mse < best_mse) {
        best_mse = candidate_mse;
        best_idx = c;
      }
    }
    trace.selected.push_back(remaining[best_idx]);
    trace.mse.push_back(best_mse);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_idx));
  }
  trace.stop_reason =
      trace.selected.size() >= max_features ? "max_features" : "pool_exhausted";
  return trace;
}

std::string grouping_name(Grouping g) {
  switch (g) {
    case Grouping::per_lag_feature:
      return "per-lag-feature";
    case Grouping::feature_family:
      return "feature-family";
    case Grouping::time_lag:
      return "time-lag";
  }
  return "unknown";
}

GroupSpec make_groups(Grouping grouping, std::size_t lag_depth,
                      const std::vector<std::string>& feature_names) {
  const std::size_t width = feature_names.size();
  GroupSpec spec;
  switch (grouping) {
    case Grouping::per_lag_feature:
      for (std::size_t r = 0; r < lag_depth; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          spec.groups.push_back({r * width + c});
          spec.names.push_back(feature_names[c] + "_lag" +
                               std::to_string(lag_depth - r));
        }
      }
      break;
    case Grouping::feature_family:
      for (std::size_t c = 0; c < width; ++c) {
        std::vector<std::size_t> g;
        for (std::size_t r = 0; r < lag_depth; ++r) g.push_back(r * width + c);
        spec.groups.push_back(std::move(g));
        spec.names.push_back(feature_names[c]);
      }
      break;
    case Grouping::time_lag:
      for (std::size_t r = 0; r < lag_depth; ++r) {
        std::vector<std::size_t> g;
        for (std::size_t c = 0; c < width; ++c) g.push_back(r * width + c);
        spec.groups.push_back(std::move(g));
        spec.names.push_back("lag" + std::to_string(lag_depth - r));
      }
      break;
  }
  return spec;
}

namespace {

void check_partition(const std::vector<std::vector<std::size_t>>& groups,
                     std::size_t n_inputs) {
  std::vector<bool> seen(n_inputs, false);
  std::size_t covered = 0;
  for (const auto& g : groups) {
    for (std::size_t idx : g) {
      if (idx >= n_inputs || seen[idx]) {
        throw ConfigError("groups do not partition the input grid");
      }
      seen[idx] = true;
      ++covered;
    }
  }
  if (covered != n_inputs) {
    throw ConfigError("groups do not partition the input grid");
  }
}

// Walks one permutation from the background row toward the explained row,
// accumulating each group's marginal contribution.
void walk_permutation(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& x,
                      const std::vector<double>& background,
                      const std::vector<std::vector<std::size_t>>& groups,
                      const std::vector<std::size_t>& order,
                      std::vector<double>& phi_acc) {
  std::vector<double> z = background;
  double prev = f(z);
  for (std::size_t g : order) {
    for (std::size_t idx : groups[g]) z[idx] = x[idx];
    const double cur = f(z);
    phi_acc[g] += cur - prev;
    prev = cur;
  }
}

}  // namespace

ShapleyReport shapley_values(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<std::vector<double>>& explained_rows,
    const std::vector<std::vector<double>>& background_rows,
    const std::vector<std::vector<std::size_t>>& groups,
    const std::vector<std::string>& group_names, std::size_t n_samples,
    std::uint64_t seed, unsigned threads) {
  if (explained_rows.empty()) throw ArgumentError("no rows to explain");
  if (background_rows.empty()) throw ArgumentError("background set is empty");
  if (groups.empty() || groups.size() != group_names.size()) {
    throw ConfigError("group list and names must be non-empty and aligned");
  }
  const std::size_t n_inputs = explained_rows.front().size();
  check_partition(groups, n_inputs);
  const std::size_t n_groups = groups.size();
  const bool exact = n_groups <= 5;
  if (!exact && n_samples < 100) {
    throw ConfigError("Monte-Carlo Shapley needs at least 100 samples");
  }

  ShapleyReport report;
  report.group_names = group_names;
  report.seed = seed;
  report.exact = exact;
  report.phi.assign(n_groups, 0.0);

  double baseline = 0.0;
  for (const auto& b : background_rows) baseline += f(b);
  baseline /= static_cast<double>(background_rows.size());
  report.baseline = baseline;

  double mean_prediction = 0.0;
  for (const auto& x : explained_rows) mean_prediction += f(x);
  mean_prediction /= static_cast<double>(explained_rows.size());
  report.mean_prediction = mean_prediction;

  std::size_t total_draws = 0;
  if (exact) {
    std::vector<std::size_t> order(n_groups);
    std::iota(order.begin(), order.end(), 0);
    for (const auto& x : explained_rows) {
      std::vector<double> phi_row(n_groups, 0.0);
      std::size_t draws = 0;
      std::vector<std::size_t> perm = order;
      do {
        for (const auto& b : background_rows) {
          walk_permutation(f, x, b, groups, perm, phi_row);
          ++draws;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      for (std::size_t g = 0; g < n_groups; ++g) {
        report.phi[g] += phi_row[g] / static_cast<double>(draws);
      }
      total_draws += draws;
    }
  } else {
    // One independent PRNG stream per draw, so results do not depend on the
    // thread count.
    for (const auto& x : explained_rows) {
      std::vector<std::vector<double>> phi_per_draw(
          n_samples, std::vector<double>(n_groups, 0.0));
      parallel_for(n_samples, threads, [&](std::size_t s) {
        std::mt19937_64 gen(derive_seed(seed, total_draws + s));
        const std::size_t b_idx =
            static_cast<std::size_t>(gen() % background_rows.size());
        std::vector<std::size_t> perm(n_groups);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n_groups; i > 1; --i) {
          const std::size_t j = static_cast<std::size_t>(gen() % i);
          std::swap(perm[i - 1], perm[j]);
        }
        walk_permutation(f, x, background_rows[b_idx], groups, perm,
                         phi_per_draw[s]);
      });
      for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t g = 0; g < n_groups; ++g) {
          report.phi[g] += phi_per_draw[s][g] / static_cast<double>(n_samples);
        }
      }
      total_draws += n_samples;
    }
  }
  const double scale = static_cast<double>(explained_rows.size());
  for (auto& v : report.phi) v /= scale;
  report.n_samples = total_draws;

  double phi_sum = 0.0;
  for (double v : report.phi) phi_sum += v;
  report.efficiency_residual =
      std::abs(phi_sum - (mean_prediction - baseline));
  return report;
}

}  // namespace qrv::explain
