#include "malt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "malt/util.hpp"

namespace malt {

namespace {

int default_max_lag(std::size_t n) {
  const double cap = 10.0 * std::sqrt(static_cast<double>(n));
  return static_cast<int>(std::min(static_cast<double>(n) - 1.0, cap));
}

// Mean and biased variance in one pass.
std::pair<double, double> mean_var(std::span<const double> series) {
  const double mean = pairwise_mean(series);
  std::vector<double> sq(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double c = series[i] - mean;
    sq[i] = c * c;
  }
  return {mean, pairwise_mean(sq)};
}

double autocov_at(std::span<const double> series, double mean, int lag) {
  const std::size_t n = series.size();
  double acc = 0.0;
  for (std::size_t t = 0; t + static_cast<std::size_t>(lag) < n; ++t) {
    acc += (series[t] - mean) * (series[t + static_cast<std::size_t>(lag)] - mean);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

AutocorrResult autocorrelation(std::span<const double> series, int max_lag) {
  if (max_lag < 1 || static_cast<std::size_t>(max_lag) >= series.size())
    throw std::invalid_argument("autocorrelation: need series length > max_lag >= 1");
  AutocorrResult out;
  out.values.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
  out.values[0] = 1.0;
  const auto [mean, var] = mean_var(series);
  if (!(var > 0.0)) {
    out.degenerate = true;
    return out;
  }
  for (int k = 1; k <= max_lag; ++k) {
    out.values[static_cast<std::size_t>(k)] = autocov_at(series, mean, k) / var;
  }
  return out;
}

EssResult ess_geyer_detail(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw std::invalid_argument("ess_geyer: need at least 10 draws");
  EssResult out;
  const auto [mean, var] = mean_var(series);
  const double N = static_cast<double>(n);
  if (!(var > 0.0)) {
    out.ess = N;
    out.degenerate = true;
    return out;
  }

  // Paired sums Gamma_k = rho(2k) + rho(2k+1), truncated at the first
  // negative pair and made non-increasing.
  const int max_lag = default_max_lag(n);
  double iact = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int k = 0; 2 * k + 1 <= max_lag; ++k) {
    const double rho_even = k == 0 ? 1.0 : autocov_at(series, mean, 2 * k) / var;
    const double rho_odd = autocov_at(series, mean, 2 * k + 1) / var;
    double pair = rho_even + rho_odd;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    iact += 2.0 * pair;
  }
  // Antithetic chains legitimately push the estimate above N; only guard the
  // positivity of the denominator here. Reports cap their totals separately.
  out.ess = N / std::max(iact, 1e-12);
  return out;
}

double ess_geyer(std::span<const double> series) { return ess_geyer_detail(series).ess; }

EssReport min_ess_squared_coords(const RunRecord& record, const TargetDensity& target) {
  if (record.draws.empty()) throw std::invalid_argument("min_ess: record has no stored draws");
  if (record.dim != target.dim)
    throw std::invalid_argument("min_ess: record and target dimensions differ");
  const int d = record.dim;
  const int K = record.chains;
  const long n = record.n_sample;

  EssReport report;
  report.n_draws = static_cast<long>(K) * n;
  report.per_coordinate_ess.assign(static_cast<std::size_t>(d), 0.0);

  // Summed per-chain estimates, capped at twice the pooled draw count
  // (antithetic kernels can exceed the iid budget, but not unboundedly).
  const double cap = 2.0 * static_cast<double>(report.n_draws);
  std::vector<std::vector<double>> series(static_cast<std::size_t>(d));
  parallel_for(d, 0, [&](int j) {
    std::vector<double> chain_series(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      for (long t = 0; t < n; ++t) chain_series[static_cast<std::size_t>(t)] = record.draw(t, k, j);
      const double mean = pairwise_mean(chain_series);
      for (double& v : chain_series) {
        const double c = v - mean;
        v = c * c;
      }
      total += ess_geyer(chain_series);
      if (k == 0) series[static_cast<std::size_t>(j)] = chain_series;  // kept for the curve
    }
    report.per_coordinate_ess[static_cast<std::size_t>(j)] = std::min(total, cap);
  });

  report.min_coordinate = static_cast<int>(
      std::min_element(report.per_coordinate_ess.begin(), report.per_coordinate_ess.end()) -
      report.per_coordinate_ess.begin());
  report.min_ess = report.per_coordinate_ess[static_cast<std::size_t>(report.min_coordinate)];
  report.ess_per_grad = record.sampling_gradient_evals > 0
                            ? report.min_ess / static_cast<double>(record.sampling_gradient_evals)
                            : 0.0;
  report.ess_per_iter = report.min_ess / static_cast<double>(report.n_draws);

  const auto& curve_series = series[static_cast<std::size_t>(report.min_coordinate)];
  const int lag = std::min(100, static_cast<int>(curve_series.size()) - 1);
  if (lag >= 1) report.autocorr_curve = autocorrelation(curve_series, lag).values;
  return report;
}

double esjd(std::span<const double> series, int chains, long n_per_chain) {
  if (n_per_chain < 2) throw std::invalid_argument("esjd: need at least 2 draws per chain");
  if (series.size() != static_cast<std::size_t>(chains) * static_cast<std::size_t>(n_per_chain))
    throw std::invalid_argument("esjd: series size mismatch");
  std::vector<double> sq;
  sq.reserve(series.size());
  for (int k = 0; k < chains; ++k) {
    const auto base = static_cast<std::size_t>(k) * static_cast<std::size_t>(n_per_chain);
    for (long t = 0; t + 1 < n_per_chain; ++t) {
      const double diff = series[base + static_cast<std::size_t>(t) + 1] -
                          series[base + static_cast<std::size_t>(t)];
      sq.push_back(diff * diff);
    }
  }
  return pairwise_mean(sq);
}

void write_ess_csv(std::ostream& os, const EssReport& report) {
  os << "row,coordinate,ess,min_ess,ess_per_grad,ess_per_iter,n_draws\n";
  for (std::size_t j = 0; j < report.per_coordinate_ess.size(); ++j) {
    os << "coordinate," << j << "," << report.per_coordinate_ess[j] << ",,,,\n";
  }
  os << "summary," << report.min_coordinate << "," << report.min_ess << "," << report.min_ess
     << "," << report.ess_per_grad << "," << report.ess_per_iter << "," << report.n_draws
     << "\n";
}

void write_ess_jsonl(std::ostream& os, const EssReport& report) {
  for (std::size_t j = 0; j < report.per_coordinate_ess.size(); ++j) {
    os << R"({"row":"coordinate","coordinate":)" << j << R"(,"ess":)"
       << report.per_coordinate_ess[j] << "}\n";
  }
  os << R"({"row":"summary","min_coordinate":)" << report.min_coordinate << R"(,"min_ess":)"
     << report.min_ess << R"(,"ess_per_grad":)" << report.ess_per_grad << R"(,"ess_per_iter":)"
     << report.ess_per_iter << R"(,"n_draws":)" << report.n_draws << "}\n";
}

}  // namespace malt
