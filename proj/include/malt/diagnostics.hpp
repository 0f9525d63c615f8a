#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "malt/sampler.hpp"

namespace malt {

struct AutocorrResult {
  std::vector<double> values;  // lag 0..max_lag
  bool degenerate = false;     // zero-variance input
};

// Biased (1/N-normalized) sample autocorrelations. Lag 0 is exactly 1 for
// non-degenerate input; a zero-variance series flags degenerate with zeros
// past lag 0.
AutocorrResult autocorrelation(std::span<const double> series, int max_lag);

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;
};

// Effective sample size via the initial monotone sequence estimator
// (Geyer 1992): paired autocorrelation sums truncated at the first negative
// pair and forced non-increasing. Degenerate series report ESS = N with the
// flag set; the estimate is capped at 2N (antithetic chains can exceed N).
EssResult ess_geyer_detail(std::span<const double> series);
double ess_geyer(std::span<const double> series);

struct EssReport {
  std::vector<double> per_coordinate_ess;  // of the centered squared coordinate
  double min_ess = 0.0;
  int min_coordinate = 0;
  double ess_per_grad = 0.0;
  double ess_per_iter = 0.0;
  std::vector<double> autocorr_curve;  // pooled curve of the min coordinate
  long n_draws = 0;                    // total pooled draws (K * n_sample)
};

// Minimum ESS across the d centered squared coordinates. Per chain, the
// series (x_j - mean_j)^2 is scored with ess_geyer (mean_j the chain's own
// sampling mean) and chain values are summed. Requires stored draws.
EssReport min_ess_squared_coords(const RunRecord& record, const TargetDensity& target);

// Mean squared successive difference pooled across chains:
// series laid out [chain][iteration], n per chain.
double esjd(std::span<const double> series, int chains, long n_per_chain);

void write_ess_csv(std::ostream& os, const EssReport& report);
void write_ess_jsonl(std::ostream& os, const EssReport& report);

}  // namespace malt
