#pragma once

#include <functional>
#include <span>
#include <vector>

namespace malt {

// Pairwise (cascade) summation. Deterministic for a fixed input order and
// machine-independent at fixed word size, which keeps cross-chain reductions
// reproducible.
double pairwise_sum(std::span<const double> xs);
double pairwise_mean(std::span<const double> xs);

bool all_finite(std::span<const double> xs);

// Empirical percentile, pct in [0, 100], linear interpolation between order
// statistics.
double percentile(std::vector<double> values, double pct);

// Runs fn(i) for i in [0, n). fn must write only to slots owned by i; the
// result is then identical for any worker count, including workers == 1.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace malt
