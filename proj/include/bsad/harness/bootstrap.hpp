#pragma once

#include <vector>

#include "bsad/random.hpp"

namespace bsad {

struct MeanInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap interval for the mean. The interval is widened if needed so
/// that it always contains the sample mean.
MeanInterval bootstrap_mean_ci(const std::vector<double>& sample, int resamples, double level, Rng& rng);

}  // namespace bsad
