#include "bsad/harness/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsad {
namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

MeanInterval bootstrap_mean_ci(const std::vector<double>& sample, int resamples, double level, Rng& rng) {
  if (sample.empty()) throw std::invalid_argument("bootstrap: empty sample");
  if (resamples < 1) throw std::invalid_argument("bootstrap: need at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap: level must lie in (0, 1)");
  const int n = static_cast<int>(sample.size());
  MeanInterval out;
  for (double x : sample) out.mean += x;
  out.mean /= n;

  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += sample[static_cast<std::size_t>(uniform_index(rng, n))];
    m = total / n;
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  out.low = std::min(out.mean, quantile(means, tail));
  out.high = std::max(out.mean, quantile(means, 1.0 - tail));
  return out;
}

}  // namespace bsad
