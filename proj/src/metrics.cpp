#include "sofa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sofa {

double jain_index(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("jain_index: empty input");
  double sum = 0.0, sum_sq = 0.0;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("jain_index: negative value");
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("jain_index: all-zero input");
  return (sum * sum) / (static_cast<double>(values.size()) * sum_sq);
}

MetricsReport build_report(const std::vector<double>& per_client_accuracies) {
  if (per_client_accuracies.empty()) {
    throw std::invalid_argument("build_report: need at least one client");
  }
  MetricsReport r;
  r.per_client = per_client_accuracies;

  std::vector<double> sorted = per_client_accuracies;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  double sum = 0.0;
  for (double v : sorted) sum += v;
  r.mean_accuracy = sum / static_cast<double>(n);

  double var = 0.0;
  for (double v : sorted) {
    const double d = v - r.mean_accuracy;
    var += d * d;
  }
  r.std_deviation = std::sqrt(var / static_cast<double>(n));

  r.min_accuracy = sorted.front();
  r.max_accuracy = sorted.back();
  r.accuracy_gap = r.max_accuracy - r.min_accuracy;
  r.jain_index = jain_index(sorted);

  const std::size_t decile = (n + 9) / 10;
  double bsum = 0.0;
  for (std::size_t i = 0; i < decile; ++i) bsum += sorted[i];
  r.bottom_decile_mean = bsum / static_cast<double>(decile);

  r.total_average_accuracy = r.mean_accuracy;  // callers override when cluster evals exist
  return r;
}

}  // namespace sofa
