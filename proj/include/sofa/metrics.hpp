#pragma once

#include <string>
#include <vector>

namespace sofa {

// Fairness statistics over per-client accuracies. All aggregate fields are
// computed on a sorted copy, so they are exactly permutation-invariant.
struct MetricsReport {
  double mean_accuracy = 0.0;
  double std_deviation = 0.0;  // population std
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  double accuracy_gap = 0.0;  // max - min
  double jain_index = 0.0;
  double bottom_decile_mean = 0.0;  // mean of the ceil(n/10) lowest
  double total_average_accuracy = 0.0;  // clients and cluster nodes together
  std::vector<double> per_client;
  std::string label;
};

// (sum x)^2 / (n * sum x^2); 1 when all equal, 1/n in the worst case.
double jain_index(const std::vector<double>& values);

MetricsReport build_report(const std::vector<double>& per_client_accuracies);

}  // namespace sofa
