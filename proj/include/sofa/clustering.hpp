#pragma once

#include <cstdint>
#include <vector>

#include "sofa/topology.hpp"
#include "sofa/types.hpp"

namespace sofa {

enum class DistanceMetric { Euclidean, Cosine };

double pairwise_distance(const ParamVector& a, const ParamVector& b, DistanceMetric metric);

// Full n x n matrix, flattened row-major. The OpenMP kernel fills rows in
// parallel; the serial twin is the reference the tests compare against.
std::vector<double> distance_matrix(const std::vector<const ParamVector*>& points,
                                    DistanceMetric metric);
std::vector<double> distance_matrix_serial(const std::vector<const ParamVector*>& points,
                                           DistanceMetric metric);

// Lloyd's algorithm with k-means++ seeding. Ties go to the lowest centroid
// index; an emptied cluster is reseeded with the point farthest from its
// centroid. Deterministic given the seed.
std::vector<int> kmeans(const std::vector<const ParamVector*>& points, int k,
                        std::uint64_t seed, int max_iter = 50);

// Mean member-to-centroid distance; 0 for a singleton.
double incoherence(const std::vector<const ParamVector*>& members, DistanceMetric metric);

struct DmacConfig {
  double gamma = 1.5;  // merge-band multiplier, >= 1
  DistanceMetric metric = DistanceMetric::Euclidean;
  friend bool operator==(const DmacConfig&, const DmacConfig&) = default;
};

struct LeafInit {
  ParamVector params;
  std::int64_t weight = 1;
};

// One agglomeration round: groups of top-level nodes (size >= 2) merged
// under a fresh parent, plus the threshold used.
struct DmacTraceStep {
  double tau = 0.0;
  std::vector<std::vector<NodeId>> merged_groups;
};

// Builds the tree bottom-up. Per iteration: all pairwise distances among
// top-level nodes, tau = min, then every connected component of the
// "distance <= tau*gamma" graph merges under one new parent whose params
// are the weighted mean of its members. Leaves get ids 0..n-1 in input order.
TreeTopology dmac_build(const std::vector<LeafInit>& leaves, const DmacConfig& config,
                        std::vector<DmacTraceStep>* trace = nullptr);

}  // namespace sofa
