#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "sofa/dataset.hpp"
#include "sofa/topology.hpp"

namespace sofa {

enum class SharingMode { FreshPerRound, FixedSeed, Off };

struct SharingConfig {
  double ratio = 0.1;  // alpha, fraction contributed per level
  SharingMode mode = SharingMode::FreshPerRound;
  std::uint64_t seed = 0;
  friend bool operator==(const SharingConfig&, const SharingConfig&) = default;
};

// Samples pooled at each cluster during the gather phase, deduplicated by
// SampleId. Keyed by cluster NodeId.
using SharedPools = std::unordered_map<NodeId, std::vector<Sample>>;

struct ShareStats {
  NodeId client = kNoNode;
  int n_received = 0;
  int n_same_cluster = 0;
  int n_cross_cluster = 0;
};

// Bottom-up phase. Each client contributes ceil(ratio * |owned_train|)
// samples drawn without replacement from its owned training split; each
// cluster pools its children's contributions and passes a ceil(ratio*|pool|)
// subsample upward. FreshPerRound keys the draws by (seed, round, node),
// FixedSeed by (seed, node) so the same samples travel every round.
// `shards` is indexed by client NodeId (clients are ids 0..n-1).
SharedPools gather(const TreeTopology& tree, const std::vector<Shard>& shards,
                   const SharingConfig& config, int round);

// Top-down phase. Walking from the root, each cluster's pool merges into the
// payload flowing down; a client's received set is replaced by the payload,
// deduplicated against its own samples. Returns per-client stats splitting
// received samples into same-subtree (under the client's parent) and beyond.
std::vector<ShareStats> distribute(const TreeTopology& tree, std::vector<Shard>& shards,
                                   const SharedPools& pools);

}  // namespace sofa
