#pragma once

#include <cstdint>
#include <vector>

#include "sofa/orchestrator.hpp"

namespace sofa {

// K hypothesis models; every client trains the one with the lowest loss on
// its own training data. K = 1 degenerates to flat federated averaging.
struct HypClusterState {
  int k = 1;
  std::vector<ParamVector> models;
  std::vector<int> assignment;  // client -> model index
};

// Model i starts from the ("model_init", i) stream, so k = 1 shares its
// init with the simulator's common starting point.
HypClusterState hypcluster_init(const ModelSpec& spec, int k, std::uint64_t seed);

// One communication round: select by training loss (ties toward the lower
// index), train the selected model locally, then replace each model with the
// data-weighted mean of its assignees' results. Unselected models persist.
void hypcluster_round(HypClusterState& state, const std::vector<Shard>& shards,
                      const ParamLayout& layout, const RunConfig& config, int round);

// Full baseline loop under the same budget and evaluation protocol as the
// simulator. Sharing and restructuring settings in `config` are ignored.
SimResult run_hypcluster(const RunConfig& config, const std::vector<Shard>& shards,
                         const ModelSpec& spec, int k);

}  // namespace sofa
