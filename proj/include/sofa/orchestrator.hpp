#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sofa/clustering.hpp"
#include "sofa/dataset.hpp"
#include "sofa/metrics.hpp"
#include "sofa/model.hpp"
#include "sofa/shape.hpp"
#include "sofa/sharing.hpp"
#include "sofa/topology.hpp"

namespace sofa {

struct ObjectiveWeights {
  double alpha = 0.0;  // inter-cluster spread penalty per cluster
  double beta = 0.0;   // child-to-parent pull per cluster; > 0 enables the
                       // proximal term in local updates
  friend bool operator==(const ObjectiveWeights&, const ObjectiveWeights&) = default;
};

struct RunConfig {
  int num_clients = 20;
  int rounds = 20;
  int local_epochs = 5;
  int warmup_epochs = 5;
  bool epochs_mode = true;  // false: local_epochs counts minibatch steps
  double lr = 0.05;
  int batch_size = 32;
  double dirichlet_alpha = 1.0;
  double test_fraction = 0.1;
  SharingConfig sharing;
  DmacConfig dmac;
  ShapeConfig shape;
  int shape_every = 1;  // 0 disables restructuring
  ObjectiveWeights objective;
  double downward_mix = 0.0;  // lambda: x_u <- (1-lambda) x_u + lambda x_parent
  std::vector<int> hidden_dims{128, 64};
  std::uint64_t seed = 1;
  int threads = 0;

  void check() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct NodeRoundStats {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::Client;
  double train_loss_start = 0.0;  // loss on the round's training set before updating
  double train_loss_end = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct RoundRecord {
  int round = 0;
  std::vector<NodeRoundStats> nodes;
  double objective_total = 0.0;
  double objective_term1 = 0.0;
  double objective_term2 = 0.0;
  double objective_term3 = 0.0;
  int shape_edit_count = 0;
  std::vector<EditRecord> shape_edits;
  std::vector<ShareStats> sharing;
};

struct TreeSnapshot {
  int round = 0;
  std::vector<TreeNode> nodes;  // live nodes only
};

struct SimResult {
  std::vector<RoundRecord> rounds;
  MetricsReport report;
  std::vector<TreeSnapshot> trees;  // one per round
};

// Warm-up local training from a shared init, then the agglomerative build
// over the resulting weight vectors. Shards are indexed by client id.
TreeTopology warmup_and_cluster(const std::vector<Shard>& shards, const ModelSpec& spec,
                                const RunConfig& config);

struct ObjectiveValue {
  double total = 0.0;
  double term1 = 0.0;  // weighted local losses
  double term2 = 0.0;  // sibling spread
  double term3 = 0.0;  // child-to-parent distances
};

// Global objective over all internal nodes j with direct children C_j:
//   term1 = sum_j w_j sum_{u in C_j} w_u F_u(x_u)
//   term2 = sum_j alpha / |C_j| sum_{u1<u2 in C_j} D(x_u1, x_u2)
//   term3 = sum_j beta sum_{u in C_j} D(x_u, x_j)
// w_j, w_u are data-weight proportions; F_u evaluates a node's params on its
// subtree's current training data.
ObjectiveValue objective_value(const TreeTopology& tree, const std::vector<Shard>& shards,
                               const ParamLayout& layout, const RunConfig& config);

// Full simulation: partition is the caller's job (shards passed in), then
// warm-up + clustering, and per round: optional downward mix, parallel local
// updates, bottom-up aggregation, evaluation, restructuring, data sharing.
// `intervention`, when set, may mutate shards at the start of each round
// (drift scenarios). Deterministic for a fixed config.
SimResult run_sofa(const RunConfig& config, std::vector<Shard> shards, const ModelSpec& spec,
                   const std::function<void(int, std::vector<Shard>&)>& intervention = {});

}  // namespace sofa
