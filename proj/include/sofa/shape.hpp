#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sofa/clustering.hpp"
#include "sofa/topology.hpp"

namespace sofa {

enum class ShapeOp { Graft, Prune, Merge, Split };
std::string to_string(ShapeOp op);

struct ShapeConfig {
  double epsilon = 0.05;     // graft tolerance
  double tau_merge = 0.0;    // <= 0: auto (0.5 x median inter-sibling distance)
  double theta_split = 0.0;  // <= 0: auto (2 x tau_merge)
  std::array<ShapeOp, 4> op_order{ShapeOp::Graft, ShapeOp::Merge, ShapeOp::Split,
                                  ShapeOp::Prune};
  DistanceMetric metric = DistanceMetric::Euclidean;
  friend bool operator==(const ShapeConfig&, const ShapeConfig&) = default;
};

struct EditRecord {
  ShapeOp op;
  std::vector<NodeId> nodes;
  std::vector<double> distances;
};

// Re-parents `child` to the closest live cluster at its parent's depth when
// that improves the distance by more than the epsilon tolerance. Candidate
// ties break toward the lowest id. Ancestors emptied by the move are removed.
bool graft(TreeTopology& tree, NodeId child, const ShapeConfig& config,
           EditRecord* record = nullptr);

// Collapses a single-child cluster: child reattaches to the grandparent,
// or becomes root when the node was the root.
bool prune(TreeTopology& tree, NodeId node, EditRecord* record = nullptr);

// Merges two sibling clusters when their distance is below tau_merge. The
// new node adopts both children sets; its params are the weighted mean of
// the two. Returns the merged node, or kNoNode if unchanged.
NodeId merge_siblings(TreeTopology& tree, NodeId a, NodeId b, const ShapeConfig& config,
                      EditRecord* record = nullptr);

// Tries k = 2..|children| k-means partitions of the node's children and
// replaces the node by per-group clusters under its parent at the first k
// whose groups all meet the incoherence threshold. Singleton groups attach
// their lone child directly to the parent.
bool split_node(TreeTopology& tree, NodeId node, const ShapeConfig& config,
                std::uint64_t seed, EditRecord* record = nullptr);

// Fills in auto thresholds from the current tree: tau_merge = 0.5 x median
// distance over all sibling pairs, theta_split = 2 x tau_merge.
void resolve_auto_thresholds(const TreeTopology& tree, ShapeConfig& config);

// One full evolution round in config.op_order (default Graft, Merge, Split,
// Prune-to-fixpoint). Returns the ordered edit log.
std::vector<EditRecord> shape_round(TreeTopology& tree, const ShapeConfig& config,
                                    std::uint64_t seed);

}  // namespace sofa
