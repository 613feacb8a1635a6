#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sofa/types.hpp"

namespace sofa {

struct TreeNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::Client;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;  // insertion order; all iteration follows it
  ParamVector params;
  std::int64_t data_weight = 0;  // training samples in the subtree
  bool alive = true;
};

// Arena-backed rooted tree. Clients are leaves, clusters internal. Removed
// nodes are tombstoned so ids stay stable across restructuring. Structural
// mutation is single-threaded; read-only traversal may be shared.
class TreeTopology {
 public:
  NodeId add_client(ParamVector params, std::int64_t weight);

  // New cluster over `children` (each detached from any current parent).
  // Weight becomes the sum of the children's weights.
  NodeId add_cluster(const std::vector<NodeId>& children, ParamVector params);

  // Moves `child` under `new_parent`, keeping weights consistent on both
  // ancestor chains. Throws if new_parent is a client or inside child's subtree.
  void reparent(NodeId child, NodeId new_parent);

  // Detach from the parent without attaching anywhere. Transient state.
  void detach(NodeId child);
  void attach(NodeId parent, NodeId child);

  // Tombstones a childless cluster.
  void remove_internal(NodeId node);

  // Empty result iff all structural invariants hold. Reports, never throws.
  std::vector<std::string> validate() const;

  NodeId root() const { return root_; }
  void set_root(NodeId id);

  bool alive(NodeId id) const { return id < arena_.size() && arena_[id].alive; }
  const TreeNode& node(NodeId id) const;
  std::size_t arena_size() const { return arena_.size(); }

  void set_params(NodeId id, ParamVector params);

  std::vector<NodeId> live_ids() const;
  std::vector<NodeId> client_ids() const;
  std::vector<NodeId> cluster_ids() const;

  int depth(NodeId id) const;
  // Longest root-to-leaf edge count; 0 for a single-node tree.
  int tree_depth() const;
  bool is_descendant(NodeId id, NodeId ancestor) const;
  // Client leaves of the subtree, in traversal (children insertion) order.
  std::vector<NodeId> subtree_clients(NodeId id) const;
  // Post-order over live nodes from the root.
  std::vector<NodeId> post_order() const;

 private:
  TreeNode& mut(NodeId id);
  void adjust_weight_upward(NodeId from, std::int64_t delta);

  std::vector<TreeNode> arena_;
  NodeId root_ = kNoNode;
};

// (params, weight) accumulated in member order. Computed in delta form
// around the first member, so aggregating identical vectors is exact.
ParamVector weighted_mean(const std::vector<std::pair<const ParamVector*, double>>& members);

// Recomputes every cluster's params bottom-up as the data-weight-weighted
// mean of its children.
void aggregate_up(TreeTopology& tree);

// Recomputes aggregates for `from` (when it is a cluster) and its ancestors.
void refresh_upward(TreeTopology& tree, NodeId from);

}  // namespace sofa
