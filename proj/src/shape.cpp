#include "sofa/shape.hpp"

#include <algorithm>
#include <limits>

#include "sofa/rng.hpp"

namespace sofa {

std::string to_string(ShapeOp op) {
  switch (op) {
    case ShapeOp::Graft: return "graft";
    case ShapeOp::Prune: return "prune";
    case ShapeOp::Merge: return "merge";
    case ShapeOp::Split: return "split";
  }
  return "?";
}

bool graft(TreeTopology& tree, NodeId child, const ShapeConfig& config, EditRecord* record) {
  if (!tree.alive(child)) return false;
  const NodeId parent = tree.node(child).parent;
  if (parent == kNoNode) return false;

  const double d_pre =
      pairwise_distance(tree.node(child).params, tree.node(parent).params, config.metric);
  const int parent_depth = tree.depth(parent);

  NodeId best = kNoNode;
  double d_min = std::numeric_limits<double>::max();
  for (NodeId cand : tree.cluster_ids()) {  // ascending id, so ties keep the lowest
    if (tree.depth(cand) != parent_depth) continue;
    if (tree.is_descendant(cand, child)) continue;
    const double d =
        pairwise_distance(tree.node(child).params, tree.node(cand).params, config.metric);
    if (d < d_min) {
      d_min = d;
      best = cand;
    }
  }
  if (best == kNoNode || best == parent) return false;
  if (!(d_min * (1.0 + config.epsilon) < d_pre)) return false;

  tree.reparent(child, best);
  refresh_upward(tree, best);

  // The old chain may have been emptied by the move; drop dead wood, then
  // refresh the surviving ancestor.
  NodeId cur = parent;
  while (cur != kNoNode && tree.node(cur).children.empty()) {
    const NodeId up = tree.node(cur).parent;
    tree.remove_internal(cur);
    cur = up;
  }
  if (cur != kNoNode) refresh_upward(tree, cur);

  if (record) {
    record->op = ShapeOp::Graft;
    record->nodes = {child, parent, best};
    record->distances = {d_pre, d_min};
  }
  return true;
}

bool prune(TreeTopology& tree, NodeId node, EditRecord* record) {
  if (!tree.alive(node)) return false;
  if (tree.node(node).kind != NodeKind::Cluster) return false;
  if (tree.node(node).children.size() != 1) return false;

  const NodeId child = tree.node(node).children[0];
  const NodeId parent = tree.node(node).parent;

  tree.detach(child);
  if (parent == kNoNode) {
    // single-child root: the child takes over
    tree.remove_internal(node);
    tree.set_root(child);
  } else {
    tree.remove_internal(node);
    tree.attach(parent, child);
    refresh_upward(tree, parent);
  }

  if (record) {
    record->op = ShapeOp::Prune;
    record->nodes = {node, child, parent};
    record->distances = {};
  }
  return true;
}

NodeId merge_siblings(TreeTopology& tree, NodeId a, NodeId b, const ShapeConfig& config,
                      EditRecord* record) {
  if (!tree.alive(a) || !tree.alive(b)) throw InternalError("merge: dead node");
  if (tree.node(a).kind != NodeKind::Cluster || tree.node(b).kind != NodeKind::Cluster) {
    throw InternalError("merge: both nodes must be clusters");
  }
  const NodeId parent = tree.node(a).parent;
  if (parent == kNoNode || parent != tree.node(b).parent) {
    throw InternalError("merge: nodes are not siblings");
  }

  const double d = pairwise_distance(tree.node(a).params, tree.node(b).params, config.metric);
  if (!(d < config.tau_merge)) return kNoNode;

  // Copy out everything needed before mutating; arena growth invalidates refs.
  const ParamVector merged = weighted_mean(
      {{&tree.node(a).params, static_cast<double>(tree.node(a).data_weight)},
       {&tree.node(b).params, static_cast<double>(tree.node(b).data_weight)}});
  std::vector<NodeId> kids = tree.node(a).children;
  const auto& bk = tree.node(b).children;
  kids.insert(kids.end(), bk.begin(), bk.end());

  for (NodeId k : kids) tree.detach(k);
  tree.remove_internal(a);
  tree.remove_internal(b);
  const NodeId merged_id = tree.add_cluster(kids, merged);
  tree.attach(parent, merged_id);
  refresh_upward(tree, parent);

  if (record) {
    record->op = ShapeOp::Merge;
    record->nodes = {a, b, merged_id};
    record->distances = {d};
  }
  return merged_id;
}

bool split_node(TreeTopology& tree, NodeId node, const ShapeConfig& config,
                std::uint64_t seed, EditRecord* record) {
  if (!tree.alive(node)) return false;
  const TreeNode& n = tree.node(node);
  if (n.kind != NodeKind::Cluster || n.parent == kNoNode || n.children.size() < 2) {
    return false;
  }

  const std::vector<NodeId> kids = n.children;
  const NodeId parent = n.parent;
  std::vector<const ParamVector*> pts(kids.size());
  for (std::size_t i = 0; i < kids.size(); ++i) pts[i] = &tree.node(kids[i]).params;

  for (int k = 2; k <= static_cast<int>(kids.size()); ++k) {
    const auto assign =
        kmeans(pts, k, derive_seed(seed, "split_k", {static_cast<std::uint64_t>(k)}));

    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t i = 0; i < assign.size(); ++i) groups[assign[i]].push_back(i);

    bool coherent = true;
    for (const auto& g : groups) {
      std::vector<const ParamVector*> members;
      for (std::size_t i : g) members.push_back(pts[i]);
      if (incoherence(members, config.metric) > config.theta_split) {
        coherent = false;
        break;
      }
    }
    if (!coherent) continue;

    // Accepted: compute group aggregates before mutating the arena.
    std::vector<ParamVector> group_params;
    group_params.reserve(k);
    for (const auto& g : groups) {
      std::vector<std::pair<const ParamVector*, double>> wm;
      for (std::size_t i : g) {
        wm.emplace_back(pts[i], static_cast<double>(tree.node(kids[i]).data_weight));
      }
      group_params.push_back(weighted_mean(wm));
    }

    for (NodeId kid : kids) tree.detach(kid);
    tree.remove_internal(node);
    std::vector<NodeId> created;
    for (int g = 0; g < k; ++g) {
      if (groups[g].size() == 1) {
        // lone child goes straight under the parent; no single-child wrapper
        const NodeId kid = kids[groups[g][0]];
        tree.attach(parent, kid);
        created.push_back(kid);
      } else {
        std::vector<NodeId> members;
        for (std::size_t i : groups[g]) members.push_back(kids[i]);
        const NodeId fresh = tree.add_cluster(members, std::move(group_params[g]));
        tree.attach(parent, fresh);
        created.push_back(fresh);
      }
    }
    refresh_upward(tree, parent);

    if (record) {
      record->op = ShapeOp::Split;
      record->nodes = {node};
      record->nodes.insert(record->nodes.end(), created.begin(), created.end());
      record->distances = {static_cast<double>(k)};
    }
    return true;
  }
  return false;
}

void resolve_auto_thresholds(const TreeTopology& tree, ShapeConfig& config) {
  if (config.tau_merge <= 0.0) {
    std::vector<double> dists;
    for (NodeId p : tree.cluster_ids()) {
      const auto& kids = tree.node(p).children;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        for (std::size_t j = i + 1; j < kids.size(); ++j) {
          dists.push_back(pairwise_distance(tree.node(kids[i]).params,
                                            tree.node(kids[j]).params, config.metric));
        }
      }
    }
    double median = 0.0;
    if (!dists.empty()) {
      std::sort(dists.begin(), dists.end());
      const std::size_t m = dists.size() / 2;
      median = (dists.size() % 2 == 1) ? dists[m] : 0.5 * (dists[m - 1] + dists[m]);
    }
    config.tau_merge = median > 0.0 ? 0.5 * median : 1e-9;
  }
  if (config.theta_split <= 0.0) config.theta_split = 2.0 * config.tau_merge;
}

namespace {

void graft_pass(TreeTopology& tree, const ShapeConfig& config, std::vector<EditRecord>& log) {
  const auto snapshot = tree.live_ids();
  for (NodeId id : snapshot) {
    if (!tree.alive(id) || id == tree.root()) continue;
    EditRecord rec;
    if (graft(tree, id, config, &rec)) log.push_back(std::move(rec));
  }
}

void merge_pass(TreeTopology& tree, const ShapeConfig& config, std::vector<EditRecord>& log) {
  const auto parents = tree.cluster_ids();
  for (NodeId p : parents) {
    if (!tree.alive(p)) continue;
    for (;;) {
      std::vector<NodeId> cluster_kids;
      for (NodeId c : tree.node(p).children) {
        if (tree.node(c).kind == NodeKind::Cluster) cluster_kids.push_back(c);
      }
      if (cluster_kids.size() < 2) break;

      double best = std::numeric_limits<double>::max();
      std::pair<NodeId, NodeId> pick{kNoNode, kNoNode};
      for (std::size_t i = 0; i < cluster_kids.size(); ++i) {
        for (std::size_t j = i + 1; j < cluster_kids.size(); ++j) {
          const double d = pairwise_distance(tree.node(cluster_kids[i]).params,
                                             tree.node(cluster_kids[j]).params, config.metric);
          if (d < best) {
            best = d;
            pick = {cluster_kids[i], cluster_kids[j]};
          }
        }
      }
      if (!(best < config.tau_merge)) break;
      EditRecord rec;
      merge_siblings(tree, pick.first, pick.second, config, &rec);
      log.push_back(std::move(rec));
    }
  }
}

void split_pass(TreeTopology& tree, const ShapeConfig& config, std::uint64_t seed,
                std::vector<EditRecord>& log) {
  const auto snapshot = tree.cluster_ids();
  for (NodeId id : snapshot) {
    if (!tree.alive(id)) continue;
    const TreeNode& n = tree.node(id);
    if (n.parent == kNoNode || n.children.size() < 2) continue;
    std::vector<const ParamVector*> members;
    for (NodeId c : n.children) members.push_back(&tree.node(c).params);
    if (incoherence(members, config.metric) <= config.theta_split) continue;
    EditRecord rec;
    if (split_node(tree, id, config, derive_seed(seed, "split_node", {id}), &rec)) {
      log.push_back(std::move(rec));
    }
  }
}

void prune_pass(TreeTopology& tree, std::vector<EditRecord>& log) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeId id : tree.cluster_ids()) {
      EditRecord rec;
      if (prune(tree, id, &rec)) {
        log.push_back(std::move(rec));
        changed = true;
      }
    }
  }
}

}  // namespace

std::vector<EditRecord> shape_round(TreeTopology& tree, const ShapeConfig& config,
                                    std::uint64_t seed) {
  std::vector<EditRecord> log;
  for (ShapeOp op : config.op_order) {
    switch (op) {
      case ShapeOp::Graft: graft_pass(tree, config, log); break;
      case ShapeOp::Merge: merge_pass(tree, config, log); break;
      case ShapeOp::Split: split_pass(tree, config, seed, log); break;
      case ShapeOp::Prune: prune_pass(tree, log); break;
    }
  }
  return log;
}

}  // namespace sofa
