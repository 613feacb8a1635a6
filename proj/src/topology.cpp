#include "sofa/topology.hpp"

#include <algorithm>
#include <unordered_set>

namespace sofa {

const TreeNode& TreeTopology::node(NodeId id) const {
  if (id >= arena_.size()) throw InternalError("unknown node id " + std::to_string(id));
  return arena_[id];
}

TreeNode& TreeTopology::mut(NodeId id) {
  if (id >= arena_.size()) throw InternalError("unknown node id " + std::to_string(id));
  return arena_[id];
}

NodeId TreeTopology::add_client(ParamVector params, std::int64_t weight) {
  TreeNode n;
  n.id = static_cast<NodeId>(arena_.size());
  n.kind = NodeKind::Client;
  n.params = std::move(params);
  n.data_weight = weight;
  arena_.push_back(std::move(n));
  return arena_.back().id;
}

NodeId TreeTopology::add_cluster(const std::vector<NodeId>& children, ParamVector params) {
  if (children.empty()) throw InternalError("add_cluster: empty child set");
  for (NodeId c : children) {
    if (!alive(c)) throw InternalError("add_cluster: unknown or dead child " + std::to_string(c));
  }
  TreeNode n;
  n.id = static_cast<NodeId>(arena_.size());
  n.kind = NodeKind::Cluster;
  n.params = std::move(params);
  arena_.push_back(std::move(n));
  const NodeId id = arena_.back().id;
  for (NodeId c : children) {
    if (mut(c).parent != kNoNode) detach(c);
    attach(id, c);
  }
  return id;
}

void TreeTopology::adjust_weight_upward(NodeId from, std::int64_t delta) {
  for (NodeId cur = from; cur != kNoNode; cur = mut(cur).parent) {
    mut(cur).data_weight += delta;
  }
}

void TreeTopology::detach(NodeId child) {
  TreeNode& c = mut(child);
  if (c.parent == kNoNode) return;
  TreeNode& p = mut(c.parent);
  auto it = std::find(p.children.begin(), p.children.end(), child);
  if (it == p.children.end()) throw InternalError("detach: inconsistent parent link");
  p.children.erase(it);
  adjust_weight_upward(c.parent, -c.data_weight);
  c.parent = kNoNode;
}

void TreeTopology::attach(NodeId parent, NodeId child) {
  if (!alive(parent) || !alive(child)) throw InternalError("attach: dead node");
  TreeNode& c = mut(child);
  if (c.parent != kNoNode) throw InternalError("attach: child already has a parent");
  mut(parent).children.push_back(child);
  c.parent = parent;
  adjust_weight_upward(parent, c.data_weight);
}

void TreeTopology::reparent(NodeId child, NodeId new_parent) {
  if (!alive(child)) throw InternalError("reparent: unknown child " + std::to_string(child));
  if (!alive(new_parent)) {
    throw InternalError("reparent: unknown parent " + std::to_string(new_parent));
  }
  if (node(new_parent).kind != NodeKind::Cluster) {
    throw InternalError("reparent: new parent is a client");
  }
  if (is_descendant(new_parent, child)) {
    throw InternalError("reparent: would create a cycle at " + std::to_string(child));
  }
  detach(child);
  attach(new_parent, child);
}

void TreeTopology::remove_internal(NodeId id) {
  TreeNode& n = mut(id);
  if (!n.alive) throw InternalError("remove_internal: already removed");
  if (n.kind != NodeKind::Cluster) throw InternalError("remove_internal: node is a client");
  if (!n.children.empty()) throw InternalError("remove_internal: node still has children");
  if (n.parent != kNoNode) detach(id);
  n.alive = false;
  if (root_ == id) root_ = kNoNode;
}

void TreeTopology::set_root(NodeId id) {
  if (!alive(id)) throw InternalError("set_root: dead node");
  if (node(id).parent != kNoNode) throw InternalError("set_root: node has a parent");
  root_ = id;
}

void TreeTopology::set_params(NodeId id, ParamVector params) {
  mut(id).params = std::move(params);
}

std::vector<NodeId> TreeTopology::live_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : arena_) {
    if (n.alive) out.push_back(n.id);
  }
  return out;
}

std::vector<NodeId> TreeTopology::client_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : arena_) {
    if (n.alive && n.kind == NodeKind::Client) out.push_back(n.id);
  }
  return out;
}

std::vector<NodeId> TreeTopology::cluster_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : arena_) {
    if (n.alive && n.kind == NodeKind::Cluster) out.push_back(n.id);
  }
  return out;
}

int TreeTopology::depth(NodeId id) const {
  int d = 0;
  for (NodeId cur = node(id).parent; cur != kNoNode; cur = node(cur).parent) ++d;
  return d;
}

int TreeTopology::tree_depth() const {
  int mx = 0;
  for (const auto& n : arena_) {
    if (n.alive && n.children.empty()) mx = std::max(mx, depth(n.id));
  }
  return mx;
}

bool TreeTopology::is_descendant(NodeId id, NodeId ancestor) const {
  for (NodeId cur = id; cur != kNoNode; cur = node(cur).parent) {
    if (cur == ancestor) return true;
  }
  return false;
}

std::vector<NodeId> TreeTopology::subtree_clients(NodeId id) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    const TreeNode& n = node(cur);
    if (n.kind == NodeKind::Client) {
      out.push_back(cur);
    } else {
      // push in reverse so children come off the stack in insertion order
      for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

std::vector<NodeId> TreeTopology::post_order() const {
  std::vector<NodeId> out;
  if (root_ == kNoNode) return out;
  // two-stack post-order
  std::vector<NodeId> stack{root_}, rev;
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    rev.push_back(cur);
    for (NodeId c : node(cur).children) stack.push_back(c);
  }
  out.assign(rev.rbegin(), rev.rend());
  return out;
}

std::vector<std::string> TreeTopology::validate() const {
  std::vector<std::string> v;
  auto name = [](NodeId id) { return "node " + std::to_string(id); };

  std::size_t live = 0, parentless = 0;
  for (const auto& n : arena_) {
    if (!n.alive) continue;
    ++live;
    if (n.parent == kNoNode) ++parentless;
  }
  if (live == 0) {
    v.push_back("tree has no live nodes");
    return v;
  }
  if (root_ == kNoNode || !alive(root_)) {
    v.push_back("root unset or dead");
  } else if (node(root_).parent != kNoNode) {
    v.push_back("root has a parent");
  }
  if (parentless != 1) {
    v.push_back("expected exactly one parentless node, found " + std::to_string(parentless));
  }

  const std::size_t param_len = arena_[root_ == kNoNode ? 0 : root_].params.size();
  for (const auto& n : arena_) {
    if (!n.alive) continue;
    if (n.kind == NodeKind::Client && !n.children.empty()) {
      v.push_back(name(n.id) + ": client with children");
    }
    if (n.kind == NodeKind::Cluster && n.children.empty()) {
      v.push_back(name(n.id) + ": cluster without children");
    }
    if (n.data_weight < 0) v.push_back(name(n.id) + ": negative data weight");
    if (n.params.size() != param_len) {
      v.push_back(name(n.id) + ": param length " + std::to_string(n.params.size()) +
                  " != " + std::to_string(param_len));
    }
    std::unordered_set<NodeId> seen;
    std::int64_t sum = 0;
    for (NodeId c : n.children) {
      if (!seen.insert(c).second) v.push_back(name(n.id) + ": duplicate child " + std::to_string(c));
      if (!alive(c)) {
        v.push_back(name(n.id) + ": dead child " + std::to_string(c));
        continue;
      }
      if (node(c).parent != n.id) {
        v.push_back(name(c) + ": parent link does not match child list of " + name(n.id));
      }
      sum += node(c).data_weight;
    }
    if (n.kind == NodeKind::Cluster && sum != n.data_weight) {
      v.push_back(name(n.id) + ": weight " + std::to_string(n.data_weight) +
                  " != children sum " + std::to_string(sum));
    }
    if (n.parent != kNoNode) {
      if (!alive(n.parent)) {
        v.push_back(name(n.id) + ": dead parent " + std::to_string(n.parent));
      } else {
        const auto& pc = node(n.parent).children;
        if (std::count(pc.begin(), pc.end(), n.id) != 1) {
          v.push_back(name(n.id) + ": not listed exactly once under parent");
        }
      }
    }
  }

  // reachability from root covers all live nodes exactly once (no cycles)
  if (root_ != kNoNode && alive(root_)) {
    std::unordered_set<NodeId> visited;
    std::vector<NodeId> stack{root_};
    bool cycle = false;
    while (!stack.empty() && !cycle) {
      const NodeId cur = stack.back();
      stack.pop_back();
      if (!visited.insert(cur).second) {
        v.push_back("cycle or shared node at " + std::to_string(cur));
        cycle = true;
        break;
      }
      if (alive(cur)) {
        for (NodeId c : node(cur).children) stack.push_back(c);
      }
    }
    if (!cycle && visited.size() != live) {
      v.push_back("walk from root reached " + std::to_string(visited.size()) +
                  " of " + std::to_string(live) + " live nodes");
    }
  }
  return v;
}

ParamVector weighted_mean(const std::vector<std::pair<const ParamVector*, double>>& members) {
  if (members.empty()) throw InternalError("weighted_mean: no members");
  double total = 0.0;
  for (const auto& [p, w] : members) {
    if (w < 0.0) throw InternalError("weighted_mean: negative weight");
    total += w;
  }
  const ParamVector& first = *members[0].first;
  ParamVector out = first;
  if (total <= 0.0) return out;
  // Delta form around the first member: exact when all members are equal.
  for (std::size_t m = 1; m < members.size(); ++m) {
    const double coef = members[m].second / total;
    const ParamVector& x = *members[m].first;
    if (x.size() != out.size()) throw InternalError("weighted_mean: length mismatch");
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += coef * (x[d] - first[d]);
  }
  return out;
}

void aggregate_up(TreeTopology& tree) {
  for (NodeId id : tree.post_order()) {
    const TreeNode& n = tree.node(id);
    if (n.kind != NodeKind::Cluster) continue;
    std::vector<std::pair<const ParamVector*, double>> members;
    members.reserve(n.children.size());
    for (NodeId c : n.children) {
      members.emplace_back(&tree.node(c).params, static_cast<double>(tree.node(c).data_weight));
    }
    tree.set_params(id, weighted_mean(members));
  }
}

void refresh_upward(TreeTopology& tree, NodeId from) {
  for (NodeId cur = from; cur != kNoNode; cur = tree.node(cur).parent) {
    const TreeNode& n = tree.node(cur);
    if (n.kind != NodeKind::Cluster || n.children.empty()) continue;
    std::vector<std::pair<const ParamVector*, double>> members;
    members.reserve(n.children.size());
    for (NodeId c : n.children) {
      members.emplace_back(&tree.node(c).params, static_cast<double>(tree.node(c).data_weight));
    }
    tree.set_params(cur, weighted_mean(members));
  }
}

}  // namespace sofa
