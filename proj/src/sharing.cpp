#include "sofa/sharing.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sofa/rng.hpp"

namespace sofa {

namespace {

std::uint64_t node_stream(const SharingConfig& cfg, int round, NodeId node) {
  if (cfg.mode == SharingMode::FixedSeed) {
    return derive_seed(cfg.seed, "share", {static_cast<std::uint64_t>(node)});
  }
  return derive_seed(cfg.seed, "share",
                     {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(node)});
}

std::size_t contribution_count(double ratio, std::size_t n) {
  if (n == 0 || ratio <= 0.0) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
  return std::max<std::size_t>(k, 1);  // floor at one sample for a nonempty source
}

std::vector<Sample> subsample(const std::vector<Sample>& src, std::size_t k, Rng& rng) {
  std::vector<Sample> out;
  out.reserve(k);
  for (std::size_t i : rng.sample_without_replacement(src.size(), k)) out.push_back(src[i]);
  return out;
}

void dedup_append(std::vector<Sample>& dst, std::unordered_set<std::uint64_t>& seen,
                  const std::vector<Sample>& src) {
  for (const Sample& s : src) {
    if (seen.insert(s.id.key()).second) dst.push_back(s);
  }
}

}  // namespace

SharedPools gather(const TreeTopology& tree, const std::vector<Shard>& shards,
                   const SharingConfig& config, int round) {
  SharedPools pools;
  if (config.mode == SharingMode::Off) return pools;

  // contribution each node passes to its parent
  std::unordered_map<NodeId, std::vector<Sample>> up;
  for (NodeId id : tree.post_order()) {
    const TreeNode& n = tree.node(id);
    Rng rng(node_stream(config, round, id));
    if (n.kind == NodeKind::Client) {
      if (id >= shards.size()) throw InternalError("gather: client without shard");
      const auto& owned = shards[id].owned_train;
      up[id] = subsample(owned, contribution_count(config.ratio, owned.size()), rng);
    } else {
      std::vector<Sample> pool;
      std::unordered_set<std::uint64_t> seen;
      for (NodeId c : n.children) dedup_append(pool, seen, up[c]);
      up[id] = subsample(pool, contribution_count(config.ratio, pool.size()), rng);
      pools[id] = std::move(pool);
    }
  }
  return pools;
}

std::vector<ShareStats> distribute(const TreeTopology& tree, std::vector<Shard>& shards,
                                   const SharedPools& pools) {
  std::vector<ShareStats> stats;

  // Walk down accumulating the payload; deeper pools are merged in so clients
  // see their own subtree's pool in full but only subsampled remote data.
  struct Frame {
    NodeId id;
    std::vector<Sample> payload;
  };

  std::vector<Frame> stack;
  if (tree.root() != kNoNode) stack.push_back({tree.root(), {}});

  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    const TreeNode& n = tree.node(fr.id);

    if (n.kind == NodeKind::Client) {
      Shard& shard = shards[fr.id];
      std::unordered_set<std::uint64_t> own;
      for (const Sample& s : shard.owned_train) own.insert(s.id.key());
      for (const Sample& s : shard.owned_test) own.insert(s.id.key());

      shard.received.clear();
      ShareStats st;
      st.client = fr.id;
      const NodeId parent = n.parent;
      for (const Sample& s : fr.payload) {
        if (own.count(s.id.key())) continue;
        shard.received.push_back(s);
        ++st.n_received;
        const NodeId origin = s.id.origin_client;
        if (parent != kNoNode && tree.alive(origin) && tree.is_descendant(origin, parent)) {
          ++st.n_same_cluster;
        } else {
          ++st.n_cross_cluster;
        }
      }
      stats.push_back(st);
      continue;
    }

    std::vector<Sample> payload = std::move(fr.payload);
    std::unordered_set<std::uint64_t> seen;
    for (const Sample& s : payload) seen.insert(s.id.key());
    if (auto it = pools.find(fr.id); it != pools.end()) {
      dedup_append(payload, seen, it->second);
    }
    // reverse push to visit children in insertion order
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      stack.push_back({*it, payload});
    }
  }

  std::sort(stats.begin(), stats.end(),
            [](const ShareStats& a, const ShareStats& b) { return a.client < b.client; });
  return stats;
}

}  // namespace sofa
