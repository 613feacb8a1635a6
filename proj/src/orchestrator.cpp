#include "sofa/orchestrator.hpp"

#include <algorithm>
#include <cmath>

#include "sofa/parallel.hpp"
#include "sofa/rng.hpp"

namespace sofa {

void RunConfig::check() const {
  if (num_clients < 1) throw ConfigError("config: num_clients must be >= 1");
  if (rounds < 0) throw ConfigError("config: rounds must be >= 0");
  if (local_epochs < 0) throw ConfigError("config: local_epochs must be >= 0");
  if (warmup_epochs < 0) throw ConfigError("config: warmup_epochs must be >= 0");
  if (lr <= 0.0) throw ConfigError("config: lr must be positive");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (dirichlet_alpha <= 0.0) throw ConfigError("config: dirichlet_alpha must be positive");
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw ConfigError("config: test_fraction must be in [0, 1)");
  }
  if (sharing.ratio < 0.0 || sharing.ratio > 1.0) {
    throw ConfigError("config: sharing_ratio must be in [0, 1]");
  }
  if (dmac.gamma < 1.0) throw ConfigError("config: dmac_gamma must be >= 1");
  if (shape.epsilon < 0.0) throw ConfigError("config: shape_epsilon must be >= 0");
  if (shape_every < 0) throw ConfigError("config: shape_every must be >= 0");
  if (objective.alpha < 0.0 || objective.beta < 0.0) {
    throw ConfigError("config: objective weights must be >= 0");
  }
  if (downward_mix < 0.0 || downward_mix > 1.0) {
    throw ConfigError("config: downward_mix must be in [0, 1]");
  }
}

namespace {

SgdOptions local_opts(const RunConfig& cfg, int epochs) {
  SgdOptions o;
  o.lr = cfg.lr;
  o.epochs = epochs;
  o.batch_size = cfg.batch_size;
  o.epochs_mode = cfg.epochs_mode;
  return o;
}

// Training views of every client under `id`, concatenated in traversal order.
std::vector<const Sample*> subtree_train_view(const TreeTopology& tree, NodeId id,
                                              const std::vector<Shard>& shards) {
  std::vector<const Sample*> v;
  for (NodeId c : tree.subtree_clients(id)) {
    const auto cv = training_view(shards[c]);
    v.insert(v.end(), cv.begin(), cv.end());
  }
  return v;
}

std::vector<const Sample*> subtree_test_view(const TreeTopology& tree, NodeId id,
                                             const std::vector<Shard>& shards) {
  std::vector<const Sample*> v;
  for (NodeId c : tree.subtree_clients(id)) {
    for (const auto& s : shards[c].owned_test) v.push_back(&s);
  }
  return v;
}

void require_valid(const TreeTopology& tree, const std::string& where) {
  const auto violations = tree.validate();
  if (!violations.empty()) {
    std::string msg = "tree invariant failure " + where + ":";
    for (const auto& v : violations) msg += "\n  " + v;
    throw InternalError(msg);
  }
}

TreeSnapshot snapshot(const TreeTopology& tree, int round) {
  TreeSnapshot snap;
  snap.round = round;
  for (NodeId id : tree.live_ids()) snap.nodes.push_back(tree.node(id));
  return snap;
}

// Per-node test evaluation; clients on their own split, clusters on the
// union of descendant splits. Nodes without test data get zeroed stats.
std::vector<NodeRoundStats> eval_nodes(const TreeTopology& tree,
                                       const std::vector<Shard>& shards,
                                       const ParamLayout& layout) {
  const auto ids = tree.live_ids();
  std::vector<NodeRoundStats> stats(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    const NodeId id = ids[i];
    const TreeNode& n = tree.node(id);
    NodeRoundStats st;
    st.id = id;
    st.kind = n.kind;
    const auto tv = (n.kind == NodeKind::Client) ? test_view(shards[id])
                                                 : subtree_test_view(tree, id, shards);
    if (!tv.empty()) {
      const EvalResult ev = evaluate(n.params, layout, tv);
      st.test_loss = ev.loss;
      st.test_accuracy = ev.accuracy;
    }
    stats[i] = std::move(st);
  });
  return stats;
}

}  // namespace

TreeTopology warmup_and_cluster(const std::vector<Shard>& shards, const ModelSpec& spec,
                                const RunConfig& config) {
  const ParamLayout layout(spec);
  const ParamVector x0 = init_params(spec, derive_seed(config.seed, "model_init", {0}));

  std::vector<LeafInit> leaves(shards.size());
  parallel_for(shards.size(), [&](std::size_t u) {
    ParamVector p = x0;
    if (config.warmup_epochs > 0) {
      p = sgd_epochs(x0, layout, shards[u], local_opts(config, config.warmup_epochs),
                     derive_seed(config.seed, "warmup", {u}));
    }
    leaves[u] = {std::move(p), static_cast<std::int64_t>(shards[u].owned_train.size())};
  });

  TreeTopology tree = dmac_build(leaves, config.dmac);
  require_valid(tree, "after clustering");
  return tree;
}

ObjectiveValue objective_value(const TreeTopology& tree, const std::vector<Shard>& shards,
                               const ParamLayout& layout, const RunConfig& config) {
  ObjectiveValue obj;
  const auto clusters = tree.cluster_ids();
  if (clusters.empty()) return obj;

  double weight_total = 0.0;
  for (NodeId j : clusters) weight_total += static_cast<double>(tree.node(j).data_weight);

  struct Terms {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  };
  std::vector<Terms> per(clusters.size());

  parallel_for(clusters.size(), [&](std::size_t idx) {
    const NodeId j = clusters[idx];
    const TreeNode& cj = tree.node(j);
    const double wj = static_cast<double>(cj.data_weight) / weight_total;

    Terms t;
    for (NodeId u : cj.children) {
      const TreeNode& cu = tree.node(u);
      const double wu = static_cast<double>(cu.data_weight) / static_cast<double>(cj.data_weight);
      const auto view = (cu.kind == NodeKind::Client)
                            ? training_view(shards[u])
                            : subtree_train_view(tree, u, shards);
      const double f = view.empty() ? 0.0 : evaluate(cu.params, layout, view).loss;
      t.t1 += wj * wu * f;
      t.t3 += config.objective.beta * pairwise_distance(cu.params, cj.params, config.dmac.metric);
    }
    const auto& kids = cj.children;
    double spread = 0.0;
    for (std::size_t a = 0; a < kids.size(); ++a) {
      for (std::size_t b = a + 1; b < kids.size(); ++b) {
        spread += pairwise_distance(tree.node(kids[a]).params, tree.node(kids[b]).params,
                                    config.dmac.metric);
      }
    }
    t.t2 = config.objective.alpha * spread / static_cast<double>(kids.size());
    per[idx] = t;
  });

  for (const Terms& t : per) {
    obj.term1 += t.t1;
    obj.term2 += t.t2;
    obj.term3 += t.t3;
  }
  obj.total = obj.term1 + obj.term2 + obj.term3;
  return obj;
}

SimResult run_sofa(const RunConfig& config, std::vector<Shard> shards, const ModelSpec& spec,
                   const std::function<void(int, std::vector<Shard>&)>& intervention) {
  config.check();
  if (static_cast<int>(shards.size()) != config.num_clients) {
    throw ConfigError("run: shard count " + std::to_string(shards.size()) +
                      " != num_clients " + std::to_string(config.num_clients));
  }
  set_threads(config.threads);
  const ParamLayout layout(spec);

  TreeTopology tree = warmup_and_cluster(shards, spec, config);

  ShapeConfig shape_cfg = config.shape;
  shape_cfg.metric = config.dmac.metric;
  resolve_auto_thresholds(tree, shape_cfg);

  SharingConfig sharing_cfg = config.sharing;
  sharing_cfg.seed = derive_seed(config.seed, "sharing");

  const auto clients = tree.client_ids();

  SimResult result;

  // Round 0: warm-up evaluation only.
  {
    RoundRecord rec;
    rec.round = 0;
    rec.nodes = eval_nodes(tree, shards, layout);
    for (auto& st : rec.nodes) {
      if (st.kind == NodeKind::Client) {
        const auto view = training_view(shards[st.id]);
        const double loss = view.empty() ? 0.0 : evaluate(tree.node(st.id).params, layout, view).loss;
        st.train_loss_start = st.train_loss_end = loss;
      }
    }
    const ObjectiveValue obj = objective_value(tree, shards, layout, config);
    rec.objective_total = obj.total;
    rec.objective_term1 = obj.term1;
    rec.objective_term2 = obj.term2;
    rec.objective_term3 = obj.term3;
    result.trees.push_back(snapshot(tree, 0));
    result.rounds.push_back(std::move(rec));
  }

  for (int r = 1; r <= config.rounds; ++r) {
    if (intervention) intervention(r, shards);

    // Optional pull of client models toward their parent aggregate.
    if (config.downward_mix > 0.0) {
      const double lam = config.downward_mix;
      for (NodeId u : clients) {
        const NodeId p = tree.node(u).parent;
        if (p == kNoNode) continue;
        ParamVector mixed = tree.node(u).params;
        const ParamVector& anchor = tree.node(p).params;
        for (std::size_t d = 0; d < mixed.size(); ++d) {
          mixed[d] = (1.0 - lam) * mixed[d] + lam * anchor[d];
        }
        tree.set_params(u, std::move(mixed));
      }
    }

    // Proximal anchors are the parent aggregates at round start.
    std::vector<ParamVector> anchors;
    if (config.objective.beta > 0.0) {
      anchors.resize(clients.size());
      for (std::size_t i = 0; i < clients.size(); ++i) {
        const NodeId p = tree.node(clients[i]).parent;
        anchors[i] = (p == kNoNode) ? tree.node(clients[i]).params : tree.node(p).params;
      }
    }

    struct LocalOut {
      ParamVector params;
      double loss_start = 0.0;
      double loss_end = 0.0;
    };
    std::vector<LocalOut> local(clients.size());
    parallel_for(clients.size(), [&](std::size_t i) {
      const NodeId u = clients[i];
      const auto view = training_view(shards[u]);
      LocalOut out;
      out.loss_start = evaluate(tree.node(u).params, layout, view).loss;
      SgdOptions opt = local_opts(config, config.local_epochs);
      if (config.objective.beta > 0.0) opt.prox = ProxTerm{config.objective.beta, anchors[i]};
      out.params = sgd_epochs(tree.node(u).params, layout, shards[u], opt,
                              derive_seed(config.seed, "local",
                                          {static_cast<std::uint64_t>(r), u}));
      out.loss_end = evaluate(out.params, layout, view).loss;
      local[i] = std::move(out);
    });
    for (std::size_t i = 0; i < clients.size(); ++i) {
      tree.set_params(clients[i], std::move(local[i].params));
    }

    aggregate_up(tree);

    RoundRecord rec;
    rec.round = r;
    rec.nodes = eval_nodes(tree, shards, layout);
    for (auto& st : rec.nodes) {
      if (st.kind == NodeKind::Client) {
        const auto it = std::find(clients.begin(), clients.end(), st.id);
        const std::size_t i = static_cast<std::size_t>(it - clients.begin());
        st.train_loss_start = local[i].loss_start;
        st.train_loss_end = local[i].loss_end;
      }
    }

    const ObjectiveValue obj = objective_value(tree, shards, layout, config);
    rec.objective_total = obj.total;
    rec.objective_term1 = obj.term1;
    rec.objective_term2 = obj.term2;
    rec.objective_term3 = obj.term3;

    if (config.shape_every > 0 && r % config.shape_every == 0) {
      rec.shape_edits = shape_round(tree, shape_cfg, derive_seed(config.seed, "shape",
                                                                 {static_cast<std::uint64_t>(r)}));
      rec.shape_edit_count = static_cast<int>(rec.shape_edits.size());
      try {
        require_valid(tree, "after restructuring in round " + std::to_string(r));
      } catch (const InternalError& e) {
        std::string msg = e.what();
        msg += "\nedit log:";
        for (const auto& ed : rec.shape_edits) {
          msg += "\n  " + to_string(ed.op);
          for (NodeId nid : ed.nodes) msg += " " + std::to_string(nid);
        }
        throw InternalError(msg);
      }
    }

    if (config.sharing.mode != SharingMode::Off) {
      const SharedPools pools = gather(tree, shards, sharing_cfg, r);
      rec.sharing = distribute(tree, shards, pools);
    }

    result.trees.push_back(snapshot(tree, r));
    result.rounds.push_back(std::move(rec));
  }

  // Final fairness report from the last round's client evaluations.
  const RoundRecord& last = result.rounds.back();
  std::vector<double> per_client;
  double total_sum = 0.0;
  std::size_t total_n = 0;
  for (const auto& st : last.nodes) {
    const bool has_test = (st.kind == NodeKind::Client)
                              ? !shards[st.id].owned_test.empty()
                              : !subtree_test_view(tree, st.id, shards).empty();
    if (!has_test) continue;
    if (st.kind == NodeKind::Client) per_client.push_back(st.test_accuracy);
    total_sum += st.test_accuracy;
    ++total_n;
  }
  result.report = build_report(per_client);
  result.report.total_average_accuracy =
      total_n > 0 ? total_sum / static_cast<double>(total_n) : 0.0;
  result.report.label = "sofa";
  return result;
}

}  // namespace sofa
