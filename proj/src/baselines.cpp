#include "sofa/baselines.hpp"

#include <limits>

#include "sofa/parallel.hpp"
#include "sofa/rng.hpp"

namespace sofa {

HypClusterState hypcluster_init(const ModelSpec& spec, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("hypcluster: k must be >= 1");
  HypClusterState st;
  st.k = k;
  for (int i = 0; i < k; ++i) {
    st.models.push_back(
        init_params(spec, derive_seed(seed, "model_init", {static_cast<std::uint64_t>(i)})));
  }
  return st;
}

namespace {

int select_model(const HypClusterState& st, const ParamLayout& layout, const Shard& shard) {
  std::vector<const Sample*> view;
  for (const auto& s : shard.owned_train) view.push_back(&s);
  double best = std::numeric_limits<double>::max();
  int pick = 0;
  for (int m = 0; m < st.k; ++m) {
    const double loss = evaluate(st.models[m], layout, view).loss;
    if (loss < best) {
      best = loss;
      pick = m;
    }
  }
  return pick;
}

}  // namespace

void hypcluster_round(HypClusterState& state, const std::vector<Shard>& shards,
                      const ParamLayout& layout, const RunConfig& config, int round) {
  const std::size_t n = shards.size();
  std::vector<int> sel(n, 0);
  std::vector<ParamVector> trained(n);

  parallel_for(n, [&](std::size_t u) {
    sel[u] = select_model(state, layout, shards[u]);
    SgdOptions opt;
    opt.lr = config.lr;
    opt.epochs = config.local_epochs;
    opt.batch_size = config.batch_size;
    opt.epochs_mode = config.epochs_mode;
    trained[u] = sgd_epochs(state.models[sel[u]], layout, shards[u], opt,
                            derive_seed(config.seed, "local",
                                        {static_cast<std::uint64_t>(round), u}));
  });

  for (int m = 0; m < state.k; ++m) {
    std::vector<std::pair<const ParamVector*, double>> members;
    for (std::size_t u = 0; u < n; ++u) {
      if (sel[u] == m) {
        members.emplace_back(&trained[u], static_cast<double>(shards[u].owned_train.size()));
      }
    }
    if (!members.empty()) state.models[m] = weighted_mean(members);
  }
  state.assignment = sel;
}

SimResult run_hypcluster(const RunConfig& config, const std::vector<Shard>& shards,
                         const ModelSpec& spec, int k) {
  config.check();
  set_threads(config.threads);
  const ParamLayout layout(spec);
  HypClusterState state = hypcluster_init(spec, k, config.seed);

  SimResult result;
  auto eval_clients = [&](int round) {
    RoundRecord rec;
    rec.round = round;
    rec.nodes.resize(shards.size());
    parallel_for(shards.size(), [&](std::size_t u) {
      NodeRoundStats st;
      st.id = static_cast<NodeId>(u);
      st.kind = NodeKind::Client;
      const int m = select_model(state, layout, shards[u]);
      const auto tv = test_view(shards[u]);
      if (!tv.empty()) {
        const EvalResult ev = evaluate(state.models[m], layout, tv);
        st.test_loss = ev.loss;
        st.test_accuracy = ev.accuracy;
      }
      std::vector<const Sample*> train;
      for (const auto& s : shards[u].owned_train) train.push_back(&s);
      st.train_loss_end = st.train_loss_start = evaluate(state.models[m], layout, train).loss;
      rec.nodes[u] = std::move(st);
    });
    return rec;
  };

  result.rounds.push_back(eval_clients(0));
  for (int r = 1; r <= config.rounds; ++r) {
    hypcluster_round(state, shards, layout, config, r);
    result.rounds.push_back(eval_clients(r));
  }

  std::vector<double> per_client;
  for (const auto& st : result.rounds.back().nodes) {
    if (!shards[st.id].owned_test.empty()) per_client.push_back(st.test_accuracy);
  }
  result.report = build_report(per_client);
  result.report.label = "hypcluster_k" + std::to_string(k);
  return result;
}

}  // namespace sofa
