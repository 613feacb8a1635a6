#include "sofa/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sofa/parallel.hpp"
#include "sofa/rng.hpp"

namespace sofa {

double pairwise_distance(const ParamVector& a, const ParamVector& b, DistanceMetric metric) {
  if (a.size() != b.size()) {
    throw InternalError("distance: length mismatch " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  if (metric == DistanceMetric::Euclidean) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return (na == nb) ? 0.0 : 1.0;
  double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  cosine = std::clamp(cosine, -1.0, 1.0);
  return 1.0 - cosine;
}

namespace {

template <typename ForEach>
std::vector<double> matrix_impl(const std::vector<const ParamVector*>& pts,
                                DistanceMetric metric, ForEach&& for_each) {
  const std::size_t n = pts.size();
  std::vector<double> m(n * n, 0.0);
  for_each(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = pairwise_distance(*pts[i], *pts[j], metric);
      m[i * n + j] = d;
      m[j * n + i] = d;
    }
  });
  return m;
}

}  // namespace

std::vector<double> distance_matrix(const std::vector<const ParamVector*>& points,
                                    DistanceMetric metric) {
  return matrix_impl(points, metric,
                     [](std::size_t n, auto&& body) { parallel_for(n, body); });
}

std::vector<double> distance_matrix_serial(const std::vector<const ParamVector*>& points,
                                           DistanceMetric metric) {
  return matrix_impl(points, metric,
                     [](std::size_t n, auto&& body) { serial_for(n, body); });
}

std::vector<int> kmeans(const std::vector<const ParamVector*>& points, int k,
                        std::uint64_t seed, int max_iter) {
  const std::size_t n = points.size();
  if (k < 1) throw InternalError("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) throw InternalError("kmeans: k > number of points");
  const std::size_t dim = points[0]->size();

  Rng rng(seed);
  std::vector<ParamVector> centroids;
  centroids.reserve(k);

  // k-means++ seeding
  centroids.push_back(*points[rng.uniform_int(n)]);
  std::vector<double> d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& cen : centroids) {
        const double d = pairwise_distance(*points[i], cen, DistanceMetric::Euclidean);
        best = std::min(best, d * d);
      }
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run >= target) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centroids.push_back(*points[pick]);
  }

  std::vector<int> assign(n, 0), prev(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    // assignment step
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = pairwise_distance(*points[i], centroids[c], DistanceMetric::Euclidean);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assign[i] = best_c;
    }

    // reseed empty clusters with the farthest point from its centroid
    for (int c = 0; c < k; ++c) {
      if (std::find(assign.begin(), assign.end(), c) != assign.end()) continue;
      double worst = -1.0;
      std::size_t far = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = pairwise_distance(*points[i], centroids[assign[i]],
                                           DistanceMetric::Euclidean);
        if (d > worst) {
          worst = d;
          far = i;
        }
      }
      centroids[c] = *points[far];
      assign[far] = c;
    }

    if (assign == prev) break;
    prev = assign;

    // update step
    std::vector<std::size_t> counts(k, 0);
    std::vector<ParamVector> sums(k, ParamVector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      counts[assign[i]]++;
      const ParamVector& x = *points[i];
      ParamVector& s = sums[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / counts[c];
    }
  }
  return assign;
}

double incoherence(const std::vector<const ParamVector*>& members, DistanceMetric metric) {
  if (members.empty()) throw InternalError("incoherence: empty member list");
  if (members.size() == 1) return 0.0;
  const std::size_t dim = members[0]->size();
  ParamVector centroid(dim, 0.0);
  for (const ParamVector* m : members) {
    for (std::size_t d = 0; d < dim; ++d) centroid[d] += (*m)[d];
  }
  for (auto& v : centroid) v /= static_cast<double>(members.size());
  double acc = 0.0;
  for (const ParamVector* m : members) acc += pairwise_distance(*m, centroid, metric);
  return acc / static_cast<double>(members.size());
}

TreeTopology dmac_build(const std::vector<LeafInit>& leaves, const DmacConfig& config,
                        std::vector<DmacTraceStep>* trace) {
  if (leaves.empty()) throw InternalError("dmac_build: no leaves");
  if (config.gamma < 1.0) throw ConfigError("dmac: gamma must be >= 1");

  TreeTopology tree;
  std::vector<NodeId> top;
  top.reserve(leaves.size());
  for (const auto& leaf : leaves) {
    top.push_back(tree.add_client(leaf.params, leaf.weight));
  }

  while (top.size() > 1) {
    const std::size_t n = top.size();
    std::vector<const ParamVector*> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = &tree.node(top[i]).params;
    const auto dist = distance_matrix(pts, config.metric);

    double tau = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) tau = std::min(tau, dist[i * n + j]);
    }
    const double band = tau * config.gamma;

    // connected components of the threshold graph, discovered in index order
    std::vector<int> comp(n, -1);
    int n_comp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (comp[i] >= 0) continue;
      const int id = n_comp++;
      std::vector<std::size_t> stack{i};
      comp[i] = id;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
          if (comp[v] < 0 && dist[u * n + v] <= band && u != v) {
            comp[v] = id;
            stack.push_back(v);
          }
        }
      }
    }

    DmacTraceStep step;
    step.tau = tau;
    std::vector<NodeId> next;
    for (int c = 0; c < n_comp; ++c) {
      std::vector<NodeId> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] == c) members.push_back(top[i]);
      }
      if (members.size() == 1) {
        next.push_back(members[0]);
        continue;
      }
      std::vector<std::pair<const ParamVector*, double>> wm;
      wm.reserve(members.size());
      for (NodeId m : members) {
        wm.emplace_back(&tree.node(m).params, static_cast<double>(tree.node(m).data_weight));
      }
      const NodeId parent = tree.add_cluster(members, weighted_mean(wm));
      next.push_back(parent);
      step.merged_groups.push_back(std::move(members));
    }
    if (trace) trace->push_back(std::move(step));
    top = std::move(next);
  }

  tree.set_root(top[0]);
  return tree;
}

}  // namespace sofa
