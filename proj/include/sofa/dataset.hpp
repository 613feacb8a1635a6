#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sofa/types.hpp"

namespace sofa {

// Dense sample matrix with labels. Features live in [0, 1].
struct Dataset {
  std::vector<float> features;  // row-major, n_samples x input_dim
  std::vector<int> labels;
  int input_dim = 0;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  const float* row(std::size_t i) const { return features.data() + i * input_dim; }
};

// A client's local data. `owned_train` and `owned_test` come from the
// 90/10 split applied before any sharing; `received` is replaced every
// sharing round. Training iterates owned_train followed by received.
struct Shard {
  std::vector<Sample> owned_train;
  std::vector<Sample> owned_test;
  std::vector<Sample> received;

  std::size_t train_size() const { return owned_train.size() + received.size(); }
};

// IDX files, big endian: images magic 0x00000803 with dims [n, rows, cols],
// labels magic 0x00000801 with [n]. Pixel bytes are scaled to [0,1] by /255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path, int rows, int cols);

// Takes `total` samples spread evenly over the classes (uniformly at random
// within each class). total == 0 keeps the whole dataset.
Dataset stratified_subset(const Dataset& ds, std::size_t total, std::uint64_t seed);

// Splits each class's samples across clients with proportions drawn from
// Dirichlet(alpha). Every sample lands in exactly one shard; a bounded
// redraw-then-fixup pass guarantees no client ends up empty. Each shard is
// then split into owned_train/owned_test by `test_fraction`.
std::vector<Shard> dirichlet_partition(const Dataset& ds, int num_clients,
                                       double alpha, std::uint64_t seed,
                                       double test_fraction = 0.1);

// Test fixture: groups of clients drawing from shared per-(cluster, class)
// Gaussian means; clusters are separated by `separation` in mean space.
// Labels are uniform per client. Features squashed into [0,1].
std::vector<Shard> synthetic_clusters(int num_clusters, int clients_per_cluster,
                                      int samples_per_client, int input_dim,
                                      int num_classes, double separation,
                                      std::uint64_t seed,
                                      double test_fraction = 0.1);

}  // namespace sofa
