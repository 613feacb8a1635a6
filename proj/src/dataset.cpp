#include "sofa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sofa/rng.hpp"

namespace sofa {

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t offset) {
  unsigned char buf[4];
  if (!f.read(reinterpret_cast<char*>(buf), 4)) {
    throw DataError(path + ": truncated at byte " + std::to_string(offset));
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<char*>(buf), 4);
}

// Largest-remainder apportionment of n by proportions p.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& p) {
  const std::size_t k = p.size();
  std::vector<std::size_t> counts(k, 0);
  std::vector<std::pair<double, std::size_t>> rema(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = p[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(exact);
    assigned += counts[i];
    rema[i] = {exact - static_cast<double>(counts[i]), i};
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t j = 0; assigned < n; ++j, ++assigned) counts[rema[j % k].second]++;
  return counts;
}

void split_train_test(std::vector<Sample> owned, double test_fraction,
                      std::uint64_t seed, Shard& out) {
  Rng rng(seed);
  rng.shuffle(owned);
  const std::size_t n = owned.size();
  std::size_t n_test = 0;
  if (n >= 2) {
    n_test = static_cast<std::size_t>(static_cast<double>(n) * test_fraction + 0.5);
    n_test = std::min(std::max<std::size_t>(n_test, 1), n - 1);
  }
  out.owned_test.assign(owned.end() - static_cast<std::ptrdiff_t>(n_test), owned.end());
  owned.resize(n - n_test);
  out.owned_train = std::move(owned);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw DataError("cannot open " + images_path);
  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw DataError("cannot open " + labels_path);

  const std::uint32_t magic_i = read_be32(fi, images_path, 0);
  if (magic_i != 0x00000803u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x (want 0x00000803)", magic_i);
    throw DataError(images_path + ": " + buf);
  }
  const std::uint32_t n = read_be32(fi, images_path, 4);
  const std::uint32_t rows = read_be32(fi, images_path, 8);
  const std::uint32_t cols = read_be32(fi, images_path, 12);

  const std::uint32_t magic_l = read_be32(fl, labels_path, 0);
  if (magic_l != 0x00000801u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x (want 0x00000801)", magic_l);
    throw DataError(labels_path + ": " + buf);
  }
  const std::uint32_t n_labels = read_be32(fl, labels_path, 4);
  if (n != n_labels) {
    throw DataError("image/label count mismatch: " + std::to_string(n) + " vs " +
                    std::to_string(n_labels));
  }

  Dataset ds;
  ds.input_dim = static_cast<int>(rows * cols);
  ds.features.resize(static_cast<std::size_t>(n) * ds.input_dim);
  ds.labels.resize(n);

  std::vector<unsigned char> pix(static_cast<std::size_t>(n) * ds.input_dim);
  if (!fi.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()))) {
    throw DataError(images_path + ": truncated at byte " +
                    std::to_string(16 + fi.gcount()));
  }
  for (std::size_t i = 0; i < pix.size(); ++i) {
    ds.features[i] = static_cast<float>(pix[i]) / 255.0f;
  }

  std::vector<unsigned char> lab(n);
  if (!fl.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(lab.size()))) {
    throw DataError(labels_path + ": truncated at byte " +
                    std::to_string(8 + fl.gcount()));
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path, int rows, int cols) {
  if (rows * cols != ds.input_dim) {
    throw DataError("save_idx: rows*cols does not match input_dim");
  }
  std::ofstream fi(images_path, std::ios::binary);
  if (!fi) throw DataError("cannot write " + images_path);
  write_be32(fi, 0x00000803u);
  write_be32(fi, static_cast<std::uint32_t>(ds.size()));
  write_be32(fi, static_cast<std::uint32_t>(rows));
  write_be32(fi, static_cast<std::uint32_t>(cols));
  for (float v : ds.features) {
    const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0f));
    fi.write(reinterpret_cast<const char*>(&b), 1);
  }

  std::ofstream fl(labels_path, std::ios::binary);
  if (!fl) throw DataError("cannot write " + labels_path);
  write_be32(fl, 0x00000801u);
  write_be32(fl, static_cast<std::uint32_t>(ds.size()));
  for (int y : ds.labels) {
    const unsigned char b = static_cast<unsigned char>(y);
    fl.write(reinterpret_cast<const char*>(&b), 1);
  }
}

Dataset stratified_subset(const Dataset& ds, std::size_t total, std::uint64_t seed) {
  if (total == 0 || total >= ds.size()) return ds;
  const int k = ds.num_classes;
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

  Rng rng(derive_seed(seed, "stratify"));
  std::vector<std::size_t> chosen;
  chosen.reserve(total);
  const std::size_t per_class = total / k;
  std::size_t leftover = total - per_class * k;
  for (int c = 0; c < k; ++c) {
    std::size_t want = per_class + (static_cast<std::size_t>(c) < leftover ? 1 : 0);
    want = std::min(want, by_class[c].size());
    for (std::size_t j : rng.sample_without_replacement(by_class[c].size(), want)) {
      chosen.push_back(by_class[c][j]);
    }
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.input_dim = ds.input_dim;
  out.num_classes = ds.num_classes;
  out.features.reserve(chosen.size() * ds.input_dim);
  out.labels.reserve(chosen.size());
  for (std::size_t i : chosen) {
    const float* r = ds.row(i);
    out.features.insert(out.features.end(), r, r + ds.input_dim);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

std::vector<Shard> dirichlet_partition(const Dataset& ds, int num_clients,
                                       double alpha, std::uint64_t seed,
                                       double test_fraction) {
  if (num_clients < 1) throw DataError("dirichlet_partition: num_clients must be >= 1");
  if (alpha <= 0.0) throw DataError("dirichlet_partition: alpha must be positive");
  if (ds.size() < static_cast<std::size_t>(num_clients)) {
    throw DataError("dirichlet_partition: fewer samples than clients");
  }

  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

  // Dataset row indices per client; redraw the whole assignment while some
  // client is empty, then fix up deterministically.
  std::vector<std::vector<std::size_t>> assigned;
  const int max_retries = 20;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    assigned.assign(num_clients, {});
    for (int c = 0; c < ds.num_classes; ++c) {
      if (by_class[c].empty()) continue;
      Rng rng(derive_seed(seed, "partition",
                          {static_cast<std::uint64_t>(attempt), static_cast<std::uint64_t>(c)}));
      auto rows = by_class[c];
      rng.shuffle(rows);
      const auto props = rng.dirichlet(alpha, static_cast<std::size_t>(num_clients));
      const auto counts = apportion(rows.size(), props);
      std::size_t pos = 0;
      for (int u = 0; u < num_clients; ++u) {
        for (std::size_t j = 0; j < counts[u]; ++j) assigned[u].push_back(rows[pos++]);
      }
    }
    const bool ok = std::none_of(assigned.begin(), assigned.end(),
                                 [](const auto& v) { return v.empty(); });
    if (ok) break;
    if (attempt == max_retries - 1) {
      // Round-robin fixup: donate from the currently richest client.
      for (int u = 0; u < num_clients; ++u) {
        while (assigned[u].empty()) {
          auto rich = std::max_element(assigned.begin(), assigned.end(),
                                       [](const auto& a, const auto& b) {
                                         return a.size() < b.size();
                                       });
          assigned[u].push_back(rich->back());
          rich->pop_back();
        }
      }
    }
  }

  std::vector<Shard> shards(num_clients);
  for (int u = 0; u < num_clients; ++u) {
    std::vector<Sample> owned;
    owned.reserve(assigned[u].size());
    for (std::size_t k = 0; k < assigned[u].size(); ++k) {
      const std::size_t row = assigned[u][k];
      Sample s;
      s.id = {static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(k)};
      s.x.assign(ds.row(row), ds.row(row) + ds.input_dim);
      s.label = ds.labels[row];
      owned.push_back(std::move(s));
    }
    split_train_test(std::move(owned), test_fraction,
                     derive_seed(seed, "split", {static_cast<std::uint64_t>(u)}),
                     shards[u]);
  }
  return shards;
}

std::vector<Shard> synthetic_clusters(int num_clusters, int clients_per_cluster,
                                      int samples_per_client, int input_dim,
                                      int num_classes, double separation,
                                      std::uint64_t seed, double test_fraction) {
  if (separation <= 0.0) throw DataError("synthetic_clusters: separation must be positive");

  // Per-class base means shared by all clusters, plus a per-cluster shift.
  std::vector<std::vector<double>> base(num_classes, std::vector<double>(input_dim));
  {
    Rng rng(derive_seed(seed, "syn_base"));
    for (auto& m : base)
      for (auto& v : m) v = 1.5 * rng.normal();
  }
  std::vector<std::vector<double>> shift(num_clusters, std::vector<double>(input_dim));
  {
    Rng rng(derive_seed(seed, "syn_shift"));
    for (auto& m : shift)
      for (auto& v : m) v = rng.normal();
  }

  std::vector<Shard> shards;
  shards.reserve(static_cast<std::size_t>(num_clusters) * clients_per_cluster);
  for (int c = 0; c < num_clusters; ++c) {
    for (int i = 0; i < clients_per_cluster; ++i) {
      const int client = c * clients_per_cluster + i;
      Rng rng(derive_seed(seed, "syn_client", {static_cast<std::uint64_t>(client)}));
      std::vector<Sample> owned;
      owned.reserve(samples_per_client);
      for (int s = 0; s < samples_per_client; ++s) {
        Sample smp;
        smp.id = {static_cast<std::uint32_t>(client), static_cast<std::uint32_t>(s)};
        smp.label = static_cast<int>(rng.uniform_int(num_classes));
        smp.x.resize(input_dim);
        for (int d = 0; d < input_dim; ++d) {
          const double raw = base[smp.label][d] + separation * shift[c][d] + 0.8 * rng.normal();
          smp.x[d] = static_cast<float>(1.0 / (1.0 + std::exp(-raw)));
        }
        owned.push_back(std::move(smp));
      }
      Shard sh;
      split_train_test(std::move(owned), test_fraction,
                       derive_seed(seed, "split", {static_cast<std::uint64_t>(client)}), sh);
      shards.push_back(std::move(sh));
    }
  }
  return shards;
}

}  // namespace sofa
