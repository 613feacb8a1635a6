#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sofa {

// Flat model parameters. Every vector in one run shares the same layout
// (see ParamLayout in model.hpp).
using ParamVector = std::vector<double>;

// Stable handle into the tree arena. Ids are never reused within a run;
// removed nodes leave tombstones.
using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class NodeKind { Client, Cluster };

// Identifies a sample across the whole simulation: which client originally
// owns it and its index within that client's shard. Used for deduplication
// when shared samples travel through the tree.
struct SampleId {
  std::uint32_t origin_client = 0;
  std::uint32_t local_index = 0;

  friend bool operator==(const SampleId&, const SampleId&) = default;
  std::uint64_t key() const {
    return (static_cast<std::uint64_t>(origin_client) << 32) | local_index;
  }
};

struct Sample {
  SampleId id;
  std::vector<float> x;
  int label = 0;
};

// Error categories mapped to CLI exit codes (3, 4, 5).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sofa
