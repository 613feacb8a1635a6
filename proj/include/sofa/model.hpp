#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sofa/dataset.hpp"
#include "sofa/types.hpp"

namespace sofa {

// MLP shape: input -> hidden... -> num_classes, tanh hidden activations,
// softmax + mean cross-entropy at the output.
struct ModelSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int num_classes = 0;

  void check() const;
};

// Offsets of each layer's weights/biases inside the flat ParamVector.
// Layer l maps dims[l] -> dims[l+1]; weights are row-major [out][in],
// followed by the biases.
struct ParamLayout {
  std::vector<int> dims;
  std::vector<std::size_t> weight_offset;
  std::vector<std::size_t> bias_offset;
  std::size_t total = 0;

  explicit ParamLayout(const ModelSpec& spec);
  std::size_t num_layers() const { return dims.size() - 1; }
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct GradResult {
  double loss = 0.0;
  double accuracy = 0.0;
  ParamVector grad;
};

// Pull toward an anchor: adds beta * (params - anchor) to every gradient step.
struct ProxTerm {
  double beta = 0.0;
  ParamVector anchor;
};

struct SgdOptions {
  double lr = 0.05;
  int epochs = 1;
  int batch_size = 32;
  // When false, `epochs` counts individual minibatch steps instead.
  bool epochs_mode = true;
  std::optional<ProxTerm> prox;
};

// Deterministic Glorot-uniform weights, zero biases.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

EvalResult evaluate(const ParamVector& params, const ParamLayout& layout,
                    const std::vector<const Sample*>& batch);
GradResult forward_loss_grad(const ParamVector& params, const ParamLayout& layout,
                             const std::vector<const Sample*>& batch);

// Minibatch SGD over owned_train followed by received, reshuffled each epoch.
// Deterministic given the seed. Throws InternalError if any parameter goes
// non-finite.
ParamVector sgd_epochs(const ParamVector& params, const ParamLayout& layout,
                       const Shard& shard, const SgdOptions& opt, std::uint64_t seed);

// Collects pointers to a shard's current training set: owned_train then received.
std::vector<const Sample*> training_view(const Shard& shard);
std::vector<const Sample*> test_view(const Shard& shard);

}  // namespace sofa
