#include "sofa/model.hpp"

#include <algorithm>
#include <cmath>

#include "sofa/rng.hpp"

namespace sofa {

void ModelSpec::check() const {
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("model: hidden dims must be >= 1");
  }
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
  spec.check();
  dims.push_back(spec.input_dim);
  for (int h : spec.hidden_dims) dims.push_back(h);
  dims.push_back(spec.num_classes);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    weight_offset.push_back(off);
    off += static_cast<std::size_t>(dims[l]) * dims[l + 1];
    bias_offset.push_back(off);
    off += static_cast<std::size_t>(dims[l + 1]);
  }
  total = off;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  const ParamLayout layout(spec);
  ParamVector p(layout.total, 0.0);
  Rng rng(seed);
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const int fan_in = layout.dims[l];
    const int fan_out = layout.dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    double* w = p.data() + layout.weight_offset[l];
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return p;
}

namespace {

struct ForwardState {
  // activations[0] is the input copy; activations[l+1] the output of layer l.
  std::vector<std::vector<double>> activations;
};

// Per-sample forward pass; returns softmax probabilities.
void forward_sample(const ParamVector& p, const ParamLayout& L, const float* x,
                    ForwardState& st, std::vector<double>& probs) {
  const std::size_t nl = L.num_layers();
  st.activations.resize(nl + 1);
  auto& a0 = st.activations[0];
  a0.assign(x, x + L.dims[0]);

  for (std::size_t l = 0; l < nl; ++l) {
    const int in = L.dims[l];
    const int out = L.dims[l + 1];
    const double* W = p.data() + L.weight_offset[l];
    const double* b = p.data() + L.bias_offset[l];
    const auto& a = st.activations[l];
    auto& z = st.activations[l + 1];
    z.assign(out, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* wrow = W + static_cast<std::size_t>(o) * in;
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += wrow[i] * a[i];
      z[o] = (l + 1 < nl) ? std::tanh(acc) : acc;
    }
  }

  // softmax with max subtraction
  const auto& logits = st.activations[nl];
  probs.resize(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (auto& v : probs) v /= sum;
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_batch(const ParamLayout& L, const std::vector<const Sample*>& batch) {
  if (batch.empty()) throw DataError("model: empty batch");
  for (const Sample* s : batch) {
    if (static_cast<int>(s->x.size()) != L.dims[0]) {
      throw DataError("model: feature dim " + std::to_string(s->x.size()) +
                      " does not match input_dim " + std::to_string(L.dims[0]));
    }
  }
}

}  // namespace

EvalResult evaluate(const ParamVector& params, const ParamLayout& layout,
                    const std::vector<const Sample*>& batch) {
  check_batch(layout, batch);
  ForwardState st;
  std::vector<double> probs;
  double loss = 0.0;
  std::size_t correct = 0;
  for (const Sample* s : batch) {
    forward_sample(params, layout, s->x.data(), st, probs);
    loss += -std::log(std::max(probs[s->label], 1e-300));
    if (argmax(probs) == s->label) ++correct;
  }
  const double n = static_cast<double>(batch.size());
  return {loss / n, static_cast<double>(correct) / n};
}

GradResult forward_loss_grad(const ParamVector& params, const ParamLayout& layout,
                             const std::vector<const Sample*>& batch) {
  check_batch(layout, batch);
  const std::size_t nl = layout.num_layers();
  GradResult res;
  res.grad.assign(layout.total, 0.0);

  ForwardState st;
  std::vector<double> probs;
  std::vector<double> delta, delta_prev;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::size_t correct = 0;

  for (const Sample* s : batch) {
    forward_sample(params, layout, s->x.data(), st, probs);
    res.loss += -std::log(std::max(probs[s->label], 1e-300));
    if (argmax(probs) == s->label) ++correct;

    // output delta: (softmax - onehot) / n
    delta.assign(probs.begin(), probs.end());
    delta[s->label] -= 1.0;
    for (auto& d : delta) d *= inv_n;

    for (std::size_t lp1 = nl; lp1 >= 1; --lp1) {
      const std::size_t l = lp1 - 1;
      const int in = layout.dims[l];
      const int out = layout.dims[l + 1];
      const double* W = params.data() + layout.weight_offset[l];
      double* gW = res.grad.data() + layout.weight_offset[l];
      double* gb = res.grad.data() + layout.bias_offset[l];
      const auto& a = st.activations[l];

      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        gb[o] += d;
        double* grow = gW + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) grow[i] += d * a[i];
      }
      if (l == 0) break;

      // propagate through W then the tanh of the previous layer
      delta_prev.assign(in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        const double* wrow = W + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) delta_prev[i] += d * wrow[i];
      }
      for (int i = 0; i < in; ++i) {
        delta_prev[i] *= 1.0 - a[i] * a[i];  // tanh'
      }
      delta.swap(delta_prev);
    }
  }
  res.loss *= inv_n;
  res.accuracy = static_cast<double>(correct) * inv_n;
  return res;
}

std::vector<const Sample*> training_view(const Shard& shard) {
  std::vector<const Sample*> v;
  v.reserve(shard.train_size());
  for (const auto& s : shard.owned_train) v.push_back(&s);
  for (const auto& s : shard.received) v.push_back(&s);
  return v;
}

std::vector<const Sample*> test_view(const Shard& shard) {
  std::vector<const Sample*> v;
  v.reserve(shard.owned_test.size());
  for (const auto& s : shard.owned_test) v.push_back(&s);
  return v;
}

ParamVector sgd_epochs(const ParamVector& params, const ParamLayout& layout,
                       const Shard& shard, const SgdOptions& opt, std::uint64_t seed) {
  if (shard.train_size() == 0) throw DataError("sgd: empty shard");
  if (opt.lr <= 0.0) throw ConfigError("sgd: lr must be positive");
  if (opt.batch_size < 1) throw ConfigError("sgd: batch_size must be >= 1");
  if (opt.prox && opt.prox->anchor.size() != params.size()) {
    throw InternalError("sgd: prox anchor layout mismatch");
  }

  const auto all = training_view(shard);
  ParamVector p = params;
  Rng rng(seed);

  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<const Sample*> batch;
  auto run_batch = [&](std::size_t lo, std::size_t hi) {
    batch.clear();
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(all[order[i]]);
    GradResult g = forward_loss_grad(p, layout, batch);
    if (opt.prox && opt.prox->beta != 0.0) {
      const double beta = opt.prox->beta;
      for (std::size_t j = 0; j < p.size(); ++j) {
        g.grad[j] += beta * (p[j] - opt.prox->anchor[j]);
      }
    }
    double probe = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      p[j] -= opt.lr * g.grad[j];
      probe += p[j];
    }
    if (!std::isfinite(probe)) {
      throw InternalError("sgd: parameters went non-finite");
    }
  };

  const std::size_t bs = static_cast<std::size_t>(opt.batch_size);
  if (opt.epochs_mode) {
    for (int e = 0; e < opt.epochs; ++e) {
      rng.shuffle(order);
      for (std::size_t lo = 0; lo < order.size(); lo += bs) {
        run_batch(lo, std::min(lo + bs, order.size()));
      }
    }
  } else {
    // step mode: exactly `epochs` minibatch steps, reshuffling per pass
    int steps = opt.epochs;
    while (steps > 0) {
      rng.shuffle(order);
      for (std::size_t lo = 0; lo < order.size() && steps > 0; lo += bs, --steps) {
        run_batch(lo, std::min(lo + bs, order.size()));
      }
    }
  }
  return p;
}

}  // namespace sofa
