#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "loh/graph.hpp"

namespace loh {

/// Seeded generator with fully specified sampling, so identical seeds give
/// identical streams on every platform (std::uniform_real_distribution has no
/// such guarantee).
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  std::uint64_t next() { return gen(); }

  /// Uniform in (0, 1).
  double uniform01() {
    return (static_cast<double>(gen() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int n) { return static_cast<int>(gen() % static_cast<std::uint64_t>(n)); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  double gumbel(double beta);
};

/// Gumbel(0, beta) quantile at u, i.e. -beta * ln(-ln u).
double gumbel_from_uniform(double u, double beta);

double sigmoid(double x);

struct WeightBlock {
  std::vector<double> z;  // gate logits
  double beta = 1.0;      // Gumbel noise scale
  double temperature = 1.0;
  bool trainable = true;

  int arity() const { return static_cast<int>(z.size()); }
};

struct ParameterStore {
  std::map<int, WeightBlock> blocks;  // choice id -> block
  std::uint64_t revision = 0;         // bumped on every update

  /// One block per compiled weight block; logits start uniform in
  /// (-0.1, 0.1), drawn in ascending choice id order. Single-slot blocks are
  /// frozen (z = {0}, not trainable).
  static ParameterStore init(const CompiledGraph& g, Rng& rng, double beta = 1.0,
                             double temperature = 1.0);

  void scale_temperatures(double factor);
};

/// Per-block record of one reparameterization pass, kept for the backward
/// sweep. top1/top2 are the (lowest-index) positions of the two largest
/// noisy logits.
struct ReparamCache {
  std::vector<double> w;
  std::vector<double> z_noisy;
  int top1 = -1;
  int top2 = -1;
  bool from_block = false;  // false when weights were injected directly
};

/// w_i = sigmoid((z'_i - mean of two largest z') / T) with z' = z + noise.
/// Blocks of arity 1 yield w = {1}. `rng` may be null when `with_noise` is
/// false.
ReparamCache reparameterize(const WeightBlock& b, bool with_noise, Rng* rng);

/// Gradient through the sigmoid and the top-2-mean recentering; noise is a
/// constant.
std::vector<double> reparameterize_backward(const WeightBlock& b, const ReparamCache& cache,
                                            std::span<const double> grad_w);

struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

struct Tape {
  const CompiledGraph* graph = nullptr;
  std::uint64_t params_revision = 0;
  size_t batch = 0;
  std::vector<double> values;               // node-major: values[node * batch + row]
  std::vector<std::vector<std::int32_t>> arg_extreme;  // per reduce node, per row
  std::map<int, ReparamCache> reparams;

  double value(int node, size_t row) const {
    return values[static_cast<size_t>(node) * batch + row];
  }
};

struct ForwardOptions {
  bool with_noise = false;
  int threads = 1;
};

/// Evaluates the graph on a batch (rows = samples, cols = graph inputs, all
/// values in [0, 1]). Noise, when on, is drawn once per call per block, in
/// ascending choice id order, and shared across the batch. Returns a
/// rows x outputs matrix in output declaration order.
Matrix forward(const CompiledGraph& g, const ParameterStore& params, const Matrix& inputs,
               const ForwardOptions& opts = {}, Rng* rng = nullptr, Tape* tape = nullptr);

/// Same evaluation with explicit gate weights instead of reparameterized
/// logits; weights[id] must have the block's arity.
Matrix forward_with_weights(const CompiledGraph& g,
                            const std::map<int, std::vector<double>>& weights,
                            const Matrix& inputs, Tape* tape = nullptr, int threads = 1);

/// Reverse sweep; returns logit gradients per trainable block. Min/max route
/// gradient to the recorded extreme child (ties went to the lowest index).
/// Batch contributions accumulate in ascending row order.
std::map<int, std::vector<double>> backward(const CompiledGraph& g,
                                            const ParameterStore& params, const Tape& tape,
                                            const Matrix& output_grads, int threads = 1);

/// Frequency of argmax(z + noise) per slot over `trials` draws.
std::vector<double> sample_choice_frequencies(const WeightBlock& b, int trials, Rng& rng);

}  // namespace loh
