#include "loh/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace loh {

double gumbel_from_uniform(double u, double beta) {
  return -beta * std::log(-std::log(u));
}

double Rng::gumbel(double beta) { return gumbel_from_uniform(uniform01(), beta); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

ParameterStore ParameterStore::init(const CompiledGraph& g, Rng& rng, double beta,
                                    double temperature) {
  ParameterStore store;
  for (const auto& info : g.weight_blocks) {
    WeightBlock b;
    b.beta = beta;
    b.temperature = temperature;
    if (info.arity == 1) {
      b.z = {0.0};
      b.trainable = false;
    } else {
      b.z.resize(info.arity);
      for (auto& z : b.z) z = rng.uniform(-0.1, 0.1);
    }
    store.blocks.emplace(info.choice_id, std::move(b));
  }
  return store;
}

void ParameterStore::scale_temperatures(double factor) {
  for (auto& [id, b] : blocks) {
    (void)id;
    b.temperature *= factor;
  }
  ++revision;
}

namespace {

// positions of the two largest values; ties resolved to the lowest index
std::pair<int, int> top_two(std::span<const double> v) {
  int best = 0;
  int second = -1;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) {
      second = best;
      best = i;
    } else if (second < 0 || v[i] > v[second]) {
      second = i;
    }
  }
  return {best, second};
}

}  // namespace

ReparamCache reparameterize(const WeightBlock& b, bool with_noise, Rng* rng) {
  ReparamCache cache;
  cache.from_block = true;
  int n = b.arity();
  if (n == 0) throw ValidationError("weight block with no slots");
  if (b.temperature <= 0.0) throw NumericError("temperature must be positive");
  cache.z_noisy = b.z;
  if (n == 1) {
    cache.w = {1.0};
    cache.top1 = 0;
    return cache;
  }
  if (with_noise) {
    if (!rng) throw ValidationError("noise requested without a generator");
    for (auto& z : cache.z_noisy) z += rng->gumbel(b.beta);
  }
  auto [t1, t2] = top_two(cache.z_noisy);
  cache.top1 = t1;
  cache.top2 = t2;
  double center = 0.5 * (cache.z_noisy[t1] + cache.z_noisy[t2]);
  cache.w.resize(n);
  for (int i = 0; i < n; ++i)
    cache.w[i] = sigmoid((cache.z_noisy[i] - center) / b.temperature);
  return cache;
}

std::vector<double> reparameterize_backward(const WeightBlock& b, const ReparamCache& cache,
                                            std::span<const double> grad_w) {
  if (!cache.from_block)
    throw ValidationError("cannot backpropagate through injected weights");
  int n = b.arity();
  if (static_cast<int>(grad_w.size()) != n)
    throw ValidationError("gradient size does not match block arity");
  std::vector<double> grad_z(n, 0.0);
  if (n == 1) return grad_z;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double h = grad_w[i] * cache.w[i] * (1.0 - cache.w[i]) / b.temperature;
    grad_z[i] = h;
    sum += h;
  }
  grad_z[cache.top1] -= 0.5 * sum;
  grad_z[cache.top2] -= 0.5 * sum;
  return grad_z;
}

namespace {

void run_row_ranges(size_t batch, int threads, const std::function<void(size_t, size_t)>& fn) {
  if (threads < 1) threads = 1;
  size_t want = std::min<size_t>(static_cast<size_t>(threads), batch == 0 ? 1 : batch);
  if (want <= 1) {
    fn(0, batch);
    return;
  }
  size_t chunk = (batch + want - 1) / want;
  std::vector<std::thread> pool;
  for (size_t r0 = 0; r0 < batch; r0 += chunk) {
    size_t r1 = std::min(batch, r0 + chunk);
    pool.emplace_back(fn, r0, r1);
  }
  for (auto& t : pool) t.join();
}

struct GateValues {
  // scalar per gate node, filled from the reparameterized weights
  std::vector<double> value;

  GateValues(const CompiledGraph& g, const std::map<int, ReparamCache>& reparams)
      : value(g.nodes.size(), 0.0) {
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      const GraphNode& n = g.nodes[i];
      if (n.kind != NodeKind::gate_weight && n.kind != NodeKind::gate_co_weight) continue;
      auto it = reparams.find(n.choice_id);
      if (it == reparams.end())
        throw ValidationError("missing weights for choice " + std::to_string(n.choice_id));
      double w = it->second.w.at(n.slot);
      value[i] = n.kind == NodeKind::gate_weight ? w : 1.0 - w;
    }
  }
};

void eval_rows(const CompiledGraph& g, const Matrix& inputs, const GateValues& gates,
               bool godel, std::vector<double>& values,
               std::vector<std::vector<std::int32_t>>& arg_extreme, size_t batch,
               size_t r0, size_t r1) {
  for (size_t ni = 0; ni < g.nodes.size(); ++ni) {
    const GraphNode& n = g.nodes[ni];
    double* out = values.data() + ni * batch;
    switch (n.kind) {
      case NodeKind::input: {
        for (size_t r = r0; r < r1; ++r) out[r] = inputs.at(r, n.input);
        break;
      }
      case NodeKind::constant: {
        double v = n.value ? 1.0 : 0.0;
        for (size_t r = r0; r < r1; ++r) out[r] = v;
        break;
      }
      case NodeKind::gate_weight:
      case NodeKind::gate_co_weight: {
        double v = gates.value[ni];
        for (size_t r = r0; r < r1; ++r) out[r] = v;
        break;
      }
      case NodeKind::negation: {
        const double* c = values.data() + static_cast<size_t>(n.children[0]) * batch;
        for (size_t r = r0; r < r1; ++r) out[r] = 1.0 - c[r];
        break;
      }
      case NodeKind::min_reduce:
      case NodeKind::max_reduce: {
        bool is_min = n.kind == NodeKind::min_reduce;
        if (godel) {
          std::int32_t* args = arg_extreme[ni].data();
          for (size_t r = r0; r < r1; ++r) {
            double best = values[static_cast<size_t>(n.children[0]) * batch + r];
            std::int32_t arg = 0;
            for (size_t k = 1; k < n.children.size(); ++k) {
              double v = values[static_cast<size_t>(n.children[k]) * batch + r];
              if (is_min ? v < best : v > best) {
                best = v;
                arg = static_cast<std::int32_t>(k);
              }
            }
            out[r] = best;
            args[r] = arg;
          }
        } else if (is_min) {
          for (size_t r = r0; r < r1; ++r) {
            double acc = 1.0;
            for (int child : n.children)
              acc *= values[static_cast<size_t>(child) * batch + r];
            out[r] = acc;
          }
        } else {
          for (size_t r = r0; r < r1; ++r) {
            double acc = 1.0;
            for (int child : n.children)
              acc *= 1.0 - values[static_cast<size_t>(child) * batch + r];
            out[r] = 1.0 - acc;
          }
        }
        break;
      }
    }
  }
}

Matrix run_forward(const CompiledGraph& g, std::map<int, ReparamCache> reparams,
                   const Matrix& inputs, int threads, Tape* tape,
                   std::uint64_t params_revision) {
  if (inputs.cols != g.input_names.size())
    throw DataError("input matrix has " + std::to_string(inputs.cols) +
                    " columns, graph expects " + std::to_string(g.input_names.size()));
  for (double v : inputs.data)
    if (!(v >= 0.0 && v <= 1.0))
      throw DataError("input values must lie in [0, 1]");

  size_t batch = inputs.rows;
  bool godel = g.semantics == Semantics::godel;
  GateValues gates(g, reparams);

  Tape local;
  Tape& t = tape ? *tape : local;
  t.graph = &g;
  t.params_revision = params_revision;
  t.batch = batch;
  t.values.assign(g.nodes.size() * batch, 0.0);
  t.arg_extreme.assign(g.nodes.size(), {});
  if (godel) {
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      NodeKind k = g.nodes[i].kind;
      if (k == NodeKind::min_reduce || k == NodeKind::max_reduce)
        t.arg_extreme[i].assign(batch, 0);
    }
  }

  run_row_ranges(batch, threads, [&](size_t r0, size_t r1) {
    eval_rows(g, inputs, gates, godel, t.values, t.arg_extreme, batch, r0, r1);
  });

  Matrix out(batch, g.outputs.size());
  for (size_t k = 0; k < g.outputs.size(); ++k) {
    int node = g.outputs[k].second;
    for (size_t r = 0; r < batch; ++r) out.at(r, k) = t.value(node, r);
  }
  t.reparams = std::move(reparams);
  return out;
}

}  // namespace

Matrix forward(const CompiledGraph& g, const ParameterStore& params, const Matrix& inputs,
               const ForwardOptions& opts, Rng* rng, Tape* tape) {
  std::map<int, ReparamCache> reparams;
  // noise is drawn once per call, in ascending choice id order
  for (const auto& [id, block] : params.blocks)
    reparams.emplace(id, reparameterize(block, opts.with_noise, rng));
  return run_forward(g, std::move(reparams), inputs, opts.threads, tape, params.revision);
}

Matrix forward_with_weights(const CompiledGraph& g,
                            const std::map<int, std::vector<double>>& weights,
                            const Matrix& inputs, Tape* tape, int threads) {
  std::map<int, ReparamCache> reparams;
  for (const auto& [id, w] : weights) {
    ReparamCache cache;
    cache.w = w;
    cache.from_block = false;
    reparams.emplace(id, std::move(cache));
  }
  return run_forward(g, std::move(reparams), inputs, threads, tape, 0);
}

namespace {

struct RangeGrads {
  std::map<int, std::vector<double>> gate_grads;  // choice id -> dL/dw
};

void backward_rows(const CompiledGraph& g, const Tape& tape, const Matrix& output_grads,
                   RangeGrads& out, size_t r0, size_t r1) {
  size_t batch = tape.batch;
  size_t span = r1 - r0;
  std::vector<double> adjoint(g.nodes.size() * span, 0.0);
  auto adj = [&](int node, size_t r) -> double& {
    return adjoint[static_cast<size_t>(node) * span + (r - r0)];
  };

  for (size_t k = 0; k < g.outputs.size(); ++k) {
    int node = g.outputs[k].second;
    for (size_t r = r0; r < r1; ++r) adj(node, r) += output_grads.at(r, k);
  }

  bool godel = g.semantics == Semantics::godel;
  std::vector<double> partial;
  for (size_t ni = g.nodes.size(); ni-- > 0;) {
    const GraphNode& n = g.nodes[ni];
    switch (n.kind) {
      case NodeKind::input:
      case NodeKind::constant:
        break;
      case NodeKind::gate_weight:
      case NodeKind::gate_co_weight: {
        auto it = out.gate_grads.find(n.choice_id);
        if (it == out.gate_grads.end()) break;  // untracked block
        double sum = 0.0;
        for (size_t r = r0; r < r1; ++r) sum += adj(static_cast<int>(ni), r);
        it->second[n.slot] += n.kind == NodeKind::gate_weight ? sum : -sum;
        break;
      }
      case NodeKind::negation: {
        for (size_t r = r0; r < r1; ++r)
          adj(n.children[0], r) -= adj(static_cast<int>(ni), r);
        break;
      }
      case NodeKind::min_reduce:
      case NodeKind::max_reduce: {
        if (godel) {
          const std::int32_t* args = tape.arg_extreme[ni].data();
          for (size_t r = r0; r < r1; ++r) {
            double a = adj(static_cast<int>(ni), r);
            if (a != 0.0) adj(n.children[args[r]], r) += a;
          }
          break;
        }
        bool is_min = n.kind == NodeKind::min_reduce;
        size_t m = n.children.size();
        partial.assign(m + 1, 1.0);
        for (size_t r = r0; r < r1; ++r) {
          double a = adj(static_cast<int>(ni), r);
          if (a == 0.0) continue;
          // prefix/suffix products of child values (or co-values for max)
          double suffix = 1.0;
          partial[0] = 1.0;
          for (size_t k = 0; k < m; ++k) {
            double v = tape.values[static_cast<size_t>(n.children[k]) * batch + r];
            partial[k + 1] = partial[k] * (is_min ? v : 1.0 - v);
          }
          for (size_t k = m; k-- > 0;) {
            double v = tape.values[static_cast<size_t>(n.children[k]) * batch + r];
            adj(n.children[k], r) += a * partial[k] * suffix;
            suffix *= is_min ? v : 1.0 - v;
          }
        }
        break;
      }
    }
  }
}

}  // namespace

std::map<int, std::vector<double>> backward(const CompiledGraph& g,
                                            const ParameterStore& params, const Tape& tape,
                                            const Matrix& output_grads, int threads) {
  if (tape.graph != &g) throw ValidationError("tape does not belong to this graph");
  if (tape.params_revision != params.revision)
    throw ValidationError("tape is stale: parameters changed since the forward pass");
  if (output_grads.rows != tape.batch || output_grads.cols != g.outputs.size())
    throw ValidationError("output gradient shape mismatch");

  // track every block with gates in the graph
  std::map<int, std::vector<double>> gate_grads;
  for (const auto& info : g.weight_blocks)
    if (info.arity > 1) gate_grads.emplace(info.choice_id, std::vector<double>(info.arity, 0.0));

  size_t batch = tape.batch;
  int want = threads < 1 ? 1 : threads;
  size_t nranges = std::min<size_t>(static_cast<size_t>(want), batch == 0 ? 1 : batch);
  size_t chunk = nranges ? (batch + nranges - 1) / nranges : batch;
  std::vector<RangeGrads> ranges;
  for (size_t r0 = 0; r0 < batch; r0 += chunk) {
    RangeGrads rg;
    rg.gate_grads = gate_grads;
    ranges.push_back(std::move(rg));
  }

  if (ranges.size() <= 1) {
    if (!ranges.empty()) backward_rows(g, tape, output_grads, ranges[0], 0, batch);
  } else {
    std::vector<std::thread> pool;
    size_t idx = 0;
    for (size_t r0 = 0; r0 < batch; r0 += chunk, ++idx) {
      size_t r1 = std::min(batch, r0 + chunk);
      pool.emplace_back(backward_rows, std::cref(g), std::cref(tape), std::cref(output_grads),
                        std::ref(ranges[idx]), r0, r1);
    }
    for (auto& t : pool) t.join();
  }

  // merge ranges in ascending row order, then map through the gate
  for (const auto& rg : ranges)
    for (const auto& [id, gw] : rg.gate_grads)
      for (size_t i = 0; i < gw.size(); ++i) gate_grads[id][i] += gw[i];

  std::map<int, std::vector<double>> grad_z;
  for (const auto& [id, gw] : gate_grads) {
    auto bit = params.blocks.find(id);
    if (bit == params.blocks.end() || !bit->second.trainable) continue;
    const ReparamCache& cache = tape.reparams.at(id);
    grad_z.emplace(id, reparameterize_backward(bit->second, cache, gw));
  }
  return grad_z;
}

std::vector<double> sample_choice_frequencies(const WeightBlock& b, int trials, Rng& rng) {
  if (trials <= 0) throw ValidationError("trials must be positive");
  int n = b.arity();
  std::vector<double> freq(n, 0.0);
  std::vector<double> noisy(n);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) noisy[i] = b.z[i] + rng.gumbel(b.beta);
    freq[top_two(noisy).first] += 1.0;
  }
  for (auto& f : freq) f /= trials;
  return freq;
}

}  // namespace loh
