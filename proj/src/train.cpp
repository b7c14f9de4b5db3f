#include "loh/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace loh {

namespace {

constexpr double kBceClamp = 1e-7;
constexpr double kLogitClamp = 1e-6;

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

std::pair<double, Matrix> loss_bce(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows != targets.rows || outputs.cols != targets.cols)
    throw ValidationError("loss shapes do not match");
  size_t n = outputs.rows * outputs.cols;
  if (n == 0) throw ValidationError("loss over an empty batch");
  Matrix grad(outputs.rows, outputs.cols);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double o = outputs.data[i];
    double t = targets.data[i];
    double oc = clamp(o, kBceClamp, 1.0 - kBceClamp);
    total += -(t * std::log(oc) + (1.0 - t) * std::log(1.0 - oc));
    // the clamp blocks gradient outside its band
    bool inside = o >= kBceClamp && o <= 1.0 - kBceClamp;
    grad.data[i] = inside ? (-t / oc + (1.0 - t) / (1.0 - oc)) / static_cast<double>(n) : 0.0;
  }
  return {total / static_cast<double>(n), std::move(grad)};
}

std::pair<double, Matrix> loss_mse(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows != targets.rows || outputs.cols != targets.cols)
    throw ValidationError("loss shapes do not match");
  size_t n = outputs.rows * outputs.cols;
  if (n == 0) throw ValidationError("loss over an empty batch");
  Matrix grad(outputs.rows, outputs.cols);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double diff = outputs.data[i] - targets.data[i];
    total += diff * diff;
    grad.data[i] = 2.0 * diff / static_cast<double>(n);
  }
  return {total / static_cast<double>(n), std::move(grad)};
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// positions of the two largest entries of a row, lowest index on ties
std::pair<int, int> row_top_two(const double* v, size_t cols) {
  int best = 0, second = -1;
  for (int i = 1; i < static_cast<int>(cols); ++i) {
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

Matrix exclusive_output_reparam(const Matrix& outputs) {
  if (outputs.cols < 2)
    throw ValidationError("exclusive output reparameterization needs >= 2 outputs");
  Matrix out(outputs.rows, outputs.cols);
  std::vector<double> z(outputs.cols);
  for (size_t r = 0; r < outputs.rows; ++r) {
    for (size_t c = 0; c < outputs.cols; ++c)
      z[c] = logit(clamp(outputs.at(r, c), kLogitClamp, 1.0 - kLogitClamp));
    auto [t1, t2] = row_top_two(z.data(), outputs.cols);
    double center = 0.5 * (z[t1] + z[t2]);
    for (size_t c = 0; c < outputs.cols; ++c) out.at(r, c) = sigmoid(z[c] - center);
  }
  return out;
}

Matrix exclusive_output_reparam_backward(const Matrix& outputs, const Matrix& reparamed,
                                         const Matrix& grad_out) {
  Matrix grad(outputs.rows, outputs.cols);
  std::vector<double> z(outputs.cols);
  for (size_t r = 0; r < outputs.rows; ++r) {
    for (size_t c = 0; c < outputs.cols; ++c)
      z[c] = logit(clamp(outputs.at(r, c), kLogitClamp, 1.0 - kLogitClamp));
    auto [t1, t2] = row_top_two(z.data(), outputs.cols);
    double sum = 0.0;
    for (size_t c = 0; c < outputs.cols; ++c) {
      double w = reparamed.at(r, c);
      sum += grad_out.at(r, c) * w * (1.0 - w);
    }
    for (size_t c = 0; c < outputs.cols; ++c) {
      double w = reparamed.at(r, c);
      double h = grad_out.at(r, c) * w * (1.0 - w);
      if (static_cast<int>(c) == t1 || static_cast<int>(c) == t2) h -= 0.5 * sum;
      double o = outputs.at(r, c);
      bool inside = o >= kLogitClamp && o <= 1.0 - kLogitClamp;
      double oc = clamp(o, kLogitClamp, 1.0 - kLogitClamp);
      grad.at(r, c) = inside ? h / (oc * (1.0 - oc)) : 0.0;
    }
  }
  return grad;
}

Matrix targets_matrix(std::span<const int> y, int n_classes, size_t n_outputs) {
  Matrix t(y.size(), n_outputs);
  if (n_outputs == 1) {
    if (n_classes != 2)
      throw ValidationError("a single output needs exactly 2 classes, got " +
                            std::to_string(n_classes));
    for (size_t r = 0; r < y.size(); ++r) t.at(r, 0) = y[r] == 1 ? 1.0 : 0.0;
    return t;
  }
  if (static_cast<int>(n_outputs) != n_classes)
    throw ValidationError("output count " + std::to_string(n_outputs) +
                          " does not match class count " + std::to_string(n_classes));
  for (size_t r = 0; r < y.size(); ++r) {
    if (y[r] < 0 || y[r] >= n_classes) throw ValidationError("class index out of range");
    t.at(r, static_cast<size_t>(y[r])) = 1.0;
  }
  return t;
}

std::vector<int> predict_labels(const Matrix& outputs) {
  std::vector<int> pred(outputs.rows);
  if (outputs.cols == 1) {
    for (size_t r = 0; r < outputs.rows; ++r) pred[r] = outputs.at(r, 0) > 0.5 ? 1 : 0;
    return pred;
  }
  for (size_t r = 0; r < outputs.rows; ++r) {
    size_t best = 0;
    for (size_t c = 1; c < outputs.cols; ++c)
      if (outputs.at(r, c) > outputs.at(r, best)) best = c;
    pred[r] = static_cast<int>(best);
  }
  return pred;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw ValidationError("accuracy needs matching nonempty label lists");
  size_t hits = 0;
  for (size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> predicted, std::span<const int> truth, int n_classes) {
  if (predicted.size() != truth.size() || truth.empty())
    throw ValidationError("macro F1 needs matching nonempty label lists");
  if (n_classes < 1) throw ValidationError("macro F1 needs at least one class");
  std::vector<long> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (size_t i = 0; i < truth.size(); ++i) {
    int t = truth[i], p = predicted[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw ValidationError("class index out of range");
    if (t == p) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  double sum = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    double denom = 2.0 * tp[c] + fp[c] + fn[c];
    sum += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return sum / n_classes;
}

ConvergenceResult convergence_check(std::span<const double> step_accuracies,
                                    int plateau_steps, long max_steps) {
  long run = 0;
  for (size_t i = 0; i < step_accuracies.size(); ++i) {
    long step = static_cast<long>(i) + 1;
    if (step_accuracies[i] == 1.0) return {true, step};
    if (i > 0 && step_accuracies[i] == step_accuracies[i - 1]) {
      if (++run >= plateau_steps) return {true, step};
    } else {
      run = 0;
    }
    if (step >= max_steps) return {true, step};
  }
  return {false, static_cast<long>(step_accuracies.size())};
}

void Adam::step(ParameterStore& params, const std::map<int, std::vector<double>>& grads) {
  ++t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (const auto& [id, g] : grads) {
    auto it = params.blocks.find(id);
    if (it == params.blocks.end())
      throw ValidationError("gradient for unknown block " + std::to_string(id));
    WeightBlock& b = it->second;
    if (!b.trainable) continue;
    if (g.size() != b.z.size()) throw ValidationError("gradient arity mismatch");
    auto& [m, v] = moments[id];
    if (m.empty()) {
      m.assign(g.size(), 0.0);
      v.assign(g.size(), 0.0);
    }
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      b.z[i] -= learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + epsilon);
    }
  }
  ++params.revision;
}

namespace {

Matrix rows_matrix(const Matrix& X, std::span<const size_t> rows) {
  Matrix m(rows.size(), X.cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < X.cols; ++c) m.at(i, c) = X.at(rows[i], c);
  return m;
}

double train_accuracy(const CompiledGraph& g, const ParameterStore& params,
                      const Dataset& d, int threads) {
  Matrix out = forward(g, params, d.X, {.with_noise = false, .threads = threads});
  return accuracy(predict_labels(out), d.y);
}

}  // namespace

EvalMetrics evaluate(const CompiledGraph& g, const ParameterStore& params, const Dataset& d,
                     Loss loss, Multiclass multiclass, int threads) {
  if (d.size() == 0) throw DataError("evaluation set is empty");
  Matrix out = forward(g, params, d.X, {.with_noise = false, .threads = threads});
  Matrix targets = targets_matrix(d.y, d.n_classes, out.cols);
  Matrix effective = (multiclass == Multiclass::exclusive_top2 && out.cols >= 2)
                         ? exclusive_output_reparam(out)
                         : out;
  auto [l, grad] = loss == Loss::bce ? loss_bce(effective, targets)
                                     : loss_mse(effective, targets);
  (void)grad;
  if (!std::isfinite(l)) throw NumericError("loss is not finite");

  EvalMetrics m;
  m.loss = l;
  auto pred = predict_labels(out);
  m.f1 = macro_f1(pred, d.y, d.n_classes);
  m.acc = accuracy(pred, d.y);
  m.confusion.assign(d.n_classes, std::vector<long>(d.n_classes, 0));
  for (size_t i = 0; i < pred.size(); ++i) ++m.confusion[d.y[i]][pred[i]];
  return m;
}

TrainReport train(const CompiledGraph& g, ParameterStore& params, const Dataset& train_set,
                  const Dataset* val, const TrainConfig& cfg, Rng& rng) {
  if (train_set.size() == 0) throw DataError("training set is empty");
  if (train_set.feature_names != g.input_names)
    throw DataError("dataset features do not match graph inputs; align them first");
  if (cfg.batch_size < 1 || cfg.max_epochs < 0 || cfg.learning_rate <= 0.0)
    throw ValidationError("bad training configuration");

  size_t n = train_set.size();
  size_t n_outputs = g.outputs.size();
  bool exclusive = cfg.multiclass == Multiclass::exclusive_top2 && n_outputs >= 2;
  Matrix all_targets = targets_matrix(train_set.y, train_set.n_classes, n_outputs);

  Adam adam;
  adam.learning_rate = cfg.learning_rate;

  TrainReport report;
  std::vector<double> step_accs;
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  bool stop = false;
  for (int epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < n && !stop; start += cfg.batch_size) {
      size_t end = std::min(n, start + static_cast<size_t>(cfg.batch_size));
      std::span<const size_t> batch_rows(order.data() + start, end - start);
      Matrix bx = rows_matrix(train_set.X, batch_rows);
      Matrix bt(batch_rows.size(), n_outputs);
      for (size_t i = 0; i < batch_rows.size(); ++i)
        for (size_t c = 0; c < n_outputs; ++c) bt.at(i, c) = all_targets.at(batch_rows[i], c);

      Tape tape;
      Matrix out = forward(g, params, bx, {.with_noise = true, .threads = cfg.threads},
                           &rng, &tape);
      double loss_value;
      Matrix grad_out;
      if (exclusive) {
        Matrix effective = exclusive_output_reparam(out);
        auto [l, grad_eff] = cfg.loss == Loss::bce ? loss_bce(effective, bt)
                                                   : loss_mse(effective, bt);
        loss_value = l;
        grad_out = exclusive_output_reparam_backward(out, effective, grad_eff);
      } else {
        auto [l, grad] = cfg.loss == Loss::bce ? loss_bce(out, bt) : loss_mse(out, bt);
        loss_value = l;
        grad_out = std::move(grad);
      }
      if (!std::isfinite(loss_value)) throw NumericError("training loss is not finite");
      auto grads = backward(g, params, tape, grad_out, cfg.threads);
      adam.step(params, grads);
      ++report.steps;

      if (cfg.convergence == Convergence::accuracy_steps) {
        double acc = train_accuracy(g, params, train_set, cfg.threads);
        step_accs.push_back(acc);
        auto res = convergence_check(step_accs, cfg.plateau_steps, cfg.max_steps);
        if (res.converged) {
          report.steps_to_convergence = res.step;
          report.reached_full_accuracy = acc == 1.0;
          stop = true;
        }
      }
    }

    EpochMetrics em;
    em.epoch = epoch;
    EvalMetrics tm = evaluate(g, params, train_set, cfg.loss, cfg.multiclass, cfg.threads);
    em.train_loss = tm.loss;
    em.train_f1 = tm.f1;
    if (val && val->size() > 0) {
      EvalMetrics vm = evaluate(g, params, *val, cfg.loss, cfg.multiclass, cfg.threads);
      em.val_loss = vm.loss;
      em.val_f1 = vm.f1;
    } else {
      em.val_loss = std::numeric_limits<double>::quiet_NaN();
      em.val_f1 = std::numeric_limits<double>::quiet_NaN();
    }
    report.history.push_back(em);

    if (cfg.temp_decay != 1.0 && epoch % 10 == 0)
      params.scale_temperatures(cfg.temp_decay);
  }

  report.final_train_accuracy = train_accuracy(g, params, train_set, cfg.threads);
  if (report.steps_to_convergence == 0) report.steps_to_convergence = report.steps;
  if (report.final_train_accuracy == 1.0) report.reached_full_accuracy = true;
  return report;
}

std::string to_string(Loss l) { return l == Loss::bce ? "bce" : "mse"; }

std::string to_string(Multiclass m) {
  return m == Multiclass::independent ? "independent" : "exclusive-top2";
}

std::string to_string(Convergence c) {
  return c == Convergence::epochs_only ? "epochs" : "accuracy";
}

Loss loss_from_string(const std::string& s) {
  if (s == "bce") return Loss::bce;
  if (s == "mse") return Loss::mse;
  throw ValidationError("unknown loss '" + s + "'");
}

Multiclass multiclass_from_string(const std::string& s) {
  if (s == "independent") return Multiclass::independent;
  if (s == "exclusive-top2") return Multiclass::exclusive_top2;
  throw ValidationError("unknown multiclass mode '" + s + "'");
}

Convergence convergence_from_string(const std::string& s) {
  if (s == "epochs") return Convergence::epochs_only;
  if (s == "accuracy") return Convergence::accuracy_steps;
  throw ValidationError("unknown convergence mode '" + s + "'");
}

}  // namespace loh
