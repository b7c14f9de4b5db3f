#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loh/data.hpp"
#include "loh/engine.hpp"

namespace loh {

enum class Loss { bce, mse };

/// Output coupling for multi-class targets. `independent` trains each output
/// against its own 0/1 target; `exclusive_top2` recenters output logits by
/// the mean of the two largest, so exactly one output exceeds 0.5.
enum class Multiclass { independent, exclusive_top2 };

/// `epochs_only` runs max_epochs to the end. `accuracy_steps` monitors
/// training-set accuracy after every optimizer step and stops at 100%
/// accuracy, after 64 steps without an accuracy change, or at step 384,
/// whichever comes first (still bounded by max_epochs).
enum class Convergence { epochs_only, accuracy_steps };

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 128;
  int max_epochs = 100;
  double beta = 1.0;         // Gumbel noise scale
  double temperature = 1.0;  // gate sigmoid temperature
  double temp_decay = 1.0;   // temperature multiplier applied every 10 epochs
  Loss loss = Loss::bce;
  Multiclass multiclass = Multiclass::independent;
  Convergence convergence = Convergence::epochs_only;
  int plateau_steps = 64;
  long max_steps = 384;  // accuracy_steps cap
  int threads = 1;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_f1 = 0.0;
  double val_loss = 0.0;  // NaN without a validation set
  double val_f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> history;
  long steps = 0;
  long steps_to_convergence = 0;  // == steps under epochs_only
  bool reached_full_accuracy = false;
  double final_train_accuracy = 0.0;
};

/// Mean binary cross-entropy over all outputs and rows, with outputs clamped
/// to [1e-7, 1 - 1e-7]; returns the loss and its gradient per output.
std::pair<double, Matrix> loss_bce(const Matrix& outputs, const Matrix& targets);

/// Mean squared error, same shape conventions.
std::pair<double, Matrix> loss_mse(const Matrix& outputs, const Matrix& targets);

/// Per row: logit-transform the clamped outputs, subtract the mean of the two
/// largest logits, apply a sigmoid. Exactly one entry per row ends above 0.5
/// (barring ties). Rows need at least 2 columns.
Matrix exclusive_output_reparam(const Matrix& outputs);

/// Chain rule through exclusive_output_reparam; `grad_out` holds gradients
/// with respect to the reparameterized outputs.
Matrix exclusive_output_reparam_backward(const Matrix& outputs, const Matrix& reparamed,
                                         const Matrix& grad_out);

/// One-hot target matrix; with a single output column the target is
/// 1 for class 1 (requires exactly 2 classes).
Matrix targets_matrix(std::span<const int> y, int n_classes, size_t n_outputs);

/// argmax across columns (lowest index wins ties); single-column outputs
/// predict class 1 when the value exceeds 0.5.
std::vector<int> predict_labels(const Matrix& outputs);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Unweighted mean of per-class F1; a class with no predicted and no true
/// positives contributes 0.
double macro_f1(std::span<const int> predicted, std::span<const int> truth, int n_classes);

struct ConvergenceResult {
  bool converged = false;
  long step = 0;
};

/// Applies the accuracy-based stopping rule to a per-step accuracy history.
ConvergenceResult convergence_check(std::span<const double> step_accuracies,
                                    int plateau_steps = 64, long max_steps = 384);

struct Adam {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> moments;

  /// One update over the trainable blocks present in `grads`.
  void step(ParameterStore& params, const std::map<int, std::vector<double>>& grads);
};

struct EvalMetrics {
  double loss = 0.0;
  double f1 = 0.0;
  double acc = 0.0;
  std::vector<std::vector<long>> confusion;  // [truth][predicted]
};

/// Noise-free evaluation with the training-time loss pipeline.
EvalMetrics evaluate(const CompiledGraph& g, const ParameterStore& params, const Dataset& d,
                     Loss loss, Multiclass multiclass, int threads = 1);

/// Minibatch training with per-step Gumbel noise. Shuffles each epoch,
/// decays temperatures every 10 epochs, records per-epoch noise-free metrics.
/// `val` may be null.
TrainReport train(const CompiledGraph& g, ParameterStore& params, const Dataset& train_set,
                  const Dataset* val, const TrainConfig& cfg, Rng& rng);

std::string to_string(Loss l);
std::string to_string(Multiclass m);
std::string to_string(Convergence c);
Loss loss_from_string(const std::string& s);
Multiclass multiclass_from_string(const std::string& s);
Convergence convergence_from_string(const std::string& s);

}  // namespace loh
