#pragma once

#include <cstdint>
#include <vector>

#include "chronofuse/params.hpp"
#include "chronofuse/records.hpp"
#include "chronofuse/tape.hpp"

namespace chronofuse {

/// Anything the training loop can drive: a forward pass producing either
/// K log-probabilities or a scalar, plus access to every parameter tensor.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual Var predict(Tape& t, const SubjectData& subject) = 0;
  virtual std::vector<ParameterSet*> param_sets() = 0;

  std::vector<Tensor*> trainable_tensors();
};

struct TrainConfig {
  int max_epochs = 20;
  int batch_size = 16;
  double lr = 1e-3;
  int patience = 3;
  TaskKind task = TaskKind::kBinary;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> train_losses;  // per epoch means
  std::vector<double> val_losses;
  int best_epoch = -1;               // 0-based index into the curves
  double best_val_loss = 0.0;
  int epochs_run = 0;
};

/// Loss per the task: negative log-likelihood of the true class from
/// log-probabilities, or squared error for regression.
Var task_loss(Tape& t, Var prediction, const Label& label);

/// Epoch loop with patience-based early stopping on mean validation loss
/// (strict improvement). The model is left holding the parameters of the
/// best epoch. Batching accumulates gradients over `batch_size` subjects
/// per optimizer step; epoch order reshuffles deterministically from the
/// seed.
TrainResult train_with_early_stopping(
    TrainableModel& model, const std::vector<const SubjectData*>& train,
    const std::vector<const SubjectData*>& val, const TrainConfig& cfg);

double mean_loss(TrainableModel& model,
                 const std::vector<const SubjectData*>& subjects);

}  // namespace chronofuse
