#include "chronofuse/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "chronofuse/errors.hpp"
#include "chronofuse/optim.hpp"
#include "chronofuse/rng.hpp"

namespace chronofuse {

std::vector<Tensor*> TrainableModel::trainable_tensors() {
  std::vector<Tensor*> out;
  for (ParameterSet* ps : param_sets())
    for (Tensor* t : ps->tensors()) out.push_back(t);
  return out;
}

Var task_loss(Tape& t, Var prediction, const Label& label) {
  if (label.kind == TaskKind::kRegression)
    return t.mse_scalar(prediction, label.value);
  return t.nll(prediction, label.cls);
}

double mean_loss(TrainableModel& model,
                 const std::vector<const SubjectData*>& subjects) {
  if (subjects.empty()) throw ContractError("mean loss over an empty set");
  double sum = 0.0;
  for (const SubjectData* s : subjects) {
    Tape t;
    Var loss = task_loss(t, model.predict(t, *s), s->label);
    sum += t.val(loss).at(0);
  }
  return sum / static_cast<double>(subjects.size());
}

namespace {

std::vector<std::vector<double>> snapshot_values(
    const std::vector<Tensor*>& tensors) {
  std::vector<std::vector<double>> out;
  out.reserve(tensors.size());
  for (const Tensor* t : tensors) out.push_back(t->data);
  return out;
}

void restore_values(const std::vector<Tensor*>& tensors,
                    const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    tensors[i]->data = values[i];
    tensors[i]->grad.clear();
  }
}

}  // namespace

TrainResult train_with_early_stopping(
    TrainableModel& model, const std::vector<const SubjectData*>& train,
    const std::vector<const SubjectData*>& val, const TrainConfig& cfg) {
  if (train.empty()) throw ContractError("training set is empty");
  if (val.empty()) throw ContractError("validation set is empty");
  if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");

  std::vector<Tensor*> tensors = model.trainable_tensors();
  Adam opt(cfg.lr);
  TrainResult res;

  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> best;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(hash_combine(hash_combine(cfg.seed, hash_str("epoch-shuffle")),
                         static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double epoch_sum = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t end =
          std::min(cursor + static_cast<std::size_t>(cfg.batch_size),
                   order.size());
      const double batch_n = static_cast<double>(end - cursor);
      for (; cursor < end; ++cursor) {
        const SubjectData* s = train[static_cast<std::size_t>(
            order[cursor])];
        Tape t;
        Var loss = task_loss(t, model.predict(t, *s), s->label);
        epoch_sum += t.val(loss).at(0);
        t.backward(loss);
      }
      for (Tensor* p : tensors) {
        if (!p->has_grad()) p->ensure_grad();
        for (double& g : p->grad) g /= batch_n;
      }
      opt.step(tensors);
    }
    res.train_losses.push_back(epoch_sum / static_cast<double>(train.size()));

    const double v = mean_loss(model, val);
    res.val_losses.push_back(v);
    res.epochs_run = epoch + 1;

    if (res.best_epoch < 0 || v < res.best_val_loss) {
      res.best_epoch = epoch;
      res.best_val_loss = v;
      best = snapshot_values(tensors);
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }

  restore_values(tensors, best);
  return res;
}

}  // namespace chronofuse
