#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegemo/nn.hpp"
#include "eegemo/windowing.hpp"

namespace eegemo {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Bias-corrected first/second moment accumulators, shaped like the params.
struct AdamState {
  std::vector<LayerParams> m, v;
  long step = 0;

  static AdamState like(const Model& model);
};

void adam_step(std::vector<LayerParams>& params, const std::vector<LayerParams>& grads,
               AdamState& state, const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;  // fraction of validation instances
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

// Splits off a seeded label-stratified validation set, trains with shuffled
// mini-batches (gradient = mean cross-entropy over the batch) and Adam, and
// stops once validation loss fails to improve for `patience` epochs. The
// returned parameters are those of the best validation epoch.
TrainResult train(const ModelSpec& spec, const std::vector<const WindowInstance*>& instances,
                  Target target, const TrainConfig& cfg);

// CSV rendering of a training log: epoch,train_loss,val_loss,val_acc.
std::string training_log_csv(const std::vector<EpochStats>& log);

}  // namespace eegemo
