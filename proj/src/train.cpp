#include "eegemo/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eegemo/rng.hpp"
#include "eegemo/util.hpp"

namespace eegemo {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train: adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("train: validation_fraction must lie in (0, 1)");
}

AdamState AdamState::like(const Model& model) {
  AdamState st;
  st.m = model.zero_like_params();
  st.v = model.zero_like_params();
  return st;
}

void adam_step(std::vector<LayerParams>& params, const std::vector<LayerParams>& grads,
               AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ValidationError("adam_step: parameter/gradient/state layout mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
    if (p.shape != g.shape)
      throw ValidationError("adam_step: gradient shape " + shape_str(g.shape) +
                            " does not match parameter shape " + shape_str(p.shape));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / c1;
      const double vhat = v.data[i] / c2;
      p.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].w.size() == 0) continue;
    update(params[i].w, grads[i].w, state.m[i].w, state.v[i].w);
    update(params[i].b, grads[i].b, state.m[i].b, state.v[i].b);
  }
}

namespace {

void zero_grads(std::vector<LayerParams>& grads) {
  for (auto& g : grads) {
    g.w.fill(0.0);
    g.b.fill(0.0);
  }
}

void scale_grads(std::vector<LayerParams>& grads, double s) {
  for (auto& g : grads) {
    for (double& v : g.w.data) v *= s;
    for (double& v : g.b.data) v *= s;
  }
}

}  // namespace

TrainResult train(const ModelSpec& spec, const std::vector<const WindowInstance*>& instances,
                  Target target, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = instances.size();
  if (n < 2) throw ValidationError("training needs at least 2 instances, got " + std::to_string(n));

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < n; ++i) {
    const int y = label_of(*instances[i], target);
    by_class[y].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty())
    throw ValidationError("training partition contains a single class; cannot fit a classifier");

  // Stratified validation split: a seeded per-class shuffle, then the first
  // floor(fraction * class size) indices of each class go to validation.
  Rng split_rng(mix_seed(cfg.seed, 0x59117));
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& cls : by_class) {
    split_rng.shuffle(cls);
    const std::size_t nv = static_cast<std::size_t>(cfg.validation_fraction *
                                                    static_cast<double>(cls.size()));
    for (std::size_t i = 0; i < cls.size(); ++i)
      (i < nv ? val_idx : train_idx).push_back(cls[i]);
  }
  if (val_idx.empty())
    throw ValidationError("validation split is empty; raise validation_fraction or add data");
  bool train_has[2] = {false, false};
  for (std::size_t i : train_idx) train_has[label_of(*instances[i], target)] = true;
  if (!train_has[0] || !train_has[1])
    throw ValidationError("training split lost a class to validation; add data or lower "
                          "validation_fraction");

  Model model(spec, mix_seed(cfg.seed, 0x1417));
  AdamState adam = AdamState::like(model);
  auto grads = model.zero_like_params();
  Rng order_rng(mix_seed(cfg.seed, 0x0bde4));
  Rng drop_rng(mix_seed(cfg.seed, 0xd409));
  ForwardCache cache;

  TrainResult result{std::move(model), {}, 0, std::numeric_limits<double>::infinity()};
  std::vector<LayerParams> best_params = result.model.params();
  std::size_t epochs_since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order_rng.shuffle(train_idx);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, train_idx.size());
      zero_grads(grads);
      for (std::size_t i = start; i < stop; ++i) {
        const WindowInstance& inst = *instances[train_idx[i]];
        const int y = label_of(inst, target);
        cache.masks_ready = false;
        result.model.forward(inst.input, RunMode::train, cache, &drop_rng);
        loss_sum += result.model.loss_from_cache(cache, y);
        result.model.backward(cache, y, grads);
      }
      scale_grads(grads, 1.0 / static_cast<double>(stop - start));
      adam_step(result.model.params(), grads, adam, cfg);
    }

    double val_loss = 0.0;
    std::size_t val_correct = 0;
    for (std::size_t i : val_idx) {
      const WindowInstance& inst = *instances[i];
      const int y = label_of(inst, target);
      const Tensor probs = result.model.forward(inst.input, RunMode::eval, cache);
      val_loss += result.model.loss_from_cache(cache, y);
      const int pred = probs.data[1] > probs.data[0] ? 1 : 0;
      if (pred == y) ++val_correct;
    }
    val_loss /= static_cast<double>(val_idx.size());

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_idx.size());
    stats.val_loss = val_loss;
    stats.val_acc = static_cast<double>(val_correct) / static_cast<double>(val_idx.size());
    result.log.push_back(stats);

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_params = result.model.params();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (epochs_since_best >= cfg.patience) break;
  }

  result.model.params() = std::move(best_params);
  return result;
}

std::string training_log_csv(const std::vector<EpochStats>& log) {
  std::string out = "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch);
    out += ',';
    out += format_double(e.train_loss);
    out += ',';
    out += format_double(e.val_loss);
    out += ',';
    out += format_double(e.val_acc);
    out += '\n';
  }
  return out;
}

}  // namespace eegemo
