#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "eegemo/nn.hpp"
#include "eegemo/rng.hpp"
#include "eegemo/train.hpp"
#include "eegemo/util.hpp"
#include "eegemo/windowing.hpp"

using namespace eegemo;

namespace {

ModelSpec linear_spec(std::vector<std::size_t> input_shape) {
  ModelSpec spec;
  spec.name = "linear";
  spec.input_shape = std::move(input_shape);
  spec.layers = {LayerSpec::flatten(), LayerSpec::fc(2, false), LayerSpec::softmax()};
  return spec;
}

// Two gaussian blobs, class means at -shift and +shift on every element.
std::vector<WindowInstance> blob_instances(std::size_t per_class, std::size_t len, double shift,
                                           double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<WindowInstance> out;
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t i = 0; i < per_class; ++i) {
      WindowInstance inst;
      inst.input = Tensor({kNumElectrodes, len, 1});
      const double mean = cls == 0 ? -shift : shift;
      for (double& v : inst.input.data) v = mean + sigma * rng.gaussian();
      inst.arousal = cls;
      inst.valence = cls;
      inst.subject_id = "S" + std::to_string(i);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<const WindowInstance*> ptrs(const std::vector<WindowInstance>& v) {
  std::vector<const WindowInstance*> out;
  for (const auto& inst : v) out.push_back(&inst);
  return out;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig ok;
  ok.validate();
  auto expect_bad = [](TrainConfig cfg) { CHECK_THROWS_AS(cfg.validate(), ConfigError); };
  TrainConfig c = ok;
  c.learning_rate = 0.0;
  expect_bad(c);
  c = ok;
  c.beta1 = 1.0;
  expect_bad(c);
  c = ok;
  c.beta2 = -0.1;
  expect_bad(c);
  c = ok;
  c.epsilon = 0.0;
  expect_bad(c);
  c = ok;
  c.batch_size = 0;
  expect_bad(c);
  c = ok;
  c.max_epochs = 0;
  expect_bad(c);
  c = ok;
  c.patience = 0;
  expect_bad(c);
  c = ok;
  c.validation_fraction = 0.0;
  expect_bad(c);
  c = ok;
  c.validation_fraction = 1.0;
  expect_bad(c);
}

TEST_CASE("adam step matches the hand-applied update") {
  Model model(linear_spec({1, 1, 1}), 1);
  model.params()[1].w.data = {0.5, -0.25};
  model.params()[1].b.data = {0.1, -0.1};
  AdamState state = AdamState::like(model);
  TrainConfig cfg;

  // Mirror of the published update, applied to scalars.
  struct Ref {
    double m = 0.0, v = 0.0;
    double apply(double p, double g, long step, const TrainConfig& c) {
      m = c.beta1 * m + (1.0 - c.beta1) * g;
      v = c.beta2 * v + (1.0 - c.beta2) * g * g;
      const double c1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
      return p - c.learning_rate * (m / c1) / (std::sqrt(v / c2) + c.epsilon);
    }
  };
  Ref rw0, rw1, rb0, rb1;
  double w0 = 0.5, w1 = -0.25, b0 = 0.1, b1 = -0.1;

  const std::vector<std::vector<double>> grad_seq = {{0.3, -0.2, 0.05, 0.0},
                                                     {-0.1, 0.4, -0.02, 0.7}};
  for (long step = 1; step <= 2; ++step) {
    auto grads = model.zero_like_params();
    const auto& g = grad_seq[static_cast<std::size_t>(step - 1)];
    grads[1].w.data = {g[0], g[1]};
    grads[1].b.data = {g[2], g[3]};
    adam_step(model.params(), grads, state, cfg);
    w0 = rw0.apply(w0, g[0], step, cfg);
    w1 = rw1.apply(w1, g[1], step, cfg);
    b0 = rb0.apply(b0, g[2], step, cfg);
    b1 = rb1.apply(b1, g[3], step, cfg);
    CHECK(model.params()[1].w.data[0] == w0);
    CHECK(model.params()[1].w.data[1] == w1);
    CHECK(model.params()[1].b.data[0] == b0);
    CHECK(model.params()[1].b.data[1] == b1);
  }
  CHECK(state.step == 2);
}

TEST_CASE("adam with zero gradients is a no-op") {
  Model model(linear_spec({2, 3, 1}), 8);
  const auto before = model.params();
  AdamState state = AdamState::like(model);
  TrainConfig cfg;
  auto grads = model.zero_like_params();
  adam_step(model.params(), grads, state, cfg);
  adam_step(model.params(), grads, state, cfg);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(model.params()[i].w.data == before[i].w.data);
    CHECK(model.params()[i].b.data == before[i].b.data);
  }
}

TEST_CASE("adam validates gradient layout") {
  Model model(linear_spec({1, 2, 1}), 2);
  AdamState state = AdamState::like(model);
  TrainConfig cfg;
  std::vector<LayerParams> wrong_count(1);
  CHECK_THROWS_AS(adam_step(model.params(), wrong_count, state, cfg), ValidationError);
  auto grads = model.zero_like_params();
  grads[1].w = Tensor({3, 2});
  CHECK_THROWS_AS(adam_step(model.params(), grads, state, cfg), ValidationError);
}

TEST_CASE("training is deterministic under the seed") {
  const auto data = blob_instances(4, 10, 0.5, 0.5, 300);
  const auto p = ptrs(data);
  TrainConfig cfg;
  cfg.validation_fraction = 0.25;
  cfg.max_epochs = 5;
  cfg.patience = 100;
  cfg.batch_size = 4;
  cfg.seed = 11;
  const TrainResult a = train(linear_spec({kNumElectrodes, 10, 1}), p, Target::arousal, cfg);
  const TrainResult b = train(linear_spec({kNumElectrodes, 10, 1}), p, Target::arousal, cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].epoch == b.log[i].epoch);
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_loss == b.log[i].val_loss);
    CHECK(a.log[i].val_acc == b.log[i].val_acc);
  }
  for (std::size_t i = 0; i < a.model.params().size(); ++i)
    CHECK(a.model.params()[i].w.data == b.model.params()[i].w.data);
  CHECK(a.best_epoch == b.best_epoch);

  TrainConfig other = cfg;
  other.seed = 12;
  const TrainResult c = train(linear_spec({kNumElectrodes, 10, 1}), p, Target::arousal, other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.model.params().size() && !any_diff; ++i)
    any_diff = a.model.params()[i].w.data != c.model.params()[i].w.data;
  CHECK(any_diff);
}

TEST_CASE("separable blobs train to perfect accuracy") {
  const auto data = blob_instances(12, 25, 1.0, 0.1, 808);
  const auto p = ptrs(data);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 8;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.validation_fraction = 0.25;
  cfg.seed = 4;
  const TrainResult r = train(linear_spec({kNumElectrodes, 25, 1}), p, Target::valence, cfg);
  REQUIRE(!r.log.empty());
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_epoch <= r.log.size());
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    CHECK(r.log[i].epoch == i + 1);
    CHECK(r.log[i].val_acc >= 0.0);
    CHECK(r.log[i].val_acc <= 1.0);
  }
  ForwardCache cache;
  std::size_t correct = 0;
  for (const auto& inst : data) {
    const Tensor probs = r.model.forward(inst.input, RunMode::eval, cache);
    const int pred = probs.data[1] > probs.data[0] ? 1 : 0;
    if (pred == inst.valence) ++correct;
  }
  CHECK(correct == data.size());
}

TEST_CASE("early stopping and best-epoch restoration") {
  // Random labels: validation loss stops improving quickly.
  auto data = blob_instances(8, 6, 0.0, 1.0, 909);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int y = i < data.size() / 2 ? 0 : 1;  // keep both classes present
    data[i].arousal = y;
    data[i].valence = y;
  }
  const auto p = ptrs(data);
  TrainConfig cfg;
  cfg.validation_fraction = 0.25;
  cfg.max_epochs = 40;
  cfg.patience = 2;
  cfg.batch_size = 4;
  cfg.seed = 21;
  const TrainResult r = train(linear_spec({kNumElectrodes, 6, 1}), p, Target::arousal, cfg);
  REQUIRE(!r.log.empty());
  CHECK(r.log.size() <= cfg.max_epochs);
  if (r.log.size() < cfg.max_epochs) {
    CHECK(r.log.size() == r.best_epoch + cfg.patience);
    CHECK(r.log.back().val_loss >= r.best_val_loss);
  }
  // best_val_loss is the strict running minimum, first reached at best_epoch.
  double min_loss = r.log[0].val_loss;
  std::size_t argmin = 1;
  for (std::size_t i = 1; i < r.log.size(); ++i)
    if (r.log[i].val_loss < min_loss) {
      min_loss = r.log[i].val_loss;
      argmin = i + 1;
    }
  CHECK(r.best_val_loss == min_loss);
  CHECK(r.best_epoch == argmin);

  // Rebuild the stratified validation split and verify the returned model
  // reproduces best_val_loss exactly, i.e. the best epoch's parameters were
  // restored.
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < p.size(); ++i) by_class[data[i].arousal].push_back(i);
  Rng split_rng(mix_seed(cfg.seed, 0x59117));
  std::vector<std::size_t> val_idx;
  for (auto& cls : by_class) {
    split_rng.shuffle(cls);
    const std::size_t nv =
        static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(cls.size()));
    for (std::size_t i = 0; i < nv; ++i) val_idx.push_back(cls[i]);
  }
  REQUIRE(!val_idx.empty());
  ForwardCache cache;
  double val_loss = 0.0;
  for (std::size_t i : val_idx) {
    r.model.forward(data[i].input, RunMode::eval, cache);
    val_loss += r.model.loss_from_cache(cache, data[i].arousal);
  }
  val_loss /= static_cast<double>(val_idx.size());
  CHECK(val_loss == r.best_val_loss);
}

TEST_CASE("max_epochs caps training") {
  const auto data = blob_instances(4, 5, 0.3, 0.5, 31);
  const auto p = ptrs(data);
  TrainConfig cfg;
  cfg.validation_fraction = 0.25;
  cfg.max_epochs = 3;
  cfg.patience = 100;
  cfg.seed = 2;
  const TrainResult r = train(linear_spec({kNumElectrodes, 5, 1}), p, Target::arousal, cfg);
  CHECK(r.log.size() == 3);
}

TEST_CASE("training rejects degenerate inputs") {
  TrainConfig cfg;
  cfg.validation_fraction = 0.25;
  const ModelSpec spec = linear_spec({kNumElectrodes, 5, 1});

  auto one = blob_instances(1, 5, 0.5, 0.5, 1);
  one.pop_back();
  CHECK_THROWS_WITH_AS(train(spec, ptrs(one), Target::arousal, cfg),
                       doctest::Contains("at least 2 instances"), ValidationError);

  auto same = blob_instances(2, 5, 0.5, 0.5, 2);
  for (auto& inst : same) inst.arousal = 1;
  CHECK_THROWS_WITH_AS(train(spec, ptrs(same), Target::arousal, cfg),
                       doctest::Contains("single class"), ValidationError);

  // One instance per class: floor(0.25 * 1) = 0 on both sides.
  const auto two = blob_instances(1, 5, 0.5, 0.5, 3);
  CHECK_THROWS_WITH_AS(train(spec, ptrs(two), Target::arousal, cfg),
                       doctest::Contains("validation split is empty"), ValidationError);
}

TEST_CASE("training log CSV rendering") {
  std::vector<EpochStats> log(2);
  log[0] = {1, 0.5, 0.25, 0.75};
  log[1] = {2, 0.125, 0.0625, 1.0};
  CHECK(training_log_csv(log) ==
        "epoch,train_loss,val_loss,val_acc\n"
        "1,0.5,0.25,0.75\n"
        "2,0.125,0.0625,1\n");
  CHECK(training_log_csv({}) == "epoch,train_loss,val_loss,val_acc\n");
}
