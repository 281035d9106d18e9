#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "eegemo/eval.hpp"
#include "eegemo/nn.hpp"
#include "eegemo/rng.hpp"
#include "eegemo/util.hpp"

using namespace eegemo;

namespace {

ConfusionMatrix cm_of(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  ConfusionMatrix cm;
  cm.tp = tp;
  cm.tn = tn;
  cm.fp = fp;
  cm.fn = fn;
  return cm;
}

// Independent MCC evaluation: same definition, different factorization of the
// denominator (product of per-factor roots instead of one big root).
double mcc_reference(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
  const double fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
  const double f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
  if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
  return (tp * tn - fp * fn) /
         (std::sqrt(f1) * std::sqrt(f2) * std::sqrt(f3) * std::sqrt(f4));
}

void check_fold_partition(const std::vector<SplitIndices>& folds, std::size_t n) {
  std::vector<std::size_t> seen;
  for (const auto& fold : folds) {
    std::set<std::size_t> train(fold.train.begin(), fold.train.end());
    CHECK(train.size() == fold.train.size());
    for (std::size_t i : fold.test) CHECK(train.count(i) == 0);
    CHECK(fold.train.size() + fold.test.size() == n);
    seen.insert(seen.end(), fold.test.begin(), fold.test.end());
  }
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(seen[i] == i);
}

}  // namespace

TEST_CASE("confusion matrix counting") {
  ConfusionMatrix cm;
  cm.add(1, 1);
  cm.add(1, 1);
  cm.add(1, 0);
  cm.add(0, 0);
  cm.add(0, 1);
  CHECK(cm.tp == 2);
  CHECK(cm.fn == 1);
  CHECK(cm.tn == 1);
  CHECK(cm.fp == 1);
  CHECK(cm.total() == 5);
}

TEST_CASE("accuracy as a percentage") {
  CHECK(accuracy(cm_of(3, 2, 1, 4)) == 50.0);
  CHECK(accuracy(cm_of(5, 5, 0, 0)) == 100.0);
  CHECK(accuracy(cm_of(0, 0, 3, 1)) == 0.0);
  CHECK(accuracy(cm_of(1, 0, 0, 3)) == 25.0);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), ValidationError);
}

TEST_CASE("matthews correlation") {
  CHECK(mcc(cm_of(3, 2, 1, 4)) == doctest::Approx(0.0890870806374748).epsilon(1e-15));
  CHECK(mcc(cm_of(5, 5, 0, 0)) == 1.0);
  CHECK(mcc(cm_of(0, 0, 5, 5)) == -1.0);

  SUBCASE("degenerate marginals give zero by convention") {
    CHECK(mcc(cm_of(0, 5, 0, 3)) == 0.0);  // no predicted positives
    CHECK(mcc(cm_of(5, 0, 3, 0)) == 0.0);  // no true negatives + no predicted negatives
    CHECK(mcc(cm_of(0, 5, 3, 0)) == 0.0);  // no true positives
    CHECK(mcc(cm_of(5, 0, 0, 3)) == 0.0);  // no predicted negatives
    CHECK(mcc(ConfusionMatrix{}) == 0.0);
  }

  SUBCASE("matches an independent evaluation on random matrices") {
    Rng rng(777);
    for (int t = 0; t < 1000; ++t) {
      const auto cm = cm_of(rng.below(50), rng.below(50), rng.below(50), rng.below(50));
      const double got = mcc(cm);
      const double want = mcc_reference(cm);
      CHECK(std::abs(got - want) <= 1e-12);
      CHECK(got >= -1.0 - 1e-12);
      CHECK(got <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("k-fold splitting") {
  SUBCASE("even split: 100 into 10 folds of 10") {
    const auto folds = kfold_split(100, 10, 42);
    REQUIRE(folds.size() == 10);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      CHECK(folds[f].fold_label == std::to_string(f));
      CHECK(folds[f].test.size() == 10);
      CHECK(folds[f].train.size() == 90);
    }
    check_fold_partition(folds, 100);
  }
  SUBCASE("remainder goes to the first folds: 101 into 10") {
    const auto folds = kfold_split(101, 10, 42);
    CHECK(folds[0].test.size() == 11);
    for (std::size_t f = 1; f < 10; ++f) CHECK(folds[f].test.size() == 10);
    check_fold_partition(folds, 101);
  }
  SUBCASE("fold sizes never differ by more than one") {
    for (std::size_t n : {10u, 37u, 95u, 108u}) {
      const auto folds = kfold_split(n, 10, 7);
      std::size_t lo = n, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.test.size());
        hi = std::max(hi, f.test.size());
      }
      CHECK(hi - lo <= 1);
      check_fold_partition(folds, n);
    }
  }
  SUBCASE("seeded determinism") {
    const auto a = kfold_split(50, 10, 1);
    const auto b = kfold_split(50, 10, 1);
    for (std::size_t f = 0; f < 10; ++f) {
      CHECK(a[f].test == b[f].test);
      CHECK(a[f].train == b[f].train);
    }
    const auto c = kfold_split(50, 10, 2);
    bool any_diff = false;
    for (std::size_t f = 0; f < 10 && !any_diff; ++f) any_diff = a[f].test != c[f].test;
    CHECK(any_diff);
  }
  SUBCASE("stratified mode balances class counts per fold") {
    std::vector<int> labels(20, 0);
    for (std::size_t i = 11; i < 20; ++i) labels[i] = 1;  // 11 zeros, 9 ones
    const auto folds = kfold_split(20, 5, 3, &labels);
    check_fold_partition(folds, 20);
    for (std::size_t f = 0; f < 5; ++f) {
      std::size_t zeros = 0, ones = 0;
      for (std::size_t i : folds[f].test) (labels[i] == 0 ? zeros : ones)++;
      CHECK(zeros == (f == 0 ? 3 : 2));   // 11 % 5 = 1 extra in fold 0
      CHECK(ones == (f == 4 ? 1 : 2));    // 9 % 5 = 4 extras in folds 0-3
    }
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(kfold_split(5, 1, 0), ValidationError);
    CHECK_THROWS_AS(kfold_split(9, 10, 0), ValidationError);
    std::vector<int> labels(3, 0);
    CHECK_THROWS_AS(kfold_split(4, 2, 0, &labels), ValidationError);
  }
}

TEST_CASE("leave-one-subject-out splitting") {
  std::vector<std::string> ids;
  for (int s = 12; s >= 1; --s) {  // insertion order must not matter
    char buf[8];
    std::snprintf(buf, sizeof buf, "S%02d", s);
    ids.push_back(buf);
    ids.push_back(buf);  // two recordings per subject
  }
  const auto folds = loso_split(ids);
  REQUIRE(folds.size() == 12);
  for (std::size_t f = 0; f < 12; ++f) {
    char want[8];
    std::snprintf(want, sizeof want, "S%02d", static_cast<int>(f) + 1);
    CHECK(folds[f].fold_label == want);  // ascending subject order
    CHECK(folds[f].test.size() == 2);
    CHECK(folds[f].train.size() == 22);
    for (std::size_t i : folds[f].test) CHECK(ids[i] == folds[f].fold_label);
    for (std::size_t i : folds[f].train) CHECK(ids[i] != folds[f].fold_label);
  }
  check_fold_partition(folds, ids.size());

  CHECK_THROWS_WITH_AS(loso_split({"only", "only", "only"}),
                       doctest::Contains("at least two subjects"), ValidationError);
  CHECK_THROWS_AS(loso_split({}), ValidationError);
}

TEST_CASE("model evaluation fills the confusion matrix") {
  // Linear model reading only the first input element: logit1 = x[0].
  ModelSpec spec;
  spec.name = "probe";
  spec.input_shape = {kNumElectrodes, 2, 1};
  spec.layers = {LayerSpec::flatten(), LayerSpec::fc(2, false), LayerSpec::softmax()};
  Model model(spec, 0);
  model.params()[1].w.fill(0.0);
  model.params()[1].b.fill(0.0);
  model.params()[1].w.data[kNumElectrodes * 2] = 1.0;  // row 1, column 0

  auto make = [](double x0, int label) {
    WindowInstance inst;
    inst.input = Tensor({kNumElectrodes, 2, 1});
    inst.input.data[0] = x0;
    inst.arousal = label;
    inst.valence = 1 - label;
    return inst;
  };
  std::vector<WindowInstance> data;
  data.push_back(make(1.0, 1));
  data.push_back(make(2.0, 1));
  data.push_back(make(0.5, 1));
  data.push_back(make(1.5, 0));  // false positive
  data.push_back(make(-1.0, 0));
  data.push_back(make(-0.5, 0));
  std::vector<const WindowInstance*> test;
  for (const auto& inst : data) test.push_back(&inst);

  const ConfusionMatrix cm = evaluate_model(model, test, Target::arousal);
  CHECK(cm.tp == 3);
  CHECK(cm.fp == 1);
  CHECK(cm.tn == 2);
  CHECK(cm.fn == 0);
  CHECK(accuracy(cm) == doctest::Approx(100.0 * 5.0 / 6.0).epsilon(1e-12));

  // Same predictions scored against the flipped target rearrange the counts.
  const ConfusionMatrix flipped = evaluate_model(model, test, Target::valence);
  CHECK(flipped.tp == 1);
  CHECK(flipped.fp == 3);
  CHECK(flipped.tn == 0);
  CHECK(flipped.fn == 2);

  CHECK_THROWS_AS(evaluate_model(model, {}, Target::arousal), ValidationError);
}

TEST_CASE("constant predictors score the base rate") {
  ModelSpec spec;
  spec.name = "const";
  spec.input_shape = {2, 2, 1};
  spec.layers = {LayerSpec::flatten(), LayerSpec::fc(2, false), LayerSpec::softmax()};
  Model model(spec, 0);
  model.params()[1].w.fill(0.0);
  model.params()[1].b.data = {0.0, 1.0};  // always predict class 1

  std::vector<WindowInstance> data;
  for (int i = 0; i < 10; ++i) {
    WindowInstance inst;
    inst.input = Tensor({2, 2, 1});
    inst.arousal = i < 4 ? 1 : 0;  // 40% positive
    data.push_back(std::move(inst));
  }
  std::vector<const WindowInstance*> test;
  for (const auto& inst : data) test.push_back(&inst);
  const ConfusionMatrix cm = evaluate_model(model, test, Target::arousal);
  CHECK(cm.tp == 4);
  CHECK(cm.fp == 6);
  CHECK(cm.tn == 0);
  CHECK(cm.fn == 0);
  CHECK(accuracy(cm) == 40.0);
  CHECK(mcc(cm) == 0.0);  // no predicted negatives
}
