#include "eegemo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "eegemo/rng.hpp"
#include "eegemo/util.hpp"

namespace eegemo {

void ConfusionMatrix::add(int truth, int pred) {
  if (truth == 1)
    pred == 1 ? ++tp : ++fn;
  else
    pred == 0 ? ++tn : ++fp;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw ValidationError("accuracy of an empty confusion matrix is undefined");
  return 100.0 * static_cast<double>(cm.tp + cm.tn) / static_cast<double>(n);
}

double mcc(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
  const double fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
  const double f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
  if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(f1 * f2 * f3 * f4);
}

namespace {

// Contiguous chunk boundaries: the first n%k chunks take one extra element.
std::vector<std::size_t> chunk_offsets(std::size_t n, std::size_t k) {
  std::vector<std::size_t> offs(k + 1, 0);
  const std::size_t base = n / k, extra = n % k;
  for (std::size_t f = 0; f < k; ++f) offs[f + 1] = offs[f] + base + (f < extra ? 1 : 0);
  return offs;
}

}  // namespace

std::vector<SplitIndices> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                      const std::vector<int>* stratify_labels) {
  if (k < 2) throw ValidationError("k-fold needs k >= 2");
  if (n < k)
    throw ValidationError("too few instances for " + std::to_string(k) + "-fold split: " +
                          std::to_string(n));
  if (stratify_labels != nullptr && stratify_labels->size() != n)
    throw ValidationError("stratify label count does not match instance count");

  // Each group is shuffled and chunked independently; the unstratified path
  // is a single group holding everything.
  std::vector<std::vector<std::size_t>> groups;
  if (stratify_labels == nullptr) {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  } else {
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i) by_label[(*stratify_labels)[i]].push_back(i);
    for (auto& [lbl, idx] : by_label) groups.push_back(std::move(idx));
  }

  Rng rng(mix_seed(seed, 0xf01d));
  std::vector<SplitIndices> folds(k);
  for (std::size_t f = 0; f < k; ++f) folds[f].fold_label = std::to_string(f);
  for (auto& group : groups) {
    rng.shuffle(group);
    const auto offs = chunk_offsets(group.size(), k);
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        auto& dst = (i >= offs[f] && i < offs[f + 1]) ? folds[f].test : folds[f].train;
        dst.push_back(group[i]);
      }
    }
  }
  return folds;
}

std::vector<SplitIndices> loso_split(const std::vector<std::string>& subject_ids) {
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < subject_ids.size(); ++i) by_subject[subject_ids[i]].push_back(i);
  if (by_subject.size() < 2)
    throw ValidationError("leave-one-subject-out needs at least two subjects, got " +
                          std::to_string(by_subject.size()));
  std::vector<SplitIndices> folds;
  folds.reserve(by_subject.size());
  for (const auto& [subject, test_idx] : by_subject) {
    SplitIndices fold;
    fold.fold_label = subject;
    fold.test = test_idx;
    for (const auto& [other, idx] : by_subject)
      if (other != subject) fold.train.insert(fold.train.end(), idx.begin(), idx.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

ConfusionMatrix evaluate_model(const Model& model,
                               const std::vector<const WindowInstance*>& test, Target target) {
  if (test.empty()) throw ValidationError("evaluation set is empty");
  ConfusionMatrix cm;
  ForwardCache cache;
  for (const WindowInstance* inst : test) {
    const Tensor probs = model.forward(inst->input, RunMode::eval, cache);
    const int pred = probs.data[1] > probs.data[0] ? 1 : 0;
    cm.add(label_of(*inst, target), pred);
  }
  return cm;
}

}  // namespace eegemo
