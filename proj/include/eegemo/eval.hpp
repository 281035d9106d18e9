#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegemo/nn.hpp"
#include "eegemo/windowing.hpp"

namespace eegemo {

// Positive class: high arousal / positive valence (label 1).
struct ConfusionMatrix {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  void add(int truth, int pred);
};

// Percentage in [0, 100]. Throws on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

// Matthews correlation in [-1, 1]; 0 when any denominator factor vanishes.
double mcc(const ConfusionMatrix& cm);

struct SplitIndices {
  std::string fold_label;  // "0".."k-1" for k-fold, subject id for LOSO
  std::vector<std::size_t> train, test;
};

// Seeded shuffle then contiguous chunks; the first n%k folds get one extra
// instance. Pass `stratify_labels` to split each class that way instead.
std::vector<SplitIndices> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                      const std::vector<int>* stratify_labels = nullptr);

// One fold per distinct subject (ascending id order): test = that subject.
std::vector<SplitIndices> loso_split(const std::vector<std::string>& subject_ids);

ConfusionMatrix evaluate_model(const Model& model,
                               const std::vector<const WindowInstance*>& test, Target target);

}  // namespace eegemo
