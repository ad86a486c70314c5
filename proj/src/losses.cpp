#include "simcount/losses.hpp"

#include <algorithm>
#include <string>

#include "simcount/errors.hpp"

namespace simcount {

LabelRule parse_label_rule(std::string_view text) {
  if (text == "at_least_one") return LabelRule::kAtLeastOne;
  if (text == "strict" || text == "more_than_one") return LabelRule::kMoreThanOne;
  throw ConfigError("unknown label rule '" + std::string(text) + "' (expected at_least_one or strict)");
}

std::string_view to_string(LabelRule rule) {
  return rule == LabelRule::kAtLeastOne ? "at_least_one" : "strict";
}

std::size_t SimilarityLabels::count(Mark m) const {
  return static_cast<std::size_t>(std::count(marks.begin(), marks.end(), m));
}

Tensor counting_loss(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape()) {
    throw ContractError("counting_loss: prediction " + to_string(pred.shape()) + " vs ground truth " +
                        to_string(gt.shape()));
  }
  Tensor diff = sub(pred, gt);
  return sum(hadamard(diff, diff));
}

SimilarityLabels assign_labels(std::span<const Point> dots, std::size_t h_x, std::size_t w_x, std::size_t r,
                               LabelRule rule) {
  if (r == 0) throw ContractError("assign_labels: block size must be positive");
  std::vector<std::size_t> hits(h_x * w_x, 0);
  for (const Point& p : dots) {
    if (p.x < 0 || p.y < 0) throw ContractError("assign_labels: dot outside image");
    const auto i = static_cast<std::size_t>(p.y) / r, j = static_cast<std::size_t>(p.x) / r;
    if (i >= h_x || j >= w_x) throw ContractError("assign_labels: dot outside image");
    ++hits[i * w_x + j];
  }
  SimilarityLabels labels{h_x, w_x, r, std::vector<Mark>(h_x * w_x, Mark::kNegative)};
  for (std::size_t k = 0; k < hits.size(); ++k) {
    if (hits[k] == 0) continue;
    if (rule == LabelRule::kAtLeastOne || hits[k] > 1) {
      labels.marks[k] = Mark::kPositive;
    } else {
      labels.marks[k] = Mark::kIgnored;
    }
  }
  return labels;
}

Tensor similarity_loss(const Tensor& similarity, const SimilarityLabels& labels) {
  if (similarity.shape() != Shape{labels.h, labels.w}) {
    throw DimensionError("similarity_loss: map " + to_string(similarity.shape()) + " vs labels [" +
                         std::to_string(labels.h) + "," + std::to_string(labels.w) + "]");
  }
  return log_ratio_loss(similarity, labels.marks);
}

Tensor similarity_loss(const Tensor& per_exemplar, const SimilarityLabels& labels, std::size_t* skipped) {
  if (per_exemplar.rank() != 3) {
    throw DimensionError("similarity_loss: expected [n,h,w], got " + to_string(per_exemplar.shape()));
  }
  const std::size_t n = per_exemplar.dim(0);
  const bool has_positive = labels.count(Mark::kPositive) > 0;
  if (skipped != nullptr) *skipped = has_positive ? 0 : n;
  Tensor acc;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor map = reshape(slice(per_exemplar, i, i + 1), {per_exemplar.dim(1), per_exemplar.dim(2)});
    Tensor l = similarity_loss(map, labels);
    acc = acc.defined() ? add(acc, l) : l;
  }
  return scale(acc, 1.0 / static_cast<double>(n));
}

Tensor total_loss(const Tensor& count_loss, const Tensor& sim_loss, const LossWeights& weights) {
  return add(count_loss, scale(sim_loss, weights.alpha));
}

}  // namespace simcount
