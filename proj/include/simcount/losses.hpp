#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "simcount/geometry.hpp"
#include "simcount/ops.hpp"
#include "simcount/tensor.hpp"

namespace simcount {

// How blocks with exactly one dot are labeled: kAtLeastOne marks them
// POSITIVE; kMoreThanOne requires two or more dots and marks single-dot
// blocks IGNORED.
enum class LabelRule { kAtLeastOne, kMoreThanOne };

LabelRule parse_label_rule(std::string_view text);
std::string_view to_string(LabelRule rule);

struct SimilarityLabels {
  std::size_t h = 0, w = 0, r = 0;
  std::vector<Mark> marks;  // row-major h x w

  Mark at(std::size_t i, std::size_t j) const { return marks[i * w + j]; }
  std::size_t count(Mark m) const;
};

struct LossWeights {
  double alpha = 0.0;
};

// Sum over pixels of squared differences.
Tensor counting_loss(const Tensor& pred, const Tensor& gt);

// Labels an h x w grid of blocks. Block (i,j) covers pixels [i r, (i+1) r) x [j r, (j+1) r).
SimilarityLabels assign_labels(std::span<const Point> dots, std::size_t h_x, std::size_t w_x, std::size_t r,
                               LabelRule rule = LabelRule::kAtLeastOne);

// Signal-to-noise log-ratio loss on one [h,w] map. A map without positives
// contributes 0.
Tensor similarity_loss(const Tensor& similarity, const SimilarityLabels& labels);

// Mean of similarity_loss over the maps of [n,h,w]. `skipped` (optional)
// receives the number of maps that had no positive position.
Tensor similarity_loss(const Tensor& per_exemplar, const SimilarityLabels& labels, std::size_t* skipped);

Tensor total_loss(const Tensor& count_loss, const Tensor& sim_loss, const LossWeights& weights);

}  // namespace simcount
