#pragma once

#include <span>
#include <vector>

#include "genn2n/image.hpp"
#include "genn2n/rng.hpp"
#include "genn2n/tensor.hpp"
#include "genn2n/translator.hpp"

namespace genn2n {

struct DiscriminatorConfig {
  int patch = 16;   // square patches, scores averaged
  int hidden1 = 64;
  int hidden2 = 32;
};

// Patch MLP over 6-channel inputs (image ++ signed difference image):
// three layers, sigmoid scalar per patch, averaged over patches.
struct DiscriminatorParams {
  DiscriminatorConfig cfg;
  std::vector<ad::Linear> mlp;  // patch^2*6 -> h1 -> h2 -> 1
  std::vector<ad::Tensor> parameters() const;
};

DiscriminatorParams make_discriminator(const DiscriminatorConfig& cfg, Rng& rng);

// 6-channel pair: [H*W, 6] tensor; both halves share the viewpoint and the
// difference channel is signed in [-1, 1].
struct Pair {
  ad::Tensor channels;  // concat_cols(image, image - condition)
  int width = 0;
  int height = 0;
  int view = -1;
};

Pair make_pair(ad::Graph* g, const ad::Tensor& image, const ad::Tensor& condition, int width,
               int height, int view);

struct PairBatch {
  std::vector<Pair> real;  // (S^j, S^j - S^k)
  std::vector<Pair> fake;  // (C^j, C^j - S^k)
};

// For each provided render C_i^j, draws k != j uniformly and emits the
// matched real/fake pair at view i. Needs M >= 2.
struct RenderEntry {
  int view = 0;
  int edit = 0;
  Image image;
};
PairBatch build_pairs(const EditedImageSet& edits, const std::vector<RenderEntry>& renders,
                      Rng& rng);

// Mean over non-overlapping patches of sigmoid(patch score); output in (0,1).
ad::Tensor discriminate(ad::Graph* g, const DiscriminatorParams& d, const Pair& pair);

// Eq.-style objectives over the batch; probabilities are clamped to
// [1e-6, 1 - 1e-6] before the log.
ad::Tensor d_loss(ad::Graph* g, const DiscriminatorParams& d, const PairBatch& batch);
ad::Tensor g_loss(ad::Graph* g, const DiscriminatorParams& d, std::span<const Pair> fake);

}  // namespace genn2n
