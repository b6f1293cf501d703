#pragma once

#include <span>
#include <vector>

#include "genn2n/image.hpp"
#include "genn2n/tensor.hpp"

namespace genn2n {

struct EncoderConfig {
  int image_w = 64;
  int image_h = 64;
  int patch = 8;       // square, must divide both dims
  int embed_dim = 32;  // patch embedding width
  int hidden = 32;     // MLP hidden width
  int code_dim = 8;    // d
};

// Patch-embedding encoder followed by a three-layer MLP that emits
// (mean, log_var) of the edit-code posterior.
struct EncoderParams {
  EncoderConfig cfg;
  ad::Linear patch_embed;
  std::vector<ad::Linear> mlp;  // embed -> hidden -> hidden -> 2d
  std::vector<int64_t> patch_index;  // pixel gather order, patch-major

  std::vector<ad::Tensor> parameters() const;
  std::vector<ad::Tensor> mlp_parameters() const;  // trainable set under freeze_encoder
};

EncoderParams make_encoder(const EncoderConfig& cfg, Rng& rng);

constexpr double kLogVarClamp = 10.0;

struct EditCode {
  ad::Tensor mean;     // [1, d]
  ad::Tensor log_var;  // [1, d], clamped to [-10, 10]
  ad::Tensor sample;   // [1, d]; equals mean exactly when sampling is off
};

// image tensor is [H*W, 3]; may be a differentiable graph node (re-encoding
// rendered views) or a constant. When `sample` is set, the code is
// reparameterized with noise from `rng`.
EditCode encode(ad::Graph* g, const EncoderParams& enc, const ad::Tensor& image, bool sample,
                Rng* rng);
EditCode encode_image(ad::Graph* g, const EncoderParams& enc, const Image& img, bool sample,
                      Rng* rng);

ad::Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const ad::Tensor& t, int width, int height);

// Mean over the batch of the closed-form Gaussian KL to N(0, I):
// 1/2 sum_d (mean^2 + e^logvar - 1 - logvar).
ad::Tensor kl_loss(ad::Graph* g, std::span<const EditCode> codes);

// sum_l ||anchor - attract_l||^2 + sum_k max(0, margin - ||anchor - repel_k||^2)
ad::Tensor contrastive_loss(ad::Graph* g, const ad::Tensor& anchor,
                            std::span<const ad::Tensor> attract,
                            std::span<const ad::Tensor> repel, double margin);

}  // namespace genn2n
