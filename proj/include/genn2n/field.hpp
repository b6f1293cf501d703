#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "genn2n/scene.hpp"
#include "genn2n/tensor.hpp"

namespace genn2n {

struct FieldConfig {
  int enc_levels_pos = 4;
  int enc_levels_dir = 2;
  int trunk_layers = 4;  // weight layers; hidden trunk_width, output feature_width
  int trunk_width = 64;
  int feature_width = 32;
  int head_layers = 2;  // weight layers; hidden head_width, outputs 1 / 3
  int head_width = 32;
  int code_dim = 0;      // 0 = unconditional field
  bool ablate_code = false;  // replace the edit code by zeros at eval time

  int input_dim() const {
    return (3 + 6 * enc_levels_pos) + (3 + 6 * enc_levels_dir);
  }
};

// Radiance field parameters. The trunk maps encoded position+direction to a
// feature vector; the heads map feature (+ edit code when code_dim > 0) to
// density (softplus) and color (sigmoid).
struct FieldParams {
  FieldConfig cfg;
  std::vector<ad::Linear> trunk;
  std::vector<ad::Linear> density_head;
  std::vector<ad::Linear> color_head;

  std::vector<ad::Tensor> parameters() const;
  std::vector<ad::Tensor> head_parameters() const;
};

FieldParams make_field(const FieldConfig& cfg, Rng& rng);

// Translated field: keeps the pre-trained trunk (old output heads dropped),
// attaches fresh heads that consume feature ++ edit code.
FieldParams make_translated_field(const FieldParams& original, int code_dim, Rng& rng);

// [x_c, sin(2^k pi x_c), cos(2^k pi x_c) for k < levels] per component.
std::vector<double> positional_encode(const Vec3& x, int levels);

struct FieldEval {
  ad::Tensor sigma;  // [P, 1], >= 0
  ad::Tensor rgb;    // [P, 3], in (0, 1)
};

// Batched field evaluation at P points. `code` must be [1, code_dim] when
// code_dim > 0; it is broadcast to every point and concatenated with the
// trunk feature before the heads.
FieldEval field_eval(ad::Graph* g, const FieldParams& field, const std::vector<Vec3>& points,
                     const std::vector<Vec3>& dirs, const ad::Tensor& code);

struct RenderConfig {
  int n_samples_per_ray = 32;
  double t_near = 2.0;  // fallback when a ray does not carry its own range
  double t_far = 6.0;
  bool stratified = false;
  bool white_background = false;
  Vec3 background{0.5, 0.5, 0.5};

  Vec3 effective_background() const {
    return white_background ? Vec3{1.0, 1.0, 1.0} : background;
  }
};

struct RenderResult {
  ad::Tensor pixels;   // [R, 3]
  ad::Tensor weights;  // [R, n] = T_k * alpha_k
};

// Emission-absorption quadrature along each ray, differentiable w.r.t.
// field parameters and the edit code. `rng` drives stratified jitter and
// must be non-null when cfg.stratified.
RenderResult volume_render(ad::Graph* g, const FieldParams& field, const std::vector<Ray>& rays,
                           const ad::Tensor& code, const RenderConfig& cfg, Rng* rng = nullptr);

// No-grad full-frame render, chunked to bound peak memory.
Image render_image(const FieldParams& field, const CameraPose& pose, const AnalyticScene& scene,
                   const ad::Tensor& code, const RenderConfig& cfg);

struct PretrainConfig {
  int iters = 2000;
  double lr = 1e-2;
  int rays_per_step = 512;
  int samples_per_ray = 32;
  bool stratified = true;
  uint64_t seed = 1;
  int log_every = 100;
};

struct PretrainResult {
  FieldParams params;
  double train_psnr = 0.0;
  std::vector<double> loss_curve;  // one entry per iteration
};

// Fits an unconditional field to the posed images by L2 photometric loss.
// Throws ErrorKind::numeric naming the iteration if the loss goes NaN.
PretrainResult pretrain_original_nerf(const std::vector<Image>& images,
                                      const std::vector<CameraPose>& poses,
                                      const AnalyticScene& scene, const FieldConfig& fcfg,
                                      const PretrainConfig& pcfg);

}  // namespace genn2n
