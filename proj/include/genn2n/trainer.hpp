#pragma once

#include <string>
#include <vector>

#include "genn2n/adversarial.hpp"
#include "genn2n/field.hpp"
#include "genn2n/latent.hpp"
#include "genn2n/scene.hpp"
#include "genn2n/translator.hpp"

namespace genn2n {

struct TrainWeights {
  double kl = 1.0;
  double recon = 1.0;
  double adg = 0.1;
  double add = 0.1;
  double contr = 0.1;
};

struct TrainConfig {
  TrainWeights w;
  double lr = 1e-2;
  double d_lr = 1e-2;
  int iters = 2000;
  int rays_per_step = 2048;    // includes the patch rays
  int samples_per_ray = 32;
  int patch_size = 16;         // perceptual/adversarial patch edge
  int contr_views = 2;         // extra attract views per step
  int contr_rays = 256;        // stride-subsampled frame, e.g. 16x16 at 64x64
  int contr_samples_per_ray = 16;
  double margin = 1.0;
  int code_dim = 8;
  uint64_t seed = 1;
  int d_steps_per_g = 1;
  bool stratified = true;
  bool freeze_encoder = false;   // train only the MLP of the latent encoder
  bool detach_renders = false;   // stop attract-render gradients at the field
  bool disable_kl = false;
  bool disable_recon = false;
  bool disable_adv = false;
  bool disable_contr = false;
  // perceptual stand-in: frozen seeded filter bank
  int perc_filters = 16;
  int perc_ksize = 5;
  uint64_t perc_seed = 77;
  // encoder architecture
  int enc_patch = 8;
  int enc_embed = 32;
  int enc_hidden = 32;
  // discriminator architecture
  int disc_hidden1 = 64;
  int disc_hidden2 = 32;
};

struct LossRecord {
  int iter = 0;
  double total = 0.0;
  double kl = 0.0;
  double recon = 0.0;
  double adg = 0.0;
  double add = 0.0;
  double contr = 0.0;
};

// Frozen bank of seeded random filters + relu; feature maps compared by L2.
struct PerceptualBank {
  int ksize = 5;
  int filters = 16;
  ad::Tensor weights;  // [ksize*ksize*3, filters], requires_grad = false
};

PerceptualBank make_perceptual_bank(int ksize, int filters, uint64_t seed);

// Feature maps of an image rect over all valid ksize x ksize windows.
ad::Tensor perceptual_features(ad::Graph* g, const ad::Tensor& rect, int w, int h,
                               const PerceptualBank& bank);

// L1 + perceptual-feature L2 between matched rects ([w*h, 3] tensors).
ad::Tensor recon_loss(ad::Graph* g, const ad::Tensor& render, const ad::Tensor& target, int w,
                      int h, const PerceptualBank& bank);

struct TrainState {
  TrainConfig cfg;
  FieldParams field;           // translated field (conditional)
  EncoderParams encoder;
  DiscriminatorParams disc;
  PerceptualBank perceptual;
  ad::AdamState gen_adam;
  ad::AdamState disc_adam;
  AnalyticScene scene;
  std::vector<CameraPose> poses;
  EditedImageSet edits;
  RenderConfig render_cfg;
  // epoch-level view sampling without replacement
  std::vector<int> view_order;
  size_t view_cursor = 0;
  int epoch = 0;

  std::vector<ad::Tensor> generator_params() const;
};

TrainState make_train_state(const TrainConfig& cfg, const FieldParams& original,
                            const AnalyticScene& scene, const std::vector<CameraPose>& poses,
                            const EditedImageSet& edits);

// One optimization iteration: encode an edit, render its view under the
// code, step the generator on recon/KL/contrastive/AD-G, then the
// discriminator on AD-D. Throws ErrorKind::numeric naming the offending
// term if any loss is non-finite.
LossRecord train_step(TrainState& state, int iter);

struct TrainResult {
  std::vector<LossRecord> records;
  std::string checkpoint_path;
  std::string losses_path;
  std::string manifest_path;
};

// Full run: iterates train_step, writes losses.csv, checkpoint.bin and
// manifest.txt under out_dir. `input_hash` is echoed into the manifest.
TrainResult train(TrainState& state, const std::string& out_dir, uint64_t input_hash);

std::string train_config_echo(const TrainConfig& cfg);
void write_losses_csv(const std::vector<LossRecord>& records, const std::string& path);
std::vector<LossRecord> read_losses_csv(const std::string& path);

}  // namespace genn2n
