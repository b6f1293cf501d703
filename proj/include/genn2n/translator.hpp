#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "genn2n/image.hpp"

namespace genn2n {

enum class TranslateTask { stylize, colorize, super_resolve, inpaint };

std::string task_name(TranslateTask task);
TranslateTask task_from_name(const std::string& name);

// Parametric, seeded stand-in for a 2D image-to-image editor. Edits are
// drawn from `mode_count` discrete modes (mode of edit j is j % mode_count);
// `epsilon` scales a per-view perturbation seeded by the view index alone,
// so edit identity and view noise are controlled independently.
struct TranslatorSpec {
  TranslateTask task = TranslateTask::colorize;
  int mode_count = 2;
  double epsilon = 0.0;
  int sr_scale = 4;                 // super_resolve: in {2, 4}
  std::optional<Image> mask;        // inpaint: luma > 0.5 marks the fill region
};

struct EditedImageSet {
  std::vector<Image> sources;             // N
  std::vector<std::vector<Image>> edits;  // N x M dense
  std::string task;
  uint64_t seed = 0;
  double epsilon = 0.0;
  int mode_count = 1;
  std::vector<std::vector<uint64_t>> seed_table;  // hash(seed, i, j)

  int n_views() const { return static_cast<int>(sources.size()); }
  int n_edits() const { return edits.empty() ? 0 : static_cast<int>(edits[0].size()); }
};

EditedImageSet translate(const TranslatorSpec& spec, const std::vector<Image>& sources, int M,
                         uint64_t seed);

// Single-edit entry point (view i, edit j) used by translate().
Image apply_edit(const TranslatorSpec& spec, const Image& source, int view_index, int edit_index,
                 int M, uint64_t seed);

// Rec.601 luma replicated to 3 channels. Exact fixed point on gray input.
Image grayscale(const Image& img);

// Box-filter block average; dims must divide by factor.
Image downscale(const Image& img, int factor);

// Block replication; exact inverse of downscale on its image.
Image upscale_nearest(const Image& img, int factor);

// Catmull-Rom bicubic upsampling (used by the super-resolution task).
Image upscale_bicubic(const Image& img, int factor);

// RGB rotation about the gray axis by `angle` radians.
void hue_rotate_rgb(double angle, const double* rgb_in, double* rgb_out);

// The discrete mode tint (unit-max RGB) used by colorize/inpaint palettes
// and, as a cast direction, by stylize/super_resolve. Exposed for tests and
// mode-coverage evaluation against ground truth.
void mode_tint(int mode, double* rgb_out);

// Directory persistence: root/view_{i:03}/edit_{j:02}.ppm (+ source.ppm)
// and root/manifest.txt.
void save_edited_set(const EditedImageSet& set, const std::string& root);
EditedImageSet load_edited_set(const std::string& root);

}  // namespace genn2n
