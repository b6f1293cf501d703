#pragma once

#include <span>
#include <string>
#include <vector>

#include "genn2n/field.hpp"
#include "genn2n/image.hpp"
#include "genn2n/latent.hpp"
#include "genn2n/scene.hpp"

namespace genn2n {

// 10*log10(1/MSE) on [0,1] images, capped at 99 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

// Mean over non-overlapping 8x8 luma windows; k1 = 0.01, k2 = 0.03, L = 1.
double ssim(const Image& a, const Image& b);

// Hasler-Suesstrunk colorfulness on [0,255]-scaled channels.
double colorfulness(const Image& img);

// Opponent-axis mean hue (radians): atan2(mean yb, mean rg). Zero for gray.
double mean_hue(const Image& img);
double circ_dist(double a, double b);
double circular_mean(std::span<const double> angles);
double circular_std(std::span<const double> angles);

// Frechet distance between Gaussian fits of two feature sets:
// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)); matrix square root by
// symmetric eigendecomposition with eigenvalue clamping at zero.
double frechet_from_features(const std::vector<std::vector<double>>& a,
                             const std::vector<std::vector<double>>& b);

// Pinned seeded random projection of a flattened image to `dim` features.
std::vector<double> projection_features(const Image& img, int dim, uint64_t seed);
double frechet_distance(const std::vector<Image>& a, const std::vector<Image>& b, int dim = 64,
                        uint64_t seed = 2024);

struct SampleSet {
  std::vector<std::vector<double>> codes;       // n_samples x d
  std::vector<std::vector<Image>> renders;      // n_samples x poses
};

// z_s ~ N(0, I_d) from the seeded stream; deterministic renders.
SampleSet sample_and_render(const FieldParams& field, const AnalyticScene& scene,
                            const std::vector<CameraPose>& poses, int n_samples,
                            const RenderConfig& cfg, uint64_t seed);

// Frames along a uniform alpha grid of z = alpha*z1 + (1-alpha)*z2;
// endpoints reproduce direct renders bit-exactly.
std::vector<Image> interpolate_codes(const FieldParams& field, const AnalyticScene& scene,
                                     const CameraPose& pose, std::span<const double> z1,
                                     std::span<const double> z2, int n_steps,
                                     const RenderConfig& cfg);

// Render every pose under the fixed code, re-encode, return the mean
// per-dimension std of the re-extracted codes. Lower = more view-consistent.
double view_consistency(const FieldParams& field, const EncoderParams& encoder,
                        const AnalyticScene& scene, const std::vector<CameraPose>& poses,
                        std::span<const double> code, const RenderConfig& cfg);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double cf_a = 0.0;
  double cf_b = 0.0;
  double fd_proxy = 0.0;
  std::vector<double> per_pair_psnr;
  std::vector<double> per_pair_ssim;
};

// Paired metrics by index (sets must be same length for psnr/ssim; fd/cf
// work on any sizes >= 2).
MetricReport evaluate_sets(const std::vector<Image>& a, const std::vector<Image>& b,
                           int fd_dim = 64, uint64_t fd_seed = 2024);
void write_report_csv(const MetricReport& r, const std::string& path);
void write_report_text(const MetricReport& r, const std::string& path);

}  // namespace genn2n
