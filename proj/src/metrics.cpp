#include "genn2n/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "genn2n/error.hpp"

namespace genn2n {

double psnr(const Image& a, const Image& b) {
  if (!a.same_dims(b)) fail(ErrorKind::shape, "psnr: dimension mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse < 1e-10) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_dims(b)) fail(ErrorKind::shape, "ssim: dimension mismatch");
  constexpr int win = 8;
  constexpr double c1 = 0.01 * 0.01;  // (k1 L)^2, L = 1
  constexpr double c2 = 0.03 * 0.03;
  const int wx = a.width / win, wy = a.height / win;
  if (wx < 1 || wy < 1) fail(ErrorKind::shape, "ssim: image smaller than 8x8 window");
  double total = 0.0;
  for (int ty = 0; ty < wy; ++ty) {
    for (int tx = 0; tx < wx; ++tx) {
      double mx = 0.0, my = 0.0;
      for (int dy = 0; dy < win; ++dy) {
        for (int dx = 0; dx < win; ++dx) {
          mx += luma(a.px(tx * win + dx, ty * win + dy));
          my += luma(b.px(tx * win + dx, ty * win + dy));
        }
      }
      const double n = win * win;
      mx /= n;
      my /= n;
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int dy = 0; dy < win; ++dy) {
        for (int dx = 0; dx < win; ++dx) {
          const double ax = luma(a.px(tx * win + dx, ty * win + dy)) - mx;
          const double by = luma(b.px(tx * win + dx, ty * win + dy)) - my;
          vx += ax * ax;
          vy += by * by;
          cov += ax * by;
        }
      }
      vx /= n;
      vy /= n;
      cov /= n;
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>(wx * wy);
}

double colorfulness(const Image& img) {
  double m_rg = 0.0, m_yb = 0.0;
  const size_t n = img.pixel_count();
  std::vector<double> rg(n), yb(n);
  for (size_t p = 0; p < n; ++p) {
    const double r = img.data[p * 3 + 0] * 255.0;
    const double g = img.data[p * 3 + 1] * 255.0;
    const double b = img.data[p * 3 + 2] * 255.0;
    rg[p] = r - g;
    yb[p] = 0.5 * (r + g) - b;
    m_rg += rg[p];
    m_yb += yb[p];
  }
  m_rg /= static_cast<double>(n);
  m_yb /= static_cast<double>(n);
  double v_rg = 0.0, v_yb = 0.0;
  for (size_t p = 0; p < n; ++p) {
    v_rg += (rg[p] - m_rg) * (rg[p] - m_rg);
    v_yb += (yb[p] - m_yb) * (yb[p] - m_yb);
  }
  v_rg /= static_cast<double>(n);
  v_yb /= static_cast<double>(n);
  return std::sqrt(v_rg + v_yb) + 0.3 * std::sqrt(m_rg * m_rg + m_yb * m_yb);
}

double mean_hue(const Image& img) {
  double m_rg = 0.0, m_yb = 0.0;
  const size_t n = img.pixel_count();
  for (size_t p = 0; p < n; ++p) {
    const double r = img.data[p * 3 + 0], g = img.data[p * 3 + 1], b = img.data[p * 3 + 2];
    m_rg += r - g;
    m_yb += 0.5 * (r + g) - b;
  }
  if (m_rg == 0.0 && m_yb == 0.0) return 0.0;
  return std::atan2(m_yb, m_rg);
}

double circ_dist(double a, double b) {
  double d = std::fmod(a - b, 2.0 * M_PI);
  if (d > M_PI) d -= 2.0 * M_PI;
  if (d < -M_PI) d += 2.0 * M_PI;
  return std::abs(d);
}

double circular_mean(std::span<const double> angles) {
  if (angles.empty()) fail(ErrorKind::shape, "circular_mean: empty");
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  return std::atan2(s, c);
}

double circular_std(std::span<const double> angles) {
  const double m = circular_mean(angles);
  double acc = 0.0;
  for (double a : angles) {
    const double d = circ_dist(a, m);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(angles.size()));
}

// ---- Frechet distance ----

namespace {

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) fail(ErrorKind::numeric, "sqrtm: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, std::abs(ev.maxCoeff()));
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-6 * scale) {
      fail(ErrorKind::numeric,
           "sqrtm: matrix is not PSD after clamping (eigenvalue " + std::to_string(ev[i]) + ")");
    }
    ev[i] = std::sqrt(std::max(0.0, ev[i]));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_from_features(const std::vector<std::vector<double>>& a,
                             const std::vector<std::vector<double>>& b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(ErrorKind::config, "frechet: each set needs >= 2 samples");
  }
  const int d = static_cast<int>(a[0].size());
  for (const auto& row : a) {
    if (static_cast<int>(row.size()) != d) fail(ErrorKind::shape, "frechet: ragged features");
  }
  for (const auto& row : b) {
    if (static_cast<int>(row.size()) != d) fail(ErrorKind::shape, "frechet: ragged features");
  }
  auto fit = [d](const std::vector<std::vector<double>>& set, Eigen::VectorXd& mu,
                 Eigen::MatrixXd& cov) {
    const int n = static_cast<int>(set.size());
    mu = Eigen::VectorXd::Zero(d);
    for (const auto& row : set) {
      for (int i = 0; i < d; ++i) mu[i] += row[static_cast<size_t>(i)];
    }
    mu /= static_cast<double>(n);
    cov = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd x(d);
    for (const auto& row : set) {
      for (int i = 0; i < d; ++i) x[i] = row[static_cast<size_t>(i)] - mu[i];
      cov.noalias() += x * x.transpose();
    }
    cov /= static_cast<double>(n - 1);
  };
  Eigen::VectorXd mu_a, mu_b;
  Eigen::MatrixXd cov_a, cov_b;
  fit(a, mu_a, cov_a);
  fit(b, mu_b, cov_b);
  const Eigen::MatrixXd root_a = sqrtm_psd(cov_a);
  const Eigen::MatrixXd inner = root_a * cov_b * root_a;  // symmetric PSD, same trace as (Sa Sb)^(1/2) squared
  const Eigen::MatrixXd cross = sqrtm_psd(0.5 * (inner + inner.transpose()));
  const double fd = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
                    2.0 * cross.trace();
  return std::max(0.0, fd);
}

std::vector<double> projection_features(const Image& img, int dim, uint64_t seed) {
  const size_t n = img.data.size();
  std::vector<double> out(static_cast<size_t>(dim), 0.0);
  // Per-row seeded projection so features do not depend on image count.
  for (int f = 0; f < dim; ++f) {
    Rng rng(seed_combine(seed, 0x46445052ull, static_cast<uint64_t>(f)));
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += rng.gaussian() * img.data[i];
    out[static_cast<size_t>(f)] = acc / std::sqrt(static_cast<double>(n));
  }
  return out;
}

double frechet_distance(const std::vector<Image>& a, const std::vector<Image>& b, int dim,
                        uint64_t seed) {
  if (a.size() < 2 || b.size() < 2) {
    fail(ErrorKind::config, "frechet_distance: each image set needs >= 2 images");
  }
  for (const auto& im : a) {
    if (!im.same_dims(a[0])) fail(ErrorKind::shape, "frechet_distance: mixed dims in set A");
  }
  for (const auto& im : b) {
    if (!im.same_dims(a[0])) fail(ErrorKind::shape, "frechet_distance: sets have mixed dims");
  }
  std::vector<std::vector<double>> fa, fb;
  fa.reserve(a.size());
  fb.reserve(b.size());
  for (const auto& im : a) fa.push_back(projection_features(im, dim, seed));
  for (const auto& im : b) fb.push_back(projection_features(im, dim, seed));
  return frechet_from_features(fa, fb);
}

// ---- inference ----

SampleSet sample_and_render(const FieldParams& field, const AnalyticScene& scene,
                            const std::vector<CameraPose>& poses, int n_samples,
                            const RenderConfig& cfg, uint64_t seed) {
  if (field.cfg.code_dim < 1) fail(ErrorKind::config, "sample_and_render: unconditional field");
  SampleSet out;
  Rng rng(seed_combine(seed, 0x53414d50ull));
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> z(static_cast<size_t>(field.cfg.code_dim));
    for (auto& v : z) v = rng.gaussian();
    ad::Tensor code = ad::Tensor::from_data({1, field.cfg.code_dim}, z);
    std::vector<Image> renders;
    renders.reserve(poses.size());
    for (const auto& pose : poses) {
      renders.push_back(render_image(field, pose, scene, code, cfg));
    }
    out.codes.push_back(std::move(z));
    out.renders.push_back(std::move(renders));
  }
  return out;
}

std::vector<Image> interpolate_codes(const FieldParams& field, const AnalyticScene& scene,
                                     const CameraPose& pose, std::span<const double> z1,
                                     std::span<const double> z2, int n_steps,
                                     const RenderConfig& cfg) {
  if (n_steps < 2) fail(ErrorKind::config, "interpolate_codes: n_steps must be >= 2");
  if (z1.size() != z2.size() || static_cast<int>(z1.size()) != field.cfg.code_dim) {
    fail(ErrorKind::shape, "interpolate_codes: code dimension mismatch");
  }
  std::vector<Image> frames;
  frames.reserve(static_cast<size_t>(n_steps));
  for (int s = 0; s < n_steps; ++s) {
    const double alpha = static_cast<double>(s) / static_cast<double>(n_steps - 1);
    std::vector<double> z(z1.size());
    for (size_t i = 0; i < z.size(); ++i) z[i] = alpha * z1[i] + (1.0 - alpha) * z2[i];
    ad::Tensor code = ad::Tensor::from_data({1, field.cfg.code_dim}, std::move(z));
    frames.push_back(render_image(field, pose, scene, code, cfg));
  }
  return frames;
}

double view_consistency(const FieldParams& field, const EncoderParams& encoder,
                        const AnalyticScene& scene, const std::vector<CameraPose>& poses,
                        std::span<const double> code, const RenderConfig& cfg) {
  if (poses.size() < 2) fail(ErrorKind::config, "view_consistency: needs >= 2 poses");
  if (static_cast<int>(code.size()) != field.cfg.code_dim) {
    fail(ErrorKind::shape, "view_consistency: code dimension mismatch");
  }
  ad::Tensor z =
      ad::Tensor::from_data({1, field.cfg.code_dim}, std::vector<double>(code.begin(), code.end()));
  const int d = encoder.cfg.code_dim;
  std::vector<std::vector<double>> re_codes;
  re_codes.reserve(poses.size());
  for (const auto& pose : poses) {
    Image render = render_image(field, pose, scene, z, cfg);
    EditCode re = encode_image(nullptr, encoder, render, false, nullptr);
    re_codes.emplace_back(re.mean.data(), re.mean.data() + d);
  }
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    double m = 0.0;
    for (const auto& rc : re_codes) m += rc[static_cast<size_t>(i)];
    m /= static_cast<double>(re_codes.size());
    double v = 0.0;
    for (const auto& rc : re_codes) {
      v += (rc[static_cast<size_t>(i)] - m) * (rc[static_cast<size_t>(i)] - m);
    }
    acc += std::sqrt(v / static_cast<double>(re_codes.size()));
  }
  return acc / static_cast<double>(d);
}

MetricReport evaluate_sets(const std::vector<Image>& a, const std::vector<Image>& b, int fd_dim,
                           uint64_t fd_seed) {
  MetricReport r;
  if (a.empty() || b.empty()) fail(ErrorKind::config, "evaluate_sets: empty image set");
  if (a.size() == b.size()) {
    for (size_t i = 0; i < a.size(); ++i) {
      r.per_pair_psnr.push_back(psnr(a[i], b[i]));
      r.per_pair_ssim.push_back(ssim(a[i], b[i]));
    }
    for (double v : r.per_pair_psnr) r.psnr += v;
    for (double v : r.per_pair_ssim) r.ssim += v;
    r.psnr /= static_cast<double>(a.size());
    r.ssim /= static_cast<double>(a.size());
  }
  for (const auto& im : a) r.cf_a += colorfulness(im);
  for (const auto& im : b) r.cf_b += colorfulness(im);
  r.cf_a /= static_cast<double>(a.size());
  r.cf_b /= static_cast<double>(b.size());
  if (a.size() >= 2 && b.size() >= 2) {
    r.fd_proxy = frechet_distance(a, b, fd_dim, fd_seed);
  }
  return r;
}

void write_report_csv(const MetricReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "write_report_csv: cannot open " + path);
  out.precision(17);
  out << "metric,value\n";
  out << "psnr," << r.psnr << "\n";
  out << "ssim," << r.ssim << "\n";
  out << "cf_a," << r.cf_a << "\n";
  out << "cf_b," << r.cf_b << "\n";
  out << "fd_proxy," << r.fd_proxy << "\n";
}

void write_report_text(const MetricReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "write_report_text: cannot open " + path);
  out.precision(6);
  out << "PSNR      " << r.psnr << " dB\n";
  out << "SSIM      " << r.ssim << "\n";
  out << "CF (A)    " << r.cf_a << "\n";
  out << "CF (B)    " << r.cf_b << "\n";
  out << "FD-proxy  " << r.fd_proxy << "\n";
}

}  // namespace genn2n
