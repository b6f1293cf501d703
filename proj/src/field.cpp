#include "genn2n/field.hpp"

#include <cmath>

#include "genn2n/error.hpp"
#include "genn2n/parallel.hpp"

namespace genn2n {

using ad::Graph;
using ad::Linear;
using ad::Tensor;

std::vector<ad::Tensor> FieldParams::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : trunk) ad::collect_params(l, out);
  for (const auto& l : density_head) ad::collect_params(l, out);
  for (const auto& l : color_head) ad::collect_params(l, out);
  return out;
}

std::vector<ad::Tensor> FieldParams::head_parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : density_head) ad::collect_params(l, out);
  for (const auto& l : color_head) ad::collect_params(l, out);
  return out;
}

namespace {

std::vector<Linear> make_mlp(int64_t in, int64_t hidden, int64_t out, int layers, Rng& rng) {
  std::vector<Linear> mlp;
  if (layers < 1) fail(ErrorKind::config, "mlp needs >= 1 layer");
  for (int l = 0; l < layers; ++l) {
    const int64_t li = (l == 0) ? in : hidden;
    const int64_t lo = (l == layers - 1) ? out : hidden;
    mlp.push_back(ad::make_linear(li, lo, rng));
  }
  return mlp;
}

Tensor mlp_forward(Graph* g, const std::vector<Linear>& mlp, const Tensor& x) {
  Tensor h = x;
  for (size_t l = 0; l < mlp.size(); ++l) {
    h = ad::linear_forward(g, mlp[l], h);
    if (l + 1 < mlp.size()) h = ad::relu(g, h);
  }
  return h;
}

}  // namespace

FieldParams make_field(const FieldConfig& cfg, Rng& rng) {
  FieldParams f;
  f.cfg = cfg;
  f.trunk = make_mlp(cfg.input_dim(), cfg.trunk_width, cfg.feature_width, cfg.trunk_layers, rng);
  const int64_t head_in = cfg.feature_width + cfg.code_dim;
  f.density_head = make_mlp(head_in, cfg.head_width, 1, cfg.head_layers, rng);
  f.color_head = make_mlp(head_in, cfg.head_width, 3, cfg.head_layers, rng);
  return f;
}

FieldParams make_translated_field(const FieldParams& original, int code_dim, Rng& rng) {
  FieldParams f;
  f.cfg = original.cfg;
  f.cfg.code_dim = code_dim;
  f.cfg.ablate_code = false;
  // Keep the trunk weights (shared storage: further training updates them);
  // the original output heads are dropped and fresh conditional heads added.
  f.trunk = original.trunk;
  const int64_t head_in = f.cfg.feature_width + code_dim;
  f.density_head = make_mlp(head_in, f.cfg.head_width, 1, f.cfg.head_layers, rng);
  f.color_head = make_mlp(head_in, f.cfg.head_width, 3, f.cfg.head_layers, rng);
  return f;
}

std::vector<double> positional_encode(const Vec3& x, int levels) {
  if (levels < 0) fail(ErrorKind::config, "positional_encode: levels must be >= 0");
  std::vector<double> out;
  out.reserve(3 + 6 * static_cast<size_t>(levels));
  for (int c = 0; c < 3; ++c) {
    out.push_back(x[c]);
    double freq = M_PI;
    for (int k = 0; k < levels; ++k) {
      out.push_back(std::sin(freq * x[c]));
      out.push_back(std::cos(freq * x[c]));
      freq *= 2.0;
    }
  }
  return out;
}

FieldEval field_eval(Graph* g, const FieldParams& field, const std::vector<Vec3>& points,
                     const std::vector<Vec3>& dirs, const ad::Tensor& code) {
  const int64_t P = static_cast<int64_t>(points.size());
  if (P == 0 || points.size() != dirs.size()) {
    fail(ErrorKind::shape, "field_eval: points/dirs size mismatch");
  }
  const FieldConfig& cfg = field.cfg;
  if (cfg.code_dim > 0) {
    if (!code.defined() || code.shape() != std::vector<int64_t>{1, cfg.code_dim}) {
      fail(ErrorKind::shape, "field_eval: edit code must be [1," +
                                 std::to_string(cfg.code_dim) + "]");
    }
  }

  const int in_dim = cfg.input_dim();
  std::vector<double> enc(static_cast<size_t>(P) * in_dim);
  parallel_for(P, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const auto pe = positional_encode(points[static_cast<size_t>(i)], cfg.enc_levels_pos);
      const auto de = positional_encode(dirs[static_cast<size_t>(i)], cfg.enc_levels_dir);
      double* dst = enc.data() + i * in_dim;
      std::copy(pe.begin(), pe.end(), dst);
      std::copy(de.begin(), de.end(), dst + pe.size());
    }
  });
  Tensor x = Tensor::from_data({P, in_dim}, std::move(enc));

  Tensor feature = mlp_forward(g, field.trunk, x);
  Tensor head_in = feature;
  if (cfg.code_dim > 0) {
    Tensor z = code;
    if (cfg.ablate_code) z = Tensor::zeros({1, cfg.code_dim});
    // broadcast the code to every point: ones[P,1] * z[1,d]
    Tensor ones = Tensor::full({P, 1}, 1.0);
    Tensor zb = ad::matmul(g, ones, z);
    head_in = ad::concat_cols(g, feature, zb);
  }
  FieldEval out;
  out.sigma = ad::softplus(g, mlp_forward(g, field.density_head, head_in));
  out.rgb = ad::sigmoid(g, mlp_forward(g, field.color_head, head_in));
  return out;
}

RenderResult volume_render(Graph* g, const FieldParams& field, const std::vector<Ray>& rays,
                           const ad::Tensor& code, const RenderConfig& cfg, Rng* rng) {
  const int64_t R = static_cast<int64_t>(rays.size());
  const int64_t n = cfg.n_samples_per_ray;
  if (R == 0) fail(ErrorKind::shape, "volume_render: no rays");
  if (n < 2) fail(ErrorKind::config, "volume_render: n_samples_per_ray must be >= 2");
  if (cfg.stratified && rng == nullptr) {
    fail(ErrorKind::config, "volume_render: stratified sampling needs an RNG");
  }

  std::vector<Vec3> points(static_cast<size_t>(R * n));
  std::vector<Vec3> dirs(static_cast<size_t>(R * n));
  std::vector<double> deltas(static_cast<size_t>(R * n));
  std::vector<double> ts(static_cast<size_t>(n));
  for (int64_t r = 0; r < R; ++r) {
    const Ray& ray = rays[static_cast<size_t>(r)];
    const double near = ray.t_far > ray.t_near ? ray.t_near : cfg.t_near;
    const double far = ray.t_far > ray.t_near ? ray.t_far : cfg.t_far;
    const double step = (far - near) / static_cast<double>(n);
    for (int64_t k = 0; k < n; ++k) {
      const double jitter = cfg.stratified ? rng->uniform01() : 0.0;
      ts[static_cast<size_t>(k)] = near + step * (static_cast<double>(k) + jitter);
    }
    for (int64_t k = 0; k < n; ++k) {
      const double t = ts[static_cast<size_t>(k)];
      const double t_next = (k + 1 < n) ? ts[static_cast<size_t>(k + 1)] : far;
      const size_t idx = static_cast<size_t>(r * n + k);
      points[idx] = ray.origin + t * ray.direction;
      dirs[idx] = ray.direction;
      deltas[idx] = t_next - t;
    }
  }

  FieldEval ev = field_eval(g, field, points, dirs, code);

  Tensor delta = Tensor::from_data({R, n}, std::move(deltas));
  Tensor sig = ad::reshape(g, ev.sigma, {R, n});
  Tensor sd = ad::mul(g, sig, delta);  // sigma_k * delta_k

  // strictly-lower-triangular ones: cum_excl[r,k] = sum_{l<k} sd[r,l]
  Tensor tri = Tensor::zeros({n, n});
  for (int64_t l = 0; l < n; ++l) {
    for (int64_t k = l + 1; k < n; ++k) tri.data()[l * n + k] = 1.0;
  }
  Tensor cum_excl = ad::matmul(g, sd, tri);
  Tensor transmittance = ad::exp(g, ad::scale(g, cum_excl, -1.0));          // T_k
  Tensor alpha = ad::add_scalar(g, ad::scale(g, ad::exp(g, ad::scale(g, sd, -1.0)), -1.0), 1.0);
  Tensor weights = ad::mul(g, transmittance, alpha);                        // T_k * alpha_k

  Tensor ones_n = Tensor::full({n, 1}, 1.0);
  Tensor wsum = ad::matmul(g, weights, ones_n);  // [R,1]
  Tensor ones_r = Tensor::full({R, 1}, 1.0);
  Tensor leftover = ad::sub(g, ones_r, wsum);    // T_final by the telescoping identity

  const Vec3 bg = cfg.effective_background();
  std::vector<Tensor> channels;
  for (int ch = 0; ch < 3; ++ch) {
    Tensor c = ad::reshape(g, ad::slice_cols(g, ev.rgb, ch, 1), {R, n});
    Tensor lit = ad::matmul(g, ad::mul(g, weights, c), ones_n);
    channels.push_back(ad::add(g, lit, ad::scale(g, leftover, bg[static_cast<size_t>(ch)])));
  }
  RenderResult out;
  out.pixels = ad::concat_cols(g, ad::concat_cols(g, channels[0], channels[1]), channels[2]);
  out.weights = weights;
  return out;
}

Image render_image(const FieldParams& field, const CameraPose& pose, const AnalyticScene& scene,
                   const ad::Tensor& code, const RenderConfig& cfg) {
  const std::vector<Ray> rays = generate_rays(pose, scene);
  Image img(pose.width, pose.height);
  const int64_t chunk = 2048;
  const int64_t total = static_cast<int64_t>(rays.size());
  for (int64_t start = 0; start < total; start += chunk) {
    const int64_t count = std::min(chunk, total - start);
    std::vector<Ray> part(rays.begin() + start, rays.begin() + start + count);
    RenderResult rr = volume_render(nullptr, field, part, code, cfg, nullptr);
    const double* px = rr.pixels.data();
    for (int64_t i = 0; i < count; ++i) {
      for (int c = 0; c < 3; ++c) img.data[static_cast<size_t>((start + i) * 3 + c)] = px[i * 3 + c];
    }
  }
  return img;
}

PretrainResult pretrain_original_nerf(const std::vector<Image>& images,
                                      const std::vector<CameraPose>& poses,
                                      const AnalyticScene& scene, const FieldConfig& fcfg,
                                      const PretrainConfig& pcfg) {
  if (images.size() < 2 || images.size() != poses.size()) {
    fail(ErrorKind::config, "pretrain: need >= 2 posed views (got " +
                                std::to_string(images.size()) + " images, " +
                                std::to_string(poses.size()) + " poses)");
  }
  FieldConfig cfg = fcfg;
  cfg.code_dim = 0;
  Rng rng(pcfg.seed);
  FieldParams field = make_field(cfg, rng);
  std::vector<Tensor> params = field.parameters();
  ad::AdamState adam;
  ad::AdamConfig acfg;
  acfg.lr = pcfg.lr;

  // cache per-view rays
  std::vector<std::vector<Ray>> view_rays;
  view_rays.reserve(poses.size());
  for (const auto& pose : poses) view_rays.push_back(generate_rays(pose, scene));

  RenderConfig rc;
  rc.n_samples_per_ray = pcfg.samples_per_ray;
  rc.stratified = pcfg.stratified;
  rc.background = scene.background;

  PretrainResult result;
  result.loss_curve.reserve(static_cast<size_t>(pcfg.iters));
  Graph graph;
  for (int it = 0; it < pcfg.iters; ++it) {
    Rng step_rng = rng.substream(static_cast<uint64_t>(it) + 1);
    const size_t view = static_cast<size_t>(step_rng.uniform_int(poses.size()));
    const auto& rays_all = view_rays[view];
    const auto& img = images[view];

    std::vector<Ray> batch;
    std::vector<double> target;
    batch.reserve(static_cast<size_t>(pcfg.rays_per_step));
    target.reserve(static_cast<size_t>(pcfg.rays_per_step) * 3);
    for (int r = 0; r < pcfg.rays_per_step; ++r) {
      const size_t pix = static_cast<size_t>(step_rng.uniform_int(rays_all.size()));
      batch.push_back(rays_all[pix]);
      target.push_back(img.data[pix * 3 + 0]);
      target.push_back(img.data[pix * 3 + 1]);
      target.push_back(img.data[pix * 3 + 2]);
    }
    Tensor target_t =
        Tensor::from_data({static_cast<int64_t>(batch.size()), 3}, std::move(target));

    graph.clear();
    RenderResult rr = volume_render(&graph, field, batch, Tensor(), rc, &step_rng);
    Tensor loss = ad::mean(&graph, ad::square(&graph, ad::sub(&graph, rr.pixels, target_t)));
    const double loss_v = loss.item();
    if (!std::isfinite(loss_v)) {
      fail(ErrorKind::numeric,
           "pretrain: loss became non-finite at iteration " + std::to_string(it));
    }
    result.loss_curve.push_back(loss_v);
    ad::zero_grads(params);
    graph.backward(loss);
    ad::adam_step(params, adam, acfg);
  }

  // train PSNR over full renders of every training view
  RenderConfig eval_rc = rc;
  eval_rc.stratified = false;
  double mse_sum = 0.0;
  size_t count = 0;
  for (size_t v = 0; v < poses.size(); ++v) {
    Image render = render_image(field, poses[v], scene, Tensor(), eval_rc);
    for (size_t i = 0; i < render.data.size(); ++i) {
      const double d = render.data[i] - images[v].data[i];
      mse_sum += d * d;
    }
    count += render.data.size();
  }
  const double mse = mse_sum / static_cast<double>(count);
  result.train_psnr = mse < 1e-10 ? 99.0 : 10.0 * std::log10(1.0 / mse);
  result.params = std::move(field);
  return result;
}

}  // namespace genn2n
