#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "genn2n/checkpoint.hpp"
#include "genn2n/error.hpp"
#include "genn2n/field.hpp"
#include "genn2n/metrics.hpp"
#include "oracles.hpp"

using namespace genn2n;
using ad::Graph;
using ad::Tensor;

namespace {

FieldConfig tiny_config(int code_dim) {
  FieldConfig fc;
  fc.enc_levels_pos = 2;
  fc.enc_levels_dir = 1;
  fc.trunk_layers = 2;
  fc.trunk_width = 16;
  fc.feature_width = 8;
  fc.head_layers = 2;
  fc.head_width = 8;
  fc.code_dim = code_dim;
  return fc;
}

void zero_final_layers(FieldParams& f) {
  auto zero = [](Tensor& t) { std::fill(t.data(), t.data() + t.size(), 0.0); };
  zero(f.density_head.back().w);
  zero(f.density_head.back().b);
  zero(f.color_head.back().w);
  zero(f.color_head.back().b);
}

std::vector<Ray> straight_rays(int count, double near, double far, Rng& rng) {
  std::vector<Ray> rays;
  for (int i = 0; i < count; ++i) {
    Ray r;
    r.origin = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(3.0, 4.5)};
    r.direction = normalized({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1.0});
    r.t_near = near;
    r.t_far = far;
    rays.push_back(r);
  }
  return rays;
}

}  // namespace

TEST_CASE("positional encode: zeros, identity, lengths") {
  auto e = positional_encode({0, 0, 0}, 3);
  REQUIRE(e.size() == 3 + 6 * 3);
  // per component: [x, sin, cos, sin, cos, sin, cos]
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.0);
  CHECK(e[2] == 1.0);
  CHECK(e[3] == 0.0);
  CHECK(e[4] == 1.0);
  auto id = positional_encode({0.3, -0.7, 0.1}, 0);
  REQUIRE(id.size() == 3);
  CHECK(id[0] == 0.3);
  CHECK(id[1] == -0.7);
  CHECK(id[2] == 0.1);
  CHECK(positional_encode({1, 2, 3}, 4).size() == 27);
  // frequency doubling: entry for level k is sin(2^k pi x)
  auto f = positional_encode({0.13, 0, 0}, 3);
  CHECK(f[1] == doctest::Approx(std::sin(M_PI * 0.13)));
  CHECK(f[3] == doctest::Approx(std::sin(2 * M_PI * 0.13)));
  CHECK(f[5] == doctest::Approx(std::sin(4 * M_PI * 0.13)));
}

TEST_CASE("zero final head layers: sigma = softplus(0), rgb = 0.5 everywhere") {
  Rng rng(3);
  FieldParams f = make_field(tiny_config(4), rng);
  zero_final_layers(f);
  Tensor z = Tensor::from_data({1, 4}, {0.3, -1.0, 0.5, 2.0});
  std::vector<Vec3> pts{{0.1, 0.2, 0.3}, {-0.5, 0.0, 0.9}};
  std::vector<Vec3> dirs{{0, 0, 1}, {1, 0, 0}};
  FieldEval ev = field_eval(nullptr, f, pts, dirs, z);
  const double sp0 = std::log(2.0);  // softplus(0)
  for (int i = 0; i < 2; ++i) {
    CHECK(ev.sigma.data()[i] == doctest::Approx(sp0).epsilon(1e-15));
    for (int c = 0; c < 3; ++c) CHECK(ev.rgb.data()[i * 3 + c] == 0.5);
  }
}

TEST_CASE("same code twice gives identical output; different codes differ") {
  Rng rng(9);
  FieldParams f = make_field(tiny_config(4), rng);
  Tensor z1 = Tensor::from_data({1, 4}, {0.5, -0.2, 1.0, 0.0});
  Tensor z1b = Tensor::from_data({1, 4}, {0.5, -0.2, 1.0, 0.0});
  Tensor z2 = Tensor::from_data({1, 4}, {-1.5, 2.2, 0.0, 0.7});
  std::vector<Vec3> pts{{0.1, 0.2, 0.3}};
  std::vector<Vec3> dirs{{0, 0, 1}};
  FieldEval a = field_eval(nullptr, f, pts, dirs, z1);
  FieldEval b = field_eval(nullptr, f, pts, dirs, z1b);
  FieldEval c = field_eval(nullptr, f, pts, dirs, z2);
  for (int i = 0; i < 3; ++i) CHECK(a.rgb.data()[i] == b.rgb.data()[i]);
  double diff = 0.0;
  for (int i = 0; i < 3; ++i) diff += std::abs(a.rgb.data()[i] - c.rgb.data()[i]);
  CHECK(diff > 1e-9);
}

TEST_CASE("code ablation degenerates to an unconditional field (exact equality)") {
  Rng rng(10);
  FieldParams f = make_field(tiny_config(6), rng);
  f.cfg.ablate_code = true;
  Rng zr(4);
  Tensor za = Tensor::gaussian({1, 6}, 1.0, zr);
  Tensor zb = Tensor::gaussian({1, 6}, 1.0, zr);
  std::vector<Vec3> pts{{0.4, -0.1, 0.2}, {0.0, 0.3, -0.8}};
  std::vector<Vec3> dirs{{0, 1, 0}, {0, 0, 1}};
  FieldEval a = field_eval(nullptr, f, pts, dirs, za);
  FieldEval b = field_eval(nullptr, f, pts, dirs, zb);
  for (int64_t i = 0; i < a.sigma.size(); ++i) CHECK(a.sigma.data()[i] == b.sigma.data()[i]);
  for (int64_t i = 0; i < a.rgb.size(); ++i) CHECK(a.rgb.data()[i] == b.rgb.data()[i]);
}

TEST_CASE("code dimension mismatch raises") {
  Rng rng(11);
  FieldParams f = make_field(tiny_config(4), rng);
  Tensor z = Tensor::from_data({1, 3}, {1, 2, 3});
  std::vector<Vec3> pts{{0, 0, 0}};
  std::vector<Vec3> dirs{{0, 0, 1}};
  CHECK_THROWS_AS(field_eval(nullptr, f, pts, dirs, z), Error);
}

TEST_CASE("translated field keeps the trunk and replaces heads") {
  Rng rng(12);
  FieldParams original = make_field(tiny_config(0), rng);
  FieldParams translated = make_translated_field(original, 5, rng);
  CHECK(translated.cfg.code_dim == 5);
  REQUIRE(translated.trunk.size() == original.trunk.size());
  for (size_t l = 0; l < original.trunk.size(); ++l) {
    CHECK(translated.trunk[l].w.same_storage(original.trunk[l].w));
  }
  CHECK(translated.density_head[0].w.shape()[0] ==
        original.density_head[0].w.shape()[0] + 5);
  CHECK_FALSE(translated.density_head[0].w.same_storage(original.density_head[0].w));
}

TEST_CASE("sigma ~= 0 renders pure background with zero weight sum") {
  Rng rng(13);
  FieldParams f = make_field(tiny_config(0), rng);
  zero_final_layers(f);
  f.density_head.back().b.data()[0] = -60.0;  // softplus(-60) ~ 1e-26
  RenderConfig rc;
  rc.n_samples_per_ray = 32;
  rc.background = {0.3, 0.6, 0.9};
  Rng ray_rng(5);
  auto rays = straight_rays(16, 2.0, 6.0, ray_rng);
  RenderResult rr = volume_render(nullptr, f, rays, Tensor(), rc);
  for (int64_t r = 0; r < rr.pixels.rows(); ++r) {
    CHECK(rr.pixels.data()[r * 3 + 0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rr.pixels.data()[r * 3 + 1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rr.pixels.data()[r * 3 + 2] == doctest::Approx(0.9).epsilon(1e-12));
    double wsum = 0.0;
    for (int64_t k = 0; k < rr.weights.cols(); ++k) {
      wsum += rr.weights.data()[r * rr.weights.cols() + k];
    }
    CHECK(wsum < 1e-12);
  }
}

TEST_CASE("constant sigma and color match the closed-form transmittance at 48 samples") {
  Rng rng(14);
  FieldParams f = make_field(tiny_config(0), rng);
  zero_final_layers(f);  // sigma = softplus(0) = ln 2, rgb = 0.5
  const double sigma = std::log(2.0);
  RenderConfig rc;
  rc.n_samples_per_ray = 48;
  rc.background = {0.9, 0.2, 0.1};
  Rng ray_rng(6);
  auto rays = straight_rays(8, 1.0, 3.5, ray_rng);
  const double L = 2.5;
  RenderResult rr = volume_render(nullptr, f, rays, Tensor(), rc);
  const double trans = std::exp(-sigma * L);
  for (int64_t r = 0; r < rr.pixels.rows(); ++r) {
    for (int c = 0; c < 3; ++c) {
      const double expect = 0.5 * (1.0 - trans) + rc.background[static_cast<size_t>(c)] * trans;
      CHECK(std::abs(rr.pixels.data()[r * 3 + c] - expect) < 1e-3);
    }
  }
}

TEST_CASE("weight-sum identity on 1e4 random rays within 1e-9") {
  Rng rng(15);
  FieldParams f = make_field(tiny_config(0), rng);
  RenderConfig rc;
  rc.n_samples_per_ray = 16;
  Rng ray_rng(7);
  auto rays = straight_rays(10000, 2.0, 6.0, ray_rng);
  RenderResult rr = volume_render(nullptr, f, rays, Tensor(), rc);
  // recompute sigma at the same sample points to get sum(sigma * delta)
  const int64_t n = rr.weights.cols();
  const double delta = 4.0 / static_cast<double>(n);
  std::vector<Vec3> pts, dirs;
  for (const Ray& ray : rays) {
    for (int64_t k = 0; k < n; ++k) {
      pts.push_back(ray.origin + (ray.t_near + delta * static_cast<double>(k)) * ray.direction);
      dirs.push_back(ray.direction);
    }
  }
  FieldEval ev = field_eval(nullptr, f, pts, dirs, Tensor());
  for (size_t r = 0; r < rays.size(); ++r) {
    double wsum = 0.0, sd = 0.0;
    for (int64_t k = 0; k < n; ++k) {
      wsum += rr.weights.data()[static_cast<int64_t>(r) * n + k];
      sd += ev.sigma.data()[static_cast<int64_t>(r) * n + k] * delta;
    }
    CHECK(std::abs(wsum - (1.0 - std::exp(-sd))) < 1e-9);
    CHECK(wsum >= 0.0);
    CHECK(wsum <= 1.0);
  }
}

TEST_CASE("stratified rendering is reproducible under the same seed") {
  Rng rng(16);
  FieldParams f = make_field(tiny_config(3), rng);
  Tensor z = Tensor::from_data({1, 3}, {0.1, 0.2, 0.3});
  RenderConfig rc;
  rc.n_samples_per_ray = 8;
  rc.stratified = true;
  Rng ray_rng(8);
  auto rays = straight_rays(32, 2.0, 6.0, ray_rng);
  Rng s1(77), s2(77), s3(78);
  RenderResult a = volume_render(nullptr, f, rays, z, rc, &s1);
  RenderResult b = volume_render(nullptr, f, rays, z, rc, &s2);
  RenderResult c = volume_render(nullptr, f, rays, z, rc, &s3);
  bool same = true, differs = false;
  for (int64_t i = 0; i < a.pixels.size(); ++i) {
    same = same && (a.pixels.data()[i] == b.pixels.data()[i]);
    differs = differs || (a.pixels.data()[i] != c.pixels.data()[i]);
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("renderer gradient w.r.t. params and code matches finite differences (1e-3)") {
  Rng rng(17);
  FieldParams f = make_field(tiny_config(3), rng);
  Tensor z = Tensor::from_data({1, 3}, {0.4, -0.6, 0.8}, true);
  std::vector<Tensor> leaves = f.parameters();
  leaves.push_back(z);
  RenderConfig rc;
  rc.n_samples_per_ray = 6;
  Rng ray_rng(9);
  auto rays = straight_rays(5, 2.0, 6.0, ray_rng);
  Rng target_rng(10);
  Tensor target = Tensor::uniform({5, 3}, 0.0, 1.0, target_rng);

  auto forward_graph = [&](Graph* g) {
    RenderResult rr = volume_render(g, f, rays, z, rc);
    return ad::mean(g, ad::square(g, ad::sub(g, rr.pixels, target)));
  };
  auto forward = [&]() { return forward_graph(nullptr).item(); };
  auto backward = [&]() {
    Graph g;
    ad::zero_grads(leaves);
    Tensor loss = forward_graph(&g);
    g.backward(loss);
  };
  Rng probe_rng(123);
  auto res = oracles::check_gradients(forward, backward, leaves, 60, probe_rng, 1e-5);
  CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("drgb/dz becomes nonzero after one training step on a color-shift target") {
  Rng rng(18);
  FieldParams original = make_field(tiny_config(0), rng);
  FieldParams f = make_translated_field(original, 3, rng);
  zero_final_layers(f);  // starts exactly code-independent
  Tensor z = Tensor::from_data({1, 3}, {1.0, -1.0, 0.5}, true);
  std::vector<Vec3> pts{{0.1, 0.0, 0.2}};
  std::vector<Vec3> dirs{{0, 0, 1}};

  auto rgb_of_z = [&](double dz) {
    Tensor zz = Tensor::from_data({1, 3}, {1.0 + dz, -1.0, 0.5});
    FieldEval ev = field_eval(nullptr, f, pts, dirs, zz);
    return ev.rgb.data()[0];
  };
  const double before = std::abs(rgb_of_z(1e-3) - rgb_of_z(-1e-3));
  CHECK(before == 0.0);  // zero final layers: no code sensitivity yet

  // one Adam step toward a red target
  std::vector<Tensor> params = f.parameters();
  ad::AdamState adam;
  Graph g;
  FieldEval ev = field_eval(&g, f, pts, dirs, z);
  Tensor target = Tensor::from_data({1, 3}, {1.0, 0.0, 0.0});
  Tensor loss = ad::mean(&g, ad::square(&g, ad::sub(&g, ev.rgb, target)));
  ad::zero_grads(params);
  g.backward(loss);
  ad::adam_step(params, adam, {});

  const double after = std::abs(rgb_of_z(1e-3) - rgb_of_z(-1e-3));
  CHECK(after > 1e-9);  // finite-difference probe sees code sensitivity
}

TEST_CASE("checkpoint round trip preserves params bit-exactly") {
  Rng rng(19);
  FieldParams f = make_field(tiny_config(4), rng);
  RenderConfig rc;
  rc.n_samples_per_ray = 12;
  rc.background = {0.1, 0.2, 0.3};
  const std::string path =
      (std::filesystem::temp_directory_path() / "genn2n_field.ckpt").string();
  save_checkpoint(path, f, nullptr, nullptr, rc);
  Checkpoint ck = load_checkpoint(path);
  CHECK_FALSE(ck.encoder.has_value());
  CHECK_FALSE(ck.disc.has_value());
  CHECK(ck.render.n_samples_per_ray == 12);
  CHECK(ck.render.background == rc.background);
  auto pa = f.parameters();
  auto pb = ck.field.parameters();
  REQUIRE(pa.size() == pb.size());
  CHECK(oracles::hash_params(pa) == oracles::hash_params(pb));
  std::filesystem::remove(path);
}

TEST_CASE("pretrain: constant-color scene converges above 40 dB") {
  AnalyticScene scene;
  scene.primitives.clear();
  scene.background = {0.35, 0.55, 0.75};
  RingConfig ring;
  ring.width = 16;
  ring.height = 16;
  ring.focal = 18;
  auto poses = make_camera_ring(4, ring, scene);
  std::vector<Image> images;
  for (const auto& p : poses) images.push_back(render_ground_truth(scene, p, 128));
  FieldConfig fc = tiny_config(0);
  PretrainConfig pc;
  pc.iters = 250;
  pc.rays_per_step = 128;
  pc.samples_per_ray = 16;
  pc.seed = 7;
  PretrainResult res = pretrain_original_nerf(images, poses, scene, fc, pc);
  CHECK(res.train_psnr > 40.0);
}

TEST_CASE("pretrain rejects fewer than two views") {
  AnalyticScene scene = default_scene();
  RingConfig ring;
  auto poses = make_camera_ring(2, ring, scene);
  std::vector<Image> images{render_ground_truth(scene, poses[0], 128)};
  poses.resize(1);
  CHECK_THROWS_AS(
      pretrain_original_nerf(images, poses, scene, tiny_config(0), PretrainConfig{}), Error);
}

TEST_CASE("pretrain fits the desk scene and generalizes to a held-out pose") {
  AnalyticScene scene = default_scene();
  RingConfig ring;
  ring.width = 32;
  ring.height = 32;
  ring.focal = 35;
  auto poses = make_camera_ring(9, ring, scene);
  std::vector<Image> images;
  for (const auto& p : poses) images.push_back(render_ground_truth(scene, p, 256));
  const CameraPose held_out = poses.back();
  const Image held_out_gt = images.back();
  poses.pop_back();
  images.pop_back();

  FieldConfig fc;  // desk architecture
  PretrainConfig pc;
  pc.iters = 500;
  pc.rays_per_step = 256;
  pc.samples_per_ray = 24;
  pc.seed = 21;
  PretrainResult res = pretrain_original_nerf(images, poses, scene, fc, pc);
  CHECK(res.train_psnr > 14.0);  // coarse fit after a short run
  RenderConfig rc;
  rc.n_samples_per_ray = 24;
  rc.background = scene.background;
  Image render = render_image(res.params, held_out, scene, Tensor(), rc);
  CHECK(ssim(render, held_out_gt) > 0.6);
}
