#include "genn2n/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "genn2n/checkpoint.hpp"
#include "genn2n/error.hpp"
#include "genn2n/hash.hpp"

namespace fs = std::filesystem;

namespace genn2n {

using ad::Graph;
using ad::Tensor;

PerceptualBank make_perceptual_bank(int ksize, int filters, uint64_t seed) {
  PerceptualBank bank;
  bank.ksize = ksize;
  bank.filters = filters;
  Rng rng(seed_combine(seed, 0x50455243ull));
  const int64_t in = static_cast<int64_t>(ksize) * ksize * 3;
  bank.weights = Tensor::gaussian({in, filters}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  return bank;
}

ad::Tensor perceptual_features(Graph* g, const Tensor& rect, int w, int h,
                               const PerceptualBank& bank) {
  const int k = bank.ksize;
  if (w < k || h < k) {
    fail(ErrorKind::shape, "perceptual_features: rect smaller than filter size");
  }
  if (rect.shape() != std::vector<int64_t>{static_cast<int64_t>(w) * h, 3}) {
    fail(ErrorKind::shape, "perceptual_features: rect tensor must be [w*h, 3]");
  }
  const int ww = w - k + 1, wh = h - k + 1;
  std::vector<int64_t> index;
  index.reserve(static_cast<size_t>(ww) * wh * k * k);
  for (int y = 0; y < wh; ++y) {
    for (int x = 0; x < ww; ++x) {
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          index.push_back(static_cast<int64_t>(y + dy) * w + (x + dx));
        }
      }
    }
  }
  Tensor windows = ad::gather_rows(g, rect, index);
  windows = ad::reshape(g, windows,
                        {static_cast<int64_t>(ww) * wh, static_cast<int64_t>(k) * k * 3});
  return ad::relu(g, ad::matmul(g, windows, bank.weights));
}

ad::Tensor recon_loss(Graph* g, const Tensor& render, const Tensor& target, int w, int h,
                      const PerceptualBank& bank) {
  if (render.shape() != target.shape()) {
    fail(ErrorKind::shape, "recon_loss: render " + ad::shape_str(render.shape()) +
                               " vs target " + ad::shape_str(target.shape()));
  }
  Tensor l1 = ad::mean_abs(g, ad::sub(g, render, target));
  Tensor fr = perceptual_features(g, render, w, h, bank);
  Tensor ft = perceptual_features(g, target, w, h, bank);
  Tensor perc = ad::mean(g, ad::square(g, ad::sub(g, fr, ft)));
  return ad::add(g, l1, perc);
}

std::vector<ad::Tensor> TrainState::generator_params() const {
  std::vector<Tensor> params = field.parameters();
  std::vector<Tensor> enc_params =
      cfg.freeze_encoder ? encoder.mlp_parameters() : encoder.parameters();
  params.insert(params.end(), enc_params.begin(), enc_params.end());
  return params;
}

TrainState make_train_state(const TrainConfig& cfg, const FieldParams& original,
                            const AnalyticScene& scene, const std::vector<CameraPose>& poses,
                            const EditedImageSet& edits) {
  if (edits.n_views() != static_cast<int>(poses.size())) {
    fail(ErrorKind::config, "train: edit set has " + std::to_string(edits.n_views()) +
                                " views but " + std::to_string(poses.size()) + " poses given");
  }
  if (edits.n_edits() < 1) fail(ErrorKind::config, "train: empty edit set");
  for (const auto& row : edits.edits) {
    if (static_cast<int>(row.size()) != edits.n_edits()) {
      fail(ErrorKind::config, "train: edit grid is not dense N x M");
    }
  }
  const int W = poses[0].width, H = poses[0].height;
  if (cfg.rays_per_step < cfg.patch_size * cfg.patch_size) {
    fail(ErrorKind::config, "train: rays_per_step must cover one patch (" +
                                std::to_string(cfg.patch_size * cfg.patch_size) + " rays)");
  }
  if (cfg.rays_per_step > W * H) {
    fail(ErrorKind::config, "train: rays_per_step exceeds pixels per view");
  }
  const bool adv_on = !cfg.disable_adv && (cfg.w.adg > 0.0 || cfg.w.add > 0.0);
  if (adv_on && edits.n_edits() < 2) {
    fail(ErrorKind::config,
         "train: adversarial loss needs M >= 2 edits per view; set w_adg = w_add = 0 or "
         "disable_adv for M = 1");
  }

  TrainState st;
  st.cfg = cfg;
  Rng init_rng(seed_combine(cfg.seed, 0x494e4954ull));
  st.field = make_translated_field(original, cfg.code_dim, init_rng);
  EncoderConfig ec;
  ec.image_w = W;
  ec.image_h = H;
  ec.patch = cfg.enc_patch;
  ec.embed_dim = cfg.enc_embed;
  ec.hidden = cfg.enc_hidden;
  ec.code_dim = cfg.code_dim;
  st.encoder = make_encoder(ec, init_rng);
  DiscriminatorConfig dc;
  dc.patch = cfg.patch_size;
  dc.hidden1 = cfg.disc_hidden1;
  dc.hidden2 = cfg.disc_hidden2;
  st.disc = make_discriminator(dc, init_rng);
  st.perceptual = make_perceptual_bank(cfg.perc_ksize, cfg.perc_filters, cfg.perc_seed);
  st.scene = scene;
  st.poses = poses;
  st.edits = edits;
  st.render_cfg.n_samples_per_ray = cfg.samples_per_ray;
  st.render_cfg.stratified = cfg.stratified;
  st.render_cfg.background = scene.background;
  return st;
}

namespace {

int next_view(TrainState& st, Rng& rng) {
  if (st.view_cursor >= st.view_order.size()) {
    st.view_order.resize(st.poses.size());
    for (size_t i = 0; i < st.view_order.size(); ++i) st.view_order[i] = static_cast<int>(i);
    // Fisher-Yates with the epoch substream
    Rng shuffle_rng = rng.substream(0x45504f43ull + static_cast<uint64_t>(st.epoch));
    for (size_t i = st.view_order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng.uniform_int(i));
      std::swap(st.view_order[i - 1], st.view_order[j]);
    }
    st.view_cursor = 0;
    ++st.epoch;
  }
  return st.view_order[st.view_cursor++];
}

Tensor rows_from_image(const Image& img, const std::vector<int64_t>& pixel_rows) {
  std::vector<double> data;
  data.reserve(pixel_rows.size() * 3);
  for (int64_t p : pixel_rows) {
    data.push_back(img.data[static_cast<size_t>(p) * 3 + 0]);
    data.push_back(img.data[static_cast<size_t>(p) * 3 + 1]);
    data.push_back(img.data[static_cast<size_t>(p) * 3 + 2]);
  }
  return Tensor::from_data({static_cast<int64_t>(pixel_rows.size()), 3}, std::move(data));
}

void check_finite(double v, const char* term, int iter) {
  if (!std::isfinite(v)) {
    fail(ErrorKind::numeric, std::string("train: ") + term + " loss is non-finite at iteration " +
                                 std::to_string(iter));
  }
}

}  // namespace

LossRecord train_step(TrainState& st, int iter) {
  const TrainConfig& cfg = st.cfg;
  const int W = st.poses[0].width, H = st.poses[0].height;
  const int P = cfg.patch_size;
  const int M = st.edits.n_edits();
  Rng master(seed_combine(cfg.seed, 0x53544550ull));
  Rng rng = master.substream(static_cast<uint64_t>(iter) + 1);

  const bool use_kl = !cfg.disable_kl && cfg.w.kl > 0.0;
  const bool use_recon = !cfg.disable_recon && cfg.w.recon > 0.0;
  const bool use_adv = !cfg.disable_adv && (cfg.w.adg > 0.0 || cfg.w.add > 0.0) && M >= 2;
  const bool use_contr = !cfg.disable_contr && cfg.w.contr > 0.0;

  // -- sample (i, j, k) and the patch --
  const int view = next_view(st, rng);
  const int j = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(M)));
  int k = 0;
  if (M >= 2) {
    k = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(M - 1)));
    if (k >= j) ++k;
  }
  const Image& s_j = st.edits.edits[static_cast<size_t>(view)][static_cast<size_t>(j)];
  const Image& s_k = st.edits.edits[static_cast<size_t>(view)][static_cast<size_t>(k)];
  const int px = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(W - P + 1)));
  const int py = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(H - P + 1)));

  Graph gen_graph;

  // -- anchor code --
  Rng enc_rng = rng.substream(0x454e43ull);
  EditCode code = encode_image(&gen_graph, st.encoder, s_j, true, &enc_rng);

  // -- ray batch: patch block first, then scattered pixels --
  std::vector<int64_t> pixel_rows;
  pixel_rows.reserve(static_cast<size_t>(cfg.rays_per_step));
  for (int dy = 0; dy < P; ++dy) {
    for (int dx = 0; dx < P; ++dx) {
      pixel_rows.push_back(static_cast<int64_t>(py + dy) * W + (px + dx));
    }
  }
  for (int r = P * P; r < cfg.rays_per_step; ++r) {
    pixel_rows.push_back(static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(W * H))));
  }
  std::vector<Ray> rays;
  rays.reserve(pixel_rows.size());
  for (int64_t p : pixel_rows) {
    rays.push_back(pixel_ray(st.poses[static_cast<size_t>(view)],
                             static_cast<double>(p % W), static_cast<double>(p / W), st.scene));
  }

  Rng render_rng = rng.substream(0x524e44ull);
  RenderResult rr = volume_render(&gen_graph, st.field, rays, code.sample, st.render_cfg,
                                  &render_rng);
  Tensor target = rows_from_image(s_j, pixel_rows);

  LossRecord rec;
  rec.iter = iter;
  Tensor gen_total;
  auto add_weighted = [&](const Tensor& term, double w) {
    Tensor scaled = ad::scale(&gen_graph, term, w);
    gen_total = gen_total.defined() ? ad::add(&gen_graph, gen_total, scaled) : scaled;
  };

  // -- reconstruction: L1 over every rendered ray + perceptual on the patch --
  std::vector<int64_t> patch_iota(static_cast<size_t>(P) * P);
  for (size_t i = 0; i < patch_iota.size(); ++i) patch_iota[i] = static_cast<int64_t>(i);
  Tensor patch_render, patch_target;
  if (use_recon || use_adv) {
    patch_render = ad::gather_rows(&gen_graph, rr.pixels, patch_iota);
    patch_target = ad::gather_rows(nullptr, target, patch_iota);
  }
  if (use_recon) {
    Tensor l1 = ad::mean_abs(&gen_graph, ad::sub(&gen_graph, rr.pixels, target));
    Tensor fr = perceptual_features(&gen_graph, patch_render, P, P, st.perceptual);
    Tensor ft = perceptual_features(&gen_graph, patch_target, P, P, st.perceptual);
    Tensor perc = ad::mean(&gen_graph, ad::square(&gen_graph, ad::sub(&gen_graph, fr, ft)));
    Tensor recon = ad::add(&gen_graph, l1, perc);
    rec.recon = recon.item();
    check_finite(rec.recon, "recon", iter);
    add_weighted(recon, cfg.w.recon);
  }

  // -- repel codes from the other edits of this view --
  std::vector<EditCode> batch_codes{code};
  std::vector<Tensor> repel;
  if (use_contr || use_kl) {
    for (int kk = 0; kk < M; ++kk) {
      if (kk == j) continue;
      Rng sub = rng.substream(0x5245ull + static_cast<uint64_t>(kk));
      EditCode rc = encode_image(&gen_graph, st.encoder,
                                 st.edits.edits[static_cast<size_t>(view)][static_cast<size_t>(kk)],
                                 true, &sub);
      batch_codes.push_back(rc);
      repel.push_back(rc.sample);
    }
  }

  // -- KL over the codes touched this step --
  if (use_kl) {
    Tensor kl = kl_loss(&gen_graph, batch_codes);
    rec.kl = kl.item();
    check_finite(rec.kl, "kl", iter);
    add_weighted(kl, cfg.w.kl);
  }

  // -- contrastive: attract = re-encoded renders of extra views --
  if (use_contr && (cfg.contr_views > 0 || !repel.empty())) {
    std::vector<Tensor> attract;
    const int n_other = static_cast<int>(st.poses.size()) - 1;
    const int n_attract = std::min(cfg.contr_views, n_other);
    const int stride_w = W / static_cast<int>(std::round(std::sqrt(double(cfg.contr_rays))));
    const int low_w = W / std::max(1, stride_w), low_h = H / std::max(1, stride_w);
    // nearest-upsample row map low -> full
    std::vector<int64_t> up_index(static_cast<size_t>(W) * H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const int ly = std::min(low_h - 1, y / stride_w), lx = std::min(low_w - 1, x / stride_w);
        up_index[static_cast<size_t>(y) * W + x] = static_cast<int64_t>(ly) * low_w + lx;
      }
    }
    for (int v = 0; v < n_attract; ++v) {
      int other = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_other)));
      if (other >= view) ++other;
      std::vector<Ray> low_rays;
      low_rays.reserve(static_cast<size_t>(low_w) * low_h);
      for (int ly = 0; ly < low_h; ++ly) {
        for (int lx = 0; lx < low_w; ++lx) {
          low_rays.push_back(pixel_ray(st.poses[static_cast<size_t>(other)],
                                       static_cast<double>(lx * stride_w),
                                       static_cast<double>(ly * stride_w), st.scene));
        }
      }
      RenderConfig crc = st.render_cfg;
      crc.n_samples_per_ray = cfg.contr_samples_per_ray;
      Rng crender_rng = rng.substream(0x4352ull + static_cast<uint64_t>(v));
      RenderResult low = volume_render(&gen_graph, st.field, low_rays, code.sample, crc,
                                       &crender_rng);
      Tensor low_px = cfg.detach_renders ? ad::detach(low.pixels) : low.pixels;
      Tensor full = ad::gather_rows(&gen_graph, low_px, up_index);
      EditCode re = encode(&gen_graph, st.encoder, full, false, nullptr);
      attract.push_back(re.sample);
    }
    Tensor contr = contrastive_loss(&gen_graph, code.sample, attract, repel, cfg.margin);
    rec.contr = contr.item();
    check_finite(rec.contr, "contr", iter);
    add_weighted(contr, cfg.w.contr);
  }

  // -- adversarial, generator side --
  Tensor patch_k;
  if (use_adv) {
    std::vector<int64_t> patch_pixels(patch_iota.size());
    for (int dy = 0; dy < P; ++dy) {
      for (int dx = 0; dx < P; ++dx) {
        patch_pixels[static_cast<size_t>(dy) * P + dx] =
            static_cast<int64_t>(py + dy) * W + (px + dx);
      }
    }
    patch_k = rows_from_image(s_k, patch_pixels);
    if (cfg.w.adg > 0.0) {
      Pair fake_live = make_pair(&gen_graph, patch_render, patch_k, P, P, view);
      Tensor adg = g_loss(&gen_graph, st.disc, std::span<const Pair>(&fake_live, 1));
      rec.adg = adg.item();
      check_finite(rec.adg, "adg", iter);
      add_weighted(adg, cfg.w.adg);
    }
  }

  // -- generator update --
  std::vector<Tensor> gen_params = st.generator_params();
  std::vector<Tensor> disc_params = st.disc.parameters();
  if (gen_total.defined()) {
    ad::zero_grads(gen_params);
    ad::zero_grads(disc_params);
    gen_graph.backward(gen_total);
    ad::AdamConfig acfg;
    acfg.lr = cfg.lr;
    ad::adam_step(gen_params, st.gen_adam, acfg);
  }

  // -- discriminator update(s) on detached renders --
  if (use_adv && cfg.w.add > 0.0) {
    Tensor patch_render_detached = ad::detach(patch_render);
    for (int dstep = 0; dstep < cfg.d_steps_per_g; ++dstep) {
      Graph d_graph;
      PairBatch batch;
      batch.real.push_back(make_pair(&d_graph, ad::gather_rows(nullptr, target, patch_iota),
                                     patch_k, P, P, view));
      batch.fake.push_back(make_pair(&d_graph, patch_render_detached, patch_k, P, P, view));
      Tensor add_term = d_loss(&d_graph, st.disc, batch);
      if (dstep == 0) {
        rec.add = add_term.item();
        check_finite(rec.add, "add", iter);
      }
      ad::zero_grads(gen_params);
      ad::zero_grads(disc_params);
      d_graph.backward(ad::scale(&d_graph, add_term, cfg.w.add));
      ad::AdamConfig dcfg;
      dcfg.lr = cfg.d_lr;
      ad::adam_step(disc_params, st.disc_adam, dcfg);
    }
  }

  rec.total = cfg.w.kl * rec.kl + cfg.w.recon * rec.recon + cfg.w.adg * rec.adg +
              cfg.w.add * rec.add + cfg.w.contr * rec.contr;
  return rec;
}

std::string train_config_echo(const TrainConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "train.w_kl=" << cfg.w.kl << "\n";
  os << "train.w_recon=" << cfg.w.recon << "\n";
  os << "train.w_adg=" << cfg.w.adg << "\n";
  os << "train.w_add=" << cfg.w.add << "\n";
  os << "train.w_contr=" << cfg.w.contr << "\n";
  os << "train.lr=" << cfg.lr << "\n";
  os << "train.d_lr=" << cfg.d_lr << "\n";
  os << "train.iters=" << cfg.iters << "\n";
  os << "train.rays_per_step=" << cfg.rays_per_step << "\n";
  os << "train.samples_per_ray=" << cfg.samples_per_ray << "\n";
  os << "train.patch_size=" << cfg.patch_size << "\n";
  os << "train.contr_views=" << cfg.contr_views << "\n";
  os << "train.contr_rays=" << cfg.contr_rays << "\n";
  os << "train.contr_samples_per_ray=" << cfg.contr_samples_per_ray << "\n";
  os << "train.margin=" << cfg.margin << "\n";
  os << "train.code_dim=" << cfg.code_dim << "\n";
  os << "train.seed=" << cfg.seed << "\n";
  os << "train.d_steps_per_g=" << cfg.d_steps_per_g << "\n";
  os << "train.stratified=" << (cfg.stratified ? 1 : 0) << "\n";
  os << "train.freeze_encoder=" << (cfg.freeze_encoder ? 1 : 0) << "\n";
  os << "train.detach_renders=" << (cfg.detach_renders ? 1 : 0) << "\n";
  os << "train.disable_kl=" << (cfg.disable_kl ? 1 : 0) << "\n";
  os << "train.disable_recon=" << (cfg.disable_recon ? 1 : 0) << "\n";
  os << "train.disable_adv=" << (cfg.disable_adv ? 1 : 0) << "\n";
  os << "train.disable_contr=" << (cfg.disable_contr ? 1 : 0) << "\n";
  os << "train.perc_filters=" << cfg.perc_filters << "\n";
  os << "train.perc_ksize=" << cfg.perc_ksize << "\n";
  os << "train.perc_seed=" << cfg.perc_seed << "\n";
  os << "train.enc_patch=" << cfg.enc_patch << "\n";
  os << "train.enc_embed=" << cfg.enc_embed << "\n";
  os << "train.enc_hidden=" << cfg.enc_hidden << "\n";
  os << "train.disc_hidden1=" << cfg.disc_hidden1 << "\n";
  os << "train.disc_hidden2=" << cfg.disc_hidden2 << "\n";
  return os.str();
}

void write_losses_csv(const std::vector<LossRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "write_losses_csv: cannot open " + path);
  out << "iter,total,kl,recon,adg,add,contr\n";
  out.precision(17);
  for (const auto& r : records) {
    out << r.iter << "," << r.total << "," << r.kl << "," << r.recon << "," << r.adg << ","
        << r.add << "," << r.contr << "\n";
  }
}

std::vector<LossRecord> read_losses_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "read_losses_csv: cannot open " + path);
  std::vector<LossRecord> records;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LossRecord r;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    r.iter = std::stoi(field);
    std::getline(ss, field, ',');
    r.total = std::stod(field);
    std::getline(ss, field, ',');
    r.kl = std::stod(field);
    std::getline(ss, field, ',');
    r.recon = std::stod(field);
    std::getline(ss, field, ',');
    r.adg = std::stod(field);
    std::getline(ss, field, ',');
    r.add = std::stod(field);
    std::getline(ss, field, ',');
    r.contr = std::stod(field);
    records.push_back(r);
  }
  return records;
}

TrainResult train(TrainState& state, const std::string& out_dir, uint64_t input_hash) {
  fs::create_directories(out_dir);
  TrainResult result;
  result.manifest_path = (fs::path(out_dir) / "manifest.txt").string();
  result.losses_path = (fs::path(out_dir) / "losses.csv").string();
  result.checkpoint_path = (fs::path(out_dir) / "translated.ckpt").string();

  {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ofstream man(result.manifest_path);
    if (!man) fail(ErrorKind::io, "train: cannot write manifest in " + out_dir);
    man << "# genn2n train manifest, written " << std::ctime(&now);
    man << "input_hash=" << hash_hex(input_hash) << "\n";
    man << "checkpoint=translated.ckpt\n";
    man << "losses=losses.csv\n";
    man << train_config_echo(state.cfg);
  }

  result.records.reserve(static_cast<size_t>(state.cfg.iters));
  for (int it = 0; it < state.cfg.iters; ++it) {
    result.records.push_back(train_step(state, it));
  }
  write_losses_csv(result.records, result.losses_path);
  save_checkpoint(result.checkpoint_path, state.field, &state.encoder, &state.disc,
                  state.render_cfg);
  return result;
}

}  // namespace genn2n
