// genn2n command-line driver: make-scene, translate, pretrain, train,
// sample, interpolate, eval. Every command resolves a full key=value config
// (file + repeated --set overrides), writes a manifest before heavy work,
// and keeps all outputs under --out.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "genn2n/checkpoint.hpp"
#include "genn2n/error.hpp"
#include "genn2n/field.hpp"
#include "genn2n/hash.hpp"
#include "genn2n/image.hpp"
#include "genn2n/metrics.hpp"
#include "genn2n/parallel.hpp"
#include "genn2n/scene.hpp"
#include "genn2n/trainer.hpp"
#include "genn2n/translator.hpp"

namespace fs = std::filesystem;
using namespace genn2n;

namespace {

// ---- config registry ----

std::map<std::string, std::string> default_config() {
  std::map<std::string, std::string> c;
  c["seed"] = "1";
  c["threads"] = "0";  // 0 = auto (GENN2N_THREADS or hardware)
  c["scene.preset"] = "three_spheres";
  c["scene.file"] = "";
  c["scene.n_views"] = "16";
  c["scene.width"] = "64";
  c["scene.height"] = "64";
  c["scene.ring_radius"] = "4.0";
  c["scene.elevation"] = "0.35";
  c["scene.focal"] = "70.0";
  c["scene.gt_steps"] = "512";
  c["field.enc_levels_pos"] = "4";
  c["field.enc_levels_dir"] = "2";
  c["field.trunk_layers"] = "4";
  c["field.trunk_width"] = "64";
  c["field.feature_width"] = "32";
  c["field.head_layers"] = "2";
  c["field.head_width"] = "32";
  c["pretrain.iters"] = "2000";
  c["pretrain.lr"] = "0.01";
  c["pretrain.rays_per_step"] = "512";
  c["pretrain.samples_per_ray"] = "32";
  c["translate.task"] = "colorize";
  c["translate.m"] = "3";
  c["translate.mode_count"] = "2";
  c["translate.epsilon"] = "0.1";
  c["translate.scale"] = "4";
  c["translate.mask"] = "";
  c["train.w_kl"] = "1.0";
  c["train.w_recon"] = "1.0";
  c["train.w_adg"] = "0.1";
  c["train.w_add"] = "0.1";
  c["train.w_contr"] = "0.1";
  c["train.lr"] = "0.01";
  c["train.d_lr"] = "0.01";
  c["train.iters"] = "2000";
  c["train.rays_per_step"] = "2048";
  c["train.samples_per_ray"] = "32";
  c["train.patch_size"] = "16";
  c["train.contr_views"] = "2";
  c["train.contr_rays"] = "256";
  c["train.contr_samples_per_ray"] = "16";
  c["train.margin"] = "1.0";
  c["train.code_dim"] = "8";
  c["train.d_steps_per_g"] = "1";
  c["train.stratified"] = "1";
  c["train.freeze_encoder"] = "0";
  c["train.detach_renders"] = "0";
  c["train.disable_kl"] = "0";
  c["train.disable_recon"] = "0";
  c["train.disable_adv"] = "0";
  c["train.disable_contr"] = "0";
  c["train.perc_filters"] = "16";
  c["train.perc_ksize"] = "5";
  c["train.perc_seed"] = "77";
  c["train.enc_patch"] = "8";
  c["train.enc_embed"] = "32";
  c["train.enc_hidden"] = "32";
  c["train.disc_hidden1"] = "64";
  c["train.disc_hidden2"] = "32";
  c["sample.count"] = "4";
  c["sample.n_poses"] = "4";
  c["sample.width"] = "0";  // 0 = scene resolution
  c["sample.height"] = "0";
  c["interp.steps"] = "11";
  c["interp.seed1"] = "1";
  c["interp.seed2"] = "2";
  c["eval.dir_a"] = "";
  c["eval.dir_b"] = "";
  c["in.scene"] = "";
  c["in.poses"] = "";
  c["in.views"] = "";
  c["in.edits"] = "";
  c["in.original"] = "";
  c["in.checkpoint"] = "";
  return c;
}

class Config {
 public:
  explicit Config(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::config, "unknown config key '" + key + "'");
    it->second = value;
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "config file not found: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail(ErrorKind::config, path + ":" + std::to_string(lineno) + ": missing '='");
      }
      set(line.substr(0, eq), line.substr(eq + 1));
    }
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::config, "unknown config key '" + key + "'");
    return it->second;
  }

  int integer(const std::string& key) const {
    try {
      size_t pos = 0;
      const int v = std::stoi(str(key), &pos);
      if (pos != str(key).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(ErrorKind::config, "config key '" + key + "': expected integer, got '" + str(key) + "'");
    }
  }

  uint64_t u64(const std::string& key) const {
    try {
      return std::stoull(str(key));
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(ErrorKind::config, "config key '" + key + "': expected integer, got '" + str(key) + "'");
    }
  }

  double real(const std::string& key) const {
    try {
      size_t pos = 0;
      const double v = std::stod(str(key), &pos);
      if (pos != str(key).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(ErrorKind::config, "config key '" + key + "': expected number, got '" + str(key) + "'");
    }
  }

  bool flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "0" || v == "false") return false;
    if (v == "1" || v == "true") return true;
    fail(ErrorKind::config, "config key '" + key + "': expected 0/1, got '" + v + "'");
  }

  std::string echo() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
    return os.str();
  }

 private:
  std::map<std::string, std::string> values_;
};

struct RunContext {
  Config cfg;
  std::string out;
  bool dry_run = false;
};

std::string resolve_input(const RunContext& rc, const std::string& key,
                          const std::string& fallback) {
  const std::string& v = rc.cfg.str(key);
  if (!v.empty()) return v;
  return (fs::path(rc.out) / fallback).string();
}

void require_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) fail(ErrorKind::io, "missing input: " + what + " at " + path);
}

void write_manifest(const RunContext& rc, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& inputs) {
  fs::create_directories(rc.out);
  const std::string path = (fs::path(rc.out) / ("manifest_" + command + ".txt")).string();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write manifest " + path);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  out << "# genn2n " << command << " manifest, written " << std::ctime(&now);
  out << "command=" << command << "\n";
  for (const auto& [name, p] : inputs) {
    out << "input." << name << "=" << p << "\n";
    out << "input." << name << ".hash=" << hash_hex(hash_file(p)) << "\n";
  }
  out << rc.cfg.echo();
}

std::vector<std::string> sorted_ppm_files(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir)) fail(ErrorKind::io, "missing input: directory " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ppm") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::io, "no .ppm files in " + dir);
  return files;
}

RingConfig ring_from_config(const Config& cfg) {
  RingConfig rc;
  rc.radius = cfg.real("scene.ring_radius");
  rc.elevation = cfg.real("scene.elevation");
  rc.focal = cfg.real("scene.focal");
  rc.width = cfg.integer("scene.width");
  rc.height = cfg.integer("scene.height");
  return rc;
}

FieldConfig field_from_config(const Config& cfg) {
  FieldConfig fc;
  fc.enc_levels_pos = cfg.integer("field.enc_levels_pos");
  fc.enc_levels_dir = cfg.integer("field.enc_levels_dir");
  fc.trunk_layers = cfg.integer("field.trunk_layers");
  fc.trunk_width = cfg.integer("field.trunk_width");
  fc.feature_width = cfg.integer("field.feature_width");
  fc.head_layers = cfg.integer("field.head_layers");
  fc.head_width = cfg.integer("field.head_width");
  return fc;
}

TrainConfig train_from_config(const Config& cfg) {
  TrainConfig tc;
  tc.w.kl = cfg.real("train.w_kl");
  tc.w.recon = cfg.real("train.w_recon");
  tc.w.adg = cfg.real("train.w_adg");
  tc.w.add = cfg.real("train.w_add");
  tc.w.contr = cfg.real("train.w_contr");
  tc.lr = cfg.real("train.lr");
  tc.d_lr = cfg.real("train.d_lr");
  tc.iters = cfg.integer("train.iters");
  tc.rays_per_step = cfg.integer("train.rays_per_step");
  tc.samples_per_ray = cfg.integer("train.samples_per_ray");
  tc.patch_size = cfg.integer("train.patch_size");
  tc.contr_views = cfg.integer("train.contr_views");
  tc.contr_rays = cfg.integer("train.contr_rays");
  tc.contr_samples_per_ray = cfg.integer("train.contr_samples_per_ray");
  tc.margin = cfg.real("train.margin");
  tc.code_dim = cfg.integer("train.code_dim");
  tc.seed = cfg.u64("seed");
  tc.d_steps_per_g = cfg.integer("train.d_steps_per_g");
  tc.stratified = cfg.flag("train.stratified");
  tc.freeze_encoder = cfg.flag("train.freeze_encoder");
  tc.detach_renders = cfg.flag("train.detach_renders");
  tc.disable_kl = cfg.flag("train.disable_kl");
  tc.disable_recon = cfg.flag("train.disable_recon");
  tc.disable_adv = cfg.flag("train.disable_adv");
  tc.disable_contr = cfg.flag("train.disable_contr");
  tc.perc_filters = cfg.integer("train.perc_filters");
  tc.perc_ksize = cfg.integer("train.perc_ksize");
  tc.perc_seed = cfg.u64("train.perc_seed");
  tc.enc_patch = cfg.integer("train.enc_patch");
  tc.enc_embed = cfg.integer("train.enc_embed");
  tc.enc_hidden = cfg.integer("train.enc_hidden");
  tc.disc_hidden1 = cfg.integer("train.disc_hidden1");
  tc.disc_hidden2 = cfg.integer("train.disc_hidden2");
  return tc;
}

std::string weights_line(const TrainConfig& tc) {
  std::ostringstream os;
  os << "weights=(" << tc.w.kl << ", " << tc.w.recon << ", " << tc.w.adg << ", " << tc.w.add
     << ", " << tc.w.contr << ")";
  return os.str();
}

// ---- commands ----

int cmd_make_scene(RunContext& rc) {
  AnalyticScene scene;
  const std::string file = rc.cfg.str("scene.file");
  if (!file.empty()) {
    require_exists(file, "scene config");
    scene = load_scene(file);
  } else {
    if (rc.cfg.str("scene.preset") != "three_spheres") {
      fail(ErrorKind::config, "unknown scene.preset '" + rc.cfg.str("scene.preset") + "'");
    }
    scene = default_scene();
  }
  const int n_views = rc.cfg.integer("scene.n_views");
  const RingConfig ring = ring_from_config(rc.cfg);
  if (rc.dry_run) {
    std::cout << "plan: make-scene -> " << rc.out << " (" << n_views << " views, "
              << ring.width << "x" << ring.height << ", gt_steps=" << rc.cfg.integer("scene.gt_steps")
              << ")\n" << rc.cfg.echo();
    return 0;
  }
  write_manifest(rc, "make-scene", {});
  const auto poses = make_camera_ring(n_views, ring, scene);
  save_scene(scene, (fs::path(rc.out) / "scene.txt").string());
  save_poses(poses, (fs::path(rc.out) / "poses.txt").string());
  const fs::path views = fs::path(rc.out) / "views";
  fs::create_directories(views);
  const int steps = rc.cfg.integer("scene.gt_steps");
  for (size_t i = 0; i < poses.size(); ++i) {
    Image img = render_ground_truth(scene, poses[i], steps);
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03zu.ppm", i);
    save_ppm(img, (views / name).string());
  }
  std::cout << "make-scene: wrote " << poses.size() << " views to " << views.string() << "\n";
  return 0;
}

int cmd_translate(RunContext& rc) {
  const std::string views_dir = resolve_input(rc, "in.views", "views");
  TranslatorSpec spec;
  spec.task = task_from_name(rc.cfg.str("translate.task"));
  spec.mode_count = rc.cfg.integer("translate.mode_count");
  spec.epsilon = rc.cfg.real("translate.epsilon");
  spec.sr_scale = rc.cfg.integer("translate.scale");
  const std::string mask = rc.cfg.str("translate.mask");
  if (spec.task == TranslateTask::inpaint && mask.empty()) {
    fail(ErrorKind::config, "translate: inpaint requires translate.mask=<ppm path>");
  }
  if (rc.dry_run) {
    std::cout << "plan: translate " << task_name(spec.task) << " M=" << rc.cfg.integer("translate.m")
              << " from " << views_dir << " -> " << rc.out << "/edits\n" << rc.cfg.echo();
    return 0;
  }
  require_exists(views_dir, "views directory");
  if (!mask.empty()) {
    require_exists(mask, "inpaint mask");
    spec.mask = load_ppm(mask);
  }
  write_manifest(rc, "translate", {});
  std::vector<Image> sources;
  for (const auto& f : sorted_ppm_files(views_dir)) sources.push_back(load_ppm(f));
  EditedImageSet set =
      translate(spec, sources, rc.cfg.integer("translate.m"), rc.cfg.u64("seed"));
  save_edited_set(set, (fs::path(rc.out) / "edits").string());
  std::cout << "translate: wrote " << set.n_views() << "x" << set.n_edits() << " edits\n";
  return 0;
}

int cmd_pretrain(RunContext& rc) {
  const std::string scene_path = resolve_input(rc, "in.scene", "scene.txt");
  const std::string poses_path = resolve_input(rc, "in.poses", "poses.txt");
  const std::string views_dir = resolve_input(rc, "in.views", "views");
  if (rc.dry_run) {
    std::cout << "plan: pretrain " << rc.cfg.integer("pretrain.iters") << " iters from "
              << views_dir << " -> " << rc.out << "/original.ckpt\n" << rc.cfg.echo();
    return 0;
  }
  require_exists(scene_path, "scene config");
  require_exists(poses_path, "camera poses");
  require_exists(views_dir, "views directory");
  write_manifest(rc, "pretrain",
                 {{"scene", scene_path}, {"poses", poses_path}});
  const AnalyticScene scene = load_scene(scene_path);
  const auto poses = load_poses(poses_path);
  std::vector<Image> images;
  for (const auto& f : sorted_ppm_files(views_dir)) images.push_back(load_ppm(f));

  PretrainConfig pc;
  pc.iters = rc.cfg.integer("pretrain.iters");
  pc.lr = rc.cfg.real("pretrain.lr");
  pc.rays_per_step = rc.cfg.integer("pretrain.rays_per_step");
  pc.samples_per_ray = rc.cfg.integer("pretrain.samples_per_ray");
  pc.seed = rc.cfg.u64("seed");
  PretrainResult res = pretrain_original_nerf(images, poses, scene, field_from_config(rc.cfg), pc);

  RenderConfig render;
  render.n_samples_per_ray = pc.samples_per_ray;
  render.background = scene.background;
  save_checkpoint((fs::path(rc.out) / "original.ckpt").string(), res.params, nullptr, nullptr,
                  render);
  std::ofstream csv(fs::path(rc.out) / "pretrain_losses.csv");
  csv << "iter,loss\n";
  csv.precision(17);
  for (size_t i = 0; i < res.loss_curve.size(); ++i) csv << i << "," << res.loss_curve[i] << "\n";
  std::ofstream rep(fs::path(rc.out) / "pretrain_report.txt");
  rep << "train_psnr_db=" << res.train_psnr << "\n";
  std::cout << "pretrain: train PSNR " << res.train_psnr << " dB\n";
  return 0;
}

int cmd_train(RunContext& rc) {
  const std::string scene_path = resolve_input(rc, "in.scene", "scene.txt");
  const std::string poses_path = resolve_input(rc, "in.poses", "poses.txt");
  const std::string edits_dir = resolve_input(rc, "in.edits", "edits");
  const std::string original_path = resolve_input(rc, "in.original", "original.ckpt");
  const TrainConfig tc = train_from_config(rc.cfg);
  if (rc.dry_run) {
    std::cout << "plan: train " << tc.iters << " iters from " << edits_dir << " + "
              << original_path << " -> " << rc.out << "/translated.ckpt\n";
    std::cout << weights_line(tc) << "\n" << rc.cfg.echo();
    return 0;
  }
  require_exists(scene_path, "scene config");
  require_exists(poses_path, "camera poses");
  require_exists(edits_dir, "edits directory");
  require_exists(original_path, "original checkpoint");
  write_manifest(rc, "train",
                 {{"scene", scene_path}, {"poses", poses_path}, {"original", original_path}});
  const AnalyticScene scene = load_scene(scene_path);
  const auto poses = load_poses(poses_path);
  EditedImageSet edits = load_edited_set(edits_dir);
  Checkpoint original = load_checkpoint(original_path);

  Fnv1a h;
  h.update(scene_to_config(scene));
  h.update(std::to_string(hash_file(original_path)));
  h.update(std::to_string(hash_file((fs::path(edits_dir) / "manifest.txt").string())));
  TrainState state = make_train_state(tc, original.field, scene, poses, edits);
  std::cout << weights_line(tc) << "\n";
  TrainResult res = train(state, rc.out, h.digest());
  std::cout << "train: " << res.records.size() << " iterations, final total "
            << (res.records.empty() ? 0.0 : res.records.back().total) << "\n";
  return 0;
}

std::vector<CameraPose> subset_poses(std::vector<CameraPose> poses, int n, int width, int height) {
  std::vector<CameraPose> out;
  const int total = static_cast<int>(poses.size());
  n = std::min(n, total);
  for (int i = 0; i < n; ++i) {
    CameraPose p = poses[static_cast<size_t>(i * total / n)];
    if (width > 0 && height > 0 && (width != p.width || height != p.height)) {
      p.focal *= static_cast<double>(width) / p.width;
      p.width = width;
      p.height = height;
    }
    out.push_back(p);
  }
  return out;
}

int cmd_sample(RunContext& rc) {
  const std::string scene_path = resolve_input(rc, "in.scene", "scene.txt");
  const std::string poses_path = resolve_input(rc, "in.poses", "poses.txt");
  const std::string ckpt_path = resolve_input(rc, "in.checkpoint", "translated.ckpt");
  const int count = rc.cfg.integer("sample.count");
  if (rc.dry_run) {
    std::cout << "plan: sample " << count << " codes from " << ckpt_path << " -> " << rc.out
              << "/samples\n" << rc.cfg.echo();
    return 0;
  }
  require_exists(scene_path, "scene config");
  require_exists(poses_path, "camera poses");
  require_exists(ckpt_path, "translated checkpoint");
  write_manifest(rc, "sample", {{"scene", scene_path}, {"checkpoint", ckpt_path}});
  const AnalyticScene scene = load_scene(scene_path);
  auto poses = subset_poses(load_poses(poses_path), rc.cfg.integer("sample.n_poses"),
                            rc.cfg.integer("sample.width"), rc.cfg.integer("sample.height"));
  Checkpoint ck = load_checkpoint(ckpt_path);
  SampleSet set =
      sample_and_render(ck.field, scene, poses, count, ck.render, rc.cfg.u64("seed"));

  const fs::path root = fs::path(rc.out) / "samples";
  fs::create_directories(root);
  std::ofstream codes(root / "codes.txt");
  codes.precision(17);
  for (size_t s = 0; s < set.renders.size(); ++s) {
    char dname[32];
    std::snprintf(dname, sizeof(dname), "sample_%02zu", s);
    fs::create_directories(root / dname);
    for (size_t p = 0; p < set.renders[s].size(); ++p) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "pose_%02zu.ppm", p);
      save_ppm(set.renders[s][p], (root / dname / fname).string());
    }
    char gname[32];
    std::snprintf(gname, sizeof(gname), "grid_%02zu.ppm", s);
    save_ppm(hstack(set.renders[s]), (root / gname).string());
    for (size_t i = 0; i < set.codes[s].size(); ++i) {
      codes << (i ? "," : "") << set.codes[s][i];
    }
    codes << "\n";
  }
  std::cout << "sample: wrote " << set.renders.size() << " render grids\n";
  return 0;
}

int cmd_interpolate(RunContext& rc) {
  const std::string scene_path = resolve_input(rc, "in.scene", "scene.txt");
  const std::string poses_path = resolve_input(rc, "in.poses", "poses.txt");
  const std::string ckpt_path = resolve_input(rc, "in.checkpoint", "translated.ckpt");
  const int steps = rc.cfg.integer("interp.steps");
  if (rc.dry_run) {
    std::cout << "plan: interpolate " << steps << " frames from " << ckpt_path << " -> "
              << rc.out << "/interp\n" << rc.cfg.echo();
    return 0;
  }
  require_exists(scene_path, "scene config");
  require_exists(poses_path, "camera poses");
  require_exists(ckpt_path, "translated checkpoint");
  write_manifest(rc, "interpolate", {{"scene", scene_path}, {"checkpoint", ckpt_path}});
  const AnalyticScene scene = load_scene(scene_path);
  const auto poses = load_poses(poses_path);
  Checkpoint ck = load_checkpoint(ckpt_path);
  const int d = ck.field.cfg.code_dim;
  Rng r1(seed_combine(rc.cfg.u64("interp.seed1"), 0x5a31ull));
  Rng r2(seed_combine(rc.cfg.u64("interp.seed2"), 0x5a32ull));
  std::vector<double> z1(static_cast<size_t>(d)), z2(static_cast<size_t>(d));
  for (auto& v : z1) v = r1.gaussian();
  for (auto& v : z2) v = r2.gaussian();
  auto frames = interpolate_codes(ck.field, scene, poses[0], z1, z2, steps, ck.render);
  const fs::path root = fs::path(rc.out) / "interp";
  fs::create_directories(root);
  for (size_t i = 0; i < frames.size(); ++i) {
    char fname[32];
    std::snprintf(fname, sizeof(fname), "frame_%02zu.ppm", i);
    save_ppm(frames[i], (root / fname).string());
  }
  save_ppm(hstack(frames), (root / "strip.ppm").string());
  std::cout << "interpolate: wrote " << frames.size() << " frames\n";
  return 0;
}

int cmd_eval(RunContext& rc) {
  const std::string dir_a = rc.cfg.str("eval.dir_a");
  const std::string dir_b = rc.cfg.str("eval.dir_b");
  if (dir_a.empty() || dir_b.empty()) {
    fail(ErrorKind::config, "eval requires eval.dir_a and eval.dir_b");
  }
  if (rc.dry_run) {
    std::cout << "plan: eval " << dir_a << " vs " << dir_b << " -> " << rc.out << "/report.csv\n"
              << rc.cfg.echo();
    return 0;
  }
  require_exists(dir_a, "eval.dir_a");
  require_exists(dir_b, "eval.dir_b");
  write_manifest(rc, "eval", {});
  std::vector<Image> a, b;
  for (const auto& f : sorted_ppm_files(dir_a)) a.push_back(load_ppm(f));
  for (const auto& f : sorted_ppm_files(dir_b)) b.push_back(load_ppm(f));
  MetricReport rep = evaluate_sets(a, b);
  write_report_csv(rep, (fs::path(rc.out) / "report.csv").string());
  write_report_text(rep, (fs::path(rc.out) / "report.txt").string());
  std::cout << "psnr=" << rep.psnr << " ssim=" << rep.ssim << " cf_a=" << rep.cf_a
            << " cf_b=" << rep.cf_b << " fd_proxy=" << rep.fd_proxy << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genn2n: generative NeRF-to-NeRF translation at desk scale"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", set_seed;
  int threads = 0;
  bool dry_run = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--out", out_dir, "run directory for all outputs");
  app.add_option("--seed", set_seed, "master seed (overrides config)");
  app.add_option("--threads", threads, "worker cap (0 = auto)");
  app.add_flag("--dry-run", dry_run, "validate config, print the plan, do not execute");
  app.add_option("--set", overrides, "config override key=value (repeatable)")
      ->take_all();

  static const char* kCommands[] = {"make-scene", "translate", "pretrain", "train",
                                    "sample",     "interpolate", "eval"};
  for (const char* name : kCommands) app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg(default_config());
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::config, "--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!set_seed.empty()) cfg.set("seed", set_seed);
    if (threads > 0) {
      set_num_threads(threads);
    } else if (cfg.integer("threads") > 0) {
      set_num_threads(cfg.integer("threads"));
    }

    RunContext rc{std::move(cfg), out_dir, dry_run};
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "make-scene") return cmd_make_scene(rc);
    if (cmd == "translate") return cmd_translate(rc);
    if (cmd == "pretrain") return cmd_pretrain(rc);
    if (cmd == "train") return cmd_train(rc);
    if (cmd == "sample") return cmd_sample(rc);
    if (cmd == "interpolate") return cmd_interpolate(rc);
    if (cmd == "eval") return cmd_eval(rc);
    fail(ErrorKind::config, "unknown command " + cmd);
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::io:
        std::cerr << "error[missing-input]: " << e.what() << "\n";
        return 2;
      case ErrorKind::config:
      case ErrorKind::shape:
        std::cerr << "error[config]: " << e.what() << "\n";
        return 3;
      case ErrorKind::domain:
      case ErrorKind::numeric:
        std::cerr << "error[numeric]: " << e.what() << "\n";
        return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
}
