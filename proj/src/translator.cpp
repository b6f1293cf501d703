#include "genn2n/translator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "genn2n/error.hpp"
#include "genn2n/rng.hpp"

namespace fs = std::filesystem;

namespace genn2n {

std::string task_name(TranslateTask task) {
  switch (task) {
    case TranslateTask::stylize: return "stylize";
    case TranslateTask::colorize: return "colorize";
    case TranslateTask::super_resolve: return "super_resolve";
    case TranslateTask::inpaint: return "inpaint";
  }
  return "unknown";
}

TranslateTask task_from_name(const std::string& name) {
  if (name == "stylize") return TranslateTask::stylize;
  if (name == "colorize") return TranslateTask::colorize;
  if (name == "super_resolve") return TranslateTask::super_resolve;
  if (name == "inpaint") return TranslateTask::inpaint;
  fail(ErrorKind::config, "unknown translator task '" + name + "'");
}

Image grayscale(const Image& img) {
  Image out(img.width, img.height);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    const double* px = img.data.data() + p * 3;
    // already gray: keep the exact value (luma weights sum to 1 only in decimal)
    const double g = (px[0] == px[1] && px[1] == px[2]) ? px[0] : luma(px);
    out.data[p * 3 + 0] = g;
    out.data[p * 3 + 1] = g;
    out.data[p * 3 + 2] = g;
  }
  return out;
}

Image downscale(const Image& img, int factor) {
  if (factor < 1) fail(ErrorKind::config, "downscale: factor must be >= 1");
  if (img.width % factor != 0 || img.height % factor != 0) {
    fail(ErrorKind::shape, "downscale: dims " + std::to_string(img.width) + "x" +
                               std::to_string(img.height) + " not divisible by " +
                               std::to_string(factor));
  }
  const int w = img.width / factor, h = img.height / factor;
  Image out(w, h);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) {
          const double* src = img.px(x * factor + dx, y * factor + dy);
          acc[0] += src[0];
          acc[1] += src[1];
          acc[2] += src[2];
        }
      }
      double* dst = out.px(x, y);
      dst[0] = acc[0] * inv;
      dst[1] = acc[1] * inv;
      dst[2] = acc[2] * inv;
    }
  }
  return out;
}

Image upscale_nearest(const Image& img, int factor) {
  if (factor < 1) fail(ErrorKind::config, "upscale_nearest: factor must be >= 1");
  Image out(img.width * factor, img.height * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double* src = img.px(x / factor, y / factor);
      double* dst = out.px(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  }
  return out;
}

namespace {

double catmull_rom(double t, double pm1, double p0, double p1, double p2) {
  const double a = -0.5 * pm1 + 1.5 * p0 - 1.5 * p1 + 0.5 * p2;
  const double b = pm1 - 2.5 * p0 + 2.0 * p1 - 0.5 * p2;
  const double c = -0.5 * pm1 + 0.5 * p1;
  return ((a * t + b) * t + c) * t + p0;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Image upscale_bicubic(const Image& img, int factor) {
  if (factor < 1) fail(ErrorKind::config, "upscale_bicubic: factor must be >= 1");
  const int w = img.width * factor, h = img.height * factor;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const double sy = (y + 0.5) / factor - 0.5;
    const int iy = static_cast<int>(std::floor(sy));
    const double ty = sy - iy;
    for (int x = 0; x < w; ++x) {
      const double sx = (x + 0.5) / factor - 0.5;
      const int ix = static_cast<int>(std::floor(sx));
      const double tx = sx - ix;
      for (int c = 0; c < 3; ++c) {
        double col[4];
        for (int r = 0; r < 4; ++r) {
          const int yy = clampi(iy - 1 + r, 0, img.height - 1);
          const double pm1 = img.px(clampi(ix - 1, 0, img.width - 1), yy)[c];
          const double p0 = img.px(clampi(ix, 0, img.width - 1), yy)[c];
          const double p1 = img.px(clampi(ix + 1, 0, img.width - 1), yy)[c];
          const double p2 = img.px(clampi(ix + 2, 0, img.width - 1), yy)[c];
          col[r] = catmull_rom(tx, pm1, p0, p1, p2);
        }
        out.px(x, y)[c] = std::clamp(catmull_rom(ty, col[0], col[1], col[2], col[3]), 0.0, 1.0);
      }
    }
  }
  return out;
}

void hue_rotate_rgb(double angle, const double* rgb_in, double* rgb_out) {
  const double c = std::cos(angle), s = std::sin(angle);
  const double oc = (1.0 - c) / 3.0;
  const double ss = s / std::sqrt(3.0);
  const double m[9] = {c + oc, oc - ss, oc + ss, oc + ss, c + oc,
                       oc - ss, oc - ss, oc + ss, c + oc};
  double tmp[3];
  for (int r = 0; r < 3; ++r) {
    tmp[r] = m[r * 3 + 0] * rgb_in[0] + m[r * 3 + 1] * rgb_in[1] + m[r * 3 + 2] * rgb_in[2];
  }
  rgb_out[0] = tmp[0];
  rgb_out[1] = tmp[1];
  rgb_out[2] = tmp[2];
}

void mode_tint(int mode, double* rgb_out) {
  static const double base[4][3] = {
      {1.00, 0.42, 0.22},  // warm
      {0.25, 0.50, 1.00},  // cool
      {0.30, 1.00, 0.40},  // green
      {0.95, 0.35, 1.00},  // magenta
  };
  const int k = mode % 4;
  if (mode < 4) {
    std::copy_n(base[k], 3, rgb_out);
    return;
  }
  // beyond four modes: golden-angle hue offsets of the base palette
  const double extra = 2.399963 * static_cast<double>(mode / 4);
  hue_rotate_rgb(extra, base[k], rgb_out);
  for (int c = 0; c < 3; ++c) rgb_out[c] = std::clamp(rgb_out[c], 0.0, 1.0);
}

namespace {

struct ViewJitter {
  double hue = 0.0;   // radians
  double gain = 1.0;  // multiplicative brightness
};

// Per-view perturbation, seeded by the view index only and scaled linearly
// by epsilon. Draws are identical across epsilon values, so cross-view
// distance is monotone in epsilon by construction.
ViewJitter view_jitter(uint64_t seed, int view_index, double epsilon) {
  Rng rng(seed_combine(seed, 0x56494557ull, static_cast<uint64_t>(view_index)));
  ViewJitter j;
  const double u_hue = rng.uniform(-1.0, 1.0);
  const double u_gain = rng.uniform(-1.0, 1.0);
  j.hue = epsilon * 0.6 * u_hue;
  j.gain = 1.0 + epsilon * 0.25 * u_gain;
  return j;
}

// Edit-local brightness ramp: keeps same-mode edits distinct without moving
// their hue cluster.
double edit_gain(int edit_index, int M) {
  if (M <= 1) return 1.0;
  return 0.88 + 0.24 * static_cast<double>(edit_index) / static_cast<double>(M - 1);
}

Image edit_stylize(const TranslatorSpec& spec, const Image& src, const ViewJitter& vj, int mode,
                   double gain_j) {
  const double theta = 2.0 * M_PI * static_cast<double>(mode) / std::max(1, spec.mode_count);
  static const double gammas[4] = {0.75, 1.35, 1.0, 1.7};
  const double gamma = gammas[mode % 4];
  Image out(src.width, src.height);
  for (size_t p = 0; p < src.pixel_count(); ++p) {
    const double* in = src.data.data() + p * 3;
    double toned[3];
    for (int c = 0; c < 3; ++c) toned[c] = std::pow(std::max(0.0, in[c]), gamma);
    double rotated[3];
    hue_rotate_rgb(theta + vj.hue, toned, rotated);
    for (int c = 0; c < 3; ++c) {
      out.data[p * 3 + c] = std::clamp(rotated[c] * gain_j * vj.gain, 0.0, 1.0);
    }
  }
  return out;
}

Image edit_colorize(const TranslatorSpec& spec, const Image& src, const ViewJitter& vj, int mode,
                    double gain_j) {
  (void)spec;
  double tint[3];
  mode_tint(mode, tint);
  double tinted[3];
  hue_rotate_rgb(vj.hue, tint, tinted);
  Image out(src.width, src.height);
  for (size_t p = 0; p < src.pixel_count(); ++p) {
    const double g = std::pow(luma(src.data.data() + p * 3), 0.9);
    for (int c = 0; c < 3; ++c) {
      out.data[p * 3 + c] = std::clamp(g * tinted[c] * gain_j * vj.gain, 0.0, 1.0);
    }
  }
  return out;
}

Image box3(const Image& img) {
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double* s =
              img.px(clampi(x + dx, 0, img.width - 1), clampi(y + dy, 0, img.height - 1));
          acc[0] += s[0];
          acc[1] += s[1];
          acc[2] += s[2];
        }
      }
      double* d = out.px(x, y);
      d[0] = acc[0] / 9.0;
      d[1] = acc[1] / 9.0;
      d[2] = acc[2] / 9.0;
    }
  }
  return out;
}

Image edit_super_resolve(const TranslatorSpec& spec, const Image& src, const ViewJitter& vj,
                         int mode, double gain_j) {
  if (spec.sr_scale != 2 && spec.sr_scale != 4) {
    fail(ErrorKind::config,
         "super_resolve: scale must be 2 or 4, got " + std::to_string(spec.sr_scale));
  }
  const Image low = downscale(src, spec.sr_scale);
  const Image up = upscale_bicubic(low, spec.sr_scale);
  const Image blur = box3(up);
  static const double strengths[4] = {0.0, 0.8, 1.6, 2.4};
  const double s = strengths[mode % 4];
  double tint[3];
  mode_tint(mode, tint);
  double cast[3];
  hue_rotate_rgb(vj.hue, tint, cast);
  Image out(src.width, src.height);
  for (size_t p = 0; p < src.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const double sharp = up.data[p * 3 + c] + s * (up.data[p * 3 + c] - blur.data[p * 3 + c]);
      // mild per-mode color cast so mode identity is observable in hue
      const double casted = sharp * (0.94 + 0.12 * cast[c]);
      out.data[p * 3 + c] = std::clamp(casted * gain_j * vj.gain, 0.0, 1.0);
    }
  }
  return out;
}

double value_noise(uint64_t seed, double x, double y) {
  // bilinear interpolation of a seeded integer lattice
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double tx = x - x0, ty = y - y0;
  auto lattice = [seed](int ix, int iy) {
    return static_cast<double>(mix64(seed_combine(seed, static_cast<uint64_t>(ix) * 2654435761ull,
                                                  static_cast<uint64_t>(iy) * 40503ull)) >>
                               11) *
           0x1.0p-53;
  };
  const double a = lattice(x0, y0), b = lattice(x0 + 1, y0);
  const double c = lattice(x0, y0 + 1), d = lattice(x0 + 1, y0 + 1);
  const double sx = tx * tx * (3.0 - 2.0 * tx), sy = ty * ty * (3.0 - 2.0 * ty);
  return (a * (1 - sx) + b * sx) * (1 - sy) + (c * (1 - sx) + d * sx) * sy;
}

Image edit_inpaint(const TranslatorSpec& spec, const Image& src, const ViewJitter& vj, int mode,
                   double gain_j, uint64_t seed) {
  if (!spec.mask.has_value()) {
    fail(ErrorKind::config, "inpaint: a mask image is required");
  }
  const Image& mask = *spec.mask;
  if (!mask.same_dims(src)) {
    fail(ErrorKind::shape, "inpaint: mask dims " + std::to_string(mask.width) + "x" +
                               std::to_string(mask.height) + " do not match source");
  }
  double tint[3];
  mode_tint(mode, tint);
  double base[3];
  hue_rotate_rgb(vj.hue, tint, base);
  const uint64_t tex_seed = seed_combine(seed, 0x54455855ull, static_cast<uint64_t>(mode));
  Image out = src;  // unmasked pixels stay bit-equal
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      if (luma(mask.px(x, y)) <= 0.5) continue;
      const double n = value_noise(tex_seed, x / 6.0, y / 6.0);
      for (int c = 0; c < 3; ++c) {
        out.px(x, y)[c] =
            std::clamp((0.30 + 0.55 * n) * base[c] * gain_j * vj.gain, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace

Image apply_edit(const TranslatorSpec& spec, const Image& source, int view_index, int edit_index,
                 int M, uint64_t seed) {
  if (spec.mode_count < 1) fail(ErrorKind::config, "translator: mode_count must be >= 1");
  if (spec.epsilon < 0.0) fail(ErrorKind::config, "translator: epsilon must be >= 0");
  const int mode = edit_index % spec.mode_count;
  const ViewJitter vj = view_jitter(seed, view_index, spec.epsilon);
  const double gain_j = edit_gain(edit_index, M);
  switch (spec.task) {
    case TranslateTask::stylize: return edit_stylize(spec, source, vj, mode, gain_j);
    case TranslateTask::colorize: return edit_colorize(spec, source, vj, mode, gain_j);
    case TranslateTask::super_resolve: return edit_super_resolve(spec, source, vj, mode, gain_j);
    case TranslateTask::inpaint: return edit_inpaint(spec, source, vj, mode, gain_j, seed);
  }
  fail(ErrorKind::config, "translator: unknown task");
}

EditedImageSet translate(const TranslatorSpec& spec, const std::vector<Image>& sources, int M,
                         uint64_t seed) {
  if (M < 1) fail(ErrorKind::config, "translate: M must be >= 1");
  if (sources.empty()) fail(ErrorKind::config, "translate: no source images");
  EditedImageSet set;
  set.sources = sources;
  set.task = task_name(spec.task);
  set.seed = seed;
  set.epsilon = spec.epsilon;
  set.mode_count = spec.mode_count;
  set.edits.resize(sources.size());
  set.seed_table.resize(sources.size());
  for (size_t i = 0; i < sources.size(); ++i) {
    set.edits[i].reserve(static_cast<size_t>(M));
    for (int j = 0; j < M; ++j) {
      set.seed_table[i].push_back(
          seed_combine(seed, static_cast<uint64_t>(i), static_cast<uint64_t>(j)));
      set.edits[i].push_back(apply_edit(spec, sources[i], static_cast<int>(i), j, M, seed));
    }
  }
  return set;
}

// ---- persistence ----

namespace {

std::string view_dir_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03d", i);
  return buf;
}

std::string edit_file_name(int j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "edit_%02d.ppm", j);
  return buf;
}

}  // namespace

void save_edited_set(const EditedImageSet& set, const std::string& root) {
  fs::create_directories(root);
  std::ofstream man(fs::path(root) / "manifest.txt");
  if (!man) fail(ErrorKind::io, "save_edited_set: cannot write manifest in " + root);
  man << "task=" << set.task << "\n";
  man << "seed=" << set.seed << "\n";
  man.precision(17);
  man << "epsilon=" << set.epsilon << "\n";
  man << "mode_count=" << set.mode_count << "\n";
  man << "m=" << set.n_edits() << "\n";
  man << "n=" << set.n_views() << "\n";
  for (int i = 0; i < set.n_views(); ++i) {
    const fs::path vdir = fs::path(root) / view_dir_name(i);
    fs::create_directories(vdir);
    save_ppm(set.sources[static_cast<size_t>(i)], (vdir / "source.ppm").string());
    for (int j = 0; j < set.n_edits(); ++j) {
      save_ppm(set.edits[static_cast<size_t>(i)][static_cast<size_t>(j)],
               (vdir / edit_file_name(j)).string());
    }
  }
}

EditedImageSet load_edited_set(const std::string& root) {
  std::ifstream man(fs::path(root) / "manifest.txt");
  if (!man) fail(ErrorKind::io, "load_edited_set: missing manifest.txt in " + root);
  EditedImageSet set;
  int M = 0, N = 0;
  std::string line;
  while (std::getline(man, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "task") set.task = val;
    else if (key == "seed") set.seed = std::stoull(val);
    else if (key == "epsilon") set.epsilon = std::stod(val);
    else if (key == "mode_count") set.mode_count = std::stoi(val);
    else if (key == "m") M = std::stoi(val);
    else if (key == "n") N = std::stoi(val);
    else fail(ErrorKind::config, "edited-set manifest: unknown key '" + key + "'");
  }
  if (M < 1 || N < 1) fail(ErrorKind::config, "edited-set manifest: missing m/n");
  for (int i = 0; i < N; ++i) {
    const fs::path vdir = fs::path(root) / view_dir_name(i);
    set.sources.push_back(load_ppm((vdir / "source.ppm").string()));
    set.edits.emplace_back();
    set.seed_table.emplace_back();
    for (int j = 0; j < M; ++j) {
      set.edits.back().push_back(load_ppm((vdir / edit_file_name(j)).string()));
      set.seed_table.back().push_back(seed_combine(set.seed, static_cast<uint64_t>(i),
                                                   static_cast<uint64_t>(j)));
    }
  }
  return set;
}

}  // namespace genn2n
