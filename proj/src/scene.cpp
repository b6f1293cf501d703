#include "genn2n/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "genn2n/error.hpp"
#include "genn2n/parallel.hpp"

namespace genn2n {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  if (n <= 0.0) fail(ErrorKind::domain, "normalized: zero vector");
  return (1.0 / n) * a;
}

bool Aabb::contains(const Vec3& p) const {
  return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1] && p[2] >= lo[2] &&
         p[2] <= hi[2];
}

Vec3 Aabb::center() const { return 0.5 * (lo + hi); }

double Aabb::bounding_radius() const { return 0.5 * norm(hi - lo); }

namespace {

double smoothstep01(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * (3.0 - 2.0 * u);
}

// Density tapers smoothly to zero in a thin shell inside the primitive
// radius and near the bounds faces, keeping the ray integrand C^1 so the
// quadrature converges at second order.
constexpr double kSphereEdgeFrac = 0.12;
constexpr double kBoundsEdgeWidth = 0.08;

double sphere_falloff(const SpherePrimitive& s, const Vec3& p) {
  const Vec3 r = p - s.center;
  const double d2 = dot(r, r);
  if (d2 >= s.radius * s.radius) return 0.0;
  const double d = std::sqrt(d2);
  return smoothstep01((s.radius - d) / (kSphereEdgeFrac * s.radius));
}

double bounds_falloff(const Aabb& b, const Vec3& p) {
  double f = 1.0;
  for (int a = 0; a < 3; ++a) {
    f *= smoothstep01((p[static_cast<size_t>(a)] - b.lo[static_cast<size_t>(a)]) / kBoundsEdgeWidth);
    f *= smoothstep01((b.hi[static_cast<size_t>(a)] - p[static_cast<size_t>(a)]) / kBoundsEdgeWidth);
  }
  return f;
}

}  // namespace

double AnalyticScene::density_at(const Vec3& p) const {
  if (!bounds.contains(p)) return 0.0;
  const double box = bounds_falloff(bounds, p);
  if (box <= 0.0) return 0.0;
  double d = 0.0;
  for (const auto& s : primitives) d += s.density * sphere_falloff(s, p);
  return d * box;
}

Vec3 AnalyticScene::albedo_at(const Vec3& p) const {
  double d = 0.0;
  Vec3 c{0.0, 0.0, 0.0};
  if (bounds.contains(p)) {
    for (const auto& s : primitives) {
      const double w = s.density * sphere_falloff(s, p);
      if (w > 0.0) {
        d += w;
        c = c + w * s.albedo;
      }
    }
  }
  if (d <= 0.0) return background;
  return (1.0 / d) * c;
}

AnalyticScene default_scene() {
  AnalyticScene scene;
  scene.background = {0.5, 0.5, 0.5};
  scene.bounds = {{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};
  scene.primitives = {
      {{-0.42, 0.05, -0.05}, 0.34, {0.85, 0.22, 0.18}, 14.0},
      {{0.38, -0.08, 0.28}, 0.30, {0.20, 0.70, 0.30}, 14.0},
      {{0.05, 0.46, 0.30}, 0.26, {0.95, 0.80, 0.25}, 14.0},
      // ground cap: big sphere whose top surface sits at y = -0.45
      {{0.0, -100.45, 0.0}, 100.0, {0.72, 0.68, 0.60}, 22.0},
  };
  return scene;
}

// ---- scene config ----

namespace {

std::vector<double> parse_csv_values(const std::string& s, size_t expected, const char* key) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (...) {
      fail(ErrorKind::config, std::string("scene config: bad number '") + item + "' in " + key);
    }
  }
  if (vals.size() != expected) {
    fail(ErrorKind::config, std::string("scene config: ") + key + " expects " +
                                std::to_string(expected) + " comma-separated values");
  }
  return vals;
}

}  // namespace

std::string scene_to_config(const AnalyticScene& scene) {
  std::ostringstream os;
  os.precision(17);
  os << "version=1\n";
  os << "background=" << scene.background[0] << "," << scene.background[1] << ","
     << scene.background[2] << "\n";
  os << "bounds=" << scene.bounds.lo[0] << "," << scene.bounds.lo[1] << "," << scene.bounds.lo[2]
     << "," << scene.bounds.hi[0] << "," << scene.bounds.hi[1] << "," << scene.bounds.hi[2]
     << "\n";
  for (const auto& s : scene.primitives) {
    os << "sphere=" << s.center[0] << "," << s.center[1] << "," << s.center[2] << "," << s.radius
       << "," << s.albedo[0] << "," << s.albedo[1] << "," << s.albedo[2] << "," << s.density
       << "\n";
  }
  return os.str();
}

AnalyticScene scene_from_config(const std::string& text) {
  AnalyticScene scene;
  scene.primitives.clear();
  bool saw_version = false;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, "scene config: missing '=' in: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "version") {
      if (val != "1") fail(ErrorKind::config, "scene config: unsupported version " + val);
      saw_version = true;
    } else if (key == "background") {
      auto v = parse_csv_values(val, 3, "background");
      scene.background = {v[0], v[1], v[2]};
    } else if (key == "bounds") {
      auto v = parse_csv_values(val, 6, "bounds");
      scene.bounds = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    } else if (key == "sphere") {
      auto v = parse_csv_values(val, 8, "sphere");
      SpherePrimitive s{{v[0], v[1], v[2]}, v[3], {v[4], v[5], v[6]}, v[7]};
      if (s.radius <= 0.0 || s.density < 0.0) {
        fail(ErrorKind::config, "scene config: sphere needs radius > 0 and density >= 0");
      }
      for (double a : s.albedo) {
        if (a < 0.0 || a > 1.0) fail(ErrorKind::config, "scene config: albedo outside [0,1]");
      }
      scene.primitives.push_back(s);
    } else {
      fail(ErrorKind::config, "scene config: unknown key '" + key + "'");
    }
  }
  if (!saw_version) fail(ErrorKind::config, "scene config: missing version line");
  return scene;
}

void save_scene(const AnalyticScene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "save_scene: cannot open " + path);
  out << scene_to_config(scene);
}

AnalyticScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "load_scene: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_config(ss.str());
}

// ---- cameras and rays ----

void CameraPose::basis(Vec3& right, Vec3& up_out, Vec3& forward) const {
  forward = normalized(look_at - position);
  const Vec3 c = cross(forward, up);
  if (norm(c) < 1e-12) fail(ErrorKind::domain, "camera: view direction parallel to up vector");
  right = normalized(c);
  up_out = cross(right, forward);
}

std::vector<CameraPose> make_camera_ring(int n_views, const RingConfig& cfg,
                                         const AnalyticScene& scene) {
  if (n_views < 2) fail(ErrorKind::config, "make_camera_ring: n_views must be >= 2");
  const double scene_radius = scene.bounds.bounding_radius();
  if (cfg.radius <= scene_radius) {
    fail(ErrorKind::config, "make_camera_ring: ring radius " + std::to_string(cfg.radius) +
                                " must exceed scene bounding radius " +
                                std::to_string(scene_radius));
  }
  const Vec3 center = scene.bounds.center();
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<size_t>(n_views));
  const double ce = std::cos(cfg.elevation), se = std::sin(cfg.elevation);
  for (int i = 0; i < n_views; ++i) {
    const double az = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n_views);
    CameraPose pose;
    pose.position = center + cfg.radius * Vec3{ce * std::cos(az), se, ce * std::sin(az)};
    pose.look_at = center;
    pose.up = {0.0, 1.0, 0.0};
    pose.focal = cfg.focal;
    pose.width = cfg.width;
    pose.height = cfg.height;
    poses.push_back(pose);
  }
  return poses;
}

Ray pixel_ray(const CameraPose& pose, double px, double py, const AnalyticScene& scene) {
  Vec3 right, up, forward;
  pose.basis(right, up, forward);
  const double x = (px + 0.5 - 0.5 * pose.width) / pose.focal;
  const double y = (0.5 * pose.height - (py + 0.5)) / pose.focal;
  Ray ray;
  ray.origin = pose.position;
  ray.direction = normalized(forward + x * right + y * up);
  const double dist = norm(scene.bounds.center() - pose.position);
  const double margin = 1.15 * scene.bounds.bounding_radius();
  ray.t_near = std::max(0.05, dist - margin);
  ray.t_far = dist + margin;
  return ray;
}

std::vector<Ray> generate_rays(const CameraPose& pose, const AnalyticScene& scene) {
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(pose.width) * pose.height);
  for (int y = 0; y < pose.height; ++y) {
    for (int x = 0; x < pose.width; ++x) {
      rays.push_back(pixel_ray(pose, x, y, scene));
    }
  }
  return rays;
}

Image render_ground_truth(const AnalyticScene& scene, const CameraPose& pose, int steps) {
  if (steps < 64) fail(ErrorKind::config, "render_ground_truth: steps must be >= 64");
  Image img(pose.width, pose.height);
  parallel_for(pose.height, [&](int64_t ylo, int64_t yhi) {
    for (int64_t y = ylo; y < yhi; ++y) {
      for (int x = 0; x < pose.width; ++x) {
        const Ray ray = pixel_ray(pose, x, static_cast<double>(y), scene);
        const double dt = (ray.t_far - ray.t_near) / static_cast<double>(steps);
        double transmittance = 1.0;
        Vec3 color{0.0, 0.0, 0.0};
        for (int k = 0; k < steps; ++k) {
          const double t = ray.t_near + dt * (static_cast<double>(k) + 0.5);  // midpoint rule
          const Vec3 p = ray.origin + t * ray.direction;
          const double sigma = scene.density_at(p);
          if (sigma <= 0.0) continue;
          const double alpha = 1.0 - std::exp(-sigma * dt);
          color = color + (transmittance * alpha) * scene.albedo_at(p);
          transmittance *= 1.0 - alpha;
          if (transmittance < 1e-9) break;
        }
        color = color + transmittance * scene.background;
        double* dst = img.px(x, static_cast<int>(y));
        dst[0] = color[0];
        dst[1] = color[1];
        dst[2] = color[2];
      }
    }
  });
  return img;
}

void save_poses(const std::vector<CameraPose>& poses, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "save_poses: cannot open " + path);
  out.precision(17);
  out << "version=1\n";
  for (const auto& p : poses) {
    out << "pose=" << p.position[0] << "," << p.position[1] << "," << p.position[2] << ","
        << p.look_at[0] << "," << p.look_at[1] << "," << p.look_at[2] << "," << p.up[0] << ","
        << p.up[1] << "," << p.up[2] << "," << p.focal << "," << p.width << "," << p.height
        << "\n";
  }
}

std::vector<CameraPose> load_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "load_poses: cannot open " + path);
  std::vector<CameraPose> poses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("version=", 0) == 0) continue;
    if (line.rfind("pose=", 0) != 0) fail(ErrorKind::config, "poses: bad line: " + line);
    auto v = parse_csv_values(line.substr(5), 12, "pose");
    CameraPose p;
    p.position = {v[0], v[1], v[2]};
    p.look_at = {v[3], v[4], v[5]};
    p.up = {v[6], v[7], v[8]};
    p.focal = v[9];
    p.width = static_cast<int>(v[10]);
    p.height = static_cast<int>(v[11]);
    poses.push_back(p);
  }
  if (poses.empty()) fail(ErrorKind::config, "poses: no pose lines in " + path);
  return poses;
}

}  // namespace genn2n
