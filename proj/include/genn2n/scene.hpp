#pragma once

#include <array>
#include <string>
#include <vector>

#include "genn2n/image.hpp"

namespace genn2n {

using Vec3 = std::array<double, 3>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

// Homogeneous density ball with a flat albedo.
struct SpherePrimitive {
  Vec3 center{};
  double radius = 0.0;
  Vec3 albedo{};
  double density = 0.0;
};

struct Aabb {
  Vec3 lo{};
  Vec3 hi{};
  bool contains(const Vec3& p) const;
  Vec3 center() const;
  double bounding_radius() const;  // center-to-corner distance
};

// Procedural ground-truth scene: density and albedo are analytic in
// position, density is clipped to zero outside `bounds`.
struct AnalyticScene {
  std::vector<SpherePrimitive> primitives;
  Vec3 background{0.5, 0.5, 0.5};
  Aabb bounds{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};

  double density_at(const Vec3& p) const;
  // density-weighted albedo mix of the primitives covering p
  Vec3 albedo_at(const Vec3& p) const;
};

// Default desk scene: three colored spheres over a ground cap (a large
// sphere clipped by the bounds so its top reads as a flat disk).
AnalyticScene default_scene();

// Versioned line-oriented key=value serialization.
std::string scene_to_config(const AnalyticScene& scene);
AnalyticScene scene_from_config(const std::string& text);
void save_scene(const AnalyticScene& scene, const std::string& path);
AnalyticScene load_scene(const std::string& path);

struct CameraPose {
  Vec3 position{};
  Vec3 look_at{};
  Vec3 up{0.0, 1.0, 0.0};
  double focal = 70.0;  // pixels
  int width = 64;
  int height = 64;

  // Orthonormal camera frame (right, up', forward); forward points at look_at.
  void basis(Vec3& right, Vec3& up_out, Vec3& forward) const;
};

struct Ray {
  Vec3 origin{};
  Vec3 direction{};  // unit
  double t_near = 0.0;
  double t_far = 0.0;
};

struct RingConfig {
  double radius = 4.0;
  double elevation = 0.35;  // radians above the azimuth plane
  double focal = 70.0;
  int width = 64;
  int height = 64;
};

// Poses evenly spaced in azimuth on a circle of the given radius around the
// scene center, all looking at it. Errors if the radius does not clear the
// scene's bounding radius.
std::vector<CameraPose> make_camera_ring(int n_views, const RingConfig& cfg,
                                         const AnalyticScene& scene);

// Pinhole rays, one per pixel, row-major. near/far bracket the scene's
// bounding sphere as seen from the camera.
std::vector<Ray> generate_rays(const CameraPose& pose, const AnalyticScene& scene);
Ray pixel_ray(const CameraPose& pose, double px, double py, const AnalyticScene& scene);

// Oracle renderer: dense fixed-step ray marching of the analytic
// emission-absorption integral. Deterministic.
Image render_ground_truth(const AnalyticScene& scene, const CameraPose& pose, int steps);

// Camera pose serialization (poses.txt: one pose per line).
void save_poses(const std::vector<CameraPose>& poses, const std::string& path);
std::vector<CameraPose> load_poses(const std::string& path);

}  // namespace genn2n
