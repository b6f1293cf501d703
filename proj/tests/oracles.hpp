// Independent test oracles. Everything here recomputes expected values by
// brute force or closed form, never through the implementation under test.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "genn2n/hash.hpp"
#include "genn2n/rng.hpp"
#include "genn2n/scene.hpp"
#include "genn2n/tensor.hpp"

namespace oracles {

using genn2n::Rng;
using genn2n::ad::Tensor;
using genn2n::operator-;
using genn2n::operator+;
using genn2n::operator*;

// Central finite differences against analytic gradients. `forward` must be
// a pure deterministic function of the leaf values returning the scalar
// loss. Returns the worst relative error over `probes` random entries.
struct GradCheckResult {
  double max_rel_err = 0.0;
  int probes_run = 0;
};

inline GradCheckResult check_gradients(const std::function<double()>& forward,
                                       const std::function<void()>& backward_into_leaves,
                                       std::vector<Tensor>& leaves, int probes, Rng& rng,
                                       double h = 1e-5) {
  backward_into_leaves();  // populates leaf grads for the analytic side
  GradCheckResult res;
  for (int p = 0; p < probes; ++p) {
    const size_t li = static_cast<size_t>(rng.uniform_int(leaves.size()));
    Tensor& leaf = leaves[li];
    const int64_t idx = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(leaf.size())));
    const double saved = leaf.data()[idx];
    leaf.data()[idx] = saved + h;
    const double up = forward();
    leaf.data()[idx] = saved - h;
    const double down = forward();
    leaf.data()[idx] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double an = leaf.grad_or_null() ? leaf.grad_or_null()[idx] : 0.0;
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
    res.max_rel_err = std::max(res.max_rel_err, std::abs(fd - an) / denom);
    ++res.probes_run;
  }
  return res;
}

// Ray-sphere intersection: returns true when the ray hits the sphere.
inline bool ray_hits_sphere(const genn2n::Vec3& origin, const genn2n::Vec3& dir,
                            const genn2n::Vec3& center, double radius) {
  const genn2n::Vec3 oc = origin - center;
  const double b = genn2n::dot(oc, dir);
  const double c = genn2n::dot(oc, oc) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double t = -b - std::sqrt(disc);
  return t > 0.0 || (-b + std::sqrt(disc)) > 0.0;
}

// Monte-Carlo estimate of KL(N(mu, diag e^lv) || N(0, I)).
inline double mc_kl(const std::vector<double>& mean, const std::vector<double>& log_var,
                    int64_t n_samples, Rng& rng) {
  const size_t d = mean.size();
  double acc = 0.0;
  for (int64_t s = 0; s < n_samples; ++s) {
    double logq = 0.0, logp = 0.0;
    for (size_t i = 0; i < d; ++i) {
      const double std_dev = std::exp(0.5 * log_var[i]);
      const double eta = rng.gaussian();
      const double z = mean[i] + std_dev * eta;
      logq += -0.5 * eta * eta - 0.5 * log_var[i];
      logp += -0.5 * z * z;
    }
    acc += logq - logp;
  }
  return acc / static_cast<double>(n_samples);
}

// Direct double-loop reference for the contrastive objective.
inline double naive_contrastive(const std::vector<double>& anchor,
                                const std::vector<std::vector<double>>& attract,
                                const std::vector<std::vector<double>>& repel, double margin) {
  auto dist2 = [&](const std::vector<double>& z) {
    double s = 0.0;
    for (size_t i = 0; i < anchor.size(); ++i) s += (anchor[i] - z[i]) * (anchor[i] - z[i]);
    return s;
  };
  double loss = 0.0;
  for (const auto& z : attract) loss += dist2(z);
  for (const auto& z : repel) loss += std::max(0.0, margin - dist2(z));
  return loss;
}

// Scalar Adam recurrence, hand-rolled.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, double lr, double b1 = 0.9, double b2 = 0.999,
              double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

inline uint64_t hash_params(const std::vector<Tensor>& params) {
  genn2n::Fnv1a h;
  for (const auto& p : params) h.update(p.data(), static_cast<size_t>(p.size()) * 8);
  return h.digest();
}

// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
inline std::vector<double> random_orthogonal(int d, Rng& rng) {
  std::vector<double> q(static_cast<size_t>(d) * d);
  for (int col = 0; col < d; ++col) {
    std::vector<double> v(static_cast<size_t>(d));
    for (auto& x : v) x = rng.gaussian();
    for (int prev = 0; prev < col; ++prev) {
      double proj = 0.0;
      for (int i = 0; i < d; ++i) proj += v[static_cast<size_t>(i)] * q[static_cast<size_t>(i) * d + prev];
      for (int i = 0; i < d; ++i) v[static_cast<size_t>(i)] -= proj * q[static_cast<size_t>(i) * d + prev];
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (int i = 0; i < d; ++i) q[static_cast<size_t>(i) * d + col] = v[static_cast<size_t>(i)] / nrm;
  }
  return q;
}

}  // namespace oracles
