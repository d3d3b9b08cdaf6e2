#pragma once

#include <array>
#include <string>
#include <vector>

#include "revbend/error.hpp"
#include "revbend/fourier.hpp"
#include "revbend/geometry.hpp"

namespace revbend {

// Closed generating curve lambda(s) = (r(s), h(s)), period 2*pi, r > 0.
// Both coordinates are truncated Fourier series so that derivatives are
// exact and the class is closed under plane rotations about the origin.
class ProfileCurve {
 public:
  ProfileCurve(FourierSeries r, FourierSeries h, int sample_density = 4096);

  const FourierSeries& r() const { return r_; }
  const FourierSeries& h() const { return h_; }
  int sample_density() const { return sample_density_; }

  Vec2 point(double s) const { return {r_.eval(s), h_.eval(s)}; }
  Vec2 derivative(double s, int order) const {
    return {r_.eval(s, order), h_.eval(s, order)};
  }

  // Validates r > 0, immersion and grid-resolution injectivity on a dense
  // sample. Throws on violation; called by the constructor.
  void validate() const;

  // Exact image under the rotation by theta about the origin.
  ProfileCurve rotated(double theta) const;

  // Extremes of the sampled trace (dense grid refinement of min r).
  double min_radius() const;
  SupportBox trace_bounds() const;

  static ProfileCurve torus();       // r = 3 + cos s, h = sin s
  static ProfileCurve degenerate();  // h = sin s + (1/9) sin 3s: non-Morse

 private:
  FourierSeries r_;
  FourierSeries h_;
  int sample_density_;
};

// Value and derivatives (lambda, lambda', ..., up to `order` <= 4) at s.
std::vector<Vec2> eval_profile(const ProfileCurve& curve, double s, int order);

// kappa = det(lambda', lambda'') / |lambda'|^3, sign follows the s-increasing
// orientation. Throws ImmersionFailure when |lambda'| is below tolerance.
double signed_curvature(const ProfileCurve& curve, double s,
                        double tol = 1e-12);

struct HeightCriticalPoint {
  double s = 0.0;            // parameter of the root of h'
  Vec2 point;                // (x0, z0)
  double second_deriv = 0.0; // h''(s)
  int index_sign = 0;        // +1 minimum, -1 maximum, 0 degenerate
  bool degenerate = false;
  double curvature = 0.0;
};

// All roots of h' in [0, 2*pi), sign-scan on the sample grid plus bisection
// refinement to tol. Ordered by s. Two roots closer than 10*tol raise
// RootClusterError (geometry too degenerate, re-perturb instead).
std::vector<HeightCriticalPoint> find_height_critical_points(
    const ProfileCurve& curve, double tol = 1e-12);

struct MorseReport {
  bool is_morse = false;
  double margin = 0.0;              // min |h''| over critical points
  double margin_used = 0.0;         // threshold the decision used
  std::vector<HeightCriticalPoint> offenders;
  std::vector<HeightCriticalPoint> critical_points;
};

// Morse decision with margin 1e-6 * max |h''| over the curve (the property
// is open, so a quantitative slack makes it decidable numerically).
MorseReport morse_report(const ProfileCurve& curve);

// Surface of revolution F(s,t) = r(s) gamma(t) + h(s) k, gamma = (cos,sin,0).
struct SurfaceParam {
  int n_s = 0;
  int n_t = 0;

  static Vec3 frame_gamma(double t) { return {std::cos(t), std::sin(t), 0.0}; }
  static Vec3 frame_gamma_prime(double t) {
    return {-std::sin(t), std::cos(t), 0.0};
  }
  static constexpr Vec3 frame_k() { return {0.0, 0.0, 1.0}; }

  static Vec3 embed(Vec2 plane_point, double t) {
    return {plane_point.x * std::cos(t), plane_point.x * std::sin(t),
            plane_point.z};
  }
};

}  // namespace revbend
