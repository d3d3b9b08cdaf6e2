#include "revbend/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revbend {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ProfileCurve::ProfileCurve(FourierSeries r, FourierSeries h, int sample_density)
    : r_(std::move(r)), h_(std::move(h)), sample_density_(sample_density) {
  if (sample_density_ < 4096) sample_density_ = 4096;
  validate();
}

void ProfileCurve::validate() const {
  const int n = sample_density_;
  std::vector<Vec2> pts(n);
  for (int i = 0; i < n; ++i) {
    const double s = kTwoPi * i / n;
    pts[i] = point(s);
    if (!(pts[i].x > 0.0))
      fail(ErrorCode::AdmissibilityViolation,
           "profile leaves the half-plane x > 0 at s = " + std::to_string(s));
    const Vec2 d = derivative(s, 1);
    if (d.norm() < 1e-12)
      fail(ErrorCode::ImmersionFailure,
           "profile velocity vanishes at s = " + std::to_string(s));
  }
  // Injectivity at grid resolution: non-adjacent samples must stay farther
  // apart than a fraction of the local step length.
  double min_step = 1e300;
  for (int i = 0; i < n; ++i) {
    const Vec2 gap = pts[(i + 1) % n] - pts[i];
    min_step = std::min(min_step, gap.norm());
  }
  const double clearance = 0.5 * min_step;
  // Coarse spatial hash would be overkill at 4096 points; O(n^2) on the
  // validation path is too slow though, so check against a decimated set.
  const int stride = std::max(1, n / 512);
  for (int i = 0; i < n; i += stride) {
    for (int j = i + stride; j < n; j += stride) {
      const int di = std::min(j - i, n - (j - i));
      if (di <= 2 * stride) continue;
      if ((pts[i] - pts[j]).norm() < clearance)
        fail(ErrorCode::AdmissibilityViolation,
             "profile trace self-intersects at grid resolution");
    }
  }
}

ProfileCurve ProfileCurve::rotated(double theta) const {
  const double c = std::cos(theta), s = std::sin(theta);
  // (r, h) -> (c r - s h, s r + c h): exact on Fourier coefficients.
  FourierSeries new_r = r_ * c + h_ * (-s);
  FourierSeries new_h = r_ * s + h_ * c;
  return ProfileCurve(std::move(new_r), std::move(new_h), sample_density_);
}

double ProfileCurve::min_radius() const {
  const int n = sample_density_;
  double best = 1e300;
  double best_s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = kTwoPi * i / n;
    const double v = r_.eval(s);
    if (v < best) { best = v; best_s = s; }
  }
  // Golden-section polish around the best sample.
  double a = best_s - kTwoPi / n, b = best_s + kTwoPi / n;
  for (int it = 0; it < 80; ++it) {
    const double m1 = a + 0.381966 * (b - a);
    const double m2 = b - 0.381966 * (b - a);
    if (r_.eval(m1) < r_.eval(m2)) b = m2; else a = m1;
  }
  return std::min(best, r_.eval(0.5 * (a + b)));
}

SupportBox ProfileCurve::trace_bounds() const {
  const int n = sample_density_;
  SupportBox box{1e300, -1e300, 1e300, -1e300};
  for (int i = 0; i < n; ++i) {
    const double s = kTwoPi * i / n;
    const Vec2 p = point(s);
    box.x_min = std::min(box.x_min, p.x);
    box.x_max = std::max(box.x_max, p.x);
    box.z_min = std::min(box.z_min, p.z);
    box.z_max = std::max(box.z_max, p.z);
  }
  return box;
}

ProfileCurve ProfileCurve::torus() {
  return ProfileCurve(FourierSeries(3.0, {1.0}, {0.0}),
                      FourierSeries(0.0, {0.0}, {1.0}));
}

ProfileCurve ProfileCurve::degenerate() {
  return ProfileCurve(FourierSeries(3.0, {1.0}, {0.0}),
                      FourierSeries(0.0, {0.0, 0.0, 0.0}, {1.0, 0.0, 1.0 / 9.0}));
}

std::vector<Vec2> eval_profile(const ProfileCurve& curve, double s, int order) {
  if (order < 0 || order > 4)
    fail(ErrorCode::ConfigError, "eval_profile supports orders 0..4");
  std::vector<Vec2> out;
  out.reserve(order + 1);
  for (int d = 0; d <= order; ++d) out.push_back(curve.derivative(s, d));
  return out;
}

double signed_curvature(const ProfileCurve& curve, double s, double tol) {
  const Vec2 d1 = curve.derivative(s, 1);
  const Vec2 d2 = curve.derivative(s, 2);
  const double speed = d1.norm();
  if (speed < tol)
    fail(ErrorCode::ImmersionFailure,
         "curvature undefined, |lambda'| < tol at s = " + std::to_string(s));
  return det(d1, d2) / (speed * speed * speed);
}

namespace {

// Bisection for a sign change of h' on [a, b], refined to tol in s.
double refine_root(const FourierSeries& h, double a, double b, double tol) {
  double fa = h.eval(a, 1);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = h.eval(m, 1);
    if ((fa <= 0.0) == (fm <= 0.0)) { a = m; fa = fm; } else { b = m; }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<HeightCriticalPoint> find_height_critical_points(
    const ProfileCurve& curve, double tol) {
  const int n = curve.sample_density();
  const FourierSeries& h = curve.h();

  // Degenerate-margin: mirrors morse_report so both agree on flags.
  double max_h2 = 0.0;
  for (int i = 0; i < n; ++i)
    max_h2 = std::max(max_h2, std::abs(h.eval(kTwoPi * i / n, 2)));
  const double morse_margin = 1e-6 * max_h2;

  std::vector<double> roots;
  double prev_s = 0.0, prev_v = h.eval(0.0, 1);
  for (int i = 1; i <= n; ++i) {
    const double s = kTwoPi * i / n;
    const double v = h.eval(s, 1);
    if (prev_v == 0.0) {
      roots.push_back(prev_s);
    } else if ((prev_v < 0.0) != (v < 0.0)) {
      roots.push_back(refine_root(h, prev_s, s, tol));
    } else {
      // Even-order roots produce no sign change; catch them by a local
      // minimum of |h'| that actually reaches zero.
      const double m = 0.5 * (prev_s + s);
      if (std::abs(h.eval(m, 1)) < 1e-10 &&
          std::abs(h.eval(m, 1)) <= std::abs(prev_v) &&
          std::abs(h.eval(m, 1)) <= std::abs(v)) {
        double lo = prev_s, hi = s;
        for (int it = 0; it < 120; ++it) {
          const double m1 = lo + 0.381966 * (hi - lo);
          const double m2 = hi - 0.381966 * (hi - lo);
          if (std::abs(h.eval(m1, 1)) < std::abs(h.eval(m2, 1))) hi = m2;
          else lo = m1;
        }
        const double m0 = 0.5 * (lo + hi);
        if (std::abs(h.eval(m0, 1)) < tol) roots.push_back(m0);
      }
    }
    prev_s = s;
    prev_v = v;
  }

  // Deduplicate near the period seam.
  std::sort(roots.begin(), roots.end());
  std::vector<double> unique_roots;
  for (double rt : roots) {
    if (rt >= kTwoPi) rt -= kTwoPi;
    if (!unique_roots.empty() && rt - unique_roots.back() < 10.0 * tol)
      fail(ErrorCode::RootClusterError,
           "two critical points closer than 10*tol near s = " +
               std::to_string(rt));
    unique_roots.push_back(rt);
  }
  if (unique_roots.size() >= 2 &&
      (unique_roots.front() + kTwoPi - unique_roots.back()) < 10.0 * tol)
    fail(ErrorCode::RootClusterError, "critical point cluster at the seam");

  std::vector<HeightCriticalPoint> out;
  for (double s : unique_roots) {
    HeightCriticalPoint cp;
    cp.s = s;
    cp.point = curve.point(s);
    cp.second_deriv = h.eval(s, 2);
    cp.degenerate = std::abs(cp.second_deriv) < morse_margin;
    cp.index_sign = cp.degenerate ? 0 : (cp.second_deriv > 0.0 ? +1 : -1);
    cp.curvature = signed_curvature(curve, s);
    out.push_back(cp);
  }
  return out;
}

MorseReport morse_report(const ProfileCurve& curve) {
  MorseReport rep;
  const int n = curve.sample_density();
  double max_h2 = 0.0;
  for (int i = 0; i < n; ++i)
    max_h2 = std::max(max_h2, std::abs(curve.h().eval(kTwoPi * i / n, 2)));
  rep.margin_used = 1e-6 * max_h2;

  rep.critical_points = find_height_critical_points(curve);
  rep.margin = 1e300;
  for (const auto& cp : rep.critical_points) {
    rep.margin = std::min(rep.margin, std::abs(cp.second_deriv));
    if (cp.degenerate) rep.offenders.push_back(cp);
  }
  if (rep.critical_points.empty()) rep.margin = 0.0;
  rep.is_morse = rep.offenders.empty() && !rep.critical_points.empty();
  return rep;
}

}  // namespace revbend
