#include "revbend/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revbend {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool trace_inside(const ProfileCurve& curve, const SupportBox& box) {
  const SupportBox tb = curve.trace_bounds();
  return box.contains(tb) && tb.x_min > 0.0;
}

// Root of a monotone function on [a, b] by safeguarded Newton. Roots at
// the bracket endpoints (common at piece seams) are handled exactly.
template <typename F, typename DF>
double solve_monotone(F f, DF df, double a, double b) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0.0) == (fb < 0.0))
    return std::abs(fa) < std::abs(fb) ? a : b;  // root within rounding
  double x = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (fa < 0.0)) { a = x; fa = fx; } else { b = x; fb = fx; }
    const double d = df(x);
    double next = x - fx / d;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace

std::pair<ProfileCurve, PerturbationStep> rotate_to_morse(
    const ProfileCurve& curve, const SupportBox& box, double theta_max) {
  if (!(theta_max > 0.0))
    fail(ErrorCode::ConfigError, "rotate_to_morse needs theta_max > 0");
  if (!trace_inside(curve, box))
    fail(ErrorCode::AdmissibilityViolation,
         "input trace not strictly inside the support box");

  bool saw_morse_candidate = false;
  for (int m = 0; m <= 50; ++m) {
    for (const int sign : {+1, -1}) {
      if (m == 0 && sign < 0) continue;
      const double theta = sign * theta_max * m / 50.0;
      std::optional<ProfileCurve> cand;
      try {
        cand = curve.rotated(theta);
      } catch (const Error&) {
        continue;  // rotation left x > 0; not admissible
      }
      bool morse = false;
      try {
        morse = morse_report(*cand).is_morse;
      } catch (const Error&) {
        continue;  // root clustering: treat as non-Morse candidate
      }
      if (!morse) continue;
      saw_morse_candidate = true;
      if (!trace_inside(*cand, box)) continue;

      PerturbationStep step;
      step.kind = PerturbationStep::Kind::Rotation;
      step.theta = theta;
      step.support = box;
      // Max displacement of the restriction to the trace: 2 sin(|theta|/2) * |p|.
      const SupportBox tb = curve.trace_bounds();
      const double pmax = std::hypot(std::max(std::abs(tb.x_min), tb.x_max),
                                     std::max(std::abs(tb.z_min), tb.z_max));
      step.max_displacement = 2.0 * std::sin(0.5 * std::abs(theta)) * pmax;
      step.admissible = true;
      return {std::move(*cand), step};
    }
  }
  if (saw_morse_candidate)
    fail(ErrorCode::AdmissibilityViolation,
         "every Morse candidate angle leaves box or x > 0");
  fail(ErrorCode::NoMorseAngleFound,
       "no Morse angle within theta_max after 50 ladder steps");
}

namespace {

// Local even-graph data around one critical point: rho(x) = h(r^{-1}(x)).
struct CapChart {
  const ProfileCurve* curve = nullptr;
  double s_c = 0.0;   // critical parameter
  double x0 = 0.0;
  double z0 = 0.0;
  double s_lo = 0.0;  // monotone-r window in s (s_lo < s_c < s_hi)
  double s_hi = 0.0;

  double s_of_x(double x) const;
  double rho(double x, int order = 0) const {
    const double s = s_of_x(x);
    const double h1 = curve->h().eval(s, 1), r1 = curve->r().eval(s, 1);
    switch (order) {
      case 0: return curve->h().eval(s);
      case 1: return h1 / r1;
      case 2: {
        const double h2 = curve->h().eval(s, 2), r2 = curve->r().eval(s, 2);
        return (h2 * r1 - h1 * r2) / (r1 * r1 * r1);
      }
      default: fail(ErrorCode::ConfigError, "rho order > 2");
    }
  }
};

// Plateau bump: 1 on |u| <= d/2, 0 at |u| >= d, quintic C^2 ramps between.
double eta1(double u, double d) {
  const double a = std::abs(u);
  if (a <= 0.5 * d) return 1.0;
  if (a >= d) return 0.0;
  return smoothstep5((d - a) / (0.5 * d));
}

struct CapBuild {
  CapChart chart;
  Cap cap;
  double zA_minus = 0.0;  // original height at x0 - delta1
  double zA_plus = 0.0;   // original height at x0 + delta1
  double max_disp = 0.0;
  SupportBox support;
};

double blend_g1(const CapBuild& cb, double x) {
  const double u = x - cb.cap.x0;
  const double f = cb.cap.parabola(u);
  const double rho = cb.chart.rho(x);
  return rho + eta1(u, cb.cap.delta1) * (f - rho);
}

double blend_g1_d1(const CapBuild& cb, double x) {
  const double u = x - cb.cap.x0;
  const double d = cb.cap.delta1;
  const double f = cb.cap.parabola(u);
  const double f1 = cb.cap.parabola(u, 1);
  const double rho = cb.chart.rho(x);
  const double rho1 = cb.chart.rho(x, 1);
  const double e = eta1(u, d);
  double e1 = 0.0;
  const double a = std::abs(u);
  if (a > 0.5 * d && a < d) {
    e1 = -smoothstep5_d1((d - a) / (0.5 * d)) / (0.5 * d);
    if (u < 0.0) e1 = -e1;
  }
  return rho1 + e1 * (f - rho) + e * (f1 - rho1);
}

}  // namespace

CapSegmentProfile cap_critical_points(const ProfileCurve& curve,
                                      double delta1_fraction,
                                      double delta2_fraction,
                                      std::optional<SupportBox> box_opt) {
  (void)delta2_fraction;  // reserved for downstream pocket sizing
  const MorseReport rep = morse_report(curve);
  if (!rep.is_morse)
    fail(ErrorCode::ConfigError,
         "cap_critical_points requires a Morse profile; rotate first");
  const auto& cps = rep.critical_points;
  const int m = static_cast<int>(cps.size());
  if (m < 2 || m % 2 != 0)
    fail(ErrorCode::ConfigError, "unexpected critical point census");

  SupportBox box;
  if (box_opt) {
    box = *box_opt;
  } else {
    const SupportBox tb = curve.trace_bounds();
    const double mx = 0.25 * (tb.x_max - tb.x_min) + 0.1;
    const double mz = 0.25 * (tb.z_max - tb.z_min) + 0.1;
    box = {std::max(0.5 * tb.x_min, tb.x_min - mx), tb.x_max + mx,
           tb.z_min - mz, tb.z_max + mz};
  }
  if (!(box.x_min > 0.0))
    fail(ErrorCode::AdmissibilityViolation, "support box must satisfy x > 0");

  if (!(delta1_fraction > 0.0 && delta1_fraction < 0.25))
    fail(ErrorCode::ConfigError,
         "delta1_fraction must lie in (0, 0.25) so caps stay separated");

  double sep = 1e300;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      sep = std::min(sep, (cps[i].point - cps[j].point).norm());
  const double delta1_init = delta1_fraction * sep;

  CapSegmentProfile out;
  out.box = box;

  // ---- Build each cap, shrinking delta1 until the Lemma-style conditions
  // hold: rho defined and strictly one-sided concave/convex on the window,
  // the parabola bound, and blend monotonicity.
  std::vector<CapBuild> builds(m);
  for (int i = 0; i < m; ++i) {
    const auto& cp = cps[i];
    CapBuild cb;
    cb.chart.curve = &curve;
    cb.chart.s_c = cp.s;
    cb.chart.x0 = cp.point.x;
    cb.chart.z0 = cp.point.z;

    double delta1 = delta1_init;
    bool ok = false;
    for (int attempt = 0; attempt < 24 && !ok; ++attempt, delta1 *= 0.5) {
      // Monotone-r window in s reaching |r - x0| = 2*delta1 on both sides.
      const double r1c = curve.r().eval(cp.s, 1);
      if (std::abs(r1c) < 1e-12)
        fail(ErrorCode::ImmersionFailure, "r' vanishes at a critical point");
      auto expand = [&](int dir) -> std::optional<double> {
        double step = 1e-3;
        double s = cp.s;
        for (int it = 0; it < 4000; ++it) {
          const double sn = s + dir * step;
          if (std::abs(sn - cp.s) > 0.45 * kTwoPi) return std::nullopt;
          if (curve.r().eval(sn, 1) * r1c <= 0.0) {
            if (step < 1e-9) return std::nullopt;  // r' flips before window
            step *= 0.5;
            continue;
          }
          s = sn;
          if (std::abs(curve.r().eval(s) - cp.point.x) >= 2.0 * delta1)
            return s;
        }
        return std::nullopt;
      };
      const auto s_a = expand(-1), s_b = expand(+1);
      if (!s_a || !s_b) continue;
      cb.chart.s_lo = std::min(*s_a, *s_b);
      cb.chart.s_hi = std::max(*s_a, *s_b);

      // rho'' keeps the sign of h''(s_c) on the window (grid check).
      const double want = cp.second_deriv > 0.0 ? 1.0 : -1.0;
      bool curv_ok = true;
      for (int j = 0; j <= 128 && curv_ok; ++j) {
        const double x = cp.point.x - delta1 + 2.0 * delta1 * j / 128.0;
        if (cb.chart.rho(x, 2) * want <= 0.0) curv_ok = false;
      }
      if (!curv_ok) continue;

      // Parabola coefficient with the one-sided bound (halve K until it
      // holds): concave case rho <= z0 + K u^2, mirrored when convex.
      double K = 0.5 * cb.chart.rho(cp.point.x, 2);
      bool k_ok = false;
      for (int halve = 0; halve < 50 && !k_ok; ++halve, K *= 0.5) {
        k_ok = true;
        for (int j = 0; j <= 256; ++j) {
          const double u = -delta1 + 2.0 * delta1 * j / 256.0;
          const double gap =
              (cb.chart.rho(cp.point.x + u) - (cp.point.z + K * u * u)) * want;
          if (gap < -1e-13) { k_ok = false; break; }
        }
        if (k_ok) break;
      }
      if (!k_ok) continue;

      cb.cap.x0 = cp.point.x;
      cb.cap.z0 = cp.point.z;
      cb.cap.K = K;
      cb.cap.delta1 = delta1;
      cb.cap.index_sign = cp.index_sign;

      // Blend must not create extra critical points: g1' has a single zero.
      bool mono_ok = true;
      for (const int side : {-1, +1}) {
        double prev = 0.0;
        for (int j = 1; j <= 256; ++j) {
          const double x = cp.point.x + side * delta1 * j / 256.0;
          const double d1 = blend_g1_d1(cb, x);
          if (j > 1 && d1 * prev < 0.0) { mono_ok = false; break; }
          if (j > 1 && d1 == 0.0) { mono_ok = false; break; }
          prev = d1;
        }
        if (!mono_ok) break;
      }
      if (!mono_ok) continue;
      ok = true;
    }
    if (!ok)
      fail(ErrorCode::MonotonicityLoss,
           "could not install a cap at s = " + std::to_string(cp.s));

    cb.zA_minus = cb.chart.rho(cb.cap.x0 - cb.cap.delta1);
    cb.zA_plus = cb.chart.rho(cb.cap.x0 + cb.cap.delta1);

    // Displacement and support rectangle of this cap's vertical flow.
    double zmin = 1e300, zmax = -1e300, disp = 0.0;
    for (int j = 0; j <= 256; ++j) {
      const double u = -cb.cap.delta1 + 2.0 * cb.cap.delta1 * j / 256.0;
      const double x = cb.cap.x0 + u;
      const double g = blend_g1(cb, x);
      const double rho = cb.chart.rho(x);
      disp = std::max(disp, std::abs(g - rho));
      zmin = std::min(zmin, std::min(g, rho));
      zmax = std::max(zmax, std::max(g, rho));
    }
    cb.max_disp = disp;
    const double margin = 0.02 * (zmax - zmin) + 1e-9;
    cb.support = {cb.cap.x0 - cb.cap.delta1, cb.cap.x0 + cb.cap.delta1,
                  zmin - margin, zmax + margin};
    if (!box.contains(cb.support))
      fail(ErrorCode::AdmissibilityViolation,
           "cap box exits the support box at s = " + std::to_string(cp.s));
    builds[i] = std::move(cb);
  }

  // Disjointness of cap boxes.
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const auto& A = builds[i].support;
      const auto& B = builds[j].support;
      const bool disjoint = A.x_max < B.x_min || B.x_max < A.x_min ||
                            A.z_max < B.z_min || B.z_max < A.z_min;
      if (!disjoint)
        fail(ErrorCode::CapCollision,
             "cap windows overlap; shrink delta1_fraction");
    }

  // Isolation: no foreign part of the curve may enter a cap box.
  {
    const int n = curve.sample_density();
    for (int i = 0; i < m; ++i) {
      const auto& cb = builds[i];
      for (int jj = 0; jj < n; ++jj) {
        const double s = kTwoPi * jj / n;
        const Vec2 p = curve.point(s);
        if (!cb.support.contains(p)) continue;
        double ds = std::abs(s - cb.chart.s_c);
        ds = std::min(ds, kTwoPi - ds);
        const double win = std::max(std::abs(cb.chart.s_hi - cb.chart.s_c),
                                    std::abs(cb.chart.s_c - cb.chart.s_lo));
        if (ds > win + 1e-6)
          fail(ErrorCode::CapCollision,
               "curve re-enters a cap box away from its critical point");
      }
    }
  }

  for (int i = 0; i < m; ++i) {
    out.caps.push_back(builds[i].cap);
    PerturbationStep st;
    st.kind = PerturbationStep::Kind::Cap;
    st.cap_index = i;
    st.support = builds[i].support;
    st.max_displacement = builds[i].max_disp;
    out.provenance.push_back(st);
  }

  // ---- Segments between consecutive caps.
  for (int i = 0; i < m; ++i) {
    const int j = (i + 1) % m;
    const double s_i = cps[i].s;

    Segment sg;
    const double zi = cps[i].point.z, zj = cps[j].point.z;
    sg.ascending = zj > zi;
    sg.z1 = std::min(zi, zj);
    sg.z2 = std::max(zi, zj);
    sg.cap_lo = sg.ascending ? i : j;
    sg.cap_hi = sg.ascending ? j : i;

    const double r1_i = curve.r().eval(s_i, 1);
    const double r1_j = curve.r().eval(cps[j].s, 1);
    const int side_at_i = r1_i > 0.0 ? +1 : -1;   // departing side at cap i
    const int side_at_j = r1_j > 0.0 ? -1 : +1;   // arriving side at cap j
    sg.side_lo = sg.ascending ? side_at_i : side_at_j;
    sg.side_hi = sg.ascending ? side_at_j : side_at_i;
    sg.zwin_lo = out.caps[sg.cap_lo].window_edge_z();
    sg.zwin_hi = out.caps[sg.cap_hi].window_edge_z();

    // Annulus edges in z for the two caps bounding this segment.
    const CapBuild& cb_i = builds[i];
    const CapBuild& cb_j = builds[j];
    const double zA_i = side_at_i > 0 ? cb_i.zA_plus : cb_i.zA_minus;
    const double zA_j = side_at_j > 0 ? cb_j.zA_plus : cb_j.zA_minus;

    // Arc s-window: preimages of the annulus outer edges.
    auto arc_bound = [&](const CapBuild& cb, int side) {
      return cb.chart.s_of_x(cb.cap.x0 + side * cb.cap.delta1);
    };
    double sA_i = arc_bound(cb_i, side_at_i);
    double sA_j = arc_bound(cb_j, side_at_j);
    if (sA_j < sA_i) sA_j += kTwoPi;

    auto s_of_z_arc = [&](double z) {
      double a = sA_i, b = sA_j;
      double fa = curve.h().eval(a) - z;
      double s = 0.5 * (a + b);
      for (int it = 0; it < 80; ++it) {
        const double f = curve.h().eval(s) - z;
        if ((f <= 0.0) == (fa <= 0.0)) a = s; else b = s;
        const double df = curve.h().eval(s, 1);
        double next = s - f / df;
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - s) < 1e-15 * std::max(1.0, std::abs(s)))
          return next;
        s = next;
      }
      return s;
    };

    // Piece: annulus of cap i (between window edge and annulus edge).
    auto fit_annulus = [&](const CapBuild& cb, int side, double z_from,
                           double z_to) {
      SegmentPiece piece;
      piece.zlo = std::min(z_from, z_to);
      piece.zhi = std::max(z_from, z_to);
      auto x_of_z = [&](double z) {
        double a = cb.cap.x0 + side * 0.5 * cb.cap.delta1;
        double b = cb.cap.x0 + side * cb.cap.delta1;
        if (a > b) std::swap(a, b);
        double fa = blend_g1(cb, a) - z;
        double x = 0.5 * (a + b);
        for (int it = 0; it < 80; ++it) {
          const double f = blend_g1(cb, x) - z;
          if ((f <= 0.0) == (fa <= 0.0)) a = x; else b = x;
          const double df = blend_g1_d1(cb, x);
          double next = x - f / df;
          if (!(next > a && next < b)) next = 0.5 * (a + b);
          if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x)))
            return next;
          x = next;
        }
        return x;
      };
      piece.set_cheb(ChebSeries::fit(x_of_z, piece.zlo, piece.zhi, sg.degree));
      return piece;
    };

    // Piece(s): original arc graph R(z) = r(s(z)), split adaptively.
    std::vector<SegmentPiece> arc_pieces;
    auto fit_arc = [&](auto&& self, double zlo, double zhi, int depth) -> void {
      SegmentPiece piece;
      piece.zlo = zlo;
      piece.zhi = zhi;
      auto R = [&](double z) { return curve.r().eval(s_of_z_arc(z)); };
      ChebSeries fit = ChebSeries::fit(R, zlo, zhi, sg.degree);
      if (depth < 6 && fit.tail(4) > 1e-12 * std::max(1.0, fit.scale())) {
        const double mid = 0.5 * (zlo + zhi);
        self(self, zlo, mid, depth + 1);
        self(self, mid, zhi, depth + 1);
        return;
      }
      piece.set_cheb(std::move(fit));
      arc_pieces.push_back(std::move(piece));
    };

    const double z_arc_lo = std::min(zA_i, zA_j);
    const double z_arc_hi = std::max(zA_i, zA_j);
    fit_arc(fit_arc, z_arc_lo, z_arc_hi, 0);
    std::sort(arc_pieces.begin(), arc_pieces.end(),
              [](const SegmentPiece& a, const SegmentPiece& b) {
                return a.zlo < b.zlo;
              });

    // Assemble ordered by z: lower annulus, arc, upper annulus.
    const CapBuild& cb_lo = sg.ascending ? cb_i : cb_j;
    const CapBuild& cb_hi = sg.ascending ? cb_j : cb_i;
    const int side_lo_cap = sg.side_lo, side_hi_cap = sg.side_hi;
    sg.pieces.push_back(fit_annulus(cb_lo, side_lo_cap, sg.zwin_lo,
                                    std::min(zA_i, zA_j)));
    for (auto& piece : arc_pieces) sg.pieces.push_back(std::move(piece));
    sg.pieces.push_back(fit_annulus(cb_hi, side_hi_cap, std::max(zA_i, zA_j),
                                    sg.zwin_hi));
    out.segments.push_back(std::move(sg));
  }

  out.build_parametrization();

  // The construction must not change the census.
  const auto census = out.critical_census();
  if (static_cast<int>(census.size()) != m)
    fail(ErrorCode::MonotonicityLoss, "capping changed the census size");
  for (int i = 0; i < m; ++i)
    if (census[i].index_sign != cps[i].index_sign)
      fail(ErrorCode::MonotonicityLoss, "capping changed an index sign");

  const AdmissibilityReport adm = check_admissible(out, box);
  if (!adm.admissible)
    fail(ErrorCode::AdmissibilityViolation, adm.detail);
  return out;
}

double default_pocket_delta2(const CapSegmentProfile& profile, int seg_index,
                             double delta2_fraction) {
  const Segment& sg = profile.segments.at(seg_index);
  return delta2_fraction * (sg.zwin_hi - sg.zwin_lo);
}

CapSegmentProfile insert_pocket(const CapSegmentProfile& profile,
                                int seg_index, double z0, double delta2,
                                double t, const PocketParams& params) {
  if (seg_index < 0 || seg_index >= static_cast<int>(profile.segments.size()))
    fail(ErrorCode::ConfigError, "segment index out of range");
  if (!(t >= 0.0 && t <= 1.0))
    fail(ErrorCode::ConfigError, "pocket parameter t must lie in [0,1]");
  const Segment& old = profile.segments[seg_index];
  if (old.pocket)
    fail(ErrorCode::ConfigError, "segment already carries a pocket");
  if (!(delta2 > 0.0))
    fail(ErrorCode::ConfigError, "delta2 must be positive");
  if (!(z0 - 3.0 * delta2 > old.z1 && z0 + 3.0 * delta2 < old.z2))
    fail(ErrorCode::PocketOutOfBounds,
         "pocket window leaves the open segment interval");
  if (!(z0 - 3.0 * delta2 > old.zwin_lo && z0 + 3.0 * delta2 < old.zwin_hi))
    fail(ErrorCode::PocketOutOfBounds,
         "pocket window reaches into a cap parabola zone");

  const double x0p = old.eval(z0, 0);
  const double c_q = params.concavity;

  // f0: the flattening flow's image, an exactly concave quadratic matching
  // R's 1-jet at the pocket center.
  Poly f0;
  f0.center = z0;
  f0.coeffs = {x0p, old.eval(z0, 1), -c_q};

  // f1 = f0 + d: d'' = c_q [ (1/4 - w^2) g(w) + 2 ] in w = (z-z0)/(2 delta2),
  // with g an even quartic fixed by the boundary and zero-mean conditions.
  const double a_shape = params.shape;
  const double c_shape = -3192.0 / 45.0 - 1.4 * a_shape;
  const double b_shape = 8.0 / 3.0 - a_shape - c_shape;
  // (1/4 - w^2)(a + b w^2 + c w^4) + 2 expanded in even powers of w.
  const double p0 = 0.25 * a_shape + 2.0;
  const double p2 = 0.25 * b_shape - a_shape;
  const double p4 = 0.25 * c_shape - b_shape;
  const double p6 = -c_shape;
  const double iw = 1.0 / (2.0 * delta2);
  Poly d2poly;
  d2poly.center = z0;
  d2poly.coeffs = {c_q * p0, 0.0, c_q * p2 * iw * iw, 0.0,
                   c_q * p4 * iw * iw * iw * iw, 0.0,
                   c_q * p6 * iw * iw * iw * iw * iw * iw};
  Poly d = d2poly.antiderivative(0.0).antiderivative(0.0);
  d.coeffs[0] -= d.eval(z0 - 2.0 * delta2, 0);
  const Poly f1 = f0 + d;

  // Validate the construction on a dense grid.
  {
    const int n = params.grid;
    const double w2 = 2.0 * delta2;
    auto fail_conv = [&](const std::string& msg) {
      fail(ErrorCode::ConvexityConstructionFailure, msg);
    };
    // (5): shared 2-jets at the window boundary.
    for (const double zb : {z0 - w2, z0 + w2}) {
      for (int order = 0; order <= 2; ++order) {
        const double gap = std::abs(f1.eval(zb, order) - f0.eval(zb, order));
        const double scale = std::max(1.0, std::abs(f0.eval(zb, order)));
        if (gap > 1e-9 * scale) fail_conv("boundary jets of f1 drift off f0");
      }
    }
    for (int jj = 0; jj <= n; ++jj) {
      const double z = z0 - w2 + 2.0 * w2 * jj / n;
      const double w = (z - z0) * iw;
      const double dd = d.eval(z, 0);
      if (dd > 1e-12) fail_conv("f1 exceeds f0 inside the window");
      const double curv = f1.eval(z, 2);
      if (std::abs(w) < 0.5 - 2.0 / n && curv <= 0.0)
        fail_conv("f1 not strictly convex on the middle third");
      if (std::abs(w) > 0.5 + 2.0 / n && std::abs(w) < 1.0 - 1e-9 &&
          curv >= 0.0)
        fail_conv("f1 not strictly concave on the outer thirds");
    }
  }

  // Rebuild the piece table: clip old pieces outside the support zone,
  // refit the two blend zones, and install the parametric window piece.
  CapSegmentProfile out = profile;
  Segment& sg = out.segments[seg_index];
  const double z_out_lo = z0 - 2.5 * delta2;
  const double z_out_hi = z0 + 2.5 * delta2;
  const double z_win_lo = z0 - 2.0 * delta2;
  const double z_win_hi = z0 + 2.0 * delta2;

  auto old_R = [&](double z, int order) { return old.eval(z, order); };

  std::vector<SegmentPiece> pieces;
  auto clip_refit = [&](const SegmentPiece& piece, double zlo, double zhi) {
    SegmentPiece np;
    np.zlo = zlo;
    np.zhi = zhi;
    np.set_cheb(ChebSeries::fit([&](double z) { return piece.eval(z, 0, 0.0); },
                                zlo, zhi, old.degree));
    return np;
  };
  for (const auto& piece : old.pieces) {
    if (piece.zhi <= z_out_lo || piece.zlo >= z_out_hi) {
      pieces.push_back(piece);
      continue;
    }
    if (piece.zlo < z_out_lo)
      pieces.push_back(clip_refit(piece, piece.zlo, z_out_lo));
    if (piece.zhi > z_out_hi)
      pieces.push_back(clip_refit(piece, z_out_hi, piece.zhi));
  }

  // Blend zones: R + S * (f0 - R), S ramping 0 -> 1 toward the window.
  auto blend = [&](double z, bool left) {
    const double x = left ? (z - z_out_lo) / (0.5 * delta2)
                          : (z_out_hi - z) / (0.5 * delta2);
    const double S = smoothstep5(x);
    return old_R(z, 0) + S * (f0.eval(z, 0) - old_R(z, 0));
  };
  {
    SegmentPiece bl;
    bl.zlo = z_out_lo;
    bl.zhi = z_win_lo;
    bl.set_cheb(ChebSeries::fit([&](double z) { return blend(z, true); },
                                bl.zlo, bl.zhi, old.degree));
    pieces.push_back(std::move(bl));
    SegmentPiece win;
    win.zlo = z_win_lo;
    win.zhi = z_win_hi;
    win.is_pocket_window = true;
    win.base = f0;
    win.delta = f1 + f0 * (-1.0);
    pieces.push_back(std::move(win));
    SegmentPiece br;
    br.zlo = z_win_hi;
    br.zhi = z_out_hi;
    br.set_cheb(ChebSeries::fit([&](double z) { return blend(z, false); },
                                br.zlo, br.zhi, old.degree));
    pieces.push_back(std::move(br));
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const SegmentPiece& a, const SegmentPiece& b) {
              return a.zlo < b.zlo;
            });
  sg.pieces = std::move(pieces);

  PocketSpec spec;
  spec.z0 = z0;
  spec.delta2 = delta2;
  spec.t = t;
  spec.amp = 1.0;
  spec.f0 = f0;
  spec.f1 = f1;
  sg.pocket = spec;

  // Displacement across the whole family and admissibility.
  double disp = 0.0, xmin = 1e300, xmax = -1e300;
  for (int n = 0; n < 16; ++n) {
    const double tt = n / 15.0;
    for (int jj = 0; jj <= 128; ++jj) {
      const double z = z_out_lo + (z_out_hi - z_out_lo) * jj / 128.0;
      const double xv = sg.eval_t(z, 0, tt);
      disp = std::max(disp, std::abs(xv - old_R(z, 0)));
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
    }
  }
  PerturbationStep st;
  st.kind = PerturbationStep::Kind::Pocket;
  st.seg_index = seg_index;
  st.max_displacement = disp;
  const double margin = 0.02 * (xmax - xmin) + 1e-9;
  st.support = {xmin - margin, xmax + margin, z_out_lo, z_out_hi};
  if (!out.box.contains(st.support))
    fail(ErrorCode::PocketOutOfBounds, "pocket support exits the box");
  out.provenance.push_back(st);

  const AdmissibilityReport adm = check_admissible(out, out.box);
  if (!adm.admissible) fail(ErrorCode::AdmissibilityViolation, adm.detail);

  out.build_parametrization();
  return out;
}

}  // namespace revbend
