#include "revbend/capseg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revbend {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double Cap::branch_u(double z, int side) const {
  double ratio = (z - z0) / K;
  if (ratio < 0.0) ratio = 0.0;  // clamp fuzz at the apex
  return side * std::sqrt(ratio);
}

void SegmentPiece::set_cheb(ChebSeries s) {
  cheb = std::move(s);
  cheb1 = cheb.derivative();
  cheb2 = cheb1.derivative();
  cheb3 = cheb2.derivative();
}

double SegmentPiece::eval(double z, int order, double t_eff) const {
  if (is_pocket_window) {
    return base.eval(z, order) + t_eff * delta.eval(z, order);
  }
  switch (order) {
    case 0: return cheb.eval(z);
    case 1: return cheb1.eval(z);
    case 2: return cheb2.eval(z);
    case 3: return cheb3.eval(z);
    default: fail(ErrorCode::ConfigError, "piece derivative order > 3");
  }
}

double Segment::eval(double z, int order) const {
  return eval_raw(z, order, pocket_t_eff());
}

double Segment::eval_t(double z, int order, double t) const {
  return eval_raw(z, order, pocket ? t * pocket->amp : 0.0);
}

double Segment::eval_raw(double z, int order, double t_eff) const {
  // Pieces are few (typically < 12); linear scan is fine and branch-free
  // against rounding at the seams.
  const SegmentPiece* hit = &pieces.front();
  for (const auto& p : pieces) {
    hit = &p;
    if (z <= p.zhi) break;
  }
  return hit->eval(z, order, t_eff);
}

double CapSegmentProfile::segment_R(int seg, double z, int order) const {
  const Segment& sg = segments[seg];
  return segment_R_t(seg, z, order, sg.pocket ? sg.pocket->t : 0.0);
}

double CapSegmentProfile::segment_R_t(int seg, double z, int order,
                                      double t) const {
  const Segment& sg = segments[seg];
  if (z > sg.zwin_lo && z < sg.zwin_hi) return sg.eval_t(z, order, t);

  // Parabola zone of the adjacent cap: x = x0 + u(z).
  const bool low = z <= sg.zwin_lo;
  const Cap& cap = caps[low ? sg.cap_lo : sg.cap_hi];
  const int side = low ? sg.side_lo : sg.side_hi;
  const double u = cap.branch_u(z, side);
  if (order == 0) return cap.x0 + u;
  if (std::abs(u) < 1e-300)
    fail(ErrorCode::PositivityError, "graph derivative requested at an apex");
  switch (order) {
    case 1: return cap.branch_u_d1(u);
    case 2: return cap.branch_u_d2(u);
    case 3: return cap.branch_u_d3(u);
    default: fail(ErrorCode::ConfigError, "derivative order > 3");
  }
}

// ---------------------------------------------------------------------------
// Global parametrization

Vec2 CapSegmentProfile::chart_point(int kind, int index, int piece, double u,
                                    int order) const {
  if (kind == 0) {
    const Cap& cap = caps[index];
    switch (order) {
      case 0: return {cap.x0 + u, cap.parabola(u, 0)};
      case 1: return {1.0, cap.parabola(u, 1)};
      default: return {0.0, cap.parabola(u, 2)};
    }
  }
  const Segment& sg = segments[index];
  const SegmentPiece& p = sg.pieces[piece];
  const double t_eff = sg.pocket_t_eff();
  switch (order) {
    case 0: return {p.eval(u, 0, t_eff), u};
    case 1: return {p.eval(u, 1, t_eff), 1.0};
    default: return {p.eval(u, 2, t_eff), 0.0};
  }
}

double CapSegmentProfile::speed_at(const WalkPiece& w, double tau) const {
  const double u = w.a + (w.b - w.a) * tau;
  const Vec2 d = chart_point(w.kind, w.index, w.piece, u, 1);
  return d.norm() * std::abs(w.b - w.a);
}

void CapSegmentProfile::build_parametrization() {
  walk_.clear();
  const int m = static_cast<int>(caps.size());
  auto seg_side_at_cap = [&](int seg, int cap) {
    return segments[seg].cap_lo == cap ? segments[seg].side_lo
                                       : segments[seg].side_hi;
  };

  double cum = 0.0;
  for (int i = 0; i < m; ++i) {
    // Cap i, traversed from the arriving side to the departing side.
    const int exit_side = seg_side_at_cap(i, i);
    WalkPiece wc;
    wc.kind = 0;
    wc.index = i;
    wc.a = -exit_side * caps[i].half_width();
    wc.b = +exit_side * caps[i].half_width();
    wc.cum0 = cum;
    ChebSeries sp = ChebSeries::fit(
        [&](double tau) { return speed_at(wc, tau); }, 0.0, 1.0, 48);
    wc.arclen = sp.antiderivative();
    wc.length = wc.arclen.eval(1.0);
    cum += wc.length;
    walk_.push_back(std::move(wc));

    // Segment i pieces in traversal order.
    const Segment& sg = segments[i];
    const int np = static_cast<int>(sg.pieces.size());
    for (int j = 0; j < np; ++j) {
      const int pj = sg.ascending ? j : np - 1 - j;
      WalkPiece wp;
      wp.kind = 1;
      wp.index = i;
      wp.piece = pj;
      wp.a = sg.ascending ? sg.pieces[pj].zlo : sg.pieces[pj].zhi;
      wp.b = sg.ascending ? sg.pieces[pj].zhi : sg.pieces[pj].zlo;
      wp.cum0 = cum;
      ChebSeries sp2 = ChebSeries::fit(
          [&](double tau) { return speed_at(wp, tau); }, 0.0, 1.0, 48);
      wp.arclen = sp2.antiderivative();
      wp.length = wp.arclen.eval(1.0);
      cum += wp.length;
      walk_.push_back(std::move(wp));
    }
  }
  total_length_ = cum;
}

CapSegmentProfile::ChartPoint CapSegmentProfile::locate(double s) const {
  double sigma = std::fmod(s, kTwoPi);
  if (sigma < 0.0) sigma += kTwoPi;
  sigma = sigma / kTwoPi * total_length_;

  // Binary search for the walk piece containing sigma.
  int lo = 0, hi = static_cast<int>(walk_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (walk_[mid].cum0 <= sigma) lo = mid; else hi = mid - 1;
  }
  const WalkPiece& w = walk_[lo];
  const double target = std::min(std::max(sigma - w.cum0, 0.0), w.length);

  // Invert sigma(tau) = target: Newton with bisection safeguard.
  double ta = 0.0, tb = 1.0, tau = target / std::max(w.length, 1e-300);
  for (int it = 0; it < 60; ++it) {
    const double f = w.arclen.eval(tau) - target;
    if (f > 0.0) tb = tau; else ta = tau;
    const double df = speed_at(w, tau);
    double next = tau - f / df;
    if (!(next > ta && next < tb)) next = 0.5 * (ta + tb);
    if (std::abs(next - tau) < 1e-15) { tau = next; break; }
    tau = next;
  }

  ChartPoint cp;
  cp.kind = w.kind;
  cp.index = w.index;
  cp.piece = w.piece;
  cp.u = w.a + (w.b - w.a) * tau;
  const Vec2 d1 = chart_point(w.kind, w.index, w.piece, cp.u, 1);
  const Vec2 d2 = chart_point(w.kind, w.index, w.piece, cp.u, 2);
  const double v = d1.norm();
  const double sign = (w.b - w.a) > 0.0 ? 1.0 : -1.0;
  const double L = total_length_;
  cp.du_ds = sign * L / (kTwoPi * v);
  const double vprime = d1.dot(d2) / v;
  cp.d2u_ds2 = -L * L * vprime / (kTwoPi * kTwoPi * v * v * v);
  return cp;
}

void CapSegmentProfile::eval_global(double s, Vec2* p, Vec2* d1,
                                    Vec2* d2) const {
  const ChartPoint cp = locate(s);
  const Vec2 P = chart_point(cp.kind, cp.index, cp.piece, cp.u, 0);
  const Vec2 Pu = chart_point(cp.kind, cp.index, cp.piece, cp.u, 1);
  const Vec2 Puu = chart_point(cp.kind, cp.index, cp.piece, cp.u, 2);
  if (p) *p = P;
  if (d1) *d1 = Pu * cp.du_ds;
  if (d2) *d2 = Puu * (cp.du_ds * cp.du_ds) + Pu * cp.d2u_ds2;
}

double CapSegmentProfile::apex_param(int cap_index) const {
  // Apex is at u = 0 of the cap's walk piece.
  for (const auto& w : walk_) {
    if (w.kind == 0 && w.index == cap_index) {
      const double tau = (0.0 - w.a) / (w.b - w.a);
      const double sigma = w.cum0 + w.arclen.eval(tau);
      return kTwoPi * sigma / total_length_;
    }
  }
  fail(ErrorCode::ConfigError, "apex_param: profile not parametrized");
}

std::vector<HeightCriticalPoint> CapSegmentProfile::critical_census() const {
  std::vector<HeightCriticalPoint> out;
  for (int i = 0; i < static_cast<int>(caps.size()); ++i) {
    const Cap& cap = caps[i];
    HeightCriticalPoint cp;
    cp.s = parametrized() ? apex_param(i) : 0.0;
    cp.point = {cap.x0, cap.z0};
    cp.index_sign = cap.index_sign;
    cp.degenerate = false;
    if (parametrized()) {
      Vec2 d1, d2;
      eval_global(cp.s, nullptr, &d1, &d2);
      cp.second_deriv = d2.z;  // h''(s); h' = 0 at the apex
      const double v = d1.norm();
      cp.curvature = det(d1, d2) / (v * v * v);
    } else {
      cp.second_deriv = 2.0 * cap.K;
      cp.curvature = 0.0;
    }
    out.push_back(cp);
  }
  return out;
}

AdmissibilityReport check_admissible(const CapSegmentProfile& profile,
                                     const SupportBox& box) {
  AdmissibilityReport rep;
  rep.admissible = true;
  rep.min_x = 1e300;
  rep.clearance = 1e300;

  auto visit = [&](Vec2 p, const std::string& where) {
    rep.min_x = std::min(rep.min_x, p.x);
    const double c = std::min(std::min(p.x - box.x_min, box.x_max - p.x),
                              std::min(p.z - box.z_min, box.z_max - p.z));
    rep.clearance = std::min(rep.clearance, c);
    if (!(p.x > 0.0) || !box.contains(p)) {
      if (rep.admissible) rep.detail = "trace leaves box or x > 0 at " + where;
      rep.admissible = false;
    }
  };

  for (std::size_t i = 0; i < profile.caps.size(); ++i) {
    const Cap& cap = profile.caps[i];
    for (int j = 0; j <= 128; ++j) {
      const double u = -cap.half_width() + cap.delta1 * j / 128.0;
      visit({cap.x0 + u, cap.parabola(u)}, "cap " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    const Segment& sg = profile.segments[i];
    for (const auto& piece : sg.pieces) {
      for (int j = 0; j <= 64; ++j) {
        const double z = piece.zlo + (piece.zhi - piece.zlo) * j / 64.0;
        if (piece.is_pocket_window && sg.pocket) {
          // The whole family R_t must stay admissible, not just the ends.
          for (int n = 0; n < 16; ++n) {
            const double t = n / 15.0;
            visit({sg.eval_t(z, 0, t), z},
                  "segment " + std::to_string(i) + " pocket");
          }
        } else {
          visit({sg.eval(z, 0), z}, "segment " + std::to_string(i));
        }
      }
    }
  }
  return rep;
}

}  // namespace revbend
