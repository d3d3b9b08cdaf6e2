#pragma once

#include <optional>
#include <string>
#include <vector>

#include "revbend/chebyshev.hpp"
#include "revbend/error.hpp"
#include "revbend/geometry.hpp"
#include "revbend/profile.hpp"

namespace revbend {

// Exact parabola replacement installed around a height-critical point.
// The curve equals z0 + K (x-x0)^2 for |x-x0| <= delta1/2; the annulus
// delta1/2 <= |x-x0| <= delta1 carries the C^2 blend back to the original
// graph and is owned by the adjacent segments (as graphs x = R(z)).
struct Cap {
  double x0 = 0.0;
  double z0 = 0.0;
  double K = 0.0;       // sign(K) = +1 at height minima, -1 at maxima
  double delta1 = 0.0;  // blend window half-width in x
  int index_sign = 0;   // +1 minimum, -1 maximum

  double half_width() const { return 0.5 * delta1; }   // parabola zone
  double handoff_u() const { return 0.25 * delta1; }   // solver handoff
  double parabola(double u, int order = 0) const {
    switch (order) {
      case 0: return z0 + K * u * u;
      case 1: return 2.0 * K * u;
      case 2: return 2.0 * K;
      default: return 0.0;
    }
  }
  // Height of the parabola-zone edge |u| = delta1/2 (same on both sides).
  double window_edge_z() const {
    return z0 + K * 0.25 * delta1 * delta1;
  }
  double handoff_z() const {
    const double u = handoff_u();
    return z0 + K * u * u;
  }
  // Graph inverse x = x0 + u(z) on one side; derivatives of u w.r.t. z.
  // From u^2 = (z - z0)/K: u' = 1/(2Ku), u'' = -1/(4K^2 u^3), ...
  double branch_u(double z, int side) const;
  double branch_u_d1(double u) const { return 1.0 / (2.0 * K * u); }
  double branch_u_d2(double u) const { return -1.0 / (4.0 * K * K * u * u * u); }
  double branch_u_d3(double u) const {
    return 3.0 / (8.0 * K * K * K * u * u * u * u * u);
  }
};

// Localized concave -> convex -> concave family on a segment window.
// R_t = f0 + t * amp * (f1 - f0) on [z0 - 2 delta2, z0 + 2 delta2].
struct PocketSpec {
  double z0 = 0.0;
  double delta2 = 0.0;
  double t = 0.0;
  double amp = 1.0;  // closure-tuning scale on (f1 - f0)
  Poly f0;           // concave quadratic after the flattening flow
  Poly f1;           // degree-8 target with the (-,+,-) convexity pattern
};

// One smooth piece of a segment graph x = R(z) on [zlo, zhi].
struct SegmentPiece {
  double zlo = 0.0;
  double zhi = 0.0;
  bool is_pocket_window = false;
  // Chebyshev form (regular pieces):
  ChebSeries cheb, cheb1, cheb2, cheb3;
  // Monomial form (pocket window): base f0, delta = f1 - f0.
  Poly base, delta;

  void set_cheb(ChebSeries s);
  double eval(double z, int order, double t_eff) const;
};

// Maximal monotone-height arc between two caps, stored as a graph x = R(z).
// z1 < z2 are the adjacent cap apex heights; the piece table covers
// [zwin_lo, zwin_hi] (the parabola-zone edge heights), and evaluation
// between an apex and its window edge uses the cap branch formula.
struct Segment {
  double z1 = 0.0;
  double z2 = 0.0;
  bool ascending = true;  // s-traversal runs from z1 to z2?
  int cap_lo = -1;        // cap index at z1
  int cap_hi = -1;        // cap index at z2
  int side_lo = 0;        // x-side (+-1) of cap_lo this segment occupies
  int side_hi = 0;
  double zwin_lo = 0.0;
  double zwin_hi = 0.0;
  int degree = 64;
  std::vector<SegmentPiece> pieces;  // ordered by increasing z
  std::optional<PocketSpec> pocket;

  double pocket_t_eff() const {
    return pocket ? pocket->t * pocket->amp : 0.0;
  }
  // R and d^order R / dz^order on [zwin_lo, zwin_hi] at the stored pocket t.
  double eval(double z, int order = 0) const;
  // Same with the pocket parameter overridden (amp still from the spec).
  double eval_t(double z, int order, double t) const;
  double eval_raw(double z, int order, double t_eff) const;
};

// Provenance record for one perturbation applied to the curve.
struct PerturbationStep {
  enum class Kind { Rotation, Cap, Pocket };
  Kind kind = Kind::Rotation;
  double theta = 0.0;
  int cap_index = -1;
  int seg_index = -1;
  SupportBox support;
  double max_displacement = 0.0;
  bool admissible = true;
};

// Canonical post-perturbation form: alternating caps and monotone segments,
// cyclically ordered along the original parameter. Segment i runs from cap i
// to cap i+1 (mod size). Evaluation of the geometry goes through this
// representation only; the generating ProfileCurve is scaffolding.
class CapSegmentProfile {
 public:
  std::vector<Cap> caps;
  std::vector<Segment> segments;
  SupportBox box;
  std::vector<PerturbationStep> provenance;

  std::size_t size() const { return caps.size(); }

  // R on the OPEN interval (z1, z2) of a segment: routes to the cap branch
  // next to the apexes and to the piece table in between.
  double segment_R(int seg, double z, int order = 0) const;
  double segment_R_t(int seg, double z, int order, double t) const;

  // ---- Global arc-length parametrization --------------------------------
  // s in [0, 2 pi) proportional to arc length, starting at cap 0's apex.
  void build_parametrization();
  bool parametrized() const { return !walk_.empty(); }
  double total_length() const { return total_length_; }

  struct ChartPoint {
    int kind = 0;       // 0 = cap (chart u = x - x0), 1 = segment (chart z)
    int index = 0;      // cap or segment index
    int piece = 0;      // segment piece number (kind 1)
    double u = 0.0;     // local chart coordinate
    double du_ds = 0.0;
    double d2u_ds2 = 0.0;
  };
  ChartPoint locate(double s) const;

  // (r, h) and first two s-derivatives of the parametrized curve.
  void eval_global(double s, Vec2* p, Vec2* d1 = nullptr,
                   Vec2* d2 = nullptr) const;
  // Global parameter of a cap apex.
  double apex_param(int cap_index) const;

  // Critical points of the height function (the cap apexes, with data).
  std::vector<HeightCriticalPoint> critical_census() const;

 private:
  struct WalkPiece {
    int kind = 0;        // 0 cap, 1 segment piece
    int index = 0;       // cap index or segment index
    int piece = 0;       // segment piece number (kind 1)
    double a = 0.0;      // local coordinate at piece start (traversal order)
    double b = 0.0;      // local coordinate at piece end
    double length = 0.0;
    double cum0 = 0.0;   // arc length at piece start
    ChebSeries arclen;   // sigma(tau) on [0,1], traversal fraction tau
  };
  std::vector<WalkPiece> walk_;
  double total_length_ = 0.0;

  double speed_at(const WalkPiece& w, double tau) const;
  Vec2 chart_point(int kind, int index, int piece, double u, int order) const;
};

struct AdmissibilityReport {
  bool admissible = false;
  double min_x = 0.0;
  double clearance = 0.0;  // min distance of trace to box boundary
  std::string detail;
};

// Every sampled point of every piece (and of the pocket family on a 16-point
// t-grid) must lie in box intersect {x > 0}.
AdmissibilityReport check_admissible(const CapSegmentProfile& profile,
                                     const SupportBox& box);

}  // namespace revbend
