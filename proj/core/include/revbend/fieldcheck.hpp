#pragma once

#include <string>
#include <vector>

#include "revbend/capseg.hpp"
#include "revbend/modesolve.hpp"
#include "revbend/profile.hpp"

namespace revbend {

// Surface of revolution sampled on the verification grid: r, h and their
// first s-derivatives per s node (t enters only through the frame).
struct SurfaceGrid {
  int n_s = 0, n_t = 0;
  std::vector<double> s, t;
  std::vector<double> r, h, r1, h1;

  static SurfaceGrid from_curve(const ProfileCurve& curve, int n_s, int n_t);
  static SurfaceGrid from_capseg(const CapSegmentProfile& profile, int n_s,
                                 int n_t);

  Vec3 F(int is, int it) const {
    return SurfaceParam::embed({r[is], h[is]}, t[it]);
  }
  Vec3 F_s(int is, int it) const {
    const Vec3 gam = SurfaceParam::frame_gamma(t[it]);
    return r1[is] * gam + Vec3{0.0, 0.0, h1[is]};
  }
  Vec3 F_t(int is, int it) const {
    return r[is] * SurfaceParam::frame_gamma_prime(t[it]);
  }
};

// Sup and RMS norms of the three first-order isometry equations over the
// grid, plus the gradient-scale normalizer used for the relative verdict.
struct ResidualReport {
  double res_ss_sup = 0.0, res_ss_rms = 0.0;
  double res_tt_sup = 0.0, res_tt_rms = 0.0;
  double res_mixed_sup = 0.0, res_mixed_rms = 0.0;
  double scale = 0.0;
  double rel_sup = 0.0;
  int n_s = 0, n_t = 0;
  std::string scheme = "stored-one-sided";
};

ResidualReport deformation_residuals(const DeformationField& field,
                                     const SurfaceGrid& surface);

struct IsometryReport {
  double slope = 0.0;
  std::vector<double> eps;
  std::vector<double> defect;
  bool degenerate = false;  // all defects at machine floor
};

// Slope of log D(eps) vs log eps where D is the sup deviation of the first
// fundamental form of F + eps Z from that of F. A field satisfying the
// first-order equations gives slope 2, an invalid one slope 1.
IsometryReport isometry_order(const DeformationField& field,
                              const SurfaceGrid& surface,
                              const std::vector<double>& eps_list);

struct TrivialFit {
  Vec3 mu, omega;
  double relative_residual = 0.0;
  double normal_residual = 0.0;  // normal-equation consistency check
};

// Global least squares of Z against mu x F + omega over all grid nodes.
TrivialFit triviality_fit(const DeformationField& field,
                          const SurfaceGrid& surface);

struct JunctionJump {
  int cap = 0;
  int xside = 0;
  double z = 0.0;
  bool closure = false;
  double jump[4] = {0, 0, 0, 0};   // one-sided gaps of psi .. psi'''
  double scale[4] = {0, 0, 0, 0};  // local magnitudes for relative reading
};

struct SmoothnessReport {
  std::vector<JunctionJump> junctions;
  double closure_psi2_rel = 0.0;
  double closure_psi3 = 0.0;  // reported, exempt from pass/fail
};

SmoothnessReport smoothness_report(const ModeSolution& mode);

// Verification stimuli: fields with exact derivative channels.
DeformationField constant_vertical_field(const SurfaceGrid& g);
DeformationField rotation_field(const SurfaceGrid& g);   // k x F
DeformationField scaling_field(const SurfaceGrid& g);    // Z = F
DeformationField trivial_field(const SurfaceGrid& g, Vec3 mu, Vec3 omega);
DeformationField translation_mode_field(const SurfaceGrid& g);  // (1,0,0)
DeformationField zero_field(const SurfaceGrid& g);
DeformationField add_fields(const DeformationField& A,
                            const DeformationField& B);

// Ratio (min singular value of the 2x2 grid Gram matrix) / (|A| |B|).
double gram_min_singular_ratio(const DeformationField& A,
                               const DeformationField& B);

}  // namespace revbend
