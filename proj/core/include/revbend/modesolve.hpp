#pragma once

#include <functional>
#include <vector>

#include "revbend/capseg.hpp"
#include "revbend/frobenius.hpp"
#include "revbend/oscillation.hpp"
#include "revbend/perturb.hpp"

namespace revbend {

struct ModeOptions {
  double ode_tol = 1e-10;
  double shoot_tol = 1e-8;
  double closure_tol = 1e-6;
  int series_order = 30;
  double series_tol = 1e-12;
  double delta2_fraction = 0.1;
  PocketParams pocket;
  int shoot_grid = 64;   // t-grid for bracketing the count discontinuity
};

// Mode-k solution transported across one segment, between the handoff
// points of its two caps, with the far-cap Frobenius decomposition.
struct SegmentSolution {
  int seg_index = -1;
  int k = 2;
  double t_used = 0.0;
  double z_in = 0.0, z_out = 0.0;
  double u0 = 0.0, v0 = 0.0;
  OscResult run;
  double alpha = 0.0;           // coefficient of the far analytic branch
  double beta = 0.0;            // coefficient of the far log branch
  double endpoint_value = 0.0;  // beta / (max amplitude, last quarter)
  int window_zeros = 0;         // zeros between the far handoff and the apex
  int zero_count = 0;           // interior zeros on the integrated range
};

// Total interior zero count on the open segment (phase crossings plus the
// far-window correction). Never computed from sample sign changes.
int count_zeros(const SegmentSolution& solution);

// Zeros strictly inside [za, zb], a sub-range of the integrated interval,
// from the continuous phase difference.
int zeros_in_subinterval(const SegmentSolution& solution,
                         const std::function<double(double)>& Q, double za,
                         double zb);

struct PocketShot {
  double t_hat = 0.0;
  double residual = 0.0;  // |normalized endpoint value| at t_hat
  int count_jump = 0;     // N(t_hat+) - N(t_hat-)
  int k_min = 2;
  int count_t0 = 0;       // total zero count at t = 0
  int count_t1 = 0;       // total zero count at t = 1
};

// Smallest k for which the Sturm bound guarantees extra oscillation in the
// pocket: (k^2 - 1) min_{|z-z0|<=delta2/2} (f1''/f1) >= (2 pi / delta2)^2.
int pocket_k_min(const CapSegmentProfile& profile, int seg_index);

// Integrate the mode equation across a segment from its entry handoff,
// with the pocket parameter overridden to t. Direction follows the
// segment's s-traversal. Initial data (u0, v0) is given in the z-chart.
SegmentSolution integrate_segment(const CapSegmentProfile& profile,
                                  int seg_index, int k, double u0, double v0,
                                  double t, const ModeOptions& options = {});

// Unit-normalized entry data of a segment (entry cap's analytic branch
// with coefficient 1, converted to the z-chart at the handoff).
void segment_entry_data(const CapSegmentProfile& profile, int seg_index,
                        int k, double* u0, double* v0, int series_order = 30);

// Find the pocket parameter at which the total zero count jumps and the
// normalized endpoint value vanishes; installs t_hat into the profile.
// `skip_crossings` selects a later discontinuity (used by closure tuning).
PocketShot shoot_pocket(CapSegmentProfile& profile, int seg_index, int k,
                        const ModeOptions& options = {},
                        int skip_crossings = 0);

// Glued global mode solution around the whole profile.
class ModeSolution {
 public:
  int k = 2;
  CapSegmentProfile profile;  // pockets installed and tuned
  std::vector<FrobeniusSeries> cap_series;
  std::vector<FrobeniusLogBranch> cap_logs;
  std::vector<double> cap_scale;       // analytic-branch coefficient per cap
  std::vector<SegmentSolution> segments;
  std::vector<PocketShot> pockets;
  double closure_sigma = 1.0;          // returning coefficient at cap 0
  double closure_amp = 1.0;            // final pocket's (f1 - f0) scale
  double closure_defect_psi2 = 0.0;    // relative, |sigma - 1|
  double closure_defect_psi3 = 0.0;    // reported, exempt from gating

  struct Values {
    double psi = 0.0;
    double dpsi = 0.0;  // d(psi)/ds
    double xi = 0.0;    // Im xi_k
    double dxi = 0.0;   // d(Im xi_k)/ds
  };
  // Mode profile functions at the global parameter s.
  Values eval(double s) const;

  // One-sided values in the z-chart at a junction, for smoothness checks.
  // Series side: the cap's scaled analytic branch mapped through x(z);
  // dense side: the adjacent segment's integrator output. Orders 0..3.
  double psi_series_side(int cap, int xside, double z, int order) const;
  double psi_dense_side(int seg_index, double z, int order) const;

  double q_coefficient(int seg_index, double z) const;
};

ModeSolution continue_mode(const CapSegmentProfile& profile, int k,
                           const ModeOptions& options = {});

// Real deformation field of one mode on the (s, t) grid, with exact
// derivative channels (t-dependence closed form, s-derivatives from the
// stored series/dense output only).
struct DeformationField {
  int k = 0;
  int n_s = 0, n_t = 0;
  std::vector<double> s, t;
  // Frame components and their derivatives, row-major (is * n_t + it).
  std::vector<double> a, b, c;
  std::vector<double> a_s, b_s, c_s;
  std::vector<double> a_t, b_t, c_t;
  std::vector<Vec3> Z, Z_s, Z_t;

  std::size_t idx(int is, int it) const {
    return static_cast<std::size_t>(is) * n_t + it;
  }
};

DeformationField assemble_field(const ModeSolution& mode, int n_s, int n_t);

}  // namespace revbend
