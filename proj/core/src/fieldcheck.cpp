#include "revbend/fieldcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revbend {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_grids(const DeformationField& f, const SurfaceGrid& g) {
  if (f.n_s != g.n_s || f.n_t != g.n_t)
    fail(ErrorCode::GridMismatch, "field and surface grids differ");
}

DeformationField blank_field(const SurfaceGrid& g) {
  DeformationField f;
  f.k = 0;
  f.n_s = g.n_s;
  f.n_t = g.n_t;
  f.s = g.s;
  f.t = g.t;
  const std::size_t total = static_cast<std::size_t>(g.n_s) * g.n_t;
  f.a.assign(total, 0.0);
  f.b.assign(total, 0.0);
  f.c.assign(total, 0.0);
  f.a_s.assign(total, 0.0);
  f.b_s.assign(total, 0.0);
  f.c_s.assign(total, 0.0);
  f.a_t.assign(total, 0.0);
  f.b_t.assign(total, 0.0);
  f.c_t.assign(total, 0.0);
  f.Z.assign(total, Vec3{});
  f.Z_s.assign(total, Vec3{});
  f.Z_t.assign(total, Vec3{});
  return f;
}

// Rebuild the vector channels from the frame components (the component
// channels are authoritative in every builder).
void sync_vectors(DeformationField& f) {
  for (int is = 0; is < f.n_s; ++is) {
    for (int it = 0; it < f.n_t; ++it) {
      const std::size_t id = f.idx(is, it);
      const Vec3 gam = SurfaceParam::frame_gamma(f.t[it]);
      const Vec3 gam1 = SurfaceParam::frame_gamma_prime(f.t[it]);
      const Vec3 kv = SurfaceParam::frame_k();
      f.Z[id] = f.a[id] * gam + f.b[id] * gam1 + f.c[id] * kv;
      f.Z_s[id] = f.a_s[id] * gam + f.b_s[id] * gam1 + f.c_s[id] * kv;
      f.Z_t[id] = (f.a_t[id] - f.b[id]) * gam + (f.a[id] + f.b_t[id]) * gam1 +
                  f.c_t[id] * kv;
    }
  }
}

}  // namespace

SurfaceGrid SurfaceGrid::from_curve(const ProfileCurve& curve, int n_s,
                                    int n_t) {
  if (n_s < 2 || n_t < 2)
    fail(ErrorCode::ConfigError, "surface grid must be at least 2 x 2");
  SurfaceGrid g;
  g.n_s = n_s;
  g.n_t = n_t;
  g.s.resize(n_s);
  g.t.resize(n_t);
  g.r.resize(n_s);
  g.h.resize(n_s);
  g.r1.resize(n_s);
  g.h1.resize(n_s);
  for (int i = 0; i < n_s; ++i) {
    g.s[i] = kTwoPi * i / n_s;
    g.r[i] = curve.r().eval(g.s[i]);
    g.h[i] = curve.h().eval(g.s[i]);
    g.r1[i] = curve.r().eval(g.s[i], 1);
    g.h1[i] = curve.h().eval(g.s[i], 1);
  }
  for (int j = 0; j < n_t; ++j) g.t[j] = kTwoPi * j / n_t;
  return g;
}

SurfaceGrid SurfaceGrid::from_capseg(const CapSegmentProfile& profile,
                                     int n_s, int n_t) {
  if (n_s < 2 || n_t < 2)
    fail(ErrorCode::ConfigError, "surface grid must be at least 2 x 2");
  if (!profile.parametrized())
    fail(ErrorCode::ConfigError, "profile is not parametrized");
  SurfaceGrid g;
  g.n_s = n_s;
  g.n_t = n_t;
  g.s.resize(n_s);
  g.t.resize(n_t);
  g.r.resize(n_s);
  g.h.resize(n_s);
  g.r1.resize(n_s);
  g.h1.resize(n_s);
  for (int i = 0; i < n_s; ++i) {
    g.s[i] = kTwoPi * i / n_s;
    Vec2 p, d1;
    profile.eval_global(g.s[i], &p, &d1);
    g.r[i] = p.x;
    g.h[i] = p.z;
    g.r1[i] = d1.x;
    g.h1[i] = d1.z;
  }
  for (int j = 0; j < n_t; ++j) g.t[j] = kTwoPi * j / n_t;
  return g;
}

ResidualReport deformation_residuals(const DeformationField& field,
                                     const SurfaceGrid& surface) {
  check_grids(field, surface);
  ResidualReport rep;
  rep.n_s = field.n_s;
  rep.n_t = field.n_t;
  double ss2 = 0.0, tt2 = 0.0, mx2 = 0.0;
  double zmax = 0.0, fmax = 0.0;
  const std::size_t total = static_cast<std::size_t>(field.n_s) * field.n_t;
  for (int is = 0; is < field.n_s; ++is) {
    for (int it = 0; it < field.n_t; ++it) {
      const std::size_t id = field.idx(is, it);
      const Vec3 Fs = surface.F_s(is, it);
      const Vec3 Ft = surface.F_t(is, it);
      const double r_ss = field.Z_s[id].dot(Fs);
      const double r_tt = field.Z_t[id].dot(Ft);
      const double r_mx = field.Z_t[id].dot(Fs) + field.Z_s[id].dot(Ft);
      rep.res_ss_sup = std::max(rep.res_ss_sup, std::abs(r_ss));
      rep.res_tt_sup = std::max(rep.res_tt_sup, std::abs(r_tt));
      rep.res_mixed_sup = std::max(rep.res_mixed_sup, std::abs(r_mx));
      ss2 += r_ss * r_ss;
      tt2 += r_tt * r_tt;
      mx2 += r_mx * r_mx;
      zmax = std::max(zmax, std::max(field.Z_s[id].norm(),
                                     field.Z_t[id].norm()));
      fmax = std::max(fmax, std::max(Fs.norm(), Ft.norm()));
    }
  }
  rep.res_ss_rms = std::sqrt(ss2 / total);
  rep.res_tt_rms = std::sqrt(tt2 / total);
  rep.res_mixed_rms = std::sqrt(mx2 / total);
  rep.scale = std::max(zmax * fmax, 1e-300);
  rep.rel_sup = std::max({rep.res_ss_sup, rep.res_tt_sup, rep.res_mixed_sup}) /
                rep.scale;
  return rep;
}

IsometryReport isometry_order(const DeformationField& field,
                              const SurfaceGrid& surface,
                              const std::vector<double>& eps_list) {
  check_grids(field, surface);
  if (eps_list.size() < 4)
    fail(ErrorCode::ConfigError, "eps_list needs at least 4 decades");
  IsometryReport rep;
  rep.eps = eps_list;

  double scale2 = 0.0;
  for (int is = 0; is < field.n_s; ++is)
    for (int it = 0; it < field.n_t; ++it) {
      const Vec3 Fs = surface.F_s(is, it);
      const Vec3 Ft = surface.F_t(is, it);
      scale2 = std::max(scale2, std::max(Fs.dot(Fs), Ft.dot(Ft)));
    }

  for (double eps : eps_list) {
    double dmax = 0.0;
    for (int is = 0; is < field.n_s; ++is) {
      for (int it = 0; it < field.n_t; ++it) {
        const std::size_t id = field.idx(is, it);
        const Vec3 Fs = surface.F_s(is, it);
        const Vec3 Ft = surface.F_t(is, it);
        const Vec3 Gs = Fs + eps * field.Z_s[id];
        const Vec3 Gt = Ft + eps * field.Z_t[id];
        dmax = std::max(dmax, std::abs(Gs.dot(Gs) - Fs.dot(Fs)));
        dmax = std::max(dmax, std::abs(Gs.dot(Gt) - Fs.dot(Ft)));
        dmax = std::max(dmax, std::abs(Gt.dot(Gt) - Ft.dot(Ft)));
      }
    }
    rep.defect.push_back(dmax);
  }

  const double floor_level = 1e-14 * std::max(scale2, 1e-300);
  bool all_floor = true;
  for (double d : rep.defect) all_floor = all_floor && d <= floor_level;
  if (all_floor) {
    rep.degenerate = true;
    rep.slope = 0.0;
    return rep;
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int n = static_cast<int>(eps_list.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(eps_list[i]);
    const double y = std::log(std::max(rep.defect[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return rep;
}

TrivialFit triviality_fit(const DeformationField& field,
                          const SurfaceGrid& surface) {
  check_grids(field, surface);
  // Normal equations for Z ~ mu x F + omega: unknowns (mu, omega).
  double M[6][6] = {};
  double rhs[6] = {};
  double z2 = 0.0;
  for (int is = 0; is < field.n_s; ++is) {
    for (int it = 0; it < field.n_t; ++it) {
      const std::size_t id = field.idx(is, it);
      const Vec3 F = surface.F(is, it);
      const Vec3 Z = field.Z[id];
      z2 += Z.dot(Z);
      // Row block A = [ -[F]x | I3 ], residual A theta - Z.
      const double A[3][6] = {
          {0.0, F.z, -F.y, 1.0, 0.0, 0.0},
          {-F.z, 0.0, F.x, 0.0, 1.0, 0.0},
          {F.y, -F.x, 0.0, 0.0, 0.0, 1.0},
      };
      const double zz[3] = {Z.x, Z.y, Z.z};
      for (int r = 0; r < 3; ++r) {
        for (int i = 0; i < 6; ++i) {
          rhs[i] += A[r][i] * zz[r];
          for (int j = 0; j < 6; ++j) M[i][j] += A[r][i] * A[r][j];
        }
      }
    }
  }

  // Gaussian elimination with partial pivoting on the 6x6 system.
  double aug[6][7];
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) aug[i][j] = M[i][j];
    aug[i][6] = rhs[i];
  }
  for (int col = 0; col < 6; ++col) {
    int piv = col;
    for (int r = col + 1; r < 6; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[piv][col])) piv = r;
    std::swap(aug[piv], aug[col]);
    const double d = aug[col][col];
    for (int r = col + 1; r < 6; ++r) {
      const double f = aug[r][col] / d;
      for (int j = col; j < 7; ++j) aug[r][j] -= f * aug[col][j];
    }
  }
  double theta[6];
  for (int i = 5; i >= 0; --i) {
    double acc = aug[i][6];
    for (int j = i + 1; j < 6; ++j) acc -= aug[i][j] * theta[j];
    theta[i] = acc / aug[i][i];
  }

  TrivialFit fit;
  fit.mu = {theta[0], theta[1], theta[2]};
  fit.omega = {theta[3], theta[4], theta[5]};

  double res2 = 0.0;
  for (int is = 0; is < field.n_s; ++is) {
    for (int it = 0; it < field.n_t; ++it) {
      const std::size_t id = field.idx(is, it);
      const Vec3 F = surface.F(is, it);
      const Vec3 gap = field.Z[id] - (cross(fit.mu, F) + fit.omega);
      res2 += gap.dot(gap);
    }
  }
  fit.relative_residual = std::sqrt(res2 / std::max(z2, 1e-300));

  double nr = 0.0, nb = 0.0;
  for (int i = 0; i < 6; ++i) {
    double acc = -rhs[i];
    for (int j = 0; j < 6; ++j) acc += M[i][j] * theta[j];
    nr += acc * acc;
    nb += rhs[i] * rhs[i];
  }
  fit.normal_residual = std::sqrt(nr) / std::max(std::sqrt(nb), 1e-300);
  return fit;
}

SmoothnessReport smoothness_report(const ModeSolution& mode) {
  SmoothnessReport rep;
  const int m = static_cast<int>(mode.profile.caps.size());
  for (int c = 0; c < m; ++c) {
    const Cap& cap = mode.profile.caps[c];
    const int dep_side =
        mode.profile.segments[c].cap_lo == c
            ? mode.profile.segments[c].side_lo
            : mode.profile.segments[c].side_hi;
    for (const int xside : {-1, +1}) {
      const int seg = (xside == dep_side) ? c : (c - 1 + m) % m;
      JunctionJump jj;
      jj.cap = c;
      jj.xside = xside;
      jj.z = cap.handoff_z();
      jj.closure = (c == 0 && xside != dep_side);
      for (int order = 0; order <= 3; ++order) {
        const double a = mode.psi_series_side(c, xside, jj.z, order);
        const double b = mode.psi_dense_side(seg, jj.z, order);
        jj.jump[order] = std::abs(a - b);
        jj.scale[order] = std::max({std::abs(a), std::abs(b), 1e-300});
      }
      rep.junctions.push_back(jj);
    }
  }
  rep.closure_psi2_rel = mode.closure_defect_psi2;
  rep.closure_psi3 = mode.closure_defect_psi3;
  return rep;
}

// ---------------------------------------------------------------------------
// Verification stimuli

DeformationField constant_vertical_field(const SurfaceGrid& g) {
  DeformationField f = blank_field(g);
  for (int is = 0; is < g.n_s; ++is)
    for (int it = 0; it < g.n_t; ++it) f.c[f.idx(is, it)] = 1.0;
  sync_vectors(f);
  return f;
}

DeformationField rotation_field(const SurfaceGrid& g) {
  DeformationField f = blank_field(g);
  for (int is = 0; is < g.n_s; ++is)
    for (int it = 0; it < g.n_t; ++it) {
      const std::size_t id = f.idx(is, it);
      f.b[id] = g.r[is];
      f.b_s[id] = g.r1[is];
    }
  sync_vectors(f);
  return f;
}

DeformationField scaling_field(const SurfaceGrid& g) {
  DeformationField f = blank_field(g);
  for (int is = 0; is < g.n_s; ++is)
    for (int it = 0; it < g.n_t; ++it) {
      const std::size_t id = f.idx(is, it);
      f.a[id] = g.r[is];
      f.a_s[id] = g.r1[is];
      f.c[id] = g.h[is];
      f.c_s[id] = g.h1[is];
    }
  sync_vectors(f);
  return f;
}

DeformationField trivial_field(const SurfaceGrid& g, Vec3 mu, Vec3 omega) {
  DeformationField f = blank_field(g);
  for (int is = 0; is < g.n_s; ++is)
    for (int it = 0; it < g.n_t; ++it) {
      const std::size_t id = f.idx(is, it);
      const Vec3 gam = SurfaceParam::frame_gamma(g.t[it]);
      const Vec3 gam1 = SurfaceParam::frame_gamma_prime(g.t[it]);
      const Vec3 kv = SurfaceParam::frame_k();
      const Vec3 Z = cross(mu, g.F(is, it)) + omega;
      const Vec3 Zs = cross(mu, g.F_s(is, it));
      const Vec3 Zt = cross(mu, g.F_t(is, it));
      f.a[id] = Z.dot(gam);
      f.b[id] = Z.dot(gam1);
      f.c[id] = Z.dot(kv);
      f.a_s[id] = Zs.dot(gam);
      f.b_s[id] = Zs.dot(gam1);
      f.c_s[id] = Zs.dot(kv);
      // Partials of the component functions: d/dt (Z . gamma) etc.
      f.a_t[id] = Zt.dot(gam) + Z.dot(gam1);
      f.b_t[id] = Zt.dot(gam1) - Z.dot(gam);
      f.c_t[id] = Zt.dot(kv);
    }
  sync_vectors(f);
  return f;
}

DeformationField translation_mode_field(const SurfaceGrid& g) {
  DeformationField f = blank_field(g);
  f.k = 1;
  for (int is = 0; is < g.n_s; ++is)
    for (int it = 0; it < g.n_t; ++it) {
      const std::size_t id = f.idx(is, it);
      f.a[id] = std::cos(g.t[it]);
      f.b[id] = -std::sin(g.t[it]);
      f.a_t[id] = -std::sin(g.t[it]);
      f.b_t[id] = -std::cos(g.t[it]);
    }
  sync_vectors(f);
  return f;
}

DeformationField zero_field(const SurfaceGrid& g) { return blank_field(g); }

DeformationField add_fields(const DeformationField& A,
                            const DeformationField& B) {
  if (A.n_s != B.n_s || A.n_t != B.n_t)
    fail(ErrorCode::GridMismatch, "cannot add fields on different grids");
  DeformationField f = A;
  auto add = [](std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  };
  add(f.a, B.a);
  add(f.b, B.b);
  add(f.c, B.c);
  add(f.a_s, B.a_s);
  add(f.b_s, B.b_s);
  add(f.c_s, B.c_s);
  add(f.a_t, B.a_t);
  add(f.b_t, B.b_t);
  add(f.c_t, B.c_t);
  for (std::size_t i = 0; i < f.Z.size(); ++i) {
    f.Z[i] = f.Z[i] + B.Z[i];
    f.Z_s[i] = f.Z_s[i] + B.Z_s[i];
    f.Z_t[i] = f.Z_t[i] + B.Z_t[i];
  }
  return f;
}

double gram_min_singular_ratio(const DeformationField& A,
                               const DeformationField& B) {
  if (A.n_s != B.n_s || A.n_t != B.n_t)
    fail(ErrorCode::GridMismatch, "gram test needs a shared grid");
  double aa = 0.0, ab = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < A.Z.size(); ++i) {
    aa += A.Z[i].dot(A.Z[i]);
    ab += A.Z[i].dot(B.Z[i]);
    bb += B.Z[i].dot(B.Z[i]);
  }
  const double tr = aa + bb;
  const double det = aa * bb - ab * ab;
  const double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
  const double lam_min = 0.5 * (tr - disc);
  return lam_min / std::max(std::sqrt(aa * bb), 1e-300);
}

}  // namespace revbend
