#include "revbend/modesolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace revbend {

namespace {

constexpr double kPi = std::numbers::pi;

int entry_cap(const CapSegmentProfile&, int seg) { return seg; }
int exit_cap(const CapSegmentProfile& p, int seg) {
  return (seg + 1) % static_cast<int>(p.caps.size());
}

int side_at_cap(const Segment& sg, int cap) {
  return sg.cap_lo == cap ? sg.side_lo : sg.side_hi;
}

std::function<double(double)> make_Q(const CapSegmentProfile& p, int seg,
                                     int k, double t) {
  const double fac = static_cast<double>(k) * k - 1.0;
  return [&p, seg, k, t, fac](double z) {
    const double R = p.segment_R_t(seg, z, 0, t);
    if (!(R > 0.0))
      fail(ErrorCode::PositivityError,
           "R <= 0 on segment " + std::to_string(seg));
    (void)k;
    return fac * p.segment_R_t(seg, z, 2, t) / R;
  };
}

// Continuous phase at an interior z of a run (sub-sampled unwrap from the
// nearest recorded sample, to stay alias-free where Q is large).
double phase_at(const OscResult& run, const std::function<double(double)>& Q,
                double z) {
  const auto& S = run.samples;
  const bool fwd = S.back().z >= S.front().z;
  std::size_t lo = 0, hi = S.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    const bool left = fwd ? (S[mid].z <= z) : (S[mid].z >= z);
    if (left) lo = mid; else hi = mid;
  }
  const OscSample& A = S[lo];
  double theta = A.theta;
  double phi_prev = std::atan2(A.u, A.v);
  const double h = z - A.z;
  const double budget =
      std::abs(h) * std::max(1.0, std::max(std::abs(Q(A.z)), std::abs(Q(z))));
  const int n_sub = std::min(256, std::max(1, static_cast<int>(budget * 2.0)));
  for (int j = 1; j <= n_sub; ++j) {
    double uu, vv;
    run.eval(A.z + h * j / n_sub, &uu, &vv, Q);
    if (uu == 0.0 && vv == 0.0) continue;
    const double phi = std::atan2(uu, vv);
    theta += std::remainder(phi - phi_prev, 2.0 * kPi);
    phi_prev = phi;
  }
  return theta;
}

}  // namespace

int count_zeros(const SegmentSolution& solution) {
  return solution.zero_count + solution.window_zeros;
}

int zeros_in_subinterval(const SegmentSolution& solution,
                         const std::function<double(double)>& Q, double za,
                         double zb) {
  const double ta = phase_at(solution.run, Q, za);
  const double tb = phase_at(solution.run, Q, zb);
  auto fl = [&](double t) { return std::floor(t / kPi - 1e-12); };
  const int n = static_cast<int>(fl(std::max(ta, tb)) - fl(std::min(ta, tb)));
  return std::max(n, 0);
}

int pocket_k_min(const CapSegmentProfile& profile, int seg_index) {
  const Segment& sg = profile.segments.at(seg_index);
  if (!sg.pocket)
    fail(ErrorCode::ConfigError, "segment has no pocket");
  const PocketSpec& pk = *sg.pocket;
  double qmin = 1e300;
  for (int j = 0; j <= 128; ++j) {
    const double z = pk.z0 - 0.5 * pk.delta2 + pk.delta2 * j / 128.0;
    const double f1 = pk.f1.eval(z, 0);
    const double f1pp = pk.f1.eval(z, 2);
    if (f1 <= 0.0)
      fail(ErrorCode::PositivityError, "pocket target leaves x > 0");
    qmin = std::min(qmin, f1pp / f1);
  }
  if (qmin <= 0.0)
    fail(ErrorCode::ConvexityConstructionFailure,
         "pocket target not convex on its inner half-window");
  const double bound = std::pow(2.0 * kPi / pk.delta2, 2.0) / qmin;
  int k = 2;
  while (static_cast<double>(k) * k - 1.0 < bound && k < 4096) ++k;
  return k;
}

void segment_entry_data(const CapSegmentProfile& profile, int seg_index,
                        int k, double* u0, double* v0, int series_order) {
  const Cap& cap = profile.caps[entry_cap(profile, seg_index)];
  const Segment& sg = profile.segments[seg_index];
  const int side = side_at_cap(sg, entry_cap(profile, seg_index));
  const FrobeniusSeries s =
      frobenius_cap_solution(cap, k, series_order);
  const double u_in = side * cap.handoff_u();
  const double rho1 = 2.0 * cap.K * u_in;
  *u0 = s.eval(u_in, 0);
  *v0 = s.eval(u_in, 1) / rho1;  // Psi~'(z) = Psi'(x) / rho'(x)
}

SegmentSolution integrate_segment(const CapSegmentProfile& profile,
                                  int seg_index, int k, double u0, double v0,
                                  double t, const ModeOptions& options) {
  const Segment& sg = profile.segments.at(seg_index);
  const int ci = entry_cap(profile, seg_index);
  const int cj = exit_cap(profile, seg_index);
  const Cap& cap_in = profile.caps[ci];
  const Cap& cap_out = profile.caps[cj];

  SegmentSolution sol;
  sol.seg_index = seg_index;
  sol.k = k;
  sol.t_used = t;
  sol.z_in = cap_in.handoff_z();
  sol.z_out = cap_out.handoff_z();
  sol.u0 = u0;
  sol.v0 = v0;

  auto Q = make_Q(profile, seg_index, k, t);
  OscOptions oo;
  oo.rel_tol = options.ode_tol;
  sol.run = integrate_oscillation(Q, sol.z_in, sol.z_out, u0, v0, oo);
  sol.zero_count = sol.run.zero_count;

  // Far-cap Frobenius decomposition in the x-chart.
  const FrobeniusSeries psi2 =
      frobenius_cap_solution(cap_out, k, options.series_order,
                             options.series_tol);
  const FrobeniusLogBranch psi0 =
      frobenius_log_branch(cap_out, k, options.series_order + 10);
  const int side_out = side_at_cap(sg, cj);
  const double u_far = side_out * cap_out.handoff_u();
  const double rho1 = 2.0 * cap_out.K * u_far;
  const double val = sol.run.back().u;
  const double der = sol.run.back().v * rho1;  // Psi'(x) = Psi~'(z) rho'(x)
  const double p2 = psi2.eval(u_far, 0), p2d = psi2.eval(u_far, 1);
  const double p0 = psi0.eval(u_far, 0), p0d = psi0.eval(u_far, 1);
  const double W = p2 * p0d - p2d * p0;
  sol.alpha = (val * p0d - der * p0) / W;
  sol.beta = (der * p2 - val * p2d) / W;
  const double amp = std::max(sol.run.amp_last_quarter, 1e-300);
  sol.endpoint_value = sol.beta / amp;

  // Zeros between the far handoff and the apex: sample the decomposed
  // series form on the window side (the analytic branch may itself
  // oscillate on the oscillatory side of the cap for large k).
  sol.window_zeros = 0;
  {
    const int n = 512;
    double prev = sol.beta;  // limit of alpha Psi2 + beta Psi0 at the apex
    if (prev != 0.0) {
      for (int j = 1; j <= n; ++j) {
        const double u = u_far * j / static_cast<double>(n);
        const double g = sol.alpha * psi2.eval(u, 0) + sol.beta * psi0.eval(u, 0);
        if (g == 0.0) continue;
        if ((prev < 0.0) != (g < 0.0)) ++sol.window_zeros;
        prev = g;
      }
    }
  }
  return sol;
}

namespace {

struct ShotEval {
  double beta = 0.0;
  double residual = 0.0;  // normalized endpoint value
  int total = 0;          // total interior zero count
};

ShotEval eval_shot(const CapSegmentProfile& profile, int seg, int k, double t,
                   double u0, double v0, const ModeOptions& options) {
  SegmentSolution s = integrate_segment(profile, seg, k, u0, v0, t, options);
  ShotEval e;
  e.beta = s.beta;
  e.residual = s.endpoint_value;
  e.total = count_zeros(s);
  return e;
}

}  // namespace

PocketShot shoot_pocket(CapSegmentProfile& profile, int seg_index, int k,
                        const ModeOptions& options, int skip_crossings) {
  Segment& sg = profile.segments.at(seg_index);
  if (!sg.pocket)
    fail(ErrorCode::ConfigError, "shoot_pocket: segment has no pocket");

  double u0, v0;
  segment_entry_data(profile, seg_index, k, &u0, &v0, options.series_order);

  const int n = options.shoot_grid;
  std::vector<double> ts(n + 1), betas(n + 1);
  std::vector<int> totals(n + 1);
  for (int j = 0; j <= n; ++j) {
    ts[j] = static_cast<double>(j) / n;
    const ShotEval e = eval_shot(profile, seg_index, k, ts[j], u0, v0, options);
    betas[j] = e.beta;
    totals[j] = e.total;
  }

  PocketShot shot;
  shot.k_min = pocket_k_min(profile, seg_index);
  shot.count_t0 = totals.front();
  shot.count_t1 = totals.back();

  std::vector<std::pair<double, double>> brackets;
  for (int j = 0; j < n; ++j)
    if (betas[j] == 0.0 || (betas[j] < 0.0) != (betas[j + 1] < 0.0))
      brackets.emplace_back(ts[j], ts[j + 1]);
  if (brackets.empty()) {
    // Counts can differ while beta has an even number of crossings inside
    // one grid cell; only refine cells where the count moved.
    for (int j = 0; j < n && brackets.empty(); ++j) {
      if (totals[j] == totals[j + 1]) continue;
      double prev_t = ts[j];
      double prev_b = betas[j];
      for (int q = 1; q <= 16; ++q) {
        const double tt = ts[j] + (ts[j + 1] - ts[j]) * q / 16.0;
        const ShotEval e =
            eval_shot(profile, seg_index, k, tt, u0, v0, options);
        if ((prev_b < 0.0) != (e.beta < 0.0)) {
          brackets.emplace_back(prev_t, tt);
          break;
        }
        prev_t = tt;
        prev_b = e.beta;
      }
    }
  }
  if (brackets.empty()) {
    if (shot.count_t0 == shot.count_t1)
      fail(ErrorCode::NoCountJump,
           "zero counts at t = 0 and t = 1 coincide (" +
               std::to_string(shot.count_t0) + "); need k >= " +
               std::to_string(shot.k_min) + " on segment " +
               std::to_string(seg_index));
    fail(ErrorCode::BisectionStall,
         "count jump present but no endpoint sign change found");
  }
  if (skip_crossings >= static_cast<int>(brackets.size()))
    fail(ErrorCode::NoCountJump,
         "requested crossing beyond the last discontinuity in [0,1]");

  double ta = brackets[skip_crossings].first;
  double tb = brackets[skip_crossings].second;
  ShotEval ea = eval_shot(profile, seg_index, k, ta, u0, v0, options);
  ShotEval eb = eval_shot(profile, seg_index, k, tb, u0, v0, options);

  // Bisection with secant acceleration on beta's sign change.
  double t_hat = 0.5 * (ta + tb);
  ShotEval em;
  for (int it = 0; it < 120; ++it) {
    double cand = 0.5 * (ta + tb);
    if (std::abs(eb.beta - ea.beta) > 0.0) {
      const double sec = ta - ea.beta * (tb - ta) / (eb.beta - ea.beta);
      if (sec > ta + 1e-17 && sec < tb - 1e-17 && it % 3 != 2) cand = sec;
    }
    t_hat = cand;
    em = eval_shot(profile, seg_index, k, t_hat, u0, v0, options);
    if ((em.beta < 0.0) == (ea.beta < 0.0)) {
      ta = t_hat;
      ea = em;
    } else {
      tb = t_hat;
      eb = em;
    }
    if (std::abs(em.residual) < 1e-13) break;
    if (tb - ta < 1e-16) break;
  }
  if (std::abs(em.residual) > options.shoot_tol)
    fail(ErrorCode::BisectionStall,
         "pocket shoot stalled: residual " + std::to_string(em.residual) +
             " on segment " + std::to_string(seg_index));

  shot.t_hat = t_hat;
  shot.residual = std::abs(em.residual);
  const double dt = std::max(1e-6, 2.0 * (tb - ta));
  const ShotEval lo = eval_shot(profile, seg_index, k,
                                std::max(0.0, t_hat - dt), u0, v0, options);
  const ShotEval hi = eval_shot(profile, seg_index, k,
                                std::min(1.0, t_hat + dt), u0, v0, options);
  shot.count_jump = hi.total - lo.total;

  sg.pocket->t = t_hat;
  return shot;
}

// ---------------------------------------------------------------------------
// Global continuation

ModeSolution continue_mode(const CapSegmentProfile& profile0, int k,
                           const ModeOptions& options) {
  ModeSolution mode;
  mode.k = k;
  mode.profile = profile0;
  const int m = static_cast<int>(mode.profile.caps.size());
  if (m < 2) fail(ErrorCode::ConfigError, "profile has fewer than two caps");

  // Pockets on demand at segment midpoints.
  for (int i = 0; i < m; ++i) {
    if (!mode.profile.segments[i].pocket) {
      const Segment& sg = mode.profile.segments[i];
      const double z0 = 0.5 * (sg.zwin_lo + sg.zwin_hi);
      const double d2 =
          default_pocket_delta2(mode.profile, i, options.delta2_fraction);
      mode.profile =
          insert_pocket(mode.profile, i, z0, d2, 0.0, options.pocket);
    }
  }

  for (int i = 0; i < m; ++i) {
    mode.cap_series.push_back(
        frobenius_cap_solution(mode.profile.caps[i], k, options.series_order,
                               options.series_tol));
    mode.cap_logs.push_back(
        frobenius_log_branch(mode.profile.caps[i], k,
                             options.series_order + 10));
  }

  // First pass: shoot every pocket with unit-normalized entries.
  std::vector<double> alpha_unit(m);
  mode.pockets.resize(m);
  for (int i = 0; i < m; ++i) {
    mode.pockets[i] = shoot_pocket(mode.profile, i, k, options);
    double u0, v0;
    segment_entry_data(mode.profile, i, k, &u0, &v0, options.series_order);
    const SegmentSolution s = integrate_segment(
        mode.profile, i, k, u0, v0, mode.profile.segments[i].pocket->t,
        options);
    alpha_unit[i] = s.alpha;
  }

  auto sigma_of = [&](const std::vector<double>& alphas) {
    double s = 1.0;
    for (double a : alphas) s *= a;
    return s;
  };

  // Closure: tune the final pocket's amplitude (and, if the sign is wrong,
  // the choice of discontinuity) until the returning coefficient is 1.
  const int last = m - 1;
  double best_amp = 1.0;
  {
    auto eval_sigma = [&](double amp, int crossing) -> double {
      mode.profile.segments[last].pocket->amp = amp;
      mode.pockets[last] =
          shoot_pocket(mode.profile, last, k, options, crossing);
      double u0, v0;
      segment_entry_data(mode.profile, last, k, &u0, &v0,
                         options.series_order);
      const SegmentSolution s = integrate_segment(
          mode.profile, last, k, u0, v0,
          mode.profile.segments[last].pocket->t, options);
      alpha_unit[last] = s.alpha;
      return sigma_of(alpha_unit);
    };

    const std::vector<double> ladder = {1.0,  1.25, 0.8,  1.6,  0.625,
                                        2.0,  0.5,  2.5,  0.4,  3.2,
                                        0.3125, 4.0, 0.25, 5.0,  0.2,
                                        6.4,  0.15625, 8.0, 0.125};
    bool closed = false;
    int best_crossing = 0;
    for (int crossing = 0; crossing < 4 && !closed; ++crossing) {
      double amp_a = 0.0, amp_b = 0.0, fa = 0.0, fb = 0.0;
      bool have_a = false, have_bracket = false;
      for (double amp : ladder) {
        double f;
        try {
          f = eval_sigma(amp, crossing) - 1.0;
        } catch (const Error&) {
          continue;  // this (amp, crossing) has no usable discontinuity
        }
        if (std::abs(f) < options.closure_tol * 0.2) {
          best_amp = amp;
          best_crossing = crossing;
          closed = true;
          break;
        }
        if (!have_a) {
          amp_a = amp;
          fa = f;
          have_a = true;
          continue;
        }
        if ((f < 0.0) != (fa < 0.0)) {
          amp_b = amp;
          fb = f;
          have_bracket = true;
          break;
        }
        amp_a = amp;
        fa = f;
      }
      if (closed) break;
      if (!have_bracket) continue;

      // Secant/bisection on sigma(amp) - 1 inside the bracket.
      for (int it = 0; it < 80; ++it) {
        double cand = 0.5 * (amp_a + amp_b);
        if (std::abs(fb - fa) > 0.0) {
          const double sec = amp_a - fa * (amp_b - amp_a) / (fb - fa);
          const double lo = std::min(amp_a, amp_b),
                       hi = std::max(amp_a, amp_b);
          if (sec > lo + 1e-15 && sec < hi - 1e-15 && it % 3 != 2) cand = sec;
        }
        double f;
        try {
          f = eval_sigma(cand, crossing) - 1.0;
        } catch (const Error&) {
          break;
        }
        if ((f < 0.0) == (fa < 0.0)) {
          amp_a = cand;
          fa = f;
        } else {
          amp_b = cand;
          fb = f;
        }
        if (std::abs(f) < options.closure_tol * 0.2 ||
            std::abs(amp_b - amp_a) < 1e-13) {
          best_amp = cand;
          best_crossing = crossing;
          closed = true;
          break;
        }
      }
    }
    if (!closed)
      fail(ErrorCode::ClosureFailure,
           "could not tune the final pocket to close the loop");
    // Reinstall the winning amplitude and crossing before the final pass.
    eval_sigma(best_amp, best_crossing);
  }

  // Final pass: store scaled dense runs around the loop.
  mode.closure_amp = best_amp;
  mode.cap_scale.assign(m, 1.0);
  mode.segments.clear();
  double scale = 1.0;
  for (int i = 0; i < m; ++i) {
    mode.cap_scale[i] = scale;
    double u0, v0;
    segment_entry_data(mode.profile, i, k, &u0, &v0, options.series_order);
    SegmentSolution s = integrate_segment(
        mode.profile, i, k, u0, v0, mode.profile.segments[i].pocket->t,
        options);
    s.alpha *= scale;
    s.beta *= scale;
    for (auto& smp : s.run.samples) {
      smp.u *= scale;
      smp.v *= scale;
    }
    s.u0 *= scale;
    s.v0 *= scale;
    s.endpoint_value *= scale >= 0.0 ? 1.0 : -1.0;
    scale = s.alpha;
    mode.segments.push_back(std::move(s));
  }
  mode.closure_sigma = scale;
  mode.closure_defect_psi2 = std::abs(mode.closure_sigma - 1.0);
  if (mode.closure_defect_psi2 > options.closure_tol)
    fail(ErrorCode::ClosureFailure,
         "closure defect " + std::to_string(mode.closure_defect_psi2) +
             " above tolerance after tuning");

  // Reported third-derivative jump at the closure junction (z-chart).
  {
    const Cap& cap0 = mode.profile.caps[0];
    const Segment& sg_last = mode.profile.segments[last];
    const int side = side_at_cap(sg_last, 0);
    const double zj = cap0.handoff_z();
    const double series = mode.psi_series_side(0, side, zj, 3);
    const double dense = mode.psi_dense_side(last, zj, 3);
    mode.closure_defect_psi3 = std::abs(series - dense);
  }
  return mode;
}

double ModeSolution::q_coefficient(int seg_index, double z) const {
  const double fac = static_cast<double>(k) * k - 1.0;
  return fac * profile.segment_R(seg_index, z, 2) /
         profile.segment_R(seg_index, z, 0);
}

double ModeSolution::psi_series_side(int cap, int xside, double z,
                                     int order) const {
  const Cap& c = profile.caps[cap];
  const double u = c.branch_u(z, xside);
  const FrobeniusSeries& s = cap_series[cap];
  const double scale = cap_scale[cap];
  const double f0 = scale * s.eval(u, 0);
  const double f1 = scale * s.eval(u, 1);
  const double f2 = scale * s.eval(u, 2);
  const double f3 = scale * s.eval(u, 3);
  const double u1 = c.branch_u_d1(u);
  const double u2 = c.branch_u_d2(u);
  const double u3 = c.branch_u_d3(u);
  switch (order) {
    case 0: return f0;
    case 1: return f1 * u1;
    case 2: return f2 * u1 * u1 + f1 * u2;
    case 3: return f3 * u1 * u1 * u1 + 3.0 * f2 * u1 * u2 + f1 * u3;
    default: fail(ErrorCode::ConfigError, "series side order > 3");
  }
}

double ModeSolution::psi_dense_side(int seg_index, double z, int order) const {
  const SegmentSolution& s = segments[seg_index];
  auto Q = [&](double zz) { return q_coefficient(seg_index, zz); };
  double u, v;
  s.run.eval(z, &u, &v, Q);
  switch (order) {
    case 0: return u;
    case 1: return v;
    case 2: return -Q(z) * u;
    case 3: {
      const double fac = static_cast<double>(k) * k - 1.0;
      const double R = profile.segment_R(seg_index, z, 0);
      const double R1 = profile.segment_R(seg_index, z, 1);
      const double R2 = profile.segment_R(seg_index, z, 2);
      const double R3 = profile.segment_R(seg_index, z, 3);
      const double Qv = fac * R2 / R;
      const double Qp = fac * (R3 / R - R2 * R1 / (R * R));
      return -(Qp * u + Qv * v);
    }
    default: fail(ErrorCode::ConfigError, "dense side order > 3");
  }
}

ModeSolution::Values ModeSolution::eval(double s) const {
  const int m = static_cast<int>(profile.caps.size());
  const CapSegmentProfile::ChartPoint cp = profile.locate(s);
  Values out;

  auto segment_values = [&](int seg, double z, double dz_ds,
                            double d2z_ds2) {
    const SegmentSolution& sol = segments[seg];
    auto Q = [&](double zz) { return q_coefficient(seg, zz); };
    double u, v;
    sol.run.eval(z, &u, &v, Q);
    const double R = profile.segment_R(seg, z, 0);
    const double R1 = profile.segment_R(seg, z, 1);
    const double R2 = profile.segment_R(seg, z, 2);
    const double fac = static_cast<double>(k) * k - 1.0;
    const double upp = -Q(z) * u;
    out.psi = u;
    out.dpsi = v * dz_ds;
    out.xi = (R * v + fac * R1 * u) / k;
    const double dxi_dz = (R1 * v + R * upp + fac * (R2 * u + R1 * v)) / k;
    out.dxi = dxi_dz * dz_ds;
    (void)d2z_ds2;
  };

  if (cp.kind == 0) {
    const int c = cp.index;
    const Cap& cap = profile.caps[c];
    if (std::abs(cp.u) <= cap.handoff_u() * (1.0 + 1e-12)) {
      // Series region.
      const FrobeniusSeries& ser = cap_series[c];
      const double scale = cap_scale[c];
      const double f0 = scale * ser.eval(cp.u, 0);
      const double f1 = scale * ser.eval(cp.u, 1);
      const double f2 = scale * ser.eval(cp.u, 2);
      const double f3 = scale * ser.eval(cp.u, 3);
      out.psi = f0;
      out.dpsi = f1 * cp.du_ds;
      const double x = cap.x0 + cp.u;
      out.xi = x * f2 / (2.0 * cap.K * k);
      out.dxi = (f2 + x * f3) / (2.0 * cap.K * k) * cp.du_ds;
      return out;
    }
    // Dense region between the handoff and the window edge: owned by the
    // adjacent segment on this side of the apex (segment c departs from
    // cap c on dep_side; the other side belongs to the arriving segment).
    const int dep_side = side_at_cap(profile.segments[c], c);
    const int use_seg = (cp.u * dep_side > 0.0) ? c : (c - 1 + m) % m;
    const double z = cap.parabola(cp.u, 0);
    const double dz_du = cap.parabola(cp.u, 1);
    const double d2z_du2 = cap.parabola(cp.u, 2);
    const double dz_ds = dz_du * cp.du_ds;
    const double d2z_ds2 =
        d2z_du2 * cp.du_ds * cp.du_ds + dz_du * cp.d2u_ds2;
    segment_values(use_seg, z, dz_ds, d2z_ds2);
    return out;
  }

  segment_values(cp.index, cp.u, cp.du_ds, cp.d2u_ds2);
  return out;
}

DeformationField assemble_field(const ModeSolution& mode, int n_s, int n_t) {
  if (n_s < 2 || n_t < 2)
    fail(ErrorCode::ConfigError, "field grid must be at least 2 x 2");
  DeformationField f;
  f.k = mode.k;
  f.n_s = n_s;
  f.n_t = n_t;
  f.s.resize(n_s);
  f.t.resize(n_t);
  const std::size_t total = static_cast<std::size_t>(n_s) * n_t;
  f.a.resize(total);
  f.b.resize(total);
  f.c.resize(total);
  f.a_s.resize(total);
  f.b_s.resize(total);
  f.c_s.resize(total);
  f.a_t.resize(total);
  f.b_t.resize(total);
  f.c_t.resize(total);
  f.Z.resize(total);
  f.Z_s.resize(total);
  f.Z_t.resize(total);

  const double kk = mode.k;
  for (int is = 0; is < n_s; ++is) {
    const double s = 2.0 * kPi * is / n_s;
    f.s[is] = s;
    const ModeSolution::Values v = mode.eval(s);
    for (int it = 0; it < n_t; ++it) {
      const double t = 2.0 * kPi * it / n_t;
      f.t[it] = t;
      const double sk = std::sin(kk * t), ck = std::cos(kk * t);
      const std::size_t id = f.idx(is, it);
      f.a[id] = 2.0 * kk * v.psi * sk;
      f.a_s[id] = 2.0 * kk * v.dpsi * sk;
      f.a_t[id] = 2.0 * kk * kk * v.psi * ck;
      f.b[id] = 2.0 * v.psi * ck;
      f.b_s[id] = 2.0 * v.dpsi * ck;
      f.b_t[id] = -2.0 * kk * v.psi * sk;
      f.c[id] = -2.0 * v.xi * sk;
      f.c_s[id] = -2.0 * v.dxi * sk;
      f.c_t[id] = -2.0 * kk * v.xi * ck;

      const Vec3 gam = SurfaceParam::frame_gamma(t);
      const Vec3 gam1 = SurfaceParam::frame_gamma_prime(t);
      const Vec3 kv = SurfaceParam::frame_k();
      f.Z[id] = f.a[id] * gam + f.b[id] * gam1 + f.c[id] * kv;
      f.Z_s[id] = f.a_s[id] * gam + f.b_s[id] * gam1 + f.c_s[id] * kv;
      f.Z_t[id] = (f.a_t[id] - f.b[id]) * gam + (f.a[id] + f.b_t[id]) * gam1 +
                  f.c_t[id] * kv;
    }
  }
  return f;
}

}  // namespace revbend
