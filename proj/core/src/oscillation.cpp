#include "revbend/oscillation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "revbend/error.hpp"

namespace revbend {

namespace {

struct State {
  double u, v;
};

inline State rhs(const std::function<double(double)>& Q, double z, State y) {
  return {y.v, -Q(z) * y.u};
}

// Two-point quintic Hermite in normalized coordinates using value,
// derivative and (ODE-supplied) second derivative at both ends.
void hermite_uv(const OscSample& A, const OscSample& B, double Qa, double Qb,
                double z, double* u, double* v) {
  const double h = B.z - A.z;
  if (std::abs(h) < 1e-300) {
    if (u) *u = A.u;
    if (v) *v = A.v;
    return;
  }
  const double x = (z - A.z) / h;
  const double ua = A.u, va = A.v * h, wa = -Qa * A.u * h * h;
  const double ub = B.u, vb = B.v * h, wb = -Qb * B.u * h * h;
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
  const double H0 = 1 - 10 * x3 + 15 * x4 - 6 * x5;
  const double H1 = x - 6 * x3 + 8 * x4 - 3 * x5;
  const double H2 = 0.5 * x2 - 1.5 * x3 + 1.5 * x4 - 0.5 * x5;
  const double G0 = 10 * x3 - 15 * x4 + 6 * x5;
  const double G1 = -4 * x3 + 7 * x4 - 3 * x5;
  const double G2 = 0.5 * x3 - x4 + 0.5 * x5;
  if (u) *u = H0 * ua + H1 * va + H2 * wa + G0 * ub + G1 * vb + G2 * wb;
  if (v) {
    const double dH0 = -30 * x2 + 60 * x3 - 30 * x4;
    const double dH1 = 1 - 18 * x2 + 32 * x3 - 15 * x4;
    const double dH2 = x - 4.5 * x2 + 6 * x3 - 2.5 * x4;
    const double dG0 = 30 * x2 - 60 * x3 + 30 * x4;
    const double dG1 = -12 * x2 + 28 * x3 - 15 * x4;
    const double dG2 = 1.5 * x2 - 4 * x3 + 2.5 * x4;
    *v = (dH0 * ua + dH1 * va + dH2 * wa + dG0 * ub + dG1 * vb + dG2 * wb) / h;
  }
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                 e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640,
                 e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace

void OscResult::eval(double z, double* u, double* v,
                     const std::function<double(double)>& Q) const {
  const bool fwd = samples.back().z >= samples.front().z;
  std::size_t lo = 0, hi = samples.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    const bool left = fwd ? (samples[mid].z <= z) : (samples[mid].z >= z);
    if (left) lo = mid; else hi = mid;
  }
  hermite_uv(samples[lo], samples[hi], Q(samples[lo].z), Q(samples[hi].z), z,
             u, v);
}

OscResult integrate_oscillation(const std::function<double(double)>& Q,
                                double za, double zb, double u0, double v0,
                                const OscOptions& options) {
  OscResult out;
  const double span = zb - za;
  if (std::abs(span) < 1e-300) {
    out.samples.push_back({za, u0, v0, std::atan2(u0, v0)});
    return out;
  }
  const double dir = span > 0.0 ? 1.0 : -1.0;
  const double h_min = options.h_min_fraction * std::abs(span);

  State y{u0, v0};
  double z = za;
  double theta = std::atan2(u0, v0);
  double phi_prev = theta;
  out.samples.push_back({z, y.u, y.v, theta});

  const double q0 = std::abs(Q(za));
  double h = dir * std::min(0.01 * std::abs(span),
                            0.1 / std::sqrt(std::max(q0, 1.0)));

  const double quarter_start = zb - 0.25 * span;
  auto in_last_quarter = [&](double zz) {
    return dir > 0 ? zz >= quarter_start : zz <= quarter_start;
  };
  if (in_last_quarter(z))
    out.amp_last_quarter = std::max(out.amp_last_quarter, std::abs(y.u));

  while (dir * (zb - z) > 0.0) {
    if (dir * (z + h - zb) > 0.0) h = zb - z;
    if (std::abs(h) < h_min)
      fail(ErrorCode::StiffnessError,
           "step collapsed below h_min at z = " + std::to_string(z));
    if (out.steps + out.rejected > options.max_steps)
      fail(ErrorCode::StiffnessError,
           "step budget exhausted at z = " + std::to_string(z));

    const State k1 = rhs(Q, z, y);
    const State k2 = rhs(Q, z + c2 * h, {y.u + h * a21 * k1.u,
                                         y.v + h * a21 * k1.v});
    const State k3 = rhs(Q, z + c3 * h,
                         {y.u + h * (a31 * k1.u + a32 * k2.u),
                          y.v + h * (a31 * k1.v + a32 * k2.v)});
    const State k4 = rhs(Q, z + c4 * h,
                         {y.u + h * (a41 * k1.u + a42 * k2.u + a43 * k3.u),
                          y.v + h * (a41 * k1.v + a42 * k2.v + a43 * k3.v)});
    const State k5 =
        rhs(Q, z + c5 * h,
            {y.u + h * (a51 * k1.u + a52 * k2.u + a53 * k3.u + a54 * k4.u),
             y.v + h * (a51 * k1.v + a52 * k2.v + a53 * k3.v + a54 * k4.v)});
    const State k6 =
        rhs(Q, z + h,
            {y.u + h * (a61 * k1.u + a62 * k2.u + a63 * k3.u + a64 * k4.u +
                        a65 * k5.u),
             y.v + h * (a61 * k1.v + a62 * k2.v + a63 * k3.v + a64 * k4.v +
                        a65 * k5.v)});
    const State y5{
        y.u + h * (b1 * k1.u + b3 * k3.u + b4 * k4.u + b5 * k5.u + b6 * k6.u),
        y.v + h * (b1 * k1.v + b3 * k3.v + b4 * k4.v + b5 * k5.v + b6 * k6.v)};
    const State k7 = rhs(Q, z + h, y5);
    const double err_u = h * (e1 * k1.u + e3 * k3.u + e4 * k4.u + e5 * k5.u +
                              e6 * k6.u + e7 * k7.u);
    const double err_v = h * (e1 * k1.v + e3 * k3.v + e4 * k4.v + e5 * k5.v +
                              e6 * k6.v + e7 * k7.v);
    const double scale_u =
        options.abs_tol +
        options.rel_tol * std::max(std::abs(y.u), std::abs(y5.u));
    const double scale_v =
        options.abs_tol +
        options.rel_tol * std::max(std::abs(y.v), std::abs(y5.v));
    const double eu = scale_u > 0.0 ? std::abs(err_u) / scale_u : 0.0;
    const double ev = scale_v > 0.0 ? std::abs(err_v) / scale_v : 0.0;
    const double err = std::max(eu, ev);

    if (err <= 1.0 || std::abs(h) <= h_min * 1.0000001) {
      const OscSample prev = out.samples.back();
      const OscSample next{z + h, y5.u, y5.v, 0.0};
      // Unwrap the phase through the step. The atan2 rate can reach
      // max(1, |Q|), so sub-sample the dense output until every increment
      // is unambiguous.
      const double qa = std::abs(Q(prev.z)), qb = std::abs(Q(next.z));
      const double budget = std::abs(h) * std::max(1.0, std::max(qa, qb));
      const int n_sub = std::min(256, std::max(1, static_cast<int>(budget)));
      for (int j = 1; j <= n_sub; ++j) {
        double uu, vv;
        if (j == n_sub) {
          uu = next.u;
          vv = next.v;
        } else {
          hermite_uv(prev, next, Q(prev.z), Q(next.z),
                     prev.z + h * j / n_sub, &uu, &vv);
        }
        if (uu == 0.0 && vv == 0.0) continue;
        const double phi = std::atan2(uu, vv);
        theta += std::remainder(phi - phi_prev, 2.0 * std::numbers::pi);
        phi_prev = phi;
      }
      z += h;
      y = y5;
      out.samples.push_back({z, y.u, y.v, theta});
      ++out.steps;
      if (in_last_quarter(z))
        out.amp_last_quarter = std::max(out.amp_last_quarter, std::abs(y.u));
    } else {
      ++out.rejected;
    }
    const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }

  const double pi = std::numbers::pi;
  const double t0 = out.samples.front().theta;
  const double t1 = out.samples.back().theta;
  // Interior zeros are the floor crossings of theta/pi; a hit exactly at an
  // endpoint is not interior.
  auto fl = [&](double t) { return std::floor(t / pi - 1e-12); };
  out.zero_count = static_cast<int>(fl(t1) - fl(t0));
  if (out.zero_count < 0) out.zero_count = 0;
  return out;
}

}  // namespace revbend
