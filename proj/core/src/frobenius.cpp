#include "revbend/frobenius.hpp"

#include <cmath>

namespace revbend {

double FrobeniusSeries::eval(double u, int order) const {
  // Horner on the order-th derivative: sum fac_n a_n u^(n-order).
  double acc = 0.0;
  const int n0 = exponent;
  const int nmax = n0 + static_cast<int>(coeffs.size()) - 1;
  for (int n = nmax; n >= std::max(order, 0); --n) {
    double fac = 1.0;
    for (int j = 0; j < order; ++j) fac *= (n - j);
    const double cn = (n >= n0) ? coeffs[n - n0] : 0.0;
    acc = acc * u + fac * cn;
  }
  return acc;
}

double FrobeniusLogBranch::eval(double u, int order) const {
  // Horner on the order-th derivative of the plain power series part.
  double series = 0.0;
  for (int n = static_cast<int>(b.size()) - 1; n >= order; --n) {
    double fac = 1.0;
    for (int j = 0; j < order; ++j) fac *= (n - j);
    series = series * u + fac * b[n];
  }

  const double lg = std::log(std::abs(u));
  const double f = psi2.eval(u, 0);
  const double f1 = psi2.eval(u, 1);
  const double f2 = psi2.eval(u, 2);
  const double f3 = psi2.eval(u, 3);
  switch (order) {
    case 0: return series + C * lg * f;
    case 1: return series + C * (lg * f1 + f / u);
    case 2: return series + C * (lg * f2 + 2.0 * f1 / u - f / (u * u));
    case 3:
      return series + C * (lg * f3 + 3.0 * f2 / u - 3.0 * f1 / (u * u) +
                           2.0 * f / (u * u * u));
    default:
      fail(ErrorCode::ConfigError, "log branch derivative order > 3");
  }
}

FrobeniusSeries frobenius_cap_solution(const Cap& cap, int k, int N,
                                       double series_tol) {
  if (cap.K == 0.0)
    fail(ErrorCode::ConfigError, "cap has K = 0");
  if (k < 2)
    fail(ErrorCode::ConfigError, "mode number must satisfy k >= 2");
  FrobeniusSeries s;
  s.x0 = cap.x0;
  s.exponent = 2;
  s.k = k;
  s.N = N;
  s.radius = 0.5 * cap.half_width();
  s.coeffs.assign(1, 1.0);  // a_2 = 1

  // a_{m+1} = -((m-1)^2 - k^2) a_m / (x0 (m+1)(m-1)), m >= 2. The factor
  // vanishes at m = k + 1, so the series is a polynomial of degree k + 1.
  bool terminated = false;
  while (s.exponent + static_cast<int>(s.coeffs.size()) <= N) {
    const int m = s.exponent + static_cast<int>(s.coeffs.size()) - 1;
    const double num = -((m - 1.0) * (m - 1.0) - k * k);
    const double den = s.x0 * (m + 1.0) * (m - 1.0);
    const double next = num * s.coeffs.back() / den;
    if (next == 0.0) { terminated = true; break; }
    s.coeffs.push_back(next);
  }
  if (!terminated) {
    const int n_last = s.exponent + static_cast<int>(s.coeffs.size()) - 1;
    const double tail =
        std::abs(s.coeffs.back()) * std::pow(s.radius, n_last);
    if (tail > series_tol)
      fail(ErrorCode::TruncationError,
           "series tail above tolerance at order N; raise N or shrink radius");
  }
  return s;
}

FrobeniusSeries frobenius_pole_solution(double K, int k, int N) {
  if (k <= 1)
    fail(ErrorCode::PoleParameterError,
         "pole series requires k > 1 (indicial roots 1 +- k)");
  if (K == 0.0) fail(ErrorCode::ConfigError, "pole cap has K = 0");
  FrobeniusSeries s;
  s.x0 = 0.0;
  s.exponent = 1 + k;
  s.k = k;
  s.N = N;
  s.radius = 0.0;
  // x^2 Psi'' - x Psi' - (k^2-1) Psi = 0 is exactly Euler: A(x) = 1.
  s.coeffs.assign(1, 1.0);
  return s;
}

FrobeniusLogBranch frobenius_log_branch(const Cap& cap, int k, int N) {
  FrobeniusLogBranch lb;
  lb.x0 = cap.x0;
  lb.k = k;
  lb.psi2 = frobenius_cap_solution(cap, k, N);
  const double x0 = cap.x0;

  lb.b.assign(N + 1, 0.0);
  lb.b[0] = 1.0;
  lb.b[1] = (1.0 - k * k) / x0;  // from the m = 0 relation
  lb.C = k * k * lb.b[1] / (2.0 * x0);
  if (N >= 2) lb.b[2] = 0.0;  // free coefficient, canonical choice

  auto a = [&](int n) -> double {
    const int j = n - lb.psi2.exponent;
    if (j < 0 || j >= static_cast<int>(lb.psi2.coeffs.size())) return 0.0;
    return lb.psi2.coeffs[j];
  };
  // m >= 2:  x0 (m+1)(m-1) b_{m+1} + ((m-1)^2 - k^2) b_m
  //          + C (2 x0 m a_{m+1} + 2 (m-1) a_m) = 0
  for (int m = 2; m + 1 <= N; ++m) {
    const double num = ((m - 1.0) * (m - 1.0) - k * k) * lb.b[m] +
                       lb.C * (2.0 * x0 * m * a(m + 1) + 2.0 * (m - 1.0) * a(m));
    lb.b[m + 1] = -num / (x0 * (m + 1.0) * (m - 1.0));
  }
  return lb;
}

std::pair<double, double> indicial_roots_interior() { return {0.0, 2.0}; }

std::pair<double, double> indicial_roots_pole(int k) {
  return {1.0 - k, 1.0 + k};
}

}  // namespace revbend
