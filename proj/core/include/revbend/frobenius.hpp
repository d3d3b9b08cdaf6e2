#pragma once

#include <vector>

#include "revbend/capseg.hpp"

namespace revbend {

// Power-series solution Psi(x) = sum_{n >= sigma} a_n (x - x0)^n of the
// mode equation at a cap, normalized a_sigma = 1. With the exact parabola
// cap the equation reduces to x (x - x0) Psi'' - x Psi' - (k^2 - 1) Psi = 0,
// whose indicial roots are {0, 2} at interior caps and {1 - k, 1 + k} at a
// pole (x0 = 0), where the analytic exponent is 1 + k.
struct FrobeniusSeries {
  double x0 = 0.0;
  int exponent = 2;
  int k = 2;
  int N = 30;
  double radius = 0.0;
  std::vector<double> coeffs;  // coeffs[j] = a_{exponent + j}, coeffs[0] = 1

  double eval(double u, int order = 0) const;
};

// Second solution at an interior cap (exponent 0): a log branch
//   Psi0(x) = sum b_n u^n + C log|u| Psi2(x),   b_0 = 1, b_2 = 0,
// which is bounded at the apex but only C^1; its presence is what forces
// the shooting condition at segment ends.
struct FrobeniusLogBranch {
  double x0 = 0.0;
  int k = 2;
  double C = 0.0;
  std::vector<double> b;  // b_0 .. b_N
  FrobeniusSeries psi2;

  double eval(double u, int order = 0) const;
};

FrobeniusSeries frobenius_cap_solution(const Cap& cap, int k, int N = 30,
                                       double series_tol = 1e-12);

// Pole variant (apex on the axis): analytic exponent 1 + k, requires k > 1.
FrobeniusSeries frobenius_pole_solution(double K, int k, int N = 30);

FrobeniusLogBranch frobenius_log_branch(const Cap& cap, int k, int N = 40);

// Indicial roots of the cap equation for reporting/tests.
std::pair<double, double> indicial_roots_interior();
std::pair<double, double> indicial_roots_pole(int k);

}  // namespace revbend
