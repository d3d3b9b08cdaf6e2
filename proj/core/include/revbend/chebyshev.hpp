#pragma once

#include <functional>
#include <vector>

namespace revbend {

// Chebyshev series c_0/1... on [a, b]: f(x) = sum_k c_k T_k(m(x)), with
// m the affine map onto [-1, 1]. Fitting samples at Chebyshev points of the
// second kind (O(n^2) transform -- series here are short).
class ChebSeries {
 public:
  ChebSeries() = default;
  ChebSeries(double a, double b, std::vector<double> coeffs);

  static ChebSeries fit(const std::function<double(double)>& f, double a,
                        double b, int degree);

  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double eval(double x) const;
  // Derivative of given order as a new series (exact coefficient recurrence).
  ChebSeries derivative() const;
  // Antiderivative vanishing at the left endpoint a.
  ChebSeries antiderivative() const;

  // Max |c_k| over the trailing `count` coefficients, a convergence estimate.
  double tail(int count = 6) const;
  double scale() const;  // max |c_k|

 private:
  double a_ = -1.0;
  double b_ = 1.0;
  std::vector<double> coeffs_;
};

// Polynomial in monomial basis around a center: f(z) = sum c_k (z-z0)^k.
struct Poly {
  double center = 0.0;
  std::vector<double> coeffs;

  double eval(double z, int order = 0) const;
  Poly derivative() const;
  Poly antiderivative(double value_at_center = 0.0) const;
  Poly operator+(const Poly& o) const;
  Poly operator*(double c) const;
};

// Quintic smoothstep: 0 at 0 and 1 at 1 with vanishing first and second
// derivatives at both ends (so blends built from it are C^2).
double smoothstep5(double x);
double smoothstep5_d1(double x);
double smoothstep5_d2(double x);

}  // namespace revbend
