#include "revbend/chebyshev.hpp"

#include <cmath>
#include <numbers>

#include "revbend/error.hpp"

namespace revbend {

ChebSeries::ChebSeries(double a, double b, std::vector<double> coeffs)
    : a_(a), b_(b), coeffs_(std::move(coeffs)) {}

ChebSeries ChebSeries::fit(const std::function<double(double)>& f, double a,
                           double b, int degree) {
  const int n = degree;  // n+1 nodes
  std::vector<double> fx(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double theta = std::numbers::pi * j / n;
    const double t = std::cos(theta);
    fx[j] = f(0.5 * (a + b) + 0.5 * (b - a) * t);
  }
  // Discrete cosine transform at second-kind points.
  std::vector<double> c(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double acc = 0.5 * (fx[0] + (k % 2 == 0 ? fx[n] : -fx[n]));
    for (int j = 1; j < n; ++j)
      acc += fx[j] * std::cos(std::numbers::pi * k * j / n);
    c[k] = 2.0 * acc / n;
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return ChebSeries(a, b, std::move(c));
}

double ChebSeries::eval(double x) const {
  if (coeffs_.empty()) return 0.0;
  const double t = (2.0 * x - (a_ + b_)) / (b_ - a_);
  // Clenshaw recurrence.
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 1;) {
    const double tmp = 2.0 * t * b1 - b2 + coeffs_[k];
    b2 = b1;
    b1 = tmp;
  }
  return t * b1 - b2 + coeffs_[0];
}

ChebSeries ChebSeries::derivative() const {
  const int n = static_cast<int>(coeffs_.size()) - 1;
  if (n <= 0) return ChebSeries(a_, b_, {0.0});
  std::vector<double> d(n, 0.0);
  // Standard backward recurrence for Chebyshev derivative coefficients.
  std::vector<double> work(n + 2, 0.0);
  for (int k = n - 1; k >= 0; --k) {
    work[k] = work[k + 2] + 2.0 * (k + 1) * coeffs_[k + 1];
  }
  work[0] *= 0.5;
  const double scale = 2.0 / (b_ - a_);
  for (int k = 0; k < n; ++k) d[k] = work[k] * scale;
  return ChebSeries(a_, b_, std::move(d));
}

ChebSeries ChebSeries::antiderivative() const {
  const int n = static_cast<int>(coeffs_.size());
  std::vector<double> b(n + 1, 0.0);
  auto c = [&](int k) { return (k >= 0 && k < n) ? coeffs_[k] : 0.0; };
  for (int k = 1; k <= n; ++k) b[k] = (c(k - 1) - c(k + 1)) / (2.0 * k);
  if (n >= 2) b[1] = c(0) - 0.5 * c(2);
  const double scale = 0.5 * (b_ - a_);
  for (auto& v : b) v *= scale;
  ChebSeries out(a_, b_, std::move(b));
  out.coeffs_[0] -= out.eval(a_);
  return out;
}

double ChebSeries::tail(int count) const {
  double m = 0.0;
  const int n = static_cast<int>(coeffs_.size());
  for (int k = std::max(0, n - count); k < n; ++k)
    m = std::max(m, std::abs(coeffs_[k]));
  return m;
}

double ChebSeries::scale() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

double Poly::eval(double z, int order) const {
  const double u = z - center;
  if (order == 0) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * u + coeffs[i];
    return acc;
  }
  // Horner on the order-th derivative's coefficients.
  double acc = 0.0;
  const int n = static_cast<int>(coeffs.size());
  for (int k = n - 1; k >= order; --k) {
    double fac = 1.0;
    for (int j = 0; j < order; ++j) fac *= (k - j);
    acc = acc * u + fac * coeffs[k];
  }
  return acc;
}

Poly Poly::derivative() const {
  Poly d;
  d.center = center;
  if (coeffs.size() <= 1) { d.coeffs = {0.0}; return d; }
  d.coeffs.resize(coeffs.size() - 1);
  for (std::size_t k = 1; k < coeffs.size(); ++k)
    d.coeffs[k - 1] = coeffs[k] * static_cast<double>(k);
  return d;
}

Poly Poly::antiderivative(double value_at_center) const {
  Poly a;
  a.center = center;
  a.coeffs.resize(coeffs.size() + 1);
  a.coeffs[0] = value_at_center;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    a.coeffs[k + 1] = coeffs[k] / static_cast<double>(k + 1);
  return a;
}

Poly Poly::operator+(const Poly& o) const {
  Poly out;
  out.center = center;
  out.coeffs.assign(std::max(coeffs.size(), o.coeffs.size()), 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) out.coeffs[k] += coeffs[k];
  for (std::size_t k = 0; k < o.coeffs.size(); ++k) out.coeffs[k] += o.coeffs[k];
  return out;
}

Poly Poly::operator*(double c) const {
  Poly out = *this;
  for (auto& v : out.coeffs) v *= c;
  return out;
}

double smoothstep5(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep5_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return x * x * (30.0 + x * (-60.0 + 30.0 * x));
}

double smoothstep5_d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return x * (60.0 + x * (-180.0 + 120.0 * x));
}

}  // namespace revbend
