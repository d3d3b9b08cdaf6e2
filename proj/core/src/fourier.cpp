#include "revbend/fourier.hpp"

#include <algorithm>
#include <cmath>

namespace revbend {

FourierSeries::FourierSeries(const std::vector<double>& packed) {
  if (packed.empty()) return;
  a0_ = packed[0];
  std::size_t n = packed.size() / 2;  // harmonics present (sine may be short)
  cos_.assign(n, 0.0);
  sin_.assign(n, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    cos_[k - 1] = packed[2 * k - 1];
    if (2 * k < packed.size()) sin_[k - 1] = packed[2 * k];
  }
}

FourierSeries::FourierSeries(double a0, std::vector<double> cos_amps,
                             std::vector<double> sin_amps)
    : a0_(a0), cos_(std::move(cos_amps)), sin_(std::move(sin_amps)) {
  std::size_t n = std::max(cos_.size(), sin_.size());
  cos_.resize(n, 0.0);
  sin_.resize(n, 0.0);
}

std::vector<double> FourierSeries::packed() const {
  std::vector<double> out;
  out.reserve(1 + 2 * cos_.size());
  out.push_back(a0_);
  for (std::size_t k = 0; k < cos_.size(); ++k) {
    out.push_back(cos_[k]);
    out.push_back(sin_[k]);
  }
  return out;
}

double FourierSeries::eval(double s, int order) const {
  double acc = (order == 0) ? a0_ : 0.0;
  for (std::size_t k = 1; k <= cos_.size(); ++k) {
    const double n = static_cast<double>(k);
    const double pw = std::pow(n, order);
    // d/ds rotates (cos, sin) amplitudes by a quarter period per order.
    double ca = cos_[k - 1], sa = sin_[k - 1];
    switch (order & 3) {
      case 0: break;
      case 1: std::swap(ca, sa); sa = -sa; break;  // (a,b) -> (b,-a)
      case 2: ca = -ca; sa = -sa; break;
      case 3: std::swap(ca, sa); ca = -ca; break;  // (a,b) -> (-b,a)
    }
    acc += pw * (ca * std::cos(n * s) + sa * std::sin(n * s));
  }
  return acc;
}

FourierSeries FourierSeries::derivative() const {
  // (a cos ns + b sin ns)' = nb cos ns - na sin ns
  std::vector<double> ca(cos_.size()), sa(sin_.size());
  for (std::size_t k = 1; k <= cos_.size(); ++k) {
    const double n = static_cast<double>(k);
    ca[k - 1] = n * sin_[k - 1];
    sa[k - 1] = -n * cos_[k - 1];
  }
  return FourierSeries(0.0, std::move(ca), std::move(sa));
}

FourierSeries FourierSeries::operator*(double c) const {
  std::vector<double> ca(cos_), sa(sin_);
  for (auto& v : ca) v *= c;
  for (auto& v : sa) v *= c;
  return FourierSeries(a0_ * c, std::move(ca), std::move(sa));
}

FourierSeries FourierSeries::operator+(const FourierSeries& o) const {
  std::size_t n = std::max(cos_.size(), o.cos_.size());
  std::vector<double> ca(n, 0.0), sa(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k < cos_.size()) { ca[k] += cos_[k]; sa[k] += sin_[k]; }
    if (k < o.cos_.size()) { ca[k] += o.cos_[k]; sa[k] += o.sin_[k]; }
  }
  return FourierSeries(a0_ + o.a0_, std::move(ca), std::move(sa));
}

FourierSeries FourierSeries::shifted(double shift) const {
  std::vector<double> ca(cos_.size()), sa(sin_.size());
  for (std::size_t k = 1; k <= cos_.size(); ++k) {
    const double n = static_cast<double>(k);
    const double c = std::cos(n * shift), s = std::sin(n * shift);
    // a cos n(u+d) + b sin n(u+d) regrouped in cos nu, sin nu.
    ca[k - 1] = cos_[k - 1] * c + sin_[k - 1] * s;
    sa[k - 1] = -cos_[k - 1] * s + sin_[k - 1] * c;
  }
  return FourierSeries(a0_, std::move(ca), std::move(sa));
}

}  // namespace revbend
