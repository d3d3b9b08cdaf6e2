#pragma once

#include <cstddef>
#include <vector>

namespace revbend {

// Truncated real Fourier series f(s) = a0 + sum_n (a_n cos ns + b_n sin ns),
// period 2*pi. Derivatives of any order are exact term-wise operations, which
// is the whole point of using this representation for generating curves.
class FourierSeries {
 public:
  FourierSeries() = default;

  // coeffs laid out as [a0, a1, b1, a2, b2, ...]; length 2n+1 (or shorter,
  // a trailing sine amplitude may be omitted).
  explicit FourierSeries(const std::vector<double>& packed);
  FourierSeries(double a0, std::vector<double> cos_amps,
                std::vector<double> sin_amps);

  std::size_t harmonics() const { return cos_.size(); }
  double a0() const { return a0_; }
  const std::vector<double>& cos_amps() const { return cos_; }
  const std::vector<double>& sin_amps() const { return sin_; }

  std::vector<double> packed() const;

  // Value of d^order f / ds^order at s.
  double eval(double s, int order = 0) const;

  // Series for the exact derivative.
  FourierSeries derivative() const;

  FourierSeries operator*(double c) const;
  FourierSeries operator+(const FourierSeries& o) const;

  // Phase shift: result(s) = f(s + shift). Exact on coefficients.
  FourierSeries shifted(double shift) const;

 private:
  double a0_ = 0.0;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

}  // namespace revbend
