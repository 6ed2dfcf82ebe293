#ifndef GAIT_FFT_INTERNAL_HPP
#define GAIT_FFT_INTERNAL_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace gait::internal {

inline int next_power_of_two(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 Cooley-Tukey; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& x, bool inverse = false) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& value : x) value /= static_cast<double>(n);
  }
}

}  // namespace gait::internal

#endif  // GAIT_FFT_INTERNAL_HPP
