#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ssacl {

/// In-place iterative radix-2 FFT. The length of `a` must be a power of two.
/// The inverse transform includes the 1/N scaling.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

/// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

bool is_pow2(std::size_t n);

/// Magnitudes of the one-sided spectrum of a real frame whose length is a
/// power of two: |X_k| for k = 0..n/2.
std::vector<double> real_fft_magnitude(const std::vector<double>& frame);

}  // namespace ssacl
