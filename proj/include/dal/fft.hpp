#pragma once

#include <complex>

namespace dal {

// In-place complex DFT (FFTW backed, any length, thread-safe).
// Forward is unnormalized; inverse scales by 1/n so a round trip is identity.
void fft_1d(std::complex<double>* data, int n, bool inverse);

// In-place complex 2-D DFT over a row-major rows x cols array; same
// normalization convention as fft_1d (inverse scales by 1/(rows*cols)).
void fft_2d(std::complex<double>* data, int rows, int cols, bool inverse);

}  // namespace dal
