#pragma once

#include <complex>
#include <vector>

namespace bwreg {

using cplx = std::complex<double>;

// In-place radix-2 FFT, length must be a power of two.
// sign = -1: forward (e^{-2pi i mt/n}), sign = +1: inverse kernel, no scaling.
void fft_pow2(std::vector<cplx>& a, int sign);

// Unitary transforms (1/sqrt(n) in both directions) so that all spectra are
// Euclidean-isometric to the signals they represent.
std::vector<cplx> unitary_fft(const std::vector<double>& x);
std::vector<cplx> unitary_fft(const std::vector<cplx>& x);
std::vector<cplx> unitary_ifft(const std::vector<cplx>& x);
// Inverse for spectra of real signals; imaginary residue is discarded.
std::vector<double> unitary_ifft_real(const std::vector<cplx>& x);

}  // namespace bwreg
