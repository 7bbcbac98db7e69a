#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "bwreg/fft.hpp"
#include "bwreg/grid_function.hpp"

namespace bwreg {

class CoeffField;

enum class WaveletFamily { daubechies, meyer };

// Discrete periodic orthonormal wavelet basis on 2^J samples of [0,1).
// Coefficients are organized into level blocks of sizes 1, 1, 2, ..., 2^{J-1}:
// block 0 holds the single scaling coefficient, block j (j >= 1) the detail
// coefficients of dyadic scale j-1. Both transforms are exact Euclidean
// isometries: Daubechies by the orthogonal periodized filter-bank cascade,
// Meyer by unitary two-channel splits of the spectrum at every stage.
class WaveletSystem : public std::enable_shared_from_this<WaveletSystem> {
 public:
  static std::shared_ptr<const WaveletSystem> daubechies(int order, int max_level);
  static std::shared_ptr<const WaveletSystem> meyer(int max_level);

  WaveletFamily family() const { return family_; }
  int order() const { return order_; }  // vanishing moments (Daubechies)
  int max_level() const { return max_level_; }
  int signal_length() const { return 1 << max_level_; }
  int level_count() const { return max_level_ + 1; }
  int level_size(int j) const;
  const std::vector<int>& level_sizes() const { return level_sizes_; }

  // |Lambda_j| bracket constants: c 2^j <= |Lambda_j| <= C 2^j for j >= 1.
  double frame_constant() const { return 1.0; }      // C
  double lower_frame_factor() const { return 0.5; }  // c

  std::string name() const;

  CoeffField analyze(const GridFunction& g) const;
  GridFunction synthesize(const CoeffField& z) const;

  // Same transforms entered at the unitary-DFT stage; linear solvers use
  // these to stay in frequency space when the forward map is a Fourier
  // multiplier.
  CoeffField analyze_spectrum(std::vector<cplx> spectrum) const;
  std::vector<cplx> synthesize_spectrum(const CoeffField& z) const;

  const std::vector<double>& lowpass_filter() const { return lowpass_; }
  const std::vector<double>& highpass_filter() const { return highpass_; }

 private:
  WaveletSystem(WaveletFamily family, int order, int max_level);

  CoeffField analyze_daubechies(const GridFunction& g) const;
  GridFunction synthesize_daubechies(const CoeffField& z) const;
  CoeffField analyze_meyer_spectrum(std::vector<cplx> spectrum) const;
  std::vector<cplx> synthesize_meyer_spectrum(const CoeffField& z) const;

  WaveletFamily family_;
  int order_;
  int max_level_;
  std::vector<int> level_sizes_;
  std::vector<double> lowpass_;   // Daubechies analysis filters
  std::vector<double> highpass_;
  // Meyer per-stage transfer functions, one pair per dyadic length L = 2^k.
  std::vector<std::vector<double>> stage_h_;  // real lowpass, index k: L = 2^{k+1}
  std::vector<std::vector<cplx>> stage_g_;    // highpass with stage phase
};

// Jagged per-level coefficient blocks stored contiguously.
class CoeffField {
 public:
  CoeffField() = default;
  explicit CoeffField(std::shared_ptr<const WaveletSystem> sys);

  const WaveletSystem& system() const { return *sys_; }
  std::shared_ptr<const WaveletSystem> system_ptr() const { return sys_; }
  bool empty() const { return sys_ == nullptr; }

  int level_count() const;
  std::span<double> block(int j);
  std::span<const double> block(int j) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

 private:
  std::shared_ptr<const WaveletSystem> sys_;
  std::vector<int> offsets_;
  std::vector<double> data_;
};

CoeffField analyze(const GridFunction& g, const std::shared_ptr<const WaveletSystem>& sys);
GridFunction synthesize(const CoeffField& z);
std::span<const double> level_block(const CoeffField& z, int j);

// Flat vector-space helpers used by the solver and the studies.
double dot(const CoeffField& a, const CoeffField& b);
double euclidean_norm(const CoeffField& z);
CoeffField operator+(const CoeffField& a, const CoeffField& b);
CoeffField operator-(const CoeffField& a, const CoeffField& b);
CoeffField operator*(double c, const CoeffField& a);

// Daubechies analysis lowpass of the given order (2N taps, sum sqrt(2)),
// built by spectral factorization of the binomial half-band polynomial.
std::vector<double> daubechies_lowpass(int order);

}  // namespace bwreg
