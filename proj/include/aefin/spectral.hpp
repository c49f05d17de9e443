#pragma once

#include "aefin/tensor.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace aefin::spectral {

using Complex = std::complex<double>;

/// Smoothing floor used by amplitude_spectrum so |F| is differentiable at zero.
inline constexpr double kAmplitudeEpsilon = 1e-12;

/// One-sided spectrum of a real signal of length signal_len: bins 0..floor(L/2).
/// The negative-frequency half is implied by conjugate symmetry.
struct Spectrum {
    std::vector<Complex> bins;
    std::size_t signal_len = 0;
};

/// Sorted, distinct one-sided bin indices.
struct DominantSet {
    std::vector<std::size_t> indices;
    std::size_t k = 0;
};

struct Decomposition {
    std::vector<double> stable;
    std::vector<double> non_stable;
    DominantSet dominant;
};

/// Per-row decomposition of a whole window.
struct WindowDecomposition {
    SeriesWindow stable;
    SeriesWindow non_stable;
    std::vector<DominantSet> dominant; // indexed by b * channels + c
};

std::size_t one_sided_size(std::size_t signal_len);

/// In-place complex DFT, unnormalized in both directions (inverse uses e^{+i}).
/// Radix-2 for power-of-two sizes, Bluestein's chirp-z otherwise.
void fft(std::vector<Complex>& data, bool inverse);

Spectrum dft_real(std::span<const double> x);
std::vector<double> idft_real(const Spectrum& s);

DominantSet topk_dominant(const Spectrum& s, std::size_t k);

Decomposition decompose(std::span<const double> x, std::size_t k);
WindowDecomposition decompose_window(const SeriesWindow& w, std::size_t k);

std::vector<double> amplitude_spectrum(std::span<const double> x);

/// Pullback of amplitude_spectrum: given dLoss/d|F_k| for every one-sided bin,
/// returns dLoss/dx.
std::vector<double> amplitude_spectrum_backward(std::span<const double> x,
                                                std::span<const double> grad_amplitude);

} // namespace aefin::spectral
