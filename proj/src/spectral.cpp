#include "aefin/spectral.hpp"

#include "aefin/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace aefin::spectral {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Forward twiddles exp(-2 pi i k / n), k < n/2, each computed directly so the
/// error stays at a few ulps.
const std::vector<Complex>& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::vector<Complex>> cache;
    auto& table = cache[n];
    if (table.empty()) {
        table.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            table[k] = Complex(std::cos(angle), std::sin(angle));
        }
    }
    return table;
}

void fft_radix2_forward(std::vector<Complex>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& w = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + half] * w[k * stride];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

struct BluesteinPlan {
    std::size_t m = 0;
    std::vector<Complex> chirp;     // exp(-i pi k^2 / n)
    std::vector<Complex> kernel_hat; // FFT of the conjugate chirp, wrapped to length m
};

const BluesteinPlan& bluestein_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, BluesteinPlan> cache;
    auto& plan = cache[n];
    if (plan.m == 0) {
        std::size_t m = 1;
        while (m < 2 * n - 1) m <<= 1;
        plan.chirp.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the angle argument small.
            const std::size_t k2 = (k * k) % (2 * n);
            const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
            plan.chirp[k] = Complex(std::cos(angle), std::sin(angle));
        }
        plan.kernel_hat.assign(m, Complex(0.0, 0.0));
        plan.kernel_hat[0] = std::conj(plan.chirp[0]);
        for (std::size_t k = 1; k < n; ++k) {
            plan.kernel_hat[k] = std::conj(plan.chirp[k]);
            plan.kernel_hat[m - k] = std::conj(plan.chirp[k]);
        }
        fft_radix2_forward(plan.kernel_hat);
        plan.m = m;
    }
    return plan;
}

void fft_bluestein_forward(std::vector<Complex>& a) {
    const std::size_t n = a.size();
    const auto& plan = bluestein_plan(n);
    std::vector<Complex> x(plan.m);
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * plan.chirp[k];
    fft_radix2_forward(x);
    // Inverse transform of the product via conjugation.
    for (std::size_t i = 0; i < plan.m; ++i) x[i] = std::conj(x[i] * plan.kernel_hat[i]);
    fft_radix2_forward(x);
    const double scale = 1.0 / static_cast<double>(plan.m);
    for (std::size_t k = 0; k < n; ++k) a[k] = std::conj(x[k]) * scale * plan.chirp[k];
}

void fft_forward(std::vector<Complex>& a) {
    if (is_power_of_two(a.size())) {
        fft_radix2_forward(a);
    } else {
        fft_bluestein_forward(a);
    }
}

void check_k(std::size_t k, std::size_t bins) {
    if (k < 1 || k > bins) {
        throw InvalidInput("k=" + std::to_string(k) + " outside [1, " + std::to_string(bins) + "]");
    }
}

} // namespace

std::size_t one_sided_size(std::size_t signal_len) { return signal_len / 2 + 1; }

void fft(std::vector<Complex>& data, bool inverse) {
    if (data.size() <= 1) return;
    if (!inverse) {
        fft_forward(data);
        return;
    }
    // Unnormalized inverse: conj(FFT(conj(x))).
    for (auto& v : data) v = std::conj(v);
    fft_forward(data);
    for (auto& v : data) v = std::conj(v);
}

Spectrum dft_real(std::span<const double> x) {
    if (x.size() < 2) {
        throw InvalidInput("dft_real needs at least 2 samples, got " + std::to_string(x.size()));
    }
    std::vector<Complex> full(x.begin(), x.end());
    fft(full, false);
    full.resize(one_sided_size(x.size()));
    return Spectrum{std::move(full), x.size()};
}

std::vector<double> idft_real(const Spectrum& s) {
    const std::size_t n = s.signal_len;
    if (n < 2 || s.bins.size() != one_sided_size(n)) {
        throw InvalidInput("malformed spectrum: " + std::to_string(s.bins.size()) + " bins for length " +
                           std::to_string(n));
    }
    std::vector<Complex> full(n);
    std::copy(s.bins.begin(), s.bins.end(), full.begin());
    for (std::size_t k = 1; k < n - k; ++k) full[n - k] = std::conj(s.bins[k]);
    fft(full, true);
    std::vector<double> out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = full[i].real() * scale;
    return out;
}

DominantSet topk_dominant(const Spectrum& s, std::size_t k) {
    const std::size_t bins = s.bins.size();
    check_k(k, bins);

    std::vector<double> mags(bins);
    for (std::size_t i = 0; i < bins; ++i) mags[i] = std::abs(s.bins[i]);
    // Magnitudes closer than this are a tie and resolve to the lower bin.
    const double tie = 1e-12 * *std::max_element(mags.begin(), mags.end());

    std::vector<bool> taken(bins, false);
    DominantSet out;
    out.k = k;
    for (std::size_t pick = 0; pick < k; ++pick) {
        std::size_t best = bins;
        for (std::size_t i = 0; i < bins; ++i) {
            if (taken[i]) continue;
            if (best == bins || mags[i] > mags[best] + tie) best = i;
        }
        taken[best] = true;
        out.indices.push_back(best);
    }
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

Decomposition decompose(std::span<const double> x, std::size_t k) {
    Spectrum spec = dft_real(x);
    DominantSet dominant = topk_dominant(spec, k);

    Spectrum filtered{std::vector<Complex>(spec.bins.size()), spec.signal_len};
    for (std::size_t idx : dominant.indices) filtered.bins[idx] = spec.bins[idx];

    Decomposition out;
    out.non_stable = idft_real(filtered);
    out.stable.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.stable[i] = x[i] - out.non_stable[i];
    out.dominant = std::move(dominant);
    return out;
}

WindowDecomposition decompose_window(const SeriesWindow& w, std::size_t k) {
    WindowDecomposition out{SeriesWindow(w.batch(), w.channels(), w.length()),
                            SeriesWindow(w.batch(), w.channels(), w.length()),
                            {}};
    out.dominant.reserve(w.rows());
    for (std::size_t b = 0; b < w.batch(); ++b) {
        for (std::size_t c = 0; c < w.channels(); ++c) {
            Decomposition d = decompose(w.row(b, c), k);
            std::copy(d.stable.begin(), d.stable.end(), out.stable.row(b, c).begin());
            std::copy(d.non_stable.begin(), d.non_stable.end(), out.non_stable.row(b, c).begin());
            out.dominant.push_back(std::move(d.dominant));
        }
    }
    return out;
}

std::vector<double> amplitude_spectrum(std::span<const double> x) {
    const Spectrum spec = dft_real(x);
    std::vector<double> out(spec.bins.size());
    constexpr double eps2 = kAmplitudeEpsilon * kAmplitudeEpsilon;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Complex z = spec.bins[i];
        out[i] = std::sqrt(z.real() * z.real() + z.imag() * z.imag() + eps2);
    }
    return out;
}

std::vector<double> amplitude_spectrum_backward(std::span<const double> x,
                                                std::span<const double> grad_amplitude) {
    const Spectrum spec = dft_real(x);
    if (grad_amplitude.size() != spec.bins.size()) {
        throw ShapeMismatch("amplitude gradient has " + std::to_string(grad_amplitude.size()) +
                            " bins, expected " + std::to_string(spec.bins.size()));
    }
    // d|F_k|/dx_n = Re(F_k e^{+i 2 pi k n / L}) / |F_k|, so the pullback is an
    // unnormalized inverse transform over the one-sided bins only.
    const std::size_t n = x.size();
    std::vector<Complex> full(n);
    constexpr double eps2 = kAmplitudeEpsilon * kAmplitudeEpsilon;
    for (std::size_t k = 0; k < spec.bins.size(); ++k) {
        const Complex z = spec.bins[k];
        const double mag = std::sqrt(z.real() * z.real() + z.imag() * z.imag() + eps2);
        full[k] = z * (grad_amplitude[k] / mag);
    }
    fft(full, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = full[i].real();
    return out;
}

} // namespace aefin::spectral
