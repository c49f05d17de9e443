#pragma once

// Test-only reference computations. Nothing here calls into the library's
// transform or gradient code, so they stay independent of what they check.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// O(L^2) one-sided forward DFT, unnormalized.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

inline std::vector<double> naive_magnitudes(const std::vector<double>& x) {
    auto bins = naive_dft(x);
    std::vector<double> out(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) out[i] = std::abs(bins[i]);
    return out;
}

/// Central-difference gradient of f at x.
inline std::vector<double> central_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = f(x);
        x[i] = orig - h;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

inline std::vector<double> cosine(std::size_t n, double cycles, double amplitude = 1.0, double phase = 0.0) {
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) {
        v[t] = amplitude * std::cos(2.0 * std::numbers::pi * cycles * static_cast<double>(t) / static_cast<double>(n) + phase);
    }
    return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Least-squares slope of y against t = 0..n-1.
inline double ls_slope(const std::vector<double>& y) {
    const double n = static_cast<double>(y.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double t = static_cast<double>(i);
        st += t;
        sy += y[i];
        stt += t * t;
        sty += t * y[i];
    }
    return (n * sty - st * sy) / (n * stt - st * st);
}

} // namespace oracle
