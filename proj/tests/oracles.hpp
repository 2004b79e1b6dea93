#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's numeric paths; each oracle is the textbook definition.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

inline std::vector<double> centered(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    std::vector<double> out(x);
    for (double& v : out) v -= mean;
    return out;
}

/// Double-loop normalized autocorrelation.
inline double autocorr_at(const std::vector<double>& x, std::size_t lag) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) den += x[n] * x[n];
    for (std::size_t n = 0; n + lag < x.size(); ++n) num += x[n] * x[n + lag];
    return num / den;
}

/// O(N^2) DFT power, bins 0..N/2, of the mean-removed input.
inline std::vector<double> dft_power(const std::vector<double>& raw) {
    const std::vector<double> x = centered(raw);
    const std::size_t n = x.size();
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::complex<double> acc{};
        for (std::size_t t = 0; t < n; ++t) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = std::norm(acc);
    }
    return out;
}

/// Linear interpolation at fractional position pos (clamped at the last sample).
inline std::vector<double> linear_resample(const std::vector<double>& x, int in_rate, int out_rate) {
    const std::size_t n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(x.size()) * out_rate / in_rate));
    std::vector<double> y(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        const long double pos = static_cast<long double>(k) * in_rate / out_rate;
        const std::size_t i = static_cast<std::size_t>(std::floor(pos));
        const double frac = static_cast<double>(pos - static_cast<long double>(i));
        const double a = x[std::min(i, x.size() - 1)];
        const double b = x[std::min(i + 1, x.size() - 1)];
        y[k] = a * (1.0 - frac) + b * frac;
    }
    return y;
}

/// Direct centered moving average of |x - mean| with shrinking edges.
inline std::vector<double> envelope(const std::vector<double>& raw, std::size_t window = 101) {
    std::vector<double> x = centered(raw);
    for (double& v : x) v = std::abs(v);
    const long half = static_cast<long>(window / 2);
    const long n = static_cast<long>(x.size());
    std::vector<double> out(x.size());
    for (long i = 0; i < n; ++i) {
        double sum = 0.0;
        long count = 0;
        for (long j = i - half; j <= i + half; ++j) {
            if (j < 0 || j >= n) continue;
            sum += x[static_cast<std::size_t>(j)];
            ++count;
        }
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(count);
    }
    return out;
}

/// Ring oracle: the tail of the flat concatenation of all writes.
struct ListRing {
    std::size_t capacity;
    std::vector<double> all;

    void write(const std::vector<double>& chunk) { all.insert(all.end(), chunk.begin(), chunk.end()); }
    std::vector<double> contents() const {
        const std::size_t n = std::min(all.size(), capacity);
        return {all.end() - static_cast<std::ptrdiff_t>(n), all.end()};
    }
};

/// Reference LCG, written out independently of the library's class.
struct Lcg {
    std::uint32_t state;
    std::uint32_t next() { return state = state * 1664525u + 1013904223u; }
};

} // namespace oracle
