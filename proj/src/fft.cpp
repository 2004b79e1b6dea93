#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace pulsepipe::detail {

namespace {

struct PlanPair {
    fftw_plan forward;
    fftw_plan inverse;
};

// The FFTW planner is not thread-safe; execution with the new-array API is.
PlanPair plans_for(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    std::vector<double> real(n);
    std::vector<fftw_complex> spectrum(n / 2 + 1);
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair pair{
        fftw_plan_dft_r2c_1d(len, real.data(), spectrum.data(), flags),
        fftw_plan_dft_c2r_1d(len, spectrum.data(), real.data(), flags | FFTW_DESTROY_INPUT),
    };
    cache.emplace(n, pair);
    return pair;
}

} // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
    auto pair = plans_for(n);
    forward_plan_ = pair.forward;
    inverse_plan_ = pair.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    std::vector<double> scratch(in.begin(), in.end());
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), scratch.data(),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    // c2r destroys its input
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                         reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

} // namespace pulsepipe::detail
