#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace pulsepipe::detail {

/// Real-input DFT of a fixed length. Plans are shared and created once per
/// length; execution is re-entrant.
class RealFft {
public:
    explicit RealFft(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    std::size_t bins() const noexcept { return n_ / 2 + 1; }

    /// in.size() == size(), out.size() == bins()
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
    /// Unnormalized inverse: forward followed by inverse scales by size().
    void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

private:
    std::size_t n_;
    void* forward_plan_;
    void* inverse_plan_;
};

} // namespace pulsepipe::detail
