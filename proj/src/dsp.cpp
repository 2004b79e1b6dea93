#include "pulsepipe/dsp.hpp"

#include "fft.hpp"
#include "pulsepipe/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace pulsepipe {

Segment make_segment(std::vector<double> samples, std::uint64_t index) {
    Segment seg;
    seg.samples = std::move(samples);
    seg.index = index;
    seg.start_time_s = static_cast<double>(index) * (static_cast<double>(kHopSamples) / kSampleRate);
    return seg;
}

RingBuffer::RingBuffer(std::size_t capacity)
    : capacity_(capacity), slots_(std::make_unique<std::atomic<double>[]>(capacity)) {
    if (capacity == 0) throw Error(ErrorKind::InvalidArgument, "ring capacity must be positive");
    for (std::size_t i = 0; i < capacity_; ++i) slots_[i].store(0.0, std::memory_order_relaxed);
}

void RingBuffer::write(std::span<const double> chunk) {
    const std::uint64_t base = published_.load(std::memory_order_relaxed);
    const std::uint64_t end = base + chunk.size();
    // Announce the overwrite before touching any slot so a concurrent reader
    // can tell its copy may be torn.
    claimed_.store(end, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);

    const std::size_t skip = chunk.size() > capacity_ ? chunk.size() - capacity_ : 0;
    for (std::size_t i = skip; i < chunk.size(); ++i) {
        slots_[(base + i) % capacity_].store(chunk[i], std::memory_order_relaxed);
    }
    published_.store(end, std::memory_order_release);
}

RingBuffer::ReadStatus RingBuffer::read(std::uint64_t start, std::span<double> out) const {
    const std::uint64_t available = published_.load(std::memory_order_acquire);
    if (start + out.size() > available) return ReadStatus::NotReady;
    if (available > capacity_ && start < available - capacity_) return ReadStatus::DataLost;

    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = slots_[(start + i) % capacity_].load(std::memory_order_relaxed);
    }
    std::atomic_thread_fence(std::memory_order_acquire);
    const std::uint64_t claimed = claimed_.load(std::memory_order_relaxed);
    if (claimed > capacity_ && start < claimed - capacity_) return ReadStatus::DataLost;
    return ReadStatus::Ok;
}

std::vector<double> RingBuffer::contents() const {
    const std::uint64_t count = write_count();
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(count, capacity_));
    std::vector<double> out(n);
    if (read(count - n, out) != ReadStatus::Ok) {
        throw Error(ErrorKind::DataLost, "ring contents changed during read");
    }
    return out;
}

std::optional<Segment> pop_segment(const RingBuffer& buf, std::uint64_t next_index) {
    std::vector<double> window(kWindowSamples);
    switch (buf.read(next_index * kHopSamples, window)) {
    case RingBuffer::ReadStatus::NotReady:
        return std::nullopt;
    case RingBuffer::ReadStatus::DataLost:
        throw Error(ErrorKind::DataLost, "segment " + std::to_string(next_index) + " was overwritten");
    case RingBuffer::ReadStatus::Ok:
        break;
    }
    return make_segment(std::move(window), next_index);
}

SampleStream resample(const SampleStream& input, int target_rate_hz) {
    if (input.samples.empty()) throw Error(ErrorKind::EmptyStream, "cannot resample an empty stream");
    if (input.rate_hz <= 0 || target_rate_hz <= 0) {
        throw Error(ErrorKind::InvalidArgument, "sample rates must be positive");
    }
    if (input.rate_hz == target_rate_hz) return input;

    const auto in_rate = static_cast<std::uint64_t>(input.rate_hz);
    const auto out_rate = static_cast<std::uint64_t>(target_rate_hz);
    const std::size_t n_in = input.samples.size();
    const auto n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_in) * static_cast<double>(out_rate) / static_cast<double>(in_rate)));

    SampleStream out;
    out.rate_hz = target_rate_hz;
    out.samples.resize(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        // exact rational position k * in / out
        const std::uint64_t num = k * in_rate;
        const std::size_t i = static_cast<std::size_t>(num / out_rate);
        const double frac = static_cast<double>(num % out_rate) / static_cast<double>(out_rate);
        const double left = input.samples[std::min(i, n_in - 1)];
        const double right = input.samples[std::min(i + 1, n_in - 1)];
        out.samples[k] = left + (right - left) * frac;
    }
    return out;
}

std::vector<double> remove_mean(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    if (out.empty()) return out;
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    for (double& v : out) v -= mean;
    return out;
}

std::vector<double> envelope(std::span<const double> x) {
    std::vector<double> rectified = remove_mean(x);
    for (double& v : rectified) v = std::abs(v);

    const std::size_t n = rectified.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + rectified[i];

    constexpr std::size_t half = kEnvelopeWindow / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        // prefix differences can dip a hair below zero
        out[i] = std::max(0.0, (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo));
    }
    return out;
}

std::vector<double> power_spectrum(std::span<const double> x) {
    if (x.empty()) return {};
    const std::vector<double> centered = remove_mean(x);
    const detail::RealFft fft(centered.size());
    std::vector<std::complex<double>> bins(fft.bins());
    fft.forward(centered, bins);
    std::vector<double> power(bins.size());
    std::transform(bins.begin(), bins.end(), power.begin(), [](std::complex<double> c) { return std::norm(c); });
    return power;
}

} // namespace pulsepipe
