#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace pulsepipe {

inline constexpr int kSampleRate = 4000;
inline constexpr std::size_t kWindowSamples = 15000;   // 3.75 s
inline constexpr std::size_t kHopSamples = 4000;       // 1 s
inline constexpr std::size_t kDefaultRingCapacity = 32000;
inline constexpr std::size_t kEnvelopeWindow = 101;
inline constexpr double kWindowSeconds = 3.75;

struct SampleStream {
    int rate_hz = kSampleRate;
    std::vector<double> samples;
};

/// One analysis window. Segment k covers stream samples [4000k, 4000k + 15000).
struct Segment {
    std::vector<double> samples;
    double start_time_s = 0.0;
    std::uint64_t index = 0;
};

/// Builds a segment from raw samples; the stream time is derived from the index.
Segment make_segment(std::vector<double> samples, std::uint64_t index = 0);

/// Fixed-capacity overwrite-oldest sample ring.
///
/// Safe for exactly one writer thread and one reader thread. Readers detect
/// windows that were overwritten while being copied and report them as lost.
class RingBuffer {
public:
    enum class ReadStatus { Ok, NotReady, DataLost };

    explicit RingBuffer(std::size_t capacity = kDefaultRingCapacity);

    RingBuffer(const RingBuffer&) = delete;
    RingBuffer& operator=(const RingBuffer&) = delete;

    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t write_count() const noexcept {
        return published_.load(std::memory_order_acquire);
    }

    void write(std::span<const double> chunk);

    /// Copies stream samples [start, start + out.size()) into out.
    ReadStatus read(std::uint64_t start, std::span<double> out) const;

    /// The most recent min(write_count, capacity) samples in arrival order.
    std::vector<double> contents() const;

private:
    std::size_t capacity_;
    std::unique_ptr<std::atomic<double>[]> slots_;
    std::atomic<std::uint64_t> claimed_{0};
    std::atomic<std::uint64_t> published_{0};
};

/// Window `next_index` of the stream, or nullopt when not all of it has arrived.
/// Throws Error(DataLost) when its oldest sample has already been overwritten.
std::optional<Segment> pop_segment(const RingBuffer& buf, std::uint64_t next_index);

SampleStream resample(const SampleStream& input, int target_rate_hz);

std::vector<double> remove_mean(std::span<const double> x);

/// Mean-removed, full-wave rectified, centered 101-sample moving average.
/// Edge samples average over the part of the window that lies inside the input.
std::vector<double> envelope(std::span<const double> x);

/// |DFT|^2 of the mean-removed input, bins 0..N/2.
std::vector<double> power_spectrum(std::span<const double> x);

} // namespace pulsepipe
