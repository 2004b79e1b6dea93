#include "oracles.hpp"

#include "pulsepipe/dsp.hpp"
#include "pulsepipe/error.hpp"
#include "pulsepipe/quality.hpp"
#include "pulsepipe/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

using namespace pulsepipe;

namespace {

std::vector<double> ramp(std::size_t n, double start = 0.0) {
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), start);
    return v;
}

std::vector<double> tone(double hz, int rate, std::size_t n, double amplitude = 1.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * i / rate);
    return v;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

} // namespace

TEST_SUITE("resample") {
    TEST_CASE("integer decimation by two keeps every other sample") {
        SampleStream in{8000, ramp(8000)};
        const SampleStream out = resample(in, 4000);
        CHECK(out.rate_hz == 4000);
        REQUIRE(out.samples.size() == 4000);
        for (std::size_t k = 0; k < out.samples.size(); ++k) CHECK(out.samples[k] == in.samples[2 * k]);
    }

    TEST_CASE("identical rates return the input bit for bit") {
        Lcg rng(3);
        SampleStream in{4000, std::vector<double>(5000)};
        for (double& v : in.samples) v = rng.next_signed();
        const SampleStream out = resample(in, 4000);
        CHECK(out.samples == in.samples);
    }

    TEST_CASE("44.1 kHz to 4 kHz matches the interpolation oracle") {
        Lcg rng(11);
        SampleStream in{44100, std::vector<double>(44100)};
        for (double& v : in.samples) v = rng.next_signed();
        const SampleStream out = resample(in, 4000);
        const auto expected = oracle::linear_resample(in.samples, 44100, 4000);
        REQUIRE(out.samples.size() == 4000);
        REQUIRE(expected.size() == 4000);
        double worst = 0.0;
        for (std::size_t k = 0; k < expected.size(); ++k) worst = std::max(worst, std::abs(out.samples[k] - expected[k]));
        CHECK(worst <= 1e-9);
    }

    TEST_CASE("empty input is rejected") {
        CHECK(kind_of([] { resample(SampleStream{8000, {}}, 4000); }) == ErrorKind::EmptyStream);
    }

    TEST_CASE("a resampled 100 Hz tone stays at 100 Hz") {
        const std::size_t n_in = 165375;  // 3.75 s at 44.1 kHz
        const SampleStream out = resample(SampleStream{44100, tone(100.0, 44100, n_in)}, 4000);
        REQUIRE(out.samples.size() == kWindowSamples);
        const auto power = power_spectrum(out.samples);
        const auto peak = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
        const double bin_hz = static_cast<double>(kSampleRate) / kWindowSamples;
        CHECK(std::abs(peak * bin_hz - 100.0) <= bin_hz);
    }
}

TEST_SUITE("ring buffer") {
    TEST_CASE("a partial fill reads back in order") {
        RingBuffer ring(16000);
        const auto data = ramp(4000, 1.0);
        ring.write(data);
        CHECK(ring.write_count() == 4000);
        CHECK(ring.contents() == data);
    }

    TEST_CASE("overflow keeps the newest samples") {
        RingBuffer ring(16000);
        ring.write(ramp(20000, 1.0));
        const auto c = ring.contents();
        REQUIRE(c.size() == 16000);
        CHECK(c.front() == 4001.0);
        CHECK(c.back() == 20000.0);
        CHECK(std::is_sorted(c.begin(), c.end()));
    }

    TEST_CASE("interleaved writes equal one concatenated write") {
        RingBuffer a(16000);
        oracle::ListRing expect{16000, {}};
        double next = 0.0;
        for (std::size_t size : {1000u, 3000u, 512u}) {
            const auto chunk = ramp(size, next);
            next += static_cast<double>(size);
            a.write(chunk);
            expect.write(chunk);
        }
        CHECK(a.contents() == expect.contents());
    }

    TEST_CASE("randomized schedules match the list oracle") {
        Lcg rng(2024);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t cap = 1 + rng.next_u32() % 5000;
            RingBuffer ring(cap);
            oracle::ListRing expect{cap, {}};
            const int writes = 1 + static_cast<int>(rng.next_u32() % 12);
            for (int w = 0; w < writes; ++w) {
                std::vector<double> chunk(rng.next_u32() % 3000);
                for (double& v : chunk) v = rng.next_signed();
                ring.write(chunk);
                expect.write(chunk);
            }
            REQUIRE(ring.write_count() == expect.all.size());
            REQUIRE(ring.contents() == expect.contents());
        }
    }

    TEST_CASE("zero capacity is rejected") {
        CHECK(kind_of([] { RingBuffer r(0); }) == ErrorKind::InvalidArgument);
    }
}

TEST_SUITE("pop_segment") {
    TEST_CASE("one sample short is not ready") {
        RingBuffer ring(32000);
        ring.write(ramp(14999));
        CHECK_FALSE(pop_segment(ring, 0).has_value());
    }

    TEST_CASE("segment one covers samples 4000..18999") {
        RingBuffer ring(32000);
        ring.write(ramp(19000));
        const auto seg = pop_segment(ring, 1);
        REQUIRE(seg.has_value());
        CHECK(seg->index == 1);
        CHECK(seg->start_time_s == 1.0);
        REQUIRE(seg->samples.size() == kWindowSamples);
        CHECK(seg->samples.front() == 4000.0);
        CHECK(seg->samples.back() == 18999.0);
    }

    TEST_CASE("an evicted window reports data loss") {
        RingBuffer ring(16000);
        ring.write(ramp(40000));
        CHECK(kind_of([&] { pop_segment(ring, 0); }) == ErrorKind::DataLost);
    }

    TEST_CASE("consecutive segments overlap by 11000 samples") {
        RingBuffer ring(32000);
        ring.write(ramp(27000));
        for (std::uint64_t k = 0; k + 1 <= 2; ++k) {
            const auto a = pop_segment(ring, k);
            const auto b = pop_segment(ring, k + 1);
            REQUIRE(a);
            REQUIRE(b);
            CHECK(a->samples.front() == static_cast<double>(4000 * k));
            CHECK(std::equal(a->samples.begin() + 4000, a->samples.end(), b->samples.begin()));
            CHECK(b->samples.size() - 4000 == 11000);
        }
    }

    TEST_CASE("concurrent reader never sees a torn window") {
        RingBuffer ring(20000);
        constexpr std::uint64_t total = 400000;
        std::atomic<bool> done{false};
        std::thread writer([&] {
            std::uint64_t written = 0;
            while (written < total) {
                const std::size_t n = 1 + (written * 7919) % 2500;
                ring.write(ramp(std::min<std::uint64_t>(n, total - written), static_cast<double>(written)));
                written += std::min<std::uint64_t>(n, total - written);
            }
            done = true;
        });
        std::uint64_t next = 0;
        std::size_t good = 0;
        std::size_t lost = 0;
        for (;;) {
            const bool writer_finished = done.load();
            try {
                auto seg = pop_segment(ring, next);
                if (!seg) {
                    if (writer_finished) break;
                    std::this_thread::yield();
                    continue;
                }
                for (std::size_t i = 0; i < seg->samples.size(); ++i) {
                    REQUIRE(seg->samples[i] == static_cast<double>(next * kHopSamples + i));
                }
                ++good;
                ++next;
            } catch (const Error& e) {
                REQUIRE(e.kind() == ErrorKind::DataLost);
                ++lost;
                next = (ring.write_count() - kWindowSamples) / kHopSamples;
            }
        }
        writer.join();
        CHECK(good + lost > 0);
    }
}

TEST_SUITE("envelope") {
    TEST_CASE("silence and DC give a zero envelope") {
        const auto zero = envelope(std::vector<double>(kWindowSamples, 0.0));
        CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));
        const auto dc = envelope(std::vector<double>(kWindowSamples, 0.5));
        CHECK(std::all_of(dc.begin(), dc.end(), [](double v) { return std::abs(v) < 1e-12; }));
    }

    TEST_CASE("a unit impulse spreads into a 101-sample plateau") {
        std::vector<double> x(kWindowSamples, 0.0);
        x[7000] = 1.0;
        const auto env = envelope(x);
        REQUIRE(env.size() == kWindowSamples);
        const auto expected = oracle::envelope(x);
        for (std::size_t i = 0; i < env.size(); ++i) REQUIRE(env[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        // mean removal leaves a 1/15000 floor
        for (std::size_t i = 6950; i <= 7050; ++i) CHECK(env[i] == doctest::Approx(1.0 / 101.0).epsilon(0.01));
        CHECK(env[6949] < 1e-4);
        CHECK(env[7051] < 1e-4);
        CHECK(env[6950] == env[7050]);
    }

    TEST_CASE("matches the direct moving average, is non-negative and sign-blind") {
        Lcg rng(5);
        std::vector<double> x(3000);
        for (double& v : x) v = rng.next_signed();
        const auto env = envelope(x);
        const auto expected = oracle::envelope(x);
        std::vector<double> flipped(x);
        for (double& v : flipped) v = -v;
        const auto env_flipped = envelope(flipped);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(env[i] >= 0.0);
            CHECK(env[i] == doctest::Approx(expected[i]).epsilon(1e-9));
            CHECK(env_flipped[i] == doctest::Approx(env[i]).epsilon(1e-12));
        }
    }
}

TEST_SUITE("power spectrum") {
    TEST_CASE("silence has no power") {
        const auto p = power_spectrum(std::vector<double>(kWindowSamples, 0.0));
        CHECK(p.size() == 7501);
        CHECK(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }));
    }

    TEST_CASE("a 400 Hz tone lands in bin 1500") {
        const auto p = power_spectrum(tone(400.0, kSampleRate, kWindowSamples));
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        const auto peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        CHECK(peak == 1500);
        CHECK(p[1500] / total > 0.99);
    }

    TEST_CASE("agrees with a brute-force DFT") {
        Lcg rng(8);
        std::vector<double> x(300);
        for (double& v : x) v = rng.next_signed();
        const auto fast = power_spectrum(x);
        const auto slow = oracle::dft_power(x);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-9).scale(1.0));
    }

    TEST_CASE("Parseval holds to 1e-6") {
        Lcg rng(9);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> x(kWindowSamples);
            for (double& v : x) v = rng.next_signed() * (trial + 1);
            const auto p = power_spectrum(x);
            const auto c = oracle::centered(x);
            double energy = 0.0;
            for (double v : c) energy += v * v;
            // one-sided sum for even N: interior bins count twice
            double spectral = p.front() + p.back();
            for (std::size_t k = 1; k + 1 < p.size(); ++k) spectral += 2.0 * p[k];
            spectral /= static_cast<double>(x.size());
            CHECK(std::abs(spectral - energy) / energy < 1e-6);
        }
    }

    TEST_CASE("white noise is spectrally flat") {
        Lcg rng(21);
        std::vector<double> x(kWindowSamples);
        for (double& v : x) v = 0.5 * rng.next_signed();
        CHECK(spectral_flatness(power_spectrum(x)) > 0.9);
    }
}
