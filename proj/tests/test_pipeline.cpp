#include "pulsepipe/error.hpp"
#include "pulsepipe/pipeline.hpp"
#include "pulsepipe/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

using namespace pulsepipe;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

std::vector<double> good_stream(std::size_t n, std::uint32_t seed = 1, double bpm = 140.0) {
    auto s = synth_doppler(bpm, static_cast<double>(n) / kSampleRate + 1.0, 0.05, seed).samples;
    s.resize(n);
    return s;
}

std::vector<TickReport> feed_in_chunks(const std::vector<double>& stream, std::size_t chunk) {
    Session session;
    std::vector<TickReport> all;
    for (std::size_t i = 0; i < stream.size(); i += chunk) {
        const std::size_t n = std::min(chunk, stream.size() - i);
        auto r = session.feed(std::span<const double>(stream).subspan(i, n));
        all.insert(all.end(), r.begin(), r.end());
    }
    return all;
}

// Everything except the timing metadata.
bool same_analytics(const TickReport& a, const TickReport& b) {
    auto fhr_eq = [](const std::optional<FhrEstimate>& x, const std::optional<FhrEstimate>& y) {
        if (x.has_value() != y.has_value()) return false;
        return !x || (x->bpm == y->bpm && x->rho == y->rho && x->lag_samples == y->lag_samples);
    };
    return a.tick_index == b.tick_index && a.t_end_s == b.t_end_s && a.quality.cls == b.quality.cls &&
           a.quality.scores == b.quality.scores && fhr_eq(a.fhr, b.fhr) &&
           a.fhr_absent_reason == b.fhr_absent_reason && a.ga_weeks == b.ga_weeks && a.ga_windows == b.ga_windows;
}

} // namespace

TEST_SUITE("tick law") {
    TEST_CASE("warm-up and hop arithmetic") {
        const auto stream = good_stream(23000);
        Session s;
        auto first = s.feed(std::span<const double>(stream).first(15000));
        REQUIRE(first.size() == 1);
        CHECK(first[0].tick_index == 0);
        CHECK(first[0].t_end_s == 3.75);
        auto second = s.feed(std::span<const double>(stream).subspan(15000, 4000));
        REQUIRE(second.size() == 1);
        CHECK(second[0].tick_index == 1);
        CHECK(second[0].t_end_s == 4.75);

        Session cold;
        const auto three = cold.feed(stream);
        REQUIRE(three.size() == 3);
        for (std::uint64_t i = 0; i < 3; ++i) CHECK(three[i].tick_index == i);
    }

    TEST_CASE("tick count formula") {
        CHECK(expected_ticks(0) == 0);
        CHECK(expected_ticks(14999) == 0);
        CHECK(expected_ticks(15000) == 1);
        CHECK(expected_ticks(18999) == 1);
        CHECK(expected_ticks(19000) == 2);
        CHECK(expected_ticks(103000) == 23);
        for (std::uint64_t k = 0; k < 50; ++k) CHECK(tick_end_time(k) == 3.75 + static_cast<double>(k));
    }

    TEST_CASE("chunking yields identical reports") {
        const auto stream = good_stream(43000, 4);
        const auto whole = feed_in_chunks(stream, stream.size());
        REQUIRE(whole.size() == expected_ticks(stream.size()));
        for (std::size_t chunk : {1u, 400u, 977u, 16000u}) {
            CAPTURE(chunk);
            const auto parts = feed_in_chunks(stream, chunk);
            REQUIRE(parts.size() == whole.size());
            for (std::size_t i = 0; i < parts.size(); ++i) CHECK(same_analytics(parts[i], whole[i]));
        }
    }

    TEST_CASE("count matches the law for many lengths") {
        for (std::size_t n : {14999u, 15000u, 19000u, 23000u, 30001u, 63999u}) {
            Session s;
            s.feed(good_stream(n, 2));
            CHECK(s.ticks_emitted() == expected_ticks(n));
        }
    }
}

TEST_SUITE("session") {
    TEST_CASE("FHR is reported only for Good windows") {
        std::vector<double> stream = good_stream(40000, 3);
        Lcg rng(8);
        for (std::size_t i = 20000; i < 40000; ++i) stream[i] = 0.3 * rng.next_signed();
        Session s;
        const auto reports = s.feed(stream);
        bool saw_good = false;
        bool saw_other = false;
        for (const auto& r : reports) {
            if (r.quality.cls == QualityClass::Good) {
                saw_good = true;
                CHECK((r.fhr.has_value() != r.fhr_absent_reason.has_value()));
            } else {
                saw_other = true;
                CHECK_FALSE(r.fhr.has_value());
                CHECK(r.fhr_absent_reason == "not_good");
            }
            CHECK(r.processing_ms >= 0.0);
        }
        CHECK(saw_good);
        CHECK(saw_other);
    }

    TEST_CASE("phases") {
        Session s;
        CHECK(s.phase() == Phase::Idle);
        s.start();
        CHECK(s.phase() == Phase::Warming);
        s.feed(good_stream(14999));
        CHECK(s.phase() == Phase::Warming);
        s.feed(std::vector<double>(1, 0.0));
        CHECK(s.phase() == Phase::Running);
        s.stop();
        CHECK(s.phase() == Phase::Stopped);
        CHECK(phase_name(Phase::Running) == "running");
    }

    TEST_CASE("reposition marks are recorded without analytic effect") {
        const auto stream = good_stream(31000, 5);
        const auto plain = feed_in_chunks(stream, 4000);

        Session s;
        std::vector<TickReport> marked;
        for (std::size_t i = 0; i < stream.size(); i += 4000) {
            const std::size_t n = std::min<std::size_t>(4000, stream.size() - i);
            auto r = s.feed(std::span<const double>(stream).subspan(i, n));
            marked.insert(marked.end(), r.begin(), r.end());
            if (i == 8000) s.mark_reposition("first");
            if (i == 20000) s.mark_reposition("second");
        }
        REQUIRE(marked.size() == plain.size());
        for (std::size_t i = 0; i < plain.size(); ++i) CHECK(same_analytics(marked[i], plain[i]));

        std::vector<SessionEvent> marks;
        for (const auto& e : s.events())
            if (e.kind == EventKind::Reposition) marks.push_back(e);
        REQUIRE(marks.size() == 2);
        CHECK(marks[0].note == "first");
        CHECK(marks[1].note == "second");
        CHECK(marks[0].t_s == 3.0);
        CHECK(marks[1].t_s == 6.0);

        s.stop();
        CHECK(kind_of([&] { s.mark_reposition("late"); }) == ErrorKind::SessionStopped);
        CHECK(kind_of([&] { s.feed(stream); }) == ErrorKind::SessionStopped);
        CHECK(kind_of([&] { s.start(); }) == ErrorKind::SessionStopped);
    }

    TEST_CASE("stop right after start") {
        Session s;
        s.start();
        const SessionSummary sum = s.stop();
        CHECK(sum.ticks == 0);
        CHECK_FALSE(sum.ga.has_value());
        CHECK(sum.ga_absent_reason == "no_good_windows");
        CHECK_FALSE(sum.fhr_mean_bpm.has_value());
        // idempotent
        CHECK(s.stop().ticks == 0);
        const auto ev = s.events();
        REQUIRE(ev.size() == 2);
        CHECK(ev.front().kind == EventKind::Started);
        CHECK(ev.back().kind == EventKind::Stopped);
    }

    TEST_CASE("a session with no Good windows has no GA") {
        Lcg rng(1);
        std::vector<double> noise(30000);
        for (double& v : noise) v = 0.3 * rng.next_signed();
        Session s;
        s.feed(noise);
        const SessionSummary sum = s.stop();
        CHECK(sum.ticks == expected_ticks(30000));
        CHECK(sum.class_counts[static_cast<std::size_t>(QualityClass::Interference)] == sum.ticks);
        CHECK_FALSE(sum.ga.has_value());
        CHECK(sum.ga_absent_reason == "no_good_windows");
    }

    TEST_CASE("GA uses at most ten windows") {
        Session s;
        const auto reports = s.feed(good_stream(15000 + 13 * 4000, 6));
        REQUIRE(reports.size() == 14);
        std::size_t good = 0;
        for (const auto& r : reports) {
            if (r.quality.cls == QualityClass::Good && r.fhr) ++good;
            CHECK(r.ga_windows == std::min<std::size_t>(good, 10));
            CHECK(r.ga_weeks.has_value() == (good > 0));
        }
        CHECK(good >= 12);
        const SessionSummary sum = s.stop();
        REQUIRE(sum.ga.has_value());
        CHECK(sum.ga->n_windows_used == 10);
        CHECK(sum.ga->weeks == reports.back().ga_weeks);
    }

    TEST_CASE("summary FHR over the 139.68 / 13.03 suite") {
        // each fixture sits alone between silent gaps so no window mixes two rates
        const auto bpms = bpm_suite(100, 139.68, 13.03, 7);
        Session s;
        std::vector<double> gap(16000, 0.0);
        for (std::size_t i = 0; i < bpms.size(); ++i) {
            s.feed(good_stream(16000, static_cast<std::uint32_t>(i + 1), bpms[i]));
            s.feed(gap);
        }
        const SessionSummary sum = s.stop();
        REQUIRE(sum.fhr_mean_bpm.has_value());
        CHECK(sum.fhr_count >= 100);
        CHECK(std::abs(*sum.fhr_mean_bpm - 139.68) <= 1.0);
        CHECK(std::abs(*sum.fhr_sd_bpm - 13.03) <= 1.0);
    }

    TEST_CASE("a zero budget flags every tick") {
        PipelineConfig cfg;
        cfg.tick_budget_ms = 0.0;
        Session s(cfg);
        const auto reports = s.feed(good_stream(23000));
        for (const auto& r : reports) CHECK(r.deadline_missed);
        CHECK(s.stop().deadline_misses == 3);
    }

    TEST_CASE("undersized rings are rejected") {
        PipelineConfig cfg;
        cfg.ring_capacity = 18999;
        CHECK(kind_of([&] { Session s(cfg); }) == ErrorKind::InvalidArgument);
        cfg.classifier = "nope";
        cfg.ring_capacity = 32000;
        CHECK(kind_of([&] { Session s(cfg); }) == ErrorKind::InvalidArgument);
    }
}

TEST_SUITE("concurrent operation") {
    TEST_CASE("a stalled reader resynchronizes after data loss") {
        PipelineConfig cfg;
        cfg.ring_capacity = 19000;
        Session s(cfg);
        s.start();
        const auto stream = good_stream(60000);
        s.ingest(stream);
        const auto reports = s.process_ready();
        REQUIRE_FALSE(reports.empty());
        CHECK(reports.front().tick_index == expected_ticks(60000) - 1);
        std::size_t lost = 0;
        for (const auto& e : s.events()) lost += e.kind == EventKind::DataLost;
        CHECK(lost == 1);
        CHECK(s.summary().data_lost_events == 1);

        // later windows continue in order
        s.ingest(std::span<const double>(stream).first(4000));
        const auto more = s.process_ready();
        REQUIRE(more.size() == 1);
        CHECK(more[0].tick_index == reports.back().tick_index + 1);
    }

    TEST_CASE("writer and reader threads") {
        Session s;
        s.start();
        const auto stream = good_stream(15000 + 40 * 4000, 9);
        std::atomic<bool> done{false};
        std::thread writer([&] {
            for (std::size_t i = 0; i < stream.size(); i += 400) {
                s.ingest(std::span<const double>(stream).subspan(i, std::min<std::size_t>(400, stream.size() - i)));
                if (i % 8000 == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
            }
            done = true;
        });
        std::vector<TickReport> all;
        for (;;) {
            const bool finished = done.load();
            auto r = s.process_ready();
            all.insert(all.end(), r.begin(), r.end());
            if (finished && r.empty()) break;
            if (r.empty()) std::this_thread::yield();
        }
        writer.join();
        for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i].tick_index > all[i - 1].tick_index);
        CHECK(all.back().tick_index == expected_ticks(stream.size()) - 1);
        if (s.summary().data_lost_events == 0) CHECK(all.size() == expected_ticks(stream.size()));
    }
}

TEST_SUITE("broadcast") {
    TEST_CASE("subscribers see ticks and events in order") {
        Session s;
        auto sub = s.subscribe();
        s.feed(good_stream(23000));
        s.mark_reposition("x");
        std::vector<std::uint64_t> ticks;
        std::vector<EventKind> kinds;
        while (auto d = sub->queue.try_pop()) {
            CHECK(d->dropped == 0);
            if (auto* t = std::get_if<TickReport>(&d->item)) ticks.push_back(t->tick_index);
            else kinds.push_back(std::get<SessionEvent>(d->item).kind);
        }
        CHECK(ticks == std::vector<std::uint64_t>{0, 1, 2});
        CHECK(kinds == std::vector<EventKind>{EventKind::Started, EventKind::Reposition});
        s.unsubscribe(sub);
        CHECK(s.subscriber_count() == 0);
    }

    TEST_CASE("a slow subscriber loses the oldest items and learns how many") {
        PipelineConfig cfg;
        cfg.subscriber_queue_depth = 4;
        Session s(cfg);
        auto slow = s.subscribe();
        s.start();
        s.feed(good_stream(15000 + 9 * 4000));  // 10 ticks, plus the start event
        auto first = slow->queue.try_pop();
        REQUIRE(first);
        CHECK(first->dropped == 7);
        CHECK(std::get<TickReport>(first->item).tick_index == 6);
        std::size_t rest = 0;
        while (auto d = slow->queue.try_pop()) {
            CHECK(d->dropped == 0);
            ++rest;
        }
        CHECK(rest == 3);
        CHECK(slow->queue.total_dropped() == 7);
    }

    TEST_CASE("drop-oldest queue") {
        DropOldestQueue<int> q(3);
        for (int i = 0; i < 5; ++i) q.push(i);
        auto d = q.try_pop();
        REQUIRE(d);
        CHECK(d->item == 2);
        CHECK(d->dropped == 2);
        q.push(9);
        CHECK(q.try_pop()->item == 3);
        CHECK(q.try_pop()->item == 4);
        CHECK(q.try_pop()->item == 9);
        CHECK_FALSE(q.try_pop());
        q.close();
        CHECK(q.closed());
        CHECK_FALSE(q.pop_for(std::chrono::milliseconds(1)));
    }
}
