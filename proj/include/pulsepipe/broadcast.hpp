#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

namespace pulsepipe {

/// An item plus the number of items dropped for this consumer since the
/// previous delivery.
template <typename T>
struct Delivery {
    T item;
    std::uint64_t dropped = 0;
};

/// Bounded multi-producer queue that never blocks the producer: when full the
/// oldest item is discarded and counted.
template <typename T>
class DropOldestQueue {
public:
    explicit DropOldestQueue(std::size_t depth) : depth_(depth == 0 ? 1 : depth) {}

    void push(T item) {
        {
            std::lock_guard lock(mutex_);
            if (closed_) return;
            if (items_.size() >= depth_) {
                items_.pop_front();
                ++pending_dropped_;
                ++total_dropped_;
            }
            items_.push_back(std::move(item));
        }
        ready_.notify_one();
    }

    std::optional<Delivery<T>> try_pop() {
        std::lock_guard lock(mutex_);
        return take();
    }

    /// Waits up to `timeout`; returns nullopt on timeout or once closed and drained.
    template <typename Rep, typename Period>
    std::optional<Delivery<T>> pop_for(std::chrono::duration<Rep, Period> timeout) {
        std::unique_lock lock(mutex_);
        ready_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); });
        return take();
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        ready_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }
    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return items_.size();
    }
    std::uint64_t total_dropped() const {
        std::lock_guard lock(mutex_);
        return total_dropped_;
    }
    std::size_t depth() const noexcept { return depth_; }

private:
    std::optional<Delivery<T>> take() {
        if (items_.empty()) return std::nullopt;
        Delivery<T> d{std::move(items_.front()), pending_dropped_};
        items_.pop_front();
        pending_dropped_ = 0;
        return d;
    }

    const std::size_t depth_;
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<T> items_;
    std::uint64_t pending_dropped_ = 0;
    std::uint64_t total_dropped_ = 0;
    bool closed_ = false;
};

/// Fan-out to any number of subscribers, each with its own bounded queue.
/// publish() costs one queue push per live subscriber and never waits on a consumer.
template <typename T>
class Broadcaster {
public:
    class Subscription {
    public:
        explicit Subscription(std::size_t depth) : queue(depth) {}
        DropOldestQueue<T> queue;
        /// Called after each push, from the publishing thread. Must not block.
        std::function<void()> on_ready;
    };

    std::shared_ptr<Subscription> subscribe(std::size_t depth, std::function<void()> on_ready = {}) {
        auto sub = std::make_shared<Subscription>(depth);
        sub->on_ready = std::move(on_ready);
        std::lock_guard lock(mutex_);
        subscribers_.push_back(sub);
        return sub;
    }

    void unsubscribe(const std::shared_ptr<Subscription>& sub) {
        sub->queue.close();
        std::lock_guard lock(mutex_);
        std::erase_if(subscribers_, [&](const auto& w) {
            auto s = w.lock();
            return !s || s == sub;
        });
    }

    void publish(const T& item) {
        std::vector<std::shared_ptr<Subscription>> live;
        {
            std::lock_guard lock(mutex_);
            std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
            for (const auto& w : subscribers_) {
                if (auto s = w.lock()) live.push_back(std::move(s));
            }
        }
        for (const auto& s : live) {
            s->queue.push(item);
            if (s->on_ready) s->on_ready();
        }
    }

    std::size_t subscriber_count() const {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& w : subscribers_) n += !w.expired();
        return n;
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
};

} // namespace pulsepipe
