#pragma once

#include "pulsepipe/pipeline.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>

namespace pulsepipe {

struct GatewayOptions {
    std::string address = "127.0.0.1";
    /// 0 picks a free port.
    unsigned short port = 0;
    /// Kernel send buffer for client sockets; 0 keeps the system default.
    int send_buffer_bytes = 0;
};

/// Applies a set_noise control. Only synthetic sources provide one.
using NoiseControl = std::function<void(double)>;

/// WebSocket endpoint at /live serving one session.
///
/// Every client gets a hello frame, then each tick and event published after it
/// connected, through its own drop-oldest queue. Clients may send control frames
/// (start, stop, mark_reposition, set_noise); replies go to the sender only.
class Gateway {
public:
    /// Binds and starts serving on a background thread. Throws PortInUse.
    Gateway(Session& session, const GatewayOptions& options, NoiseControl noise = {});
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    unsigned short port() const noexcept;
    std::size_t client_count() const;

    /// Lets clients drain their queues for up to `drain`, then closes every
    /// connection. Idempotent.
    void shutdown(std::chrono::milliseconds drain = std::chrono::milliseconds(1000));

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

/// Frame payloads, shared with tests and tools.
std::string hello_frame();
std::string tick_frame(const TickReport& r, std::uint64_t dropped);
std::string event_frame(const SessionEvent& e, std::uint64_t dropped);

} // namespace pulsepipe
