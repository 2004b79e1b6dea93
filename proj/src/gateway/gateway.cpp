#include "pulsepipe/gateway.hpp"

#include "pulsepipe/error.hpp"
#include "pulsepipe/session_io.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <atomic>
#include <deque>
#include <future>
#include <mutex>
#include <set>
#include <thread>

namespace pulsepipe {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::ordered_json;

std::string hello_frame() {
    return ordered_json{{"type", "hello"}, {"schema", kSchema}}.dump();
}

std::string tick_frame(const TickReport& r, std::uint64_t dropped) {
    // same keys as a log row, framed
    const std::string row = row_json(r);
    return R"({"type":"tick",)" + row.substr(1, row.size() - 2) + R"(,"dropped":)" + std::to_string(dropped) + "}";
}

std::string event_frame(const SessionEvent& e, std::uint64_t dropped) {
    ordered_json j{{"type", "event"}, {"kind", event_kind_name(e.kind)}, {"t_s", e.t_s}};
    if (!e.note.empty()) j["note"] = e.note;
    j["dropped"] = dropped;
    return j.dump();
}

namespace {

std::string error_frame(std::string_view reason) {
    return ordered_json{{"type", "error"}, {"reason", reason}}.dump();
}

std::string ack_frame(std::string_view action) {
    return ordered_json{{"type", "ack"}, {"action", action}}.dump();
}

} // namespace

struct Gateway::Impl : std::enable_shared_from_this<Gateway::Impl> {
    class Client;

    Impl(Session& s, NoiseControl n, int sndbuf) : session(s), noise(std::move(n)), send_buffer(sndbuf) {}

    Session& session;
    NoiseControl noise;
    int send_buffer;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::thread thread;
    std::atomic<bool> closing{false};

    mutable std::mutex clients_mutex;
    std::set<std::shared_ptr<Client>> clients;

    void accept_next();
    std::string handle_control(std::string_view text);
};

class Gateway::Impl::Client : public std::enable_shared_from_this<Client> {
public:
    Client(std::shared_ptr<Impl> owner, tcp::socket socket) : owner_(std::move(owner)), ws_(std::move(socket)) {}

    void run() {
        auto self = shared_from_this();
        http::async_read(ws_.next_layer(), buffer_, request_, [self](beast::error_code ec, std::size_t) {
            if (ec) return self->finish();
            self->on_request();
        });
    }

    // Runs on the io thread.
    void pump() {
        if (writing_ || closed_) return;
        if (outbox_.empty()) {
            if (!sub_) return;
            auto d = sub_->queue.try_pop();
            if (!d) return;
            if (const auto* tick = std::get_if<TickReport>(&d->item)) outbox_.push_back(tick_frame(*tick, d->dropped));
            else outbox_.push_back(event_frame(std::get<SessionEvent>(d->item), d->dropped));
        }
        writing_ = true;
        ws_.text(true);
        auto self = shared_from_this();
        ws_.async_write(net::buffer(outbox_.front()), [self](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            self->outbox_.pop_front();
            if (ec) return self->finish();
            self->pump();
        });
    }

    bool idle() const { return !writing_ && outbox_.empty() && (!sub_ || sub_->queue.size() == 0); }

    void close() {
        if (closed_) return;
        auto self = shared_from_this();
        if (accepted_) {
            ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) { self->finish(); });
        } else {
            beast::error_code ignored;
            ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
            finish();
        }
    }

    /// Hard close after the io thread has stopped.
    void kill() {
        beast::error_code ignored;
        beast::get_lowest_layer(ws_).socket().close(ignored);
        finish();
    }

private:
    void on_request() {
        if (!websocket::is_upgrade(request_) || request_.target() != "/live") {
            auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
            res->set(http::field::content_type, "text/plain");
            res->body() = "websocket endpoint is /live\n";
            res->prepare_payload();
            auto self = shared_from_this();
            http::async_write(ws_.next_layer(), *res, [self, res](beast::error_code, std::size_t) {
                beast::error_code ignored;
                self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
                self->finish();
            });
            return;
        }
        auto self = shared_from_this();
        ws_.async_accept(request_, [self](beast::error_code ec) {
            if (ec) return self->finish();
            self->on_open();
        });
    }

    void on_open() {
        accepted_ = true;
        outbox_.push_back(hello_frame());
        std::weak_ptr<Client> weak = shared_from_this();
        std::weak_ptr<Impl> owner = owner_;
        // runs on the publishing thread; the io_context lives as long as its owner
        sub_ = owner_->session.subscribe([weak, owner] {
            if (auto o = owner.lock()) {
                net::post(o->ioc, [weak] {
                    if (auto c = weak.lock()) c->pump();
                });
            }
        });
        pump();
        read_next();
    }

    void read_next() {
        auto self = shared_from_this();
        ws_.async_read(inbound_, [self](beast::error_code ec, std::size_t) {
            if (ec) return self->finish();
            const std::string text = beast::buffers_to_string(self->inbound_.data());
            self->inbound_.consume(self->inbound_.size());
            self->outbox_.push_back(self->owner_->handle_control(text));
            self->pump();
            self->read_next();
        });
    }

    void finish() {
        if (closed_) return;
        closed_ = true;
        if (sub_) owner_->session.unsubscribe(sub_);
        std::lock_guard lock(owner_->clients_mutex);
        owner_->clients.erase(shared_from_this());
    }

    std::shared_ptr<Impl> owner_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    beast::flat_buffer inbound_;
    http::request<http::string_body> request_;
    std::shared_ptr<SessionBroadcaster::Subscription> sub_;
    std::deque<std::string> outbox_;
    bool writing_ = false;
    bool accepted_ = false;
    bool closed_ = false;
};

void Gateway::Impl::accept_next() {
    auto self = shared_from_this();
    acceptor.async_accept(ioc, [self](beast::error_code ec, tcp::socket socket) {
        if (ec || self->closing) return;
        if (self->send_buffer > 0) {
            beast::error_code ignored;
            socket.set_option(net::socket_base::send_buffer_size(self->send_buffer), ignored);
        }
        auto client = std::make_shared<Client>(self, std::move(socket));
        {
            std::lock_guard lock(self->clients_mutex);
            self->clients.insert(client);
        }
        client->run();
        self->accept_next();
    });
}

std::string Gateway::Impl::handle_control(std::string_view text) {
    const ordered_json msg = ordered_json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object() || msg.value("type", "") != "control" || !msg.contains("action") ||
        !msg["action"].is_string()) {
        return error_frame("bad_action");
    }
    const std::string action = msg["action"];
    try {
        if (action == "start") {
            session.start();
        } else if (action == "stop") {
            if (session.phase() == Phase::Stopped) return error_frame("session_stopped");
            session.stop();
        } else if (action == "mark_reposition") {
            const auto note = msg.find("note");
            session.mark_reposition(note != msg.end() && note->is_string() ? note->get<std::string>() : std::string());
        } else if (action == "set_noise") {
            const auto level = msg.find("level");
            if (!noise || level == msg.end() || !level->is_number()) return error_frame("bad_action");
            const double v = level->get<double>();
            if (!(v >= 0.0 && v <= 1.0)) return error_frame("bad_action");
            if (session.phase() == Phase::Stopped) return error_frame("session_stopped");
            noise(v);
        } else {
            return error_frame("bad_action");
        }
    } catch (const Error& e) {
        return error_frame(e.kind() == ErrorKind::SessionStopped ? "session_stopped" : "bad_action");
    }
    return ack_frame(action);
}

Gateway::Gateway(Session& session, const GatewayOptions& options, NoiseControl noise)
    : impl_(std::make_shared<Impl>(session, std::move(noise), options.send_buffer_bytes)) {
    beast::error_code ec;
    const auto address = net::ip::make_address(options.address, ec);
    if (ec) throw Error(ErrorKind::InvalidArgument, "bad listen address " + options.address);
    const tcp::endpoint endpoint(address, options.port);
    auto& acc = impl_->acceptor;
    acc.open(endpoint.protocol(), ec);
    if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acc.bind(endpoint, ec);
    if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        if (ec == net::error::address_in_use || ec == net::error::access_denied)
            throw Error(ErrorKind::PortInUse, "cannot listen on port " + std::to_string(options.port) + ": " + ec.message());
        throw Error(ErrorKind::Io, "cannot listen: " + ec.message());
    }
    impl_->accept_next();
    impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

Gateway::~Gateway() {
    shutdown(std::chrono::milliseconds(0));
}

unsigned short Gateway::port() const noexcept {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : ep.port();
}

std::size_t Gateway::client_count() const {
    std::lock_guard lock(impl_->clients_mutex);
    return impl_->clients.size();
}

void Gateway::shutdown(std::chrono::milliseconds drain) {
    if (!impl_->thread.joinable()) return;
    auto impl = impl_;
    auto all_idle = [impl] {
        std::promise<bool> done;
        auto result = done.get_future();
        net::post(impl->ioc, [impl, &done] {
            std::lock_guard lock(impl->clients_mutex);
            bool idle = true;
            for (const auto& c : impl->clients) idle = idle && c->idle();
            done.set_value(idle);
        });
        return result.get();
    };
    const auto deadline = std::chrono::steady_clock::now() + drain;
    while (std::chrono::steady_clock::now() < deadline && !all_idle())
        std::this_thread::sleep_for(std::chrono::milliseconds(5));

    net::post(impl->ioc, [impl] {
        impl->closing = true;
        beast::error_code ignored;
        impl->acceptor.close(ignored);
        std::vector<std::shared_ptr<Impl::Client>> open;
        {
            std::lock_guard lock(impl->clients_mutex);
            open.assign(impl->clients.begin(), impl->clients.end());
        }
        for (const auto& c : open) c->close();
    });
    // give close handshakes a moment, then stop regardless
    const auto close_deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
    while (std::chrono::steady_clock::now() < close_deadline && client_count() > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    impl->ioc.stop();
    impl->thread.join();

    std::vector<std::shared_ptr<Impl::Client>> left;
    {
        std::lock_guard lock(impl->clients_mutex);
        left.assign(impl->clients.begin(), impl->clients.end());
    }
    for (const auto& c : left) c->kill();
    // let aborted operations release their handlers
    impl->ioc.restart();
    impl->ioc.poll();
}

} // namespace pulsepipe
