#include "subta/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <csignal>
#include <optional>
#include <string_view>
#include <vector>

#include "subta/wire.hpp"

namespace subta {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

/// Value of `key` in the query part of a request target.
std::optional<std::string> query_param(std::string_view target, std::string_view key) {
    const auto q = target.find('?');
    if (q == std::string_view::npos) return std::nullopt;
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const std::string_view kv = rest.substr(0, amp);
        const auto eq = kv.find('=');
        if (kv.substr(0, eq) == key) {
            return std::string(eq == std::string_view::npos ? std::string_view{} : kv.substr(eq + 1));
        }
        if (amp == std::string_view::npos) break;
        rest = rest.substr(amp + 1);
    }
    return std::nullopt;
}

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Session& session) : ws_(std::move(socket)), session_(session) {}

    void start() {
        http::async_read(ws_.next_layer(), buf_, req_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
    }

    bool open() const { return id_ != 0 && !closed_; }

    void flush() {
        if (!open() || writing_) return;
        auto m = session_.next(id_, std::chrono::milliseconds(0));
        if (!m) return;
        writing_ = true;
        out_ = std::move(m->text);
        const bool close = m->close;
        ws_.text(true);
        ws_.async_write(asio::buffer(out_), [self = shared_from_this(), close](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) return self->finish();
            if (close) {
                self->ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "schema_version"),
                                      [self](beast::error_code) { self->finish(); });
                return;
            }
            self->flush();
        });
    }

    void shutdown() {
        if (!open()) return;
        beast::error_code ec;
        ws_.next_layer().socket().close(ec);
        finish();
    }

private:
    void on_request(beast::error_code ec) {
        if (ec) return;
        if (!websocket::is_upgrade(req_)) return refuse("websocket upgrade required");
        if (const auto v = query_param(std::string_view(req_.target().data(), req_.target().size()), "schema_version")) {
            if (*v != std::to_string(wire::kSchemaVersion)) {
                return refuse("schema_version " + *v + " not supported, server speaks " +
                              std::to_string(wire::kSchemaVersion));
            }
        }
        ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->id_ = self->session_.connect();
            self->read();
        });
    }

    void refuse(const std::string& reason) {
        auto res = std::make_shared<http::response<http::string_body>>(http::status::bad_request, req_.version());
        res->set(http::field::content_type, "text/plain");
        res->body() = reason;
        res->keep_alive(false);
        res->prepare_payload();
        http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    void read() {
        ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->finish();
            self->session_.submit(self->id_, beast::buffers_to_string(self->buf_.data()));
            self->buf_.consume(self->buf_.size());
            self->read();
        });
    }

    void finish() {
        if (closed_) return;
        closed_ = true;
        if (id_ != 0) session_.disconnect(id_);
    }

    websocket::stream<beast::tcp_stream> ws_;
    Session& session_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
    ClientId id_ = 0;
    bool closed_ = false;
    bool writing_ = false;
    std::string out_;
};

}  // namespace

struct Service::Impl {
    Impl(Session& s, ServiceOptions o)
        : session(s), opts(std::move(o)), acceptor(ioc), timer(ioc) {
        const tcp::endpoint ep(asio::ip::make_address(opts.address), opts.port);
        acceptor.open(ep.protocol());
        acceptor.set_option(asio::socket_base::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen();
        period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / opts.rate_hz));
    }

    void accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            auto c = std::make_shared<Connection>(std::move(socket), session);
            conns.push_back(c);
            c->start();
            accept();
        });
    }

    void schedule() {
        timer.expires_at(next_tick);
        timer.async_wait([this](beast::error_code ec) {
            if (ec) return;
            session.tick();
            std::erase_if(conns, [](const std::weak_ptr<Connection>& w) { return w.expired(); });
            for (const auto& w : conns) {
                if (auto c = w.lock()) c->flush();
            }
            next_tick += period;
            const auto now = std::chrono::steady_clock::now();
            if (next_tick < now) next_tick = now;  // fell behind: do not burst
            schedule();
        });
    }

    Session& session;
    ServiceOptions opts;
    asio::io_context ioc;
    tcp::acceptor acceptor;
    asio::steady_timer timer;
    std::chrono::steady_clock::duration period{};
    std::chrono::steady_clock::time_point next_tick;
    std::vector<std::weak_ptr<Connection>> conns;
};

Service::Service(Session& session, ServiceOptions opts) : impl_(std::make_unique<Impl>(session, std::move(opts))) {}

Service::~Service() = default;

unsigned short Service::port() const { return impl_->acceptor.local_endpoint().port(); }

void Service::run() {
    impl_->accept();
    impl_->next_tick = std::chrono::steady_clock::now() + impl_->period;
    impl_->schedule();
    std::optional<asio::signal_set> signals;
    if (impl_->opts.stop_on_signals) {
        signals.emplace(impl_->ioc, SIGINT, SIGTERM);
        signals->async_wait([this](beast::error_code ec, int) {
            if (!ec) impl_->ioc.stop();
        });
    }
    impl_->ioc.run();
    for (const auto& w : impl_->conns) {
        if (auto c = w.lock()) c->shutdown();
    }
}

void Service::stop() { impl_->ioc.stop(); }

}  // namespace subta
