#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "subta/session.hpp"

namespace subta {

struct ServiceOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;  // 0 picks a free port
    double rate_hz = kFrameRateHz;
    bool stop_on_signals = false;  // SIGINT/SIGTERM end run()
};

/// WebSocket front end of a Session. One io thread runs the accept loop, all
/// connections and the tick timer, so the session is only ticked from there.
/// A handshake whose URL carries ?schema_version=N with N different from the
/// server's is answered with HTTP 400 and the reason.
class Service {
public:
    Service(Session& session, ServiceOptions opts);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Port actually bound.
    unsigned short port() const;
    /// Blocks until stop().
    void run();
    /// Safe from any thread.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace subta
