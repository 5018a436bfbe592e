#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "subta/harness.hpp"
#include "subta/metrics.hpp"

namespace subta {

using ClientId = int;

struct Outgoing {
    std::string text;
    bool close = false;  // last message; the connection should be closed after it
};

struct SessionOptions {
    TrialConfig config;
    SimulationOptions sim;
    std::size_t outbox_limit = 256;  // frames kept per client before the oldest are dropped
};

/// One live trial shared by any number of clients. Connection threads call
/// connect/submit/next; one loop thread calls tick. Per tick and hand only
/// the controller_input with the highest client tick is applied (arrival
/// order breaks ties); older stamps are dropped.
class Session {
public:
    Session(const GoalLibrary& lib, SessionOptions opts);

    ClientId connect();
    void disconnect(ClientId id);
    /// Queues a raw client message for the next tick.
    void submit(ClientId id, std::string text);
    /// Waits up to `timeout` for the client's next outgoing frame.
    std::optional<Outgoing> next(ClientId id, std::chrono::milliseconds timeout);
    /// Frames dropped for this client because it fell behind.
    std::size_t dropped(ClientId id) const;

    /// Loop thread: applies queued messages, advances the trial one tick and
    /// broadcasts the resulting updates.
    void tick();
    /// Ends the running trial and broadcasts its metrics.
    void end_trial();

    int ticks() const { return tick_; }
    std::size_t client_count() const;
    const TrialConfig& config() const { return cfg_; }
    bool trial_done() const { return metrics_sent_; }
    const std::optional<TrialMetrics>& last_metrics() const { return metrics_; }
    const Simulation& simulation() const { return *sim_; }

private:
    struct Outbox {
        std::mutex m;
        std::condition_variable cv;
        std::deque<Outgoing> q;
        std::size_t dropped = 0;
        bool closing = false;
    };
    struct Inbound {
        ClientId client;
        std::string text;
    };

    void restart();
    void send(ClientId id, Outgoing out);
    void broadcast(const std::string& text);
    void finish_trial();

    const GoalLibrary* lib_;
    SessionOptions opts_;
    TrialConfig cfg_;
    std::unique_ptr<Simulation> sim_;
    int tick_ = 0;
    bool metrics_sent_ = false;
    std::optional<TrialMetrics> metrics_;

    mutable std::mutex clients_m_;
    std::map<ClientId, std::shared_ptr<Outbox>> clients_;
    ClientId next_id_ = 1;

    std::mutex inbox_m_;
    std::vector<Inbound> inbox_;
};

}  // namespace subta
