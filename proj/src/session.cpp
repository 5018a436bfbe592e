#include "subta/session.hpp"

#include <variant>

#include "subta/wire.hpp"

namespace subta {

Session::Session(const GoalLibrary& lib, SessionOptions opts) : lib_(&lib), opts_(std::move(opts)), cfg_(opts_.config) {
    restart();
}

void Session::restart() {
    sim_ = std::make_unique<Simulation>(cfg_, *lib_, opts_.sim);
    metrics_sent_ = false;
}

ClientId Session::connect() {
    std::lock_guard lock(clients_m_);
    const ClientId id = next_id_++;
    clients_[id] = std::make_shared<Outbox>();
    return id;
}

void Session::disconnect(ClientId id) {
    std::shared_ptr<Outbox> box;
    {
        std::lock_guard lock(clients_m_);
        auto it = clients_.find(id);
        if (it == clients_.end()) return;
        box = it->second;
        clients_.erase(it);
    }
    std::lock_guard lock(box->m);
    box->closing = true;
    box->cv.notify_all();
}

std::size_t Session::client_count() const {
    std::lock_guard lock(clients_m_);
    return clients_.size();
}

void Session::submit(ClientId id, std::string text) {
    std::lock_guard lock(inbox_m_);
    inbox_.push_back({id, std::move(text)});
}

std::optional<Outgoing> Session::next(ClientId id, std::chrono::milliseconds timeout) {
    std::shared_ptr<Outbox> box;
    {
        std::lock_guard lock(clients_m_);
        auto it = clients_.find(id);
        if (it == clients_.end()) return std::nullopt;
        box = it->second;
    }
    std::unique_lock lock(box->m);
    if (!box->cv.wait_for(lock, timeout, [&] { return !box->q.empty() || box->closing; })) return std::nullopt;
    if (box->q.empty()) return std::nullopt;
    Outgoing out = std::move(box->q.front());
    box->q.pop_front();
    return out;
}

std::size_t Session::dropped(ClientId id) const {
    std::lock_guard lock(clients_m_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return 0;
    std::lock_guard box_lock(it->second->m);
    return it->second->dropped;
}

void Session::send(ClientId id, Outgoing out) {
    std::shared_ptr<Outbox> box;
    {
        std::lock_guard lock(clients_m_);
        auto it = clients_.find(id);
        if (it == clients_.end()) return;
        box = it->second;
    }
    std::lock_guard lock(box->m);
    if (box->closing) return;
    box->closing = out.close;
    box->q.push_back(std::move(out));
    while (box->q.size() > opts_.outbox_limit) {
        box->q.pop_front();
        ++box->dropped;
    }
    box->cv.notify_all();
}

void Session::broadcast(const std::string& text) {
    std::vector<ClientId> ids;
    {
        std::lock_guard lock(clients_m_);
        for (const auto& [id, box] : clients_) ids.push_back(id);
    }
    for (ClientId id : ids) send(id, {text, false});
}

void Session::finish_trial() {
    if (metrics_sent_) return;
    sim_->stop();
    metrics_ = compute_metrics(sim_->finish(), *lib_);
    metrics_sent_ = true;
    broadcast(wire::metrics_message(tick_, *metrics_).dump());
}

void Session::end_trial() { finish_trial(); }

void Session::tick() {
    std::vector<Inbound> batch;
    {
        std::lock_guard lock(inbox_m_);
        batch.swap(inbox_);
    }

    std::array<std::optional<ControllerInput>, 2> inputs;
    std::array<int, 2> stamp{-1, -1};
    for (Inbound& in : batch) {
        wire::ClientMessage msg;
        try {
            msg = wire::parse_client_message(in.text);
        } catch (const wire::WireError& e) {
            const bool fatal = e.kind() == wire::WireError::Kind::VersionMismatch;
            send(in.client, {wire::error_message(tick_, e.what(), fatal).dump(), fatal});
            continue;
        }
        if (const auto* ci = std::get_if<ControllerInput>(&msg.body)) {
            const auto h = static_cast<std::size_t>(ci->hand);
            if (msg.tick >= stamp[h]) {
                inputs[h] = *ci;
                stamp[h] = msg.tick;
            }
        } else if (const auto* sm = std::get_if<wire::SetMode>(&msg.body)) {
            cfg_.mode = sm->mode;
            sim_->set_mode(sm->mode);
        } else {
            if (const auto* st = std::get_if<wire::SetTask>(&msg.body)) {
                if (!lib_->has_task(st->task)) {
                    send(in.client, {wire::error_message(tick_, "no goal graph for task '" + st->task + "'").dump()});
                    continue;
                }
                cfg_.task = st->task;
            }
            restart();
            inputs = {};
            stamp = {-1, -1};
        }
    }

    ++tick_;
    if (!metrics_sent_) {
        const TickRecord& rec = sim_->step(inputs);
        broadcast(wire::state_update(tick_, rec.world, cfg_).dump());
        broadcast(wire::behavior_update(tick_, rec.rows).dump());
        broadcast(wire::plan_update(tick_, rec.plan).dump());
        for (const HandEvent& e : rec.events) broadcast(wire::feedback(tick_, e).dump());
        if (sim_->done()) finish_trial();
    } else {
        broadcast(wire::state_update(tick_, sim_->world().state(), cfg_).dump());
    }
}

}  // namespace subta
