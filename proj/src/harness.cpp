#include "subta/harness.hpp"

#include <algorithm>

namespace subta {

void TrialConfig::validate(const GoalLibrary& lib) const {
    if (!lib.has_task(task)) {
        throw TrialError("no goal graph for task '" + task + "'");
    }
    if (!(sigma_pos >= 0.0) || !(sigma_rot_deg >= 0.0)) {
        throw TrialError("operator noise must be non-negative");
    }
    if (!(time_limit > 0.0)) {
        throw TrialError("time limit must be positive");
    }
    if (!th.valid()) {
        throw TrialError("thresholds must be positive");
    }
}

SceneGraph placed_scene_graph(const WorldState& s, const BlockShape& shape, const Tolerances& tol) {
    std::map<BlockId, Pose> placed;
    for (const auto& [id, p] : s.blocks) {
        if (s.held[0] != id && s.held[1] != id && !in_supply(p)) {
            placed[id] = p;
        }
    }
    return build_scene_graph_serial(placed, shape, tol);
}

namespace {

BehaviorConfig behavior_config(const TrialConfig& cfg, const SimulationOptions& opts) {
    BehaviorConfig b;
    b.th = cfg.th;
    b.shape = opts.planner.shape;
    b.tol = opts.planner.tol;
    b.side_offset_fraction = opts.planner.side_offset_fraction;
    return b;
}

std::map<BlockId, Pose> placed_poses(const SceneGraph& g) {
    std::map<BlockId, Pose> out;
    for (const auto& [id, n] : g.nodes()) {
        if (n.pose) out[id] = *n.pose;
    }
    return out;
}

}  // namespace

Simulation::Simulation(TrialConfig cfg, const GoalLibrary& lib, SimulationOptions opts)
    : cfg_(std::move(cfg)),
      lib_(&lib),
      opts_(std::move(opts)),
      world_(default_supply(opts_.planner.shape), WorldConfig{opts_.planner.shape}),
      machines_{BehaviorMachine(Hand::Left, behavior_config(cfg_, opts_)),
                BehaviorMachine(Hand::Right, behavior_config(cfg_, opts_))},
      heuristic_(lib, opts_.heuristic) {
    cfg_.validate(lib);
    if (opts_.weights) {
        opts_.weights->validate();
        if (opts_.weights->entities != static_cast<int>(world_.blocks().size()) + 2) {
            throw TrialError("weights expect " + std::to_string(opts_.weights->entities) +
                             " entities, the workspace has " + std::to_string(world_.blocks().size() + 2));
        }
    }
    for (const auto& v : lib.variants(cfg_.task)) {
        goals_.push_back(v.graph);
    }
    for (std::size_t h = 0; h < 2; ++h) {
        last_input_[h].hand = h == 0 ? Hand::Left : Hand::Right;
        last_input_[h].target = world_.state().hands[h];
    }
    log_.config = cfg_;
}

std::array<BehaviorId, 2> Simulation::rows() const { return {machines_[0].state(), machines_[1].state()}; }

void Simulation::set_mode(AssistMode m) {
    cfg_.mode = m;
    log_.config.mode = m;
}

SceneGraph Simulation::placed_graph() const {
    return placed_scene_graph(world_.state(), opts_.planner.shape, opts_.planner.tol);
}

std::optional<Placement> Simulation::planned_placement() const {
    if (!plan_) {
        return std::nullopt;
    }
    if (plan_->kind != StepKind::Place) {
        return Placement{plan_->target_block, plan_->target_pose};
    }
    for (BlockId id : plan_blocks_) {
        if (world_.held(Hand::Left) != id && world_.held(Hand::Right) != id) {
            return Placement{id, plan_->target_pose};
        }
    }
    return std::nullopt;
}

void Simulation::update_intent(const std::array<ControllerInput, 2>&) {
    constexpr std::size_t kSpan = 10;
    std::array<HandObservation, 2> hands;
    for (std::size_t h = 0; h < 2; ++h) {
        auto& hist = hand_history_[h];
        hist.push_back(world_.state().hands[h]);
        if (hist.size() > kSpan + 1) hist.pop_front();
        hands[h].pose = hist.back();
        hands[h].held = world_.state().held[h];
        if (hist.size() > 1) {
            const double span = static_cast<double>(hist.size() - 1) / kFrameRateHz;
            hands[h].velocity = (hist.back().position() - hist.front().position()) / span;
        }
    }
    if (opts_.weights) {
        Frame f{world_.state().hands[0], world_.state().hands[1], {}};
        for (const auto& [id, p] : world_.blocks()) f.blocks.push_back(p);
        if (windows_.push(f)) {
            intent_ = predict(windows_.window(), *opts_.weights);
        }
        return;
    }
    intent_ = heuristic_.estimate(hands[0], hands[1], world_.blocks(), placed_graph());
}

void Simulation::update_plan(const SceneGraph& placed) {
    const auto basis = placed_poses(placed);
    const auto probs = intent_ ? intent_->task_map() : std::map<std::string, double>{};
    std::string key;
    for (const auto& [task, p] : probs) key += task + (p > 0.5 ? "+" : "-");

    if (!(plan_basis_ && *plan_basis_ == basis && plan_goal_key_ == key)) {
        plan_basis_ = basis;
        plan_goal_key_ = key;
        plan_.reset();
        try {
            const GoalChoice choice = select_goal(probs, placed, *lib_, opts_.planner.ged);
            if (choice.decided) {
                const PlanResult r = next_target(placed, lib_->variants(choice.task)[choice.variant].graph, opts_.planner);
                if (!r.done) plan_ = r.step;
            }
        } catch (const GedError&) {
        } catch (const SynthesisError&) {
        }
    }
    plan_blocks_.clear();
    if (!plan_) return;
    if (plan_->kind == StepKind::Place) {
        for (const auto& [id, p] : world_.blocks()) {
            if (!placed.has_node(id)) plan_blocks_.insert(id);
        }
    } else {
        plan_blocks_.insert(plan_->target_block);
    }
}

const TickRecord& Simulation::step(const std::array<std::optional<ControllerInput>, 2>& inputs) {
    for (std::size_t h = 0; h < 2; ++h) {
        if (inputs[h]) {
            last_input_[h] = *inputs[h];
            last_input_[h].hand = h == 0 ? Hand::Left : Hand::Right;
        }
    }
    update_intent(last_input_);
    const SceneGraph placed = placed_graph();
    if (cfg_.mode == AssistMode::M3) {
        update_plan(placed);
    } else {
        plan_.reset();
        plan_blocks_.clear();
        plan_basis_.reset();
    }
    std::optional<PlanTarget> target;
    if (plan_) target = PlanTarget{plan_blocks_, plan_->target_pose};

    TickRecord rec;
    rec.tick = tick_;
    rec.inputs = last_input_;
    rec.intent = intent_;
    rec.plan = plan_;
    const auto held_before = world_.state().held;
    for (std::size_t h = 0; h < 2; ++h) {
        const Hand hand = h == 0 ? Hand::Left : Hand::Right;
        const StepResult r = machines_[h].step(last_input_[h], world_.view(hand, machines_[1 - h].object()),
                                               intent_ ? &*intent_ : nullptr, target, cfg_.mode);
        rec.commands[h] = r.command;
        rec.rows[h] = r.state;
        for (const auto& e : r.events) rec.events.push_back({hand, e});
    }
    world_.apply(Hand::Left, rec.commands[0]);
    world_.apply(Hand::Right, rec.commands[1]);
    world_.advance(1.0 / kFrameRateHz);
    ++tick_;

    for (std::size_t h = 0; h < 2; ++h) {
        const auto& before = held_before[h];
        if (before && world_.state().held[h] != before) {
            const Pose& p = world_.blocks().at(*before);
            if (!in_supply(p)) log_.placements.push_back({rec.tick, *before, p});
        }
    }
    if (!success_time_) {
        const SceneGraph now = placed_graph();
        for (const auto& g : goals_) {
            if (graphs_equivalent(now, g)) {
                success_time_ = world_.state().time;
                break;
            }
        }
    }
    rec.time = world_.state().time;
    rec.world = world_.state();
    log_.ticks.push_back(std::move(rec));
    return log_.ticks.back();
}

bool Simulation::done() const {
    return stopped_ || success_time_.has_value() || world_.state().time >= cfg_.time_limit - 1e-9;
}

TrialLog Simulation::finish() {
    log_.config = cfg_;
    log_.final_graph = placed_graph();
    log_.final_poses = world_.blocks();
    log_.success = success_time_.has_value();
    log_.success_time = success_time_;
    log_.duration = world_.state().time;
    return log_;
}

TrialLog run_trial(const TrialConfig& cfg, const GoalLibrary& lib, const SimulationOptions& opts) {
    cfg.validate(lib);
    Simulation sim(cfg, lib, opts);
    std::map<BlockId, Pose> assembly;
    const SceneGraph& goal = lib.variants(cfg.task).front().graph;
    for (const auto& [id, n] : goal.nodes()) {
        if (n.pose) assembly[id] = *n.pose;
    }
    OperatorConfig oc;
    oc.shape = opts.planner.shape;
    oc.seed = cfg.seed;
    oc.sigma_pos = cfg.sigma_pos;
    oc.sigma_rot_deg = cfg.sigma_rot_deg;
    ScriptedOperator op(oc, ground_truth_script(assembly, opts.planner.staging));
    int idle = 0;
    while (!sim.done()) {
        const bool m3 = cfg.mode == AssistMode::M3;
        const auto in = op.next(sim.world(), sim.rows(), cfg.mode, m3 ? sim.planned_placement() : std::nullopt,
                                sim.planned_blocks());
        sim.step({in[0], in[1]});
        if (opts.stop_when_operator_done && op.finished()) {
            if (++idle > opts.operator_grace_ticks) sim.stop();
        } else {
            idle = 0;
        }
    }
    return sim.finish();
}

}  // namespace subta
