#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "subta/assemblies.hpp"
#include "subta/batch.hpp"
#include "subta/service.hpp"
#include "subta/tasks.hpp"
#include "subta/trial_log.hpp"
#include "subta/wire.hpp"

using namespace subta;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string task = "Arch";
    std::string mode = "m3";
    std::uint64_t seed = 1;
    double noise_pos = 0.0;
    double noise_rot = 0.0;
    double time_limit = 120.0;
    std::string goals;
    std::string weights;
};

const auto kTaskCheck = CLI::Validator(
    [](std::string& s) {
        const auto t = canonical_task_name(s);
        if (!t) return std::string("unknown task '" + s + "'");
        s = *t;
        return std::string();
    },
    "TASK");

const auto kModeCheck = CLI::Validator(
    [](std::string& s) { return parse_mode(s) ? std::string() : "unknown mode '" + s + "' (m1|m2|m3)"; }, "MODE");

void add_goals(CLI::App* app, Common& c) {
    app->add_option("--goals", c.goals, "goal directory <dir>/<task>/<variant>.json (default: shipped goals)");
}

void add_trial(CLI::App* app, Common& c, bool noise_defaults) {
    app->add_option("--task", c.task, "task label")->transform(kTaskCheck);
    app->add_option("--mode", c.mode, "m1, m2 or m3")->check(kModeCheck);
    app->add_option("--seed", c.seed, "operator noise seed");
    app->add_option("--noise-pos", c.noise_pos, "operator position noise [m]")->check(CLI::NonNegativeNumber);
    app->add_option("--noise-rot", c.noise_rot, "operator rotation noise [deg]")->check(CLI::NonNegativeNumber);
    app->add_option("--time-limit", c.time_limit, "trial time limit [s]")->check(CLI::PositiveNumber);
    app->add_option("--weights", c.weights, "intention network weights (default: heuristic intent)")
        ->check(CLI::ExistingFile);
    add_goals(app, c);
    if (noise_defaults) {
        c.noise_pos = 0.015;
        c.noise_rot = 5.0;
    }
}

GoalLibrary goals_of(const Common& c) {
    if (!c.goals.empty()) return GoalLibrary::load_directory(c.goals);
    if (fs::is_directory(SUBTA_GOALS_DIR)) return GoalLibrary::load_directory(SUBTA_GOALS_DIR);
    return builtin_goal_library();
}

SimulationOptions sim_options(const Common& c) {
    SimulationOptions o;
    if (!c.weights.empty()) o.weights = std::make_shared<ModelWeights>(ModelWeights::load(c.weights));
    return o;
}

TrialConfig trial_config(const Common& c) {
    TrialConfig t;
    t.task = c.task;
    t.mode = *parse_mode(c.mode);
    t.seed = c.seed;
    t.sigma_pos = c.noise_pos;
    t.sigma_rot_deg = c.noise_rot;
    t.time_limit = c.time_limit;
    return t;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

int cmd_run(const Common& c, const std::string& out) {
    const GoalLibrary lib = goals_of(c);
    const TrialLog log = run_trial(trial_config(c), lib, sim_options(c));
    const TrialMetrics m = compute_metrics(log, lib);
    const auto doc = metrics_document(log, m);
    if (!out.empty()) {
        fs::create_directories(out);
        save_trial_log((fs::path(out) / "trial_log.jsonl").string(), log);
        write_file(fs::path(out) / "metrics.json", doc.dump(2) + "\n");
    }
    std::cout << doc["metrics"].dump(2) << "\n";
    return 0;
}

int cmd_batch(const Common& c, const std::vector<std::string>& tasks, const std::vector<std::string>& modes,
              int seeds, int threads, bool serial, const std::string& out) {
    const GoalLibrary lib = goals_of(c);
    BatchSpec spec;
    spec.tasks = tasks.empty() ? std::vector<std::string>{"Tuningfork-ly", "Arch", "Snake", "Frame"} : tasks;
    if (!modes.empty()) {
        spec.modes.clear();
        for (const auto& m : modes) spec.modes.push_back(*parse_mode(m));
    }
    spec.first_seed = c.seed;
    spec.seeds = seeds;
    spec.sigma_pos = c.noise_pos;
    spec.sigma_rot_deg = c.noise_rot;
    spec.time_limit = c.time_limit;
    const SimulationOptions opts = sim_options(c);
    const auto outcomes = serial ? run_batch_serial(spec, lib, opts) : run_batch(spec, lib, opts, threads);
    const auto rows = summarize(outcomes);
    const std::string table = format_table(rows);
    std::cout << table;
    if (!out.empty()) {
        fs::create_directories(out);
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) j.push_back(to_json(r));
        write_file(fs::path(out) / "summary.json", j.dump(2) + "\n");
        write_file(fs::path(out) / "table.txt", table);
    }
    return 0;
}

int cmd_validate(const Common& c) {
    const GoalLibrary lib = goals_of(c);
    const GoalLibrary builtin = builtin_goal_library();
    int failures = 0;
    for (const std::string& task : lib.tasks()) {
        for (const GoalVariant& v : lib.variants(task)) {
            const SceneGraph back = scene_graph_from_json(nlohmann::json::parse(to_json(v.graph).dump()));
            bool ok = graphs_equivalent(back, v.graph) && ged(back, v.graph).distance == 0.0;
            if (ok && builtin.has_task(task)) {
                ok = graphs_equivalent(v.graph, builtin.variants(task).front().graph);
            }
            std::cout << (ok ? "ok   " : "FAIL ") << task << "/" << v.name << " (" << v.graph.node_count()
                      << " blocks, " << v.graph.edges().size() << " edges)\n";
            failures += ok ? 0 : 1;
        }
    }
    return failures == 0 ? 0 : 1;
}

int cmd_ged(const std::string& a, const std::string& b, bool show_path) {
    const GedResult r = ged(load_scene_graph(a), load_scene_graph(b));
    std::cout << r.distance << "\n";
    if (show_path) {
        for (const EditOp& op : r.path.ops) std::cout << "  " << to_string(op) << "\n";
    }
    return 0;
}

int cmd_serve(const Common& c, unsigned short port) {
    const GoalLibrary lib = goals_of(c);
    SessionOptions so;
    so.config = trial_config(c);
    so.config.validate(lib);
    so.sim = sim_options(c);
    Session session(lib, so);
    Service service(session, {"0.0.0.0", port, kFrameRateHz, true});
    std::cout << "serving " << so.config.task << " " << to_string(so.config.mode) << " on ws://0.0.0.0:"
              << service.port() << "/ (schema_version " << wire::kSchemaVersion << ")" << std::endl;
    service.run();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subtask-aware assisted teleoperation: trials, batches, goal graphs and the live service"};
    app.require_subcommand(1);

    Common run_c;
    std::string run_out;
    auto* run = app.add_subcommand("run", "one closed-loop trial with the scripted operator");
    add_trial(run, run_c, false);
    run->add_option("--out", run_out, "directory for trial_log.jsonl and metrics.json");

    Common batch_c;
    std::vector<std::string> batch_tasks, batch_modes;
    int batch_seeds = 20;
    int threads = 0;
    bool serial = false;
    std::string batch_out;
    auto* batch = app.add_subcommand("batch", "tasks x modes x seeds, summarized per task and mode");
    add_trial(batch, batch_c, true);
    batch->remove_option(batch->get_option("--task"));
    batch->remove_option(batch->get_option("--mode"));
    batch->add_option("--task", batch_tasks, "tasks (default: Tuningfork-ly Arch Snake Frame)")->transform(kTaskCheck);
    batch->add_option("--mode", batch_modes, "modes (default: m1 m2 m3)")->check(kModeCheck);
    batch->add_option("--seeds", batch_seeds, "seeds per cell, starting at --seed")->check(CLI::PositiveNumber);
    batch->add_option("--threads", threads, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
    batch->add_flag("--serial", serial, "run the serial reference instead");
    batch->add_option("--out", batch_out, "directory for summary.json and table.txt");

    Common val_c;
    auto* validate = app.add_subcommand("validate-goals", "round-trip every goal graph in the goal directory");
    add_goals(validate, val_c);

    std::string ged_a, ged_b;
    bool ged_path = false;
    auto* ged_cmd = app.add_subcommand("ged", "edit distance between two goal graph files");
    ged_cmd->add_option("a", ged_a)->required()->check(CLI::ExistingFile);
    ged_cmd->add_option("b", ged_b)->required()->check(CLI::ExistingFile);
    ged_cmd->add_flag("--path", ged_path, "also print the edit path");

    Common serve_c;
    unsigned short port = 8765;
    auto* serve = app.add_subcommand("serve", "WebSocket service streaming the live loop at 20 Hz");
    add_trial(serve, serve_c, false);
    serve->add_option("--port", port, "listen port");

    std::string export_out = "goals";
    auto* exp = app.add_subcommand("export-goals", "write the built-in goal graphs as JSON");
    exp->add_option("--out", export_out, "target directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_c, run_out);
        if (*batch) return cmd_batch(batch_c, batch_tasks, batch_modes, batch_seeds, threads, serial, batch_out);
        if (*validate) return cmd_validate(val_c);
        if (*ged_cmd) return cmd_ged(ged_a, ged_b, ged_path);
        if (*serve) return cmd_serve(serve_c, port);
        if (*exp) {
            export_goal_library(export_out);
            std::cout << "wrote " << export_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
