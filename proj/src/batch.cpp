#include "subta/batch.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#ifdef SUBTA_HAVE_OPENMP
#include <omp.h>
#endif

namespace subta {

std::vector<TrialConfig> BatchSpec::configs() const {
    std::vector<TrialConfig> out;
    for (const std::string& task : tasks) {
        for (AssistMode mode : modes) {
            for (int k = 0; k < seeds; ++k) {
                TrialConfig c;
                c.task = task;
                c.mode = mode;
                c.seed = first_seed + static_cast<std::uint64_t>(k);
                c.sigma_pos = sigma_pos;
                c.sigma_rot_deg = sigma_rot_deg;
                c.th = th;
                c.time_limit = time_limit;
                out.push_back(c);
            }
        }
    }
    return out;
}

namespace {

TrialOutcome run_one(const TrialConfig& c, const GoalLibrary& lib, const SimulationOptions& opts) {
    const TrialLog log = run_trial(c, lib, opts);
    return {c, compute_metrics(log, lib), static_cast<int>(log.ticks.size())};
}

void validate_all(const std::vector<TrialConfig>& configs, const GoalLibrary& lib) {
    for (const TrialConfig& c : configs) c.validate(lib);
}

}  // namespace

std::vector<TrialOutcome> run_batch_serial(const BatchSpec& spec, const GoalLibrary& lib,
                                           const SimulationOptions& opts) {
    const auto configs = spec.configs();
    validate_all(configs, lib);
    std::vector<TrialOutcome> out;
    out.reserve(configs.size());
    for (const TrialConfig& c : configs) out.push_back(run_one(c, lib, opts));
    return out;
}

std::vector<TrialOutcome> run_batch(const BatchSpec& spec, const GoalLibrary& lib, const SimulationOptions& opts,
                                    int threads) {
    const auto configs = spec.configs();
    validate_all(configs, lib);
    std::vector<TrialOutcome> out(configs.size());
    const auto n = static_cast<std::ptrdiff_t>(configs.size());
#ifdef SUBTA_HAVE_OPENMP
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = run_one(configs[static_cast<std::size_t>(i)], lib, opts);
    }
    (void)threads;
    return out;
}

Stat stat_of(const std::vector<double>& xs) {
    Stat s;
    s.n = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / (s.n - 1));
    }
    return s;
}

namespace {

struct Pool {
    int trials = 0;
    int successes = 0;
    std::vector<double> time, progress, position, orientation;

    void add(const TrialOutcome& o) {
        ++trials;
        successes += o.metrics.success ? 1 : 0;
        time.push_back(o.metrics.time);
        progress.push_back(o.metrics.progress);
        if (o.metrics.mean_position_error) {
            position.push_back(*o.metrics.mean_position_error);
            orientation.push_back(*o.metrics.mean_orientation_error);
        }
    }

    CellSummary summary(const std::string& task, AssistMode mode) const {
        CellSummary c;
        c.task = task;
        c.mode = mode;
        c.trials = trials;
        c.success_rate = trials > 0 ? static_cast<double>(successes) / trials : 0.0;
        c.time = stat_of(time);
        c.progress = stat_of(progress);
        c.position = stat_of(position);
        c.orientation = stat_of(orientation);
        return c;
    }
};

}  // namespace

std::vector<CellSummary> summarize(const std::vector<TrialOutcome>& outcomes) {
    std::vector<std::pair<std::string, AssistMode>> order;
    std::map<std::pair<std::string, AssistMode>, Pool> cells;
    std::map<AssistMode, Pool> overall;
    for (const TrialOutcome& o : outcomes) {
        const auto key = std::make_pair(o.config.task, o.config.mode);
        if (!cells.contains(key)) order.push_back(key);
        cells[key].add(o);
        overall[o.config.mode].add(o);
    }
    std::vector<CellSummary> out;
    for (const auto& key : order) out.push_back(cells.at(key).summary(key.first, key.second));
    for (const auto& [mode, pool] : overall) out.push_back(pool.summary("Overall", mode));
    return out;
}

std::string format_table(const std::vector<CellSummary>& rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-14s %-4s %6s %8s %18s %16s %18s %18s\n", "task", "mode", "n", "success",
                  "time [s]", "progress", "position [m]", "orientation [deg]");
    os << buf;
    for (const CellSummary& c : rows) {
        std::snprintf(buf, sizeof buf,
                      "%-14s %-4s %6d %8.2f %8.2f +- %6.2f %6.3f +- %5.3f %7.4f +- %7.4f %7.3f +- %7.3f\n",
                      c.task.c_str(), to_string(c.mode), c.trials, c.success_rate, c.time.mean, c.time.std,
                      c.progress.mean, c.progress.std, c.position.mean, c.position.std, c.orientation.mean,
                      c.orientation.std);
        os << buf;
    }
    return os.str();
}

nlohmann::json to_json(const CellSummary& c) {
    const auto st = [](const Stat& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; };
    return {{"task", c.task},
            {"mode", to_string(c.mode)},
            {"trials", c.trials},
            {"success_rate", c.success_rate},
            {"time", st(c.time)},
            {"progress", st(c.progress)},
            {"position_error", st(c.position)},
            {"orientation_error_deg", st(c.orientation)}};
}

}  // namespace subta
