#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "malinbai/algorithms.hpp"
#include "malinbai/bandit.hpp"
#include "malinbai/errors.hpp"
#include "malinbai/rng.hpp"
#include "malinbai/topology.hpp"

namespace malinbai {

// Substream tag reserved for per-trial instance generation, far above any
// block id the runners use.
inline constexpr std::uint64_t kInstanceStreamTag = 0x696e7374ULL;

// Canonical-basis arm set with theta = delta * e_1: arm 1 is best and every
// other gap equals delta.
inline LinearBanditInstance gen_standard_instance(int d, double delta, double noise_std = 1.0) {
    if (d < 2) throw Error("InvalidArgument", "standard instance needs d >= 2");
    if (!(delta > 0.0)) throw Error("InvalidArgument", "standard instance needs delta > 0");
    std::vector<Vec> arms;
    arms.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e(i) = 1.0;
        arms.push_back(std::move(e));
    }
    Vec theta = Vec::Zero(d);
    theta(0) = delta;
    return LinearBanditInstance(std::move(arms), std::move(theta), noise_std);
}

// K points uniform on the unit sphere in R^d; theta = u + 0.01 (u - v) for
// the closest pair (u, v), which makes u the best arm by the margin
// 1.02 * (1 - <u, v>). The construction is re-verified by brute force and
// resampled (bounded) if the best arm is not strictly unique.
inline LinearBanditInstance gen_random_sphere_instance(int d, int K, const RngStream& rng,
                                                       double noise_std = 1.0) {
    if (d < 2 || K < 2) throw Error("InvalidArgument", "sphere instance needs d >= 2 and K >= 2");
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        auto sampler = rng.child(attempt).sampler();
        std::vector<Vec> arms;
        arms.reserve(static_cast<std::size_t>(K));
        while (static_cast<int>(arms.size()) < K) {
            Vec a(d);
            for (int i = 0; i < d; ++i) a(i) = sampler.normal();
            const double norm = a.norm();
            if (norm < 1e-12) continue;
            arms.push_back(a / norm);
        }
        int ui = 0, vi = 1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int i = 0; i < K; ++i) {
            for (int j = i + 1; j < K; ++j) {
                const double dist = (arms[static_cast<std::size_t>(i)] - arms[static_cast<std::size_t>(j)]).norm();
                if (dist < best_dist) {
                    best_dist = dist;
                    ui = i;
                    vi = j;
                }
            }
        }
        Vec theta = arms[static_cast<std::size_t>(ui)] +
                    0.01 * (arms[static_cast<std::size_t>(ui)] - arms[static_cast<std::size_t>(vi)]);
        try {
            LinearBanditInstance inst(arms, std::move(theta), noise_std);
            if (gap_profile(inst).best_index == ui) return inst;
        } catch (const TiedBestArm&) {
            // resample
        }
    }
    throw GenerationFailed("no sphere instance with a strict best arm in 100 resamples");
}

// ---------------------------------------------------------------------------
// Theoretical bound evaluators (log base 2 throughout, matching the round
// count of the elimination schedule). Values above 1 are vacuous and
// returned as-is.

inline double theorem1_bound(double T, double M, double d, double K, double delta_min) {
    const double log_k = std::log2(K);
    return 4.0 * log_k * std::exp(-(T * M * delta_min * delta_min) / (32.0 * d * log_k));
}

inline double theorem2_bound(double T, double d, double K, double delta_min) {
    const double log_k = std::log2(K);
    return 8.0 * log_k * std::exp(-(T * delta_min * delta_min) / (32.0 * d * log_k));
}

// Magnitude of the fixed-budget lower-bound exponent, T / (H_1 * log2 d),
// with the O(.) constant reported as 1.
inline double lower_bound_exponent(const LinearBanditInstance& inst, double T) {
    return T / (hardness(inst) * std::log2(static_cast<double>(inst.dim())));
}

// ---------------------------------------------------------------------------
// Monte-Carlo harness

struct GridPoint {
    std::string algorithm;
    std::string family;
    int d = 0;
    int K = 0;
    int M = 0;
    int T = 0;
    double delta = 0.0;  // standard family only
    double noise_std = 1.0;
};

struct TrialRecord {
    bool error = false;
    long long data_messages = 0;
    long long initial_broadcasts = 0;
};

struct ErrorEstimate {
    GridPoint point;
    int trials = 0;
    long long errors = 0;
    double p_hat = 0.0;
    double stderr_value = 0.0;
    double mean_data_messages = 0.0;
    double mean_initial_broadcasts = 0.0;
};

struct SweepConfig {
    std::string algorithm = "star";  // star | gen | ma-od
    std::string family = "standard"; // standard | sphere
    std::vector<int> d_values;
    std::vector<int> k_values;       // sphere family
    std::vector<double> delta_values;  // standard family
    std::vector<int> m_values;
    std::vector<int> t_values;
    double noise_std = 1.0;
    int trials = 100;
    std::uint64_t master_seed = 0;
    std::string graph_file;          // gen only
    std::optional<AgentGraph> graph;
    std::optional<Partition> partition;  // greedy partition of graph when absent
};

namespace detail {

template <typename T>
std::vector<T> scalar_or_list(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (v.is_array()) {
        auto out = v.get<std::vector<T>>();
        if (out.empty()) throw Error("InvalidConfig", std::string(key) + " list is empty");
        return out;
    }
    return {v.get<T>()};
}

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace detail

// Parse a sweep configuration document. The graph (gen only) is loaded by
// the caller, which owns file access.
inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    cfg.algorithm = j.value("algorithm", std::string("star"));
    if (cfg.algorithm != "star" && cfg.algorithm != "gen" && cfg.algorithm != "ma-od") {
        throw Error("InvalidConfig", "algorithm must be star, gen, or ma-od");
    }
    cfg.family = j.value("family", std::string("standard"));
    if (cfg.family != "standard" && cfg.family != "sphere") {
        throw Error("InvalidConfig", "family must be standard or sphere");
    }
    cfg.d_values = detail::scalar_or_list<int>(j, "d");
    cfg.k_values = detail::scalar_or_list<int>(j, "K");
    cfg.delta_values = detail::scalar_or_list<double>(j, "delta");
    cfg.m_values = detail::scalar_or_list<int>(j, "M");
    cfg.t_values = detail::scalar_or_list<int>(j, "T");
    cfg.noise_std = j.value("noise_std", 1.0);
    cfg.trials = j.value("trials", 100);
    cfg.master_seed = j.value("master_seed", static_cast<std::uint64_t>(0));
    cfg.graph_file = j.value("graph", std::string());

    if (cfg.d_values.empty()) throw Error("InvalidConfig", "d is required");
    if (cfg.family == "standard" && cfg.delta_values.empty()) {
        throw Error("InvalidConfig", "delta is required for the standard family");
    }
    if (cfg.family == "sphere" && cfg.k_values.empty()) {
        throw Error("InvalidConfig", "K is required for the sphere family");
    }
    if (cfg.t_values.empty()) throw Error("InvalidConfig", "T is required");
    if (cfg.trials < 1) throw Error("InvalidConfig", "trials must be >= 1");
    if (cfg.algorithm == "gen") {
        if (cfg.graph_file.empty()) throw Error("InvalidConfig", "gen sweeps need a graph file");
    } else if (cfg.m_values.empty()) {
        throw Error("InvalidConfig", "M is required");
    }
    return cfg;
}

inline std::vector<GridPoint> expand_grid(const SweepConfig& cfg) {
    std::vector<int> m_values = cfg.m_values;
    if (cfg.algorithm == "gen") {
        if (!cfg.graph) throw Error("InvalidConfig", "gen sweep is missing its loaded graph");
        if (!m_values.empty() && (m_values.size() != 1 || m_values.front() != cfg.graph->n)) {
            throw Error("InvalidConfig", "M must match the graph vertex count for gen sweeps");
        }
        m_values = {cfg.graph->n};
    }
    const std::vector<int> k_values = cfg.family == "sphere" ? cfg.k_values : std::vector<int>{0};
    const std::vector<double> deltas =
        cfg.family == "standard" ? cfg.delta_values : std::vector<double>{0.0};

    std::vector<GridPoint> grid;
    for (int d : cfg.d_values) {
        for (int k : k_values) {
            for (double delta : deltas) {
                for (int m : m_values) {
                    for (int t : cfg.t_values) {
                        GridPoint point;
                        point.algorithm = cfg.algorithm;
                        point.family = cfg.family;
                        point.d = d;
                        point.K = cfg.family == "standard" ? d : k;
                        point.delta = delta;
                        point.M = m;
                        point.T = t;
                        point.noise_std = cfg.noise_std;
                        grid.push_back(std::move(point));
                    }
                }
            }
        }
    }
    if (grid.empty()) throw Error("InvalidConfig", "parameter grid is empty");
    return grid;
}

// Commutative trial aggregation: counts and integer sums only, so the
// result does not depend on trial execution or combination order.
inline ErrorEstimate aggregate_trials(GridPoint point, const std::vector<TrialRecord>& records) {
    ErrorEstimate est;
    est.point = std::move(point);
    est.trials = static_cast<int>(records.size());
    long long data_sum = 0;
    long long initial_sum = 0;
    for (const TrialRecord& r : records) {
        est.errors += r.error ? 1 : 0;
        data_sum += r.data_messages;
        initial_sum += r.initial_broadcasts;
    }
    const double n = static_cast<double>(est.trials);
    est.p_hat = static_cast<double>(est.errors) / n;
    est.stderr_value = std::sqrt(est.p_hat * (1.0 - est.p_hat) / n);
    est.mean_data_messages = static_cast<double>(data_sum) / n;
    est.mean_initial_broadcasts = static_cast<double>(initial_sum) / n;
    return est;
}

// One trial at a grid point. Trial substreams are path-derived, so results
// are independent of scheduling; sphere instances are redrawn per trial
// from a dedicated tag under the trial stream.
inline TrialRecord run_trial(const SweepConfig& cfg, const GridPoint& point,
                             const LinearBanditInstance* shared_instance,
                             const RngStream& trial_rng) {
    std::optional<LinearBanditInstance> local;
    const LinearBanditInstance* inst = shared_instance;
    if (inst == nullptr) {
        local.emplace(gen_random_sphere_instance(point.d, point.K,
                                                 trial_rng.child(kInstanceStreamTag),
                                                 point.noise_std));
        inst = &*local;
    }
    RunOutcome outcome;
    if (point.algorithm == "star") {
        outcome = run_star(*inst, point.M, point.T, trial_rng);
    } else if (point.algorithm == "gen") {
        outcome = run_gen(*inst, *cfg.graph, *cfg.partition, point.T, trial_rng);
    } else {
        outcome = run_ma_od_linbai(*inst, point.M, point.T, trial_rng);
    }
    TrialRecord record;
    record.error = !outcome.correct;
    record.data_messages = outcome.ledger.data_total();
    record.initial_broadcasts = outcome.ledger.initial_broadcasts;
    return record;
}

// Run the full sweep. Trials of a grid point execute on `threads` workers;
// the aggregate is identical for any thread count.
inline std::vector<ErrorEstimate> monte_carlo(const SweepConfig& cfg, int threads = 1) {
    SweepConfig prepared = cfg;
    if (prepared.algorithm == "gen" && prepared.graph && !prepared.partition) {
        prepared.partition = build_partition(*prepared.graph,
                                             greedy_dominating_set(*prepared.graph));
    }
    const std::vector<GridPoint> grid = expand_grid(prepared);
    threads = std::max(threads, 1);

    std::vector<ErrorEstimate> estimates;
    estimates.reserve(grid.size());
    const RngStream root(prepared.master_seed);

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const GridPoint& point = grid[gi];
        std::optional<LinearBanditInstance> shared;
        if (point.family == "standard") {
            shared.emplace(gen_standard_instance(point.d, point.delta, point.noise_std));
        }
        const RngStream grid_rng = root.child(gi);

        std::vector<TrialRecord> records(static_cast<std::size_t>(prepared.trials));
        std::vector<std::pair<int, std::string>> failures;  // (trial, error name + message)
        if (threads == 1) {
            for (int t = 0; t < prepared.trials; ++t) {
                try {
                    records[static_cast<std::size_t>(t)] =
                        run_trial(prepared, point, shared ? &*shared : nullptr,
                                  grid_rng.child(static_cast<std::uint64_t>(t)));
                } catch (const Error& e) {
                    throw Error(e.name(), "trial " + std::to_string(t) + ": " + e.what());
                }
            }
        } else {
            std::vector<std::thread> workers;
            std::vector<std::pair<int, std::exception_ptr>> worker_errors(
                static_cast<std::size_t>(threads), {-1, nullptr});
            for (int w = 0; w < threads; ++w) {
                workers.emplace_back([&, w]() {
                    for (int t = w; t < prepared.trials; t += threads) {
                        try {
                            records[static_cast<std::size_t>(t)] =
                                run_trial(prepared, point, shared ? &*shared : nullptr,
                                          grid_rng.child(static_cast<std::uint64_t>(t)));
                        } catch (...) {
                            worker_errors[static_cast<std::size_t>(w)] = {t, std::current_exception()};
                            return;
                        }
                    }
                });
            }
            for (auto& th : workers) th.join();
            for (const auto& [t, eptr] : worker_errors) {
                if (!eptr) continue;
                try {
                    std::rethrow_exception(eptr);
                } catch (const Error& e) {
                    throw Error(e.name(), "trial " + std::to_string(t) + ": " + e.what());
                }
            }
        }
        estimates.push_back(aggregate_trials(point, records));
    }
    return estimates;
}

// ---------------------------------------------------------------------------
// Result writers

inline void write_results_csv(const std::vector<ErrorEstimate>& estimates, std::ostream& out) {
    out << "algorithm,family,d,K,delta,M,T,trials,errors,p_hat,stderr,"
           "mean_data_messages,mean_initial_broadcasts\n";
    for (const ErrorEstimate& e : estimates) {
        out << e.point.algorithm << ',' << e.point.family << ',' << e.point.d << ',' << e.point.K
            << ',' << detail::format_double(e.point.delta) << ',' << e.point.M << ',' << e.point.T
            << ',' << e.trials << ',' << e.errors << ',' << detail::format_double(e.p_hat) << ','
            << detail::format_double(e.stderr_value) << ','
            << detail::format_double(e.mean_data_messages) << ','
            << detail::format_double(e.mean_initial_broadcasts) << '\n';
    }
}

inline nlohmann::ordered_json estimate_to_json(const ErrorEstimate& e) {
    nlohmann::ordered_json j;
    j["algorithm"] = e.point.algorithm;
    j["family"] = e.point.family;
    j["d"] = e.point.d;
    j["K"] = e.point.K;
    j["delta"] = e.point.delta;
    j["M"] = e.point.M;
    j["T"] = e.point.T;
    j["noise_std"] = e.point.noise_std;
    j["trials"] = e.trials;
    j["errors"] = e.errors;
    j["p_hat"] = e.p_hat;
    j["stderr"] = e.stderr_value;
    j["mean_data_messages"] = e.mean_data_messages;
    j["mean_initial_broadcasts"] = e.mean_initial_broadcasts;
    return j;
}

inline nlohmann::ordered_json results_to_json(const std::vector<ErrorEstimate>& estimates) {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const ErrorEstimate& e : estimates) arr.push_back(estimate_to_json(e));
    j["results"] = std::move(arr);
    return j;
}

// Line-plot companion file: x is the swept parameter (the first of delta,
// d, K, M, T that varies; the point index if none or several do not apply),
// y the error fraction, y_err its standard error.
inline void write_plot_data(const std::vector<ErrorEstimate>& estimates, std::ostream& out) {
    auto varies = [&](auto accessor) {
        for (std::size_t i = 1; i < estimates.size(); ++i) {
            if (accessor(estimates[i].point) != accessor(estimates[0].point)) return true;
        }
        return false;
    };
    std::string label = "index";
    std::vector<double> xs(estimates.size());
    if (varies([](const GridPoint& p) { return p.delta; })) {
        label = "delta";
        for (std::size_t i = 0; i < estimates.size(); ++i) xs[i] = estimates[i].point.delta;
    } else if (varies([](const GridPoint& p) { return p.d; })) {
        label = "d";
        for (std::size_t i = 0; i < estimates.size(); ++i) xs[i] = estimates[i].point.d;
    } else if (varies([](const GridPoint& p) { return p.K; })) {
        label = "K";
        for (std::size_t i = 0; i < estimates.size(); ++i) xs[i] = estimates[i].point.K;
    } else if (varies([](const GridPoint& p) { return p.M; })) {
        label = "M";
        for (std::size_t i = 0; i < estimates.size(); ++i) xs[i] = estimates[i].point.M;
    } else if (varies([](const GridPoint& p) { return p.T; })) {
        label = "T";
        for (std::size_t i = 0; i < estimates.size(); ++i) xs[i] = estimates[i].point.T;
    } else {
        for (std::size_t i = 0; i < estimates.size(); ++i) xs[i] = static_cast<double>(i);
    }
    out << label << ",p_hat,stderr\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        out << detail::format_double(xs[i]) << ',' << detail::format_double(estimates[i].p_hat)
            << ',' << detail::format_double(estimates[i].stderr_value) << '\n';
    }
}

}  // namespace malinbai
