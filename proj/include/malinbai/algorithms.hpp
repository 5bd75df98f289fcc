#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "malinbai/bandit.hpp"
#include "malinbai/design.hpp"
#include "malinbai/errors.hpp"
#include "malinbai/linalg.hpp"
#include "malinbai/rng.hpp"
#include "malinbai/topology.hpp"

namespace malinbai {

// Local accumulators of one agent for one round, in projected coordinates.
struct AgentState {
    int agent_id = 0;
    Mat V;
    Vec D;

    void reset(int dim) {
        V = Mat::Zero(dim, dim);
        D = Vec::Zero(dim);
    }
};

// Server-side aggregate plus elimination bookkeeping.
struct ServerState {
    Mat V;
    Vec D;
    std::vector<int> active;  // surviving original arm indices, ascending
    int round = 0;

    void reset_accumulators(int dim) {
        V = Mat::Zero(dim, dim);
        D = Vec::Zero(dim);
    }
};

struct RoundTrace {
    int round = 0;  // 1-based round p
    int d_p = 0;
    std::vector<int> active_before;
    std::vector<int> active_after;
    std::map<int, double> weights;    // keyed by original arm index
    std::map<int, int> allocation;    // per-agent pulls, original arm index
    std::map<int, double> estimates;  // x_p, original arm index
};

struct CommLedger {
    long long initial_broadcasts = 0;   // (index, arm) pairs sent before round 1
    long long allocation_messages = 0;  // server -> agent, one per agent per round
    long long statistics_messages = 0;  // agent -> server, one per agent per round
    long long vote_messages = 0;        // hub -> ensembler

    long long data_total() const { return allocation_messages + statistics_messages + vote_messages; }

    bool operator==(const CommLedger&) const = default;
};

struct HubVote {
    int hub = 0;  // hub vertex (gen) or agent id (ma-od), 0-based
    int arm = 0;  // voted arm, 0-based
    double uncertainty = 0.0;
};

struct BlockTrace {
    int block_id = 0;
    int hub = -1;  // -1 when the server is not an agent (star)
    int num_agents = 0;
    std::vector<RoundTrace> rounds;
};

struct RunOutcome {
    std::string algorithm;
    int chosen_arm = -1;
    bool correct = false;
    std::vector<BlockTrace> blocks;
    std::vector<HubVote> votes;  // gen and ma-od only
    CommLedger ledger;
};

// Rounds of the elimination schedule: smallest r with 2^r >= K.
inline int num_rounds(int K) {
    int r = 0;
    long long pow2 = 1;
    while (pow2 < K) {
        pow2 *= 2;
        ++r;
    }
    return std::max(r, 1);
}

// Active-set size after round p: max(ceil(K / 2^p), 1).
inline int active_count_after(int K, int p) {
    long long pow2 = 1;
    for (int i = 0; i < p && pow2 < K; ++i) pow2 *= 2;
    return static_cast<int>(std::max<long long>((K + pow2 - 1) / pow2, 1));
}

struct BlockRunResult {
    int winner = -1;
    double winner_uncertainty = 0.0;
    std::vector<RoundTrace> rounds;
};

// One phased-elimination run over the full budget: the shared core of the
// star runner (block 0, every agent remote), the generic-network runner
// (one call per partition block, hub local), and the independent-agent
// baseline (one call per agent, nothing remote). Samplers are derived from
// run_rng.child(block_id).child(agent_rank).child(round), which is what
// makes a single-block generic run reproduce the star run exactly.
inline BlockRunResult run_elimination_block(const LinearBanditInstance& inst, int num_participants,
                                            int T, const RngStream& run_rng, int block_id,
                                            int remote_agents, CommLedger& ledger) {
    const int K = inst.num_arms();
    const int d = inst.dim();
    const int rounds = num_rounds(K);
    if (num_participants < 1) {
        throw Error("InvalidArgument", "a run needs at least one participating agent");
    }
    if (T < rounds * d) {
        throw InsufficientBudget("budget T=" + std::to_string(T) + " below " +
                                 std::to_string(rounds) + " rounds x d=" + std::to_string(d) +
                                 " pulls");
    }
    const int b = T / rounds;

    ledger.initial_broadcasts += static_cast<long long>(remote_agents) * K;

    BlockRunResult result;
    const RngStream block_rng = run_rng.child(static_cast<std::uint64_t>(block_id));
    ServerState server;
    server.active.resize(static_cast<std::size_t>(K));
    std::iota(server.active.begin(), server.active.end(), 0);

    for (int p = 1; p <= rounds; ++p) {
        server.round = p;
        RoundTrace trace;
        trace.round = p;
        trace.active_before = server.active;

        std::vector<Vec> active_arms;
        active_arms.reserve(server.active.size());
        for (int idx : server.active) active_arms.push_back(inst.arm(idx));

        const ProjectionBasis basis = rank_basis(active_arms);
        const int d_p = basis.dim();
        trace.d_p = d_p;
        std::vector<Vec> projected;
        projected.reserve(active_arms.size());
        for (const Vec& a : active_arms) projected.push_back(project(basis, a));

        DesignWeights design = g_optimal_design(projected);
        const DesignWeights pruned = prune_support(projected, design, 1e-6);
        if (std::isfinite(pruned.g_value) && pruned.g_value <= 2.0 * d_p * (1.0 + 1e-9)) {
            design = pruned;
        }
        PullAllocation alloc = round_allocation(design, b);
        alloc = ensure_spanning_allocation(projected, design, alloc);

        const Mat round_matrix = design_matrix(projected, alloc);  // V_m, equal for every agent
        ledger.allocation_messages += remote_agents;

        server.reset_accumulators(d_p);
        for (int m = 0; m < num_participants; ++m) {
            AgentState agent;
            agent.agent_id = m;
            agent.reset(d_p);
            agent.V = round_matrix;
            auto sampler = block_rng.child(static_cast<std::uint64_t>(m))
                               .child(static_cast<std::uint64_t>(p))
                               .sampler();
            for (const auto& [pos, count] : alloc.counts) {
                const int original = server.active[static_cast<std::size_t>(pos)];
                for (int j = 0; j < count; ++j) {
                    const double reward = sample_reward(inst, original, sampler);
                    agent.D += projected[static_cast<std::size_t>(pos)] * reward;
                }
            }
            server.V += agent.V;
            server.D += agent.D;
        }
        ledger.statistics_messages += remote_agents;

        const Vec theta_hat = solve_psd(server.V, server.D);

        std::vector<double> estimates(server.active.size());
        for (std::size_t i = 0; i < server.active.size(); ++i) {
            estimates[i] = theta_hat.dot(projected[i]);
            trace.estimates[server.active[i]] = estimates[i];
        }
        for (const auto& [pos, w] : design.weights) {
            trace.weights[server.active[static_cast<std::size_t>(pos)]] = w;
        }
        for (const auto& [pos, c] : alloc.counts) {
            trace.allocation[server.active[static_cast<std::size_t>(pos)]] = c;
        }

        // Keep the top ceil(K / 2^p) arms; ties go to the lower arm index.
        const int keep = active_count_after(K, p);
        std::vector<std::size_t> order(server.active.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b2) {
            if (estimates[a] != estimates[b2]) return estimates[a] > estimates[b2];
            return server.active[a] < server.active[b2];
        });
        std::vector<int> next_active;
        next_active.reserve(static_cast<std::size_t>(keep));
        for (int i = 0; i < keep; ++i) next_active.push_back(server.active[order[static_cast<std::size_t>(i)]]);
        std::sort(next_active.begin(), next_active.end());
        trace.active_after = next_active;

        if (p == rounds) {
            result.winner = next_active.front();
            const std::size_t winner_pos = static_cast<std::size_t>(
                std::find(server.active.begin(), server.active.end(), result.winner) -
                server.active.begin());
            result.winner_uncertainty = quad_norm_sq(server.V, projected[winner_pos]);
        }

        server.active = std::move(next_active);
        result.rounds.push_back(std::move(trace));
    }
    return result;
}

// Majority vote over hub reports; vote ties resolve to the candidate arm
// with the lowest reported uncertainty, then to the lower arm index.
inline int ensemble_vote(const std::vector<HubVote>& votes) {
    if (votes.empty()) throw Error("InvalidArgument", "cannot ensemble zero votes");
    std::map<int, int> tally;
    std::map<int, double> lowest_uncertainty;
    for (const HubVote& v : votes) {
        ++tally[v.arm];
        auto it = lowest_uncertainty.find(v.arm);
        if (it == lowest_uncertainty.end() || v.uncertainty < it->second) {
            lowest_uncertainty[v.arm] = v.uncertainty;
        }
    }
    int max_count = 0;
    for (const auto& [arm, count] : tally) max_count = std::max(max_count, count);
    int winner = -1;
    double winner_uncertainty = std::numeric_limits<double>::infinity();
    for (const auto& [arm, count] : tally) {  // ascending arm index
        if (count == max_count && lowest_uncertainty[arm] < winner_uncertainty) {
            winner = arm;
            winner_uncertainty = lowest_uncertainty[arm];
        }
    }
    return winner;
}

// ---------------------------------------------------------------------------
// Runners

inline RunOutcome run_star(const LinearBanditInstance& inst, int M, int T, const RngStream& rng) {
    if (M < 1) throw Error("InvalidArgument", "M must be >= 1");
    RunOutcome out;
    out.algorithm = "star";
    BlockRunResult block = run_elimination_block(inst, M, T, rng, /*block_id=*/0,
                                                 /*remote_agents=*/M, out.ledger);
    out.chosen_arm = block.winner;
    out.correct = block.winner == gap_profile(inst).best_index;
    out.blocks.push_back(BlockTrace{0, -1, M, std::move(block.rounds)});
    return out;
}

inline RunOutcome run_gen(const LinearBanditInstance& inst, const AgentGraph& graph,
                          const Partition& partition, int T, const RngStream& rng) {
    const ValidationReport report = validate_partition(graph, partition);
    if (!report.ok) throw InvalidPartition(report.violation);

    RunOutcome out;
    out.algorithm = "gen";
    for (std::size_t i = 0; i < partition.blocks.size(); ++i) {
        const auto& members = partition.blocks[i];
        BlockRunResult block =
            run_elimination_block(inst, static_cast<int>(members.size()), T, rng,
                                  /*block_id=*/static_cast<int>(i),
                                  /*remote_agents=*/static_cast<int>(members.size()) - 1,
                                  out.ledger);
        out.ledger.vote_messages += 1;
        out.votes.push_back(HubVote{partition.hubs[i], block.winner, block.winner_uncertainty});
        out.blocks.push_back(BlockTrace{static_cast<int>(i), partition.hubs[i],
                                        static_cast<int>(members.size()), std::move(block.rounds)});
    }
    out.chosen_arm = ensemble_vote(out.votes);
    out.correct = out.chosen_arm == gap_profile(inst).best_index;
    return out;
}

// Independent single-agent eliminations with a majority vote; vote ties are
// broken uniformly at random from the dedicated vote substream.
inline RunOutcome run_ma_od_linbai(const LinearBanditInstance& inst, int M, int T,
                                   const RngStream& rng) {
    if (M < 1) throw Error("InvalidArgument", "M must be >= 1");
    RunOutcome out;
    out.algorithm = "ma-od";
    for (int j = 0; j < M; ++j) {
        BlockRunResult block = run_elimination_block(inst, 1, T, rng, /*block_id=*/j,
                                                     /*remote_agents=*/0, out.ledger);
        out.ledger.vote_messages += 1;
        out.votes.push_back(HubVote{j, block.winner, block.winner_uncertainty});
        out.blocks.push_back(BlockTrace{j, j, 1, std::move(block.rounds)});
    }
    std::map<int, int> tally;
    for (const HubVote& v : out.votes) ++tally[v.arm];
    int max_count = 0;
    for (const auto& [arm, count] : tally) max_count = std::max(max_count, count);
    std::vector<int> candidates;
    for (const auto& [arm, count] : tally) {
        if (count == max_count) candidates.push_back(arm);
    }
    if (candidates.size() == 1) {
        out.chosen_arm = candidates.front();
    } else {
        auto sampler = rng.child(static_cast<std::uint64_t>(M)).sampler();
        out.chosen_arm = candidates[sampler.uniform_int(candidates.size())];
    }
    out.correct = out.chosen_arm == gap_profile(inst).best_index;
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form message counts

inline CommLedger ledger_closed_form_star(int M, int K) {
    CommLedger ledger;
    const long long rounds = num_rounds(K);
    ledger.initial_broadcasts = static_cast<long long>(M) * K;
    ledger.allocation_messages = static_cast<long long>(M) * rounds;
    ledger.statistics_messages = static_cast<long long>(M) * rounds;
    return ledger;
}

inline CommLedger ledger_closed_form_gen(int M, int K, const Partition& partition) {
    CommLedger ledger;
    const long long rounds = num_rounds(K);
    const long long hubs = static_cast<long long>(partition.hubs.size());
    ledger.initial_broadcasts = (M - hubs) * K;
    ledger.allocation_messages = (M - hubs) * rounds;
    ledger.statistics_messages = (M - hubs) * rounds;
    ledger.vote_messages = hubs;
    return ledger;
}

// ---------------------------------------------------------------------------
// Serialization (arm and vertex indices are 1-based on the wire)

inline nlohmann::ordered_json ledger_to_json(const CommLedger& ledger) {
    nlohmann::ordered_json j;
    j["initial_broadcasts"] = ledger.initial_broadcasts;
    j["allocation_messages"] = ledger.allocation_messages;
    j["statistics_messages"] = ledger.statistics_messages;
    j["vote_messages"] = ledger.vote_messages;
    j["data_total"] = ledger.data_total();
    return j;
}

namespace detail {

inline nlohmann::ordered_json indices_to_json(const std::vector<int>& indices) {
    auto arr = nlohmann::ordered_json::array();
    for (int i : indices) arr.push_back(i + 1);
    return arr;
}

template <typename T>
nlohmann::ordered_json indexed_map_to_json(const std::map<int, T>& m) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [i, v] : m) j[std::to_string(i + 1)] = v;
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json trace_to_json(const RoundTrace& trace) {
    nlohmann::ordered_json j;
    j["round"] = trace.round;
    j["d_p"] = trace.d_p;
    j["active_before"] = detail::indices_to_json(trace.active_before);
    j["weights"] = detail::indexed_map_to_json(trace.weights);
    j["allocation"] = detail::indexed_map_to_json(trace.allocation);
    j["estimates"] = detail::indexed_map_to_json(trace.estimates);
    j["active_after"] = detail::indices_to_json(trace.active_after);
    return j;
}

inline nlohmann::ordered_json outcome_to_json(const RunOutcome& outcome) {
    nlohmann::ordered_json j;
    j["algorithm"] = outcome.algorithm;
    j["chosen_arm"] = outcome.chosen_arm + 1;
    j["correct"] = outcome.correct;
    auto blocks = nlohmann::ordered_json::array();
    for (const BlockTrace& block : outcome.blocks) {
        nlohmann::ordered_json bj;
        bj["block"] = block.block_id + 1;
        if (block.hub >= 0) {
            bj["hub"] = block.hub + 1;
        } else {
            bj["hub"] = nullptr;
        }
        bj["agents"] = block.num_agents;
        auto rounds = nlohmann::ordered_json::array();
        for (const RoundTrace& t : block.rounds) rounds.push_back(trace_to_json(t));
        bj["rounds"] = std::move(rounds);
        blocks.push_back(std::move(bj));
    }
    j["blocks"] = std::move(blocks);
    if (!outcome.votes.empty()) {
        auto votes = nlohmann::ordered_json::array();
        for (const HubVote& v : outcome.votes) {
            nlohmann::ordered_json vj;
            vj["hub"] = v.hub + 1;
            vj["arm"] = v.arm + 1;
            vj["uncertainty"] = v.uncertainty;
            votes.push_back(std::move(vj));
        }
        j["votes"] = std::move(votes);
    }
    j["ledger"] = ledger_to_json(outcome.ledger);
    return j;
}

// The algorithm-decision content of an outcome: chosen arm plus the full
// per-block round traces, excluding ledgers and vote metadata. A
// single-block generic run and the equivalent star run serialize to the
// same bytes here.
inline std::string decision_record(const RunOutcome& outcome) {
    nlohmann::ordered_json j;
    j["chosen_arm"] = outcome.chosen_arm + 1;
    auto blocks = nlohmann::ordered_json::array();
    for (const BlockTrace& block : outcome.blocks) {
        auto rounds = nlohmann::ordered_json::array();
        for (const RoundTrace& t : block.rounds) rounds.push_back(trace_to_json(t));
        blocks.push_back(std::move(rounds));
    }
    j["rounds"] = std::move(blocks);
    return j.dump();
}

}  // namespace malinbai
