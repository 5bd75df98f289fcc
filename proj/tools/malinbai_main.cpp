// Command-line front end: single runs, Monte-Carlo sweeps, design solves,
// graph partitioning, and bound evaluation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "malinbai/algorithms.hpp"
#include "malinbai/bandit.hpp"
#include "malinbai/design.hpp"
#include "malinbai/errors.hpp"
#include "malinbai/experiments.hpp"
#include "malinbai/linalg.hpp"
#include "malinbai/topology.hpp"

namespace {

using malinbai::Error;

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Errors that indicate bad invocations or malformed inputs exit 2; errors
// raised by algorithm preconditions exit 3.
bool is_usage_error(const std::string& name) {
    return name == "InvalidConfig" || name == "InvalidArgument" || name == "MalformedFile" ||
           name == "InvalidGraph" || name == "BadInstanceSpec" || name == "FileNotFound";
}

std::uint64_t env_default_seed() {
    if (const char* env = std::getenv("MALINBAI_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw Error("InvalidArgument", "MALINBAI_SEED is not a valid 64-bit seed");
        }
    }
    return 0;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open " + path);
    return in;
}

std::map<std::string, std::string> parse_kv_list(const std::string& body) {
    std::map<std::string, std::string> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw Error("BadInstanceSpec", "expected key=value, got '" + item + "'");
        }
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 std::optional<double> fallback = std::nullopt) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        if (fallback) return *fallback;
        throw Error("BadInstanceSpec", "missing '" + key + "' in instance spec");
    }
    return std::stod(it->second);
}

// Instance argument: a generator spec ("std:d=10,delta=0.3,noise=1" or
// "sphere:d=10,K=100,noise=1") or a path to an instance JSON document.
malinbai::LinearBanditInstance load_instance(const std::string& spec,
                                             const malinbai::RngStream& rng) {
    if (spec.rfind("std:", 0) == 0) {
        const auto kv = parse_kv_list(spec.substr(4));
        return malinbai::gen_standard_instance(static_cast<int>(kv_double(kv, "d")),
                                               kv_double(kv, "delta"),
                                               kv_double(kv, "noise", 1.0));
    }
    if (spec.rfind("sphere:", 0) == 0) {
        const auto kv = parse_kv_list(spec.substr(7));
        return malinbai::gen_random_sphere_instance(
            static_cast<int>(kv_double(kv, "d")), static_cast<int>(kv_double(kv, "K")),
            rng.child(malinbai::kInstanceStreamTag), kv_double(kv, "noise", 1.0));
    }
    auto in = open_input(spec);
    nlohmann::json j;
    try {
        in >> j;
        return malinbai::instance_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedFile", spec + ": " + e.what());
    }
}

void emit(const nlohmann::ordered_json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw Error("FileNotFound", "cannot write " + out_path);
        out << text;
    }
}

struct RunArgs {
    std::string algo = "star";
    std::string instance;
    int M = 0;
    int T = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string graph_file;
    std::string partition_file;
    std::string out_path;
};

int cmd_run(const RunArgs& args) {
    const std::uint64_t seed = args.seed_given ? args.seed : env_default_seed();
    const malinbai::RngStream rng(seed);
    const malinbai::LinearBanditInstance inst = load_instance(args.instance, rng);

    malinbai::RunOutcome outcome;
    if (args.algo == "gen") {
        if (args.graph_file.empty()) {
            throw Error("InvalidArgument", "--algo gen requires --graph");
        }
        auto in = open_input(args.graph_file);
        const malinbai::AgentGraph graph = malinbai::graph_from_stream(in);
        if (args.M != 0 && args.M != graph.n) {
            throw Error("InvalidArgument", "--M does not match the graph vertex count");
        }
        malinbai::Partition partition;
        if (!args.partition_file.empty()) {
            auto pin = open_input(args.partition_file);
            nlohmann::json pj;
            try {
                pin >> pj;
                partition = malinbai::partition_from_json(pj);
            } catch (const nlohmann::json::exception& e) {
                throw Error("MalformedFile", args.partition_file + ": " + e.what());
            }
        } else {
            partition = malinbai::build_partition(graph, malinbai::greedy_dominating_set(graph));
        }
        outcome = malinbai::run_gen(inst, graph, partition, args.T, rng);
    } else if (args.algo == "star") {
        outcome = malinbai::run_star(inst, args.M, args.T, rng);
    } else {
        outcome = malinbai::run_ma_od_linbai(inst, args.M, args.T, rng);
    }
    emit(malinbai::outcome_to_json(outcome), args.out_path);
    return 0;
}

struct SweepArgs {
    std::string config_file;
    std::string out_dir;
    int threads = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_sweep(const SweepArgs& args) {
    auto in = open_input(args.config_file);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedFile", args.config_file + ": " + e.what());
    }
    malinbai::SweepConfig cfg = malinbai::sweep_config_from_json(j);
    if (args.seed_given) {
        cfg.master_seed = args.seed;
    } else if (!j.contains("master_seed")) {
        cfg.master_seed = env_default_seed();
    }
    if (cfg.algorithm == "gen") {
        const auto graph_path =
            std::filesystem::path(args.config_file).parent_path() / cfg.graph_file;
        auto gin = open_input(std::filesystem::exists(graph_path) ? graph_path.string()
                                                                  : cfg.graph_file);
        cfg.graph = malinbai::graph_from_stream(gin);
    }

    const std::vector<malinbai::ErrorEstimate> estimates = malinbai::monte_carlo(cfg, args.threads);

    std::filesystem::create_directories(args.out_dir);
    {
        std::ofstream csv(std::filesystem::path(args.out_dir) / "results.csv");
        malinbai::write_results_csv(estimates, csv);
    }
    {
        std::ofstream json_out(std::filesystem::path(args.out_dir) / "results.json");
        json_out << malinbai::results_to_json(estimates).dump(2) << "\n";
    }
    {
        std::ofstream plot(std::filesystem::path(args.out_dir) / "plotdata.csv");
        malinbai::write_plot_data(estimates, plot);
    }
    std::cout << "wrote " << estimates.size() << " grid points to " << args.out_dir << "\n";
    return 0;
}

int cmd_design(const std::string& arms_file, double epsilon, int max_iter,
               const std::string& out_path) {
    auto in = open_input(arms_file);
    std::vector<malinbai::Vec> arms;
    try {
        arms = malinbai::arms_from_csv(in);
    } catch (const std::invalid_argument&) {
        throw Error("MalformedFile", arms_file + ": non-numeric CSV cell");
    }
    const malinbai::DesignWeights design = malinbai::g_optimal_design(arms, epsilon, max_iter);
    nlohmann::ordered_json j;
    auto weights = nlohmann::ordered_json::object();
    for (const auto& [i, w] : design.weights) weights[std::to_string(i + 1)] = w;
    j["weights"] = std::move(weights);
    j["g_value"] = design.g_value;
    j["iterations"] = design.iterations;
    j["converged"] = design.converged;
    emit(j, out_path);
    return 0;
}

int cmd_domset(const std::string& graph_file, const std::string& out_path) {
    auto in = open_input(graph_file);
    const malinbai::AgentGraph graph = malinbai::graph_from_stream(in);
    const malinbai::Partition partition =
        malinbai::build_partition(graph, malinbai::greedy_dominating_set(graph));
    emit(malinbai::partition_to_json(partition), out_path);
    return 0;
}

struct BoundArgs {
    std::string thm = "1";
    int T = 0;
    int M = 1;
    int d = 0;
    int K = 0;
    double delta = 0.0;
    std::string instance;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_path;
};

int cmd_bound(const BoundArgs& args) {
    nlohmann::ordered_json j;
    if (args.thm == "1") {
        j["theorem"] = 1;
        j["value"] = malinbai::theorem1_bound(args.T, args.M, args.d, args.K, args.delta);
    } else if (args.thm == "2") {
        j["theorem"] = 2;
        j["value"] = malinbai::theorem2_bound(args.T, args.d, args.K, args.delta);
    } else if (args.thm == "lower") {
        if (args.instance.empty()) {
            throw Error("InvalidArgument", "--thm lower requires --instance");
        }
        const std::uint64_t seed = args.seed_given ? args.seed : env_default_seed();
        const malinbai::LinearBanditInstance inst =
            load_instance(args.instance, malinbai::RngStream(seed));
        j["theorem"] = "lower";
        j["value"] = malinbai::lower_bound_exponent(inst, args.T);
        j["hardness"] = malinbai::hardness(inst);
    } else {
        throw Error("InvalidArgument", "--thm must be 1, 2, or lower");
    }
    emit(j, args.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaborative fixed-budget best-arm identification for linear bandits"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Execute one identification run");
    run->add_option("--algo", run_args.algo, "Algorithm: star, gen, or ma-od")
        ->check(CLI::IsMember({"star", "gen", "ma-od"}))
        ->required();
    run->add_option("--instance", run_args.instance,
                    "Instance JSON file or generator spec (std:..., sphere:...)")
        ->required();
    run->add_option("--M", run_args.M, "Number of agents (gen: must match the graph)");
    run->add_option("--T", run_args.T, "Per-agent time budget")->required();
    auto* run_seed = run->add_option("--seed", run_args.seed, "Master seed");
    run->add_option("--graph", run_args.graph_file, "Agent graph file (gen)");
    run->add_option("--partition", run_args.partition_file,
                    "Partition JSON (gen; greedy partition when omitted)");
    run->add_option("--out", run_args.out_path, "Write the outcome JSON here instead of stdout");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Run a Monte-Carlo parameter sweep");
    sweep->add_option("--config", sweep_args.config_file, "Sweep config JSON")->required();
    sweep->add_option("--out-dir", sweep_args.out_dir, "Output directory")->required();
    sweep->add_option("--threads", sweep_args.threads, "Worker threads for trials")
        ->check(CLI::PositiveNumber);
    auto* sweep_seed = sweep->add_option("--seed", sweep_args.seed,
                                         "Master seed (overrides the config)");

    std::string design_arms, design_out;
    double design_epsilon = 1.0;
    int design_max_iter = 10000;
    auto* design = app.add_subcommand("design", "Solve the approximate G-optimal design");
    design->add_option("--arms", design_arms, "Arm-set CSV (K rows x d columns)")->required();
    design->add_option("--epsilon", design_epsilon, "Approximation slack (g <= (1+eps) d)");
    design->add_option("--max-iter", design_max_iter, "Iteration cap");
    design->add_option("--out", design_out, "Write JSON here instead of stdout");

    std::string domset_graph, domset_out;
    auto* domset = app.add_subcommand("domset", "Greedy dominating set and partition");
    domset->add_option("--graph", domset_graph, "Graph file")->required();
    domset->add_option("--out", domset_out, "Write JSON here instead of stdout");

    BoundArgs bound_args;
    auto* bound = app.add_subcommand("bound", "Evaluate theoretical error bounds");
    bound->add_option("--thm", bound_args.thm, "Bound: 1, 2, or lower")->required();
    bound->add_option("--T", bound_args.T, "Time budget")->required();
    bound->add_option("--M", bound_args.M, "Number of agents (theorem 1)");
    bound->add_option("--d", bound_args.d, "Dimension");
    bound->add_option("--K", bound_args.K, "Number of arms");
    bound->add_option("--delta", bound_args.delta, "Minimum gap");
    bound->add_option("--instance", bound_args.instance, "Instance for --thm lower");
    auto* bound_seed = bound->add_option("--seed", bound_args.seed, "Master seed");
    bound->add_option("--out", bound_args.out_path, "Write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    run_args.seed_given = run_seed->count() > 0;
    sweep_args.seed_given = sweep_seed->count() > 0;
    bound_args.seed_given = bound_seed->count() > 0;

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (design->parsed()) return cmd_design(design_arms, design_epsilon, design_max_iter, design_out);
        if (domset->parsed()) return cmd_domset(domset_graph, domset_out);
        if (bound->parsed()) return cmd_bound(bound_args);
    } catch (const Error& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
        return is_usage_error(e.name()) ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
