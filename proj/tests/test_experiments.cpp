#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "malinbai/experiments.hpp"
#include "malinbai/rng.hpp"
#include "test_util.hpp"

using malinbai::LinearBanditInstance;
using malinbai::RngStream;
using malinbai::SweepConfig;

TEST_CASE("standard instance construction") {
    const auto inst = malinbai::gen_standard_instance(10, 0.3);
    REQUIRE(inst.num_arms() == 10);
    REQUIRE(inst.dim() == 10);
    CHECK(inst.noise_std() == 1.0);
    CHECK(inst.theta()(0) == 0.3);
    CHECK(inst.theta().tail(9).norm() == 0.0);
    CHECK(malinbai::gap_profile(inst).best_index == 0);

    const auto small = malinbai::gen_standard_instance(2, 1.0);
    const auto profile = malinbai::gap_profile(small);
    CHECK(profile.gaps[0] == 0.0);
    CHECK(profile.gaps[1] == Catch::Approx(1.0));

    for (int d : {2, 5, 9}) {
        for (double delta : {0.05, 0.3, 1.5}) {
            CHECK(malinbai::gap_profile(malinbai::gen_standard_instance(d, delta)).delta_min ==
                  Catch::Approx(delta));
        }
    }
    CHECK_THROWS_AS(malinbai::gen_standard_instance(1, 0.5), malinbai::Error);
    CHECK_THROWS_AS(malinbai::gen_standard_instance(4, 0.0), malinbai::Error);
}

TEST_CASE("sphere instances are unit-norm with the constructed best arm") {
    const RngStream rng = RngStream(11).child(0);
    const auto inst = malinbai::gen_random_sphere_instance(6, 30, rng);
    for (const auto& arm : inst.arms()) {
        REQUIRE(arm.norm() == Catch::Approx(1.0).margin(1e-9));
    }
    const auto profile = malinbai::gap_profile(inst);

    // Recover the closest pair independently and expand the construction:
    // theta = 1.01 u - 0.01 v gives <theta, u - v> = 1.02 (1 - <u, v>).
    int ui = 0, vi = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < inst.num_arms(); ++i) {
        for (int j = i + 1; j < inst.num_arms(); ++j) {
            const double dist = (inst.arm(i) - inst.arm(j)).norm();
            if (dist < best) {
                best = dist;
                ui = i;
                vi = j;
            }
        }
    }
    REQUIRE(profile.best_index == ui);
    const double margin = malinbai::expected_reward(inst, ui) - malinbai::expected_reward(inst, vi);
    const double cosine = inst.arm(ui).dot(inst.arm(vi));
    REQUIRE(margin == Catch::Approx(1.02 * (1.0 - cosine)).epsilon(1e-9));
    REQUIRE(margin > 0.0);

    // Determinism: the same stream regenerates the same instance.
    const auto again = malinbai::gen_random_sphere_instance(6, 30, rng);
    for (int i = 0; i < inst.num_arms(); ++i) {
        REQUIRE((inst.arm(i) - again.arm(i)).norm() == 0.0);
    }
}

TEST_CASE("theorem 1 bound evaluates the closed form") {
    CHECK(malinbai::theorem1_bound(2000, 15, 10, 10, 0.5) ==
          Catch::Approx(0.0114639173681436852).epsilon(1e-12));
    // Vacuous plateau at delta = 0: exactly 4 log2 K.
    CHECK(malinbai::theorem1_bound(500, 3, 10, 10, 0.0) ==
          Catch::Approx(13.2877123795494494).epsilon(1e-12));
    // Doubling T squares the exponential factor.
    const double log_k = std::log2(10.0);
    const double r1 = malinbai::theorem1_bound(700, 5, 10, 10, 0.3) / (4.0 * log_k);
    const double r2 = malinbai::theorem1_bound(1400, 5, 10, 10, 0.3) / (4.0 * log_k);
    CHECK(r2 == Catch::Approx(r1 * r1).epsilon(1e-12));
}

TEST_CASE("theorem 2 bound is twice the single-agent theorem 1 value") {
    CHECK(malinbai::theorem2_bound(2000, 10, 10, 0.5) ==
          Catch::Approx(16.6037328287412001).epsilon(1e-12));
    CHECK(malinbai::theorem2_bound(2000, 10, 10, 0.5) ==
          Catch::Approx(2.0 * malinbai::theorem1_bound(2000, 1, 10, 10, 0.5)).epsilon(1e-12));
    for (double T : {100.0, 350.0, 900.0}) {
        CHECK(malinbai::theorem2_bound(T, 7, 12, 0.2) ==
              Catch::Approx(2.0 * malinbai::theorem1_bound(T, 1, 7, 12, 0.2)).epsilon(1e-12));
    }
}

TEST_CASE("lower bound exponent") {
    const auto inst = malinbai::gen_standard_instance(10, 0.5);
    CHECK(malinbai::lower_bound_exponent(inst, 1000) ==
          Catch::Approx(7.52574989159952988).epsilon(1e-12));

    // Doubling the hardness halves the exponent: gaps scaled by 1/sqrt(2).
    const auto harder = malinbai::gen_standard_instance(10, 0.5 / std::sqrt(2.0));
    CHECK(malinbai::lower_bound_exponent(harder, 1000) ==
          Catch::Approx(0.5 * malinbai::lower_bound_exponent(inst, 1000)).epsilon(1e-9));

    // d = 2: log2 d = 1, no blowup.
    const auto flat = malinbai::gen_standard_instance(2, 1.0);
    CHECK(malinbai::lower_bound_exponent(flat, 100) ==
          Catch::Approx(100.0 / malinbai::hardness(flat)).epsilon(1e-12));
}

TEST_CASE("sweep config parsing validates the grid") {
    const auto j = nlohmann::json::parse(R"({
        "algorithm": "star", "family": "standard",
        "d": 4, "delta": [0.2, 0.4], "M": [1, 3], "T": 40,
        "trials": 5, "master_seed": 9
    })");
    const SweepConfig cfg = malinbai::sweep_config_from_json(j);
    const auto grid = malinbai::expand_grid(cfg);
    REQUIRE(grid.size() == 4);
    CHECK(grid[0].delta == 0.2);
    CHECK(grid[0].M == 1);
    CHECK(grid[3].delta == 0.4);
    CHECK(grid[3].M == 3);
    CHECK(grid[0].K == 4);  // standard family: K = d

    auto empty = j;
    empty["delta"] = nlohmann::json::array();
    CHECK_THROWS_AS(malinbai::sweep_config_from_json(empty), malinbai::Error);
    auto missing = j;
    missing.erase("T");
    CHECK_THROWS_AS(malinbai::sweep_config_from_json(missing), malinbai::Error);
}

TEST_CASE("noiseless sweeps estimate zero error") {
    SweepConfig cfg;
    cfg.algorithm = "star";
    cfg.family = "standard";
    cfg.d_values = {4};
    cfg.delta_values = {0.2};
    cfg.m_values = {2};
    cfg.t_values = {40};
    cfg.noise_std = 0.0;
    cfg.trials = 10;
    cfg.master_seed = 77;
    const auto estimates = malinbai::monte_carlo(cfg);
    REQUIRE(estimates.size() == 1);
    CHECK(estimates[0].p_hat == 0.0);
    CHECK(estimates[0].stderr_value == 0.0);
    CHECK(estimates[0].mean_data_messages ==
          Catch::Approx(static_cast<double>(malinbai::ledger_closed_form_star(2, 4).data_total())));
}

TEST_CASE("monte carlo results do not depend on the thread count") {
    SweepConfig cfg;
    cfg.algorithm = "star";
    cfg.family = "standard";
    cfg.d_values = {4};
    cfg.delta_values = {0.1, 0.3};
    cfg.m_values = {2};
    cfg.t_values = {40};
    cfg.trials = 25;
    cfg.master_seed = 123;
    const auto serial = malinbai::monte_carlo(cfg, 1);
    const auto parallel = malinbai::monte_carlo(cfg, 4);
    REQUIRE(serial.size() == parallel.size());
    REQUIRE(malinbai::results_to_json(serial).dump() == malinbai::results_to_json(parallel).dump());

    // Sphere-family sweeps regenerate per-trial instances deterministically too.
    SweepConfig sphere;
    sphere.algorithm = "star";
    sphere.family = "sphere";
    sphere.d_values = {3};
    sphere.k_values = {8};
    sphere.m_values = {2};
    sphere.t_values = {60};
    sphere.trials = 12;
    sphere.master_seed = 321;
    const auto s1 = malinbai::monte_carlo(sphere, 1);
    const auto s3 = malinbai::monte_carlo(sphere, 3);
    REQUIRE(malinbai::results_to_json(s1).dump() == malinbai::results_to_json(s3).dump());
}

TEST_CASE("aggregation is invariant to trial order") {
    std::vector<malinbai::TrialRecord> records;
    auto s = RngStream(17).sampler();
    for (int i = 0; i < 50; ++i) {
        records.push_back({s.uniform01() < 0.3, static_cast<long long>(s.uniform_int(200)),
                           static_cast<long long>(s.uniform_int(50))});
    }
    malinbai::GridPoint point;
    const auto forward = malinbai::aggregate_trials(point, records);
    std::reverse(records.begin(), records.end());
    const auto backward = malinbai::aggregate_trials(point, records);
    CHECK(forward.p_hat == backward.p_hat);
    CHECK(forward.stderr_value == backward.stderr_value);
    CHECK(forward.mean_data_messages == backward.mean_data_messages);
}

TEST_CASE("trial failures carry the trial index") {
    SweepConfig cfg;
    cfg.algorithm = "star";
    cfg.family = "standard";
    cfg.d_values = {10};
    cfg.delta_values = {0.3};
    cfg.m_values = {2};
    cfg.t_values = {5};  // below ceil(log2 10) * 10
    cfg.trials = 3;
    try {
        malinbai::monte_carlo(cfg);
        FAIL("expected InsufficientBudget");
    } catch (const malinbai::Error& e) {
        CHECK(e.name() == "InsufficientBudget");
        CHECK(std::string(e.what()).find("trial 0") != std::string::npos);
    }
}

TEST_CASE("error decreases with more agents on the standard instance") {
    SweepConfig cfg;
    cfg.algorithm = "star";
    cfg.family = "standard";
    cfg.d_values = {10};
    cfg.delta_values = {0.1};
    cfg.m_values = {1, 5, 15};
    cfg.t_values = {60};
    cfg.trials = 500;
    cfg.master_seed = 2024;
    const auto estimates = malinbai::monte_carlo(cfg, 4);
    REQUIRE(estimates.size() == 3);
    for (std::size_t i = 1; i < estimates.size(); ++i) {
        const double pooled = std::sqrt(estimates[i - 1].stderr_value * estimates[i - 1].stderr_value +
                                        estimates[i].stderr_value * estimates[i].stderr_value);
        INFO("M=" << estimates[i].point.M << " p=" << estimates[i].p_hat << " prev="
                  << estimates[i - 1].p_hat);
        REQUIRE(estimates[i].p_hat <= estimates[i - 1].p_hat + 2.0 * pooled);
    }
    // Fitted log-error slope in M is negative when every point has errors.
    bool all_positive = true;
    for (const auto& e : estimates) all_positive = all_positive && e.p_hat > 0.0;
    if (all_positive) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& e : estimates) {
            const double x = e.point.M;
            const double y = std::log(e.p_hat);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(estimates.size());
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        REQUIRE(slope < 0.0);
    }
}
