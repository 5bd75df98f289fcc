#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "malinbai/errors.hpp"
#include "malinbai/linalg.hpp"
#include "malinbai/rng.hpp"

namespace malinbai {

// A linear bandit ground truth: K arm vectors in R^d, a hidden parameter,
// and a Gaussian noise scale. Immutable after construction; construction
// fails if the best arm is not strictly unique.
class LinearBanditInstance {
public:
    LinearBanditInstance(std::vector<Vec> arms, Vec theta, double noise_std)
        : arms_(std::move(arms)), theta_(std::move(theta)), noise_std_(noise_std) {
        validate();
    }

    const std::vector<Vec>& arms() const { return arms_; }
    const Vec& arm(int i) const { check_index(i); return arms_[static_cast<std::size_t>(i)]; }
    const Vec& theta() const { return theta_; }
    double noise_std() const { return noise_std_; }
    int num_arms() const { return static_cast<int>(arms_.size()); }
    int dim() const { return static_cast<int>(theta_.size()); }

    void check_index(int i) const {
        if (i < 0 || i >= num_arms()) {
            throw IndexOutOfRange("arm index " + std::to_string(i) + " out of range [0, " +
                                  std::to_string(num_arms()) + ")");
        }
    }

private:
    void validate() const;

    std::vector<Vec> arms_;
    Vec theta_;
    double noise_std_;
};

struct GapProfile {
    int best_index = -1;                 // 0-based
    std::vector<double> gaps;            // Delta_i = <theta, a* - a_i>, zero at best_index
    double delta_min = 0.0;              // smallest positive gap
};

inline double expected_reward(const LinearBanditInstance& inst, int i) {
    inst.check_index(i);
    return inst.theta().dot(inst.arm(i));
}

// One noisy reward draw. Noiseless instances consume no randomness, so a
// noise_std = 0 run is exactly deterministic.
inline double sample_reward(const LinearBanditInstance& inst, int i, RngStream::Sampler& sampler) {
    const double mean = expected_reward(inst, i);
    if (inst.noise_std() == 0.0) return mean;
    return mean + inst.noise_std() * sampler.normal();
}

inline GapProfile gap_profile(const LinearBanditInstance& inst) {
    const int K = inst.num_arms();
    std::vector<double> rewards(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) rewards[static_cast<std::size_t>(i)] = expected_reward(inst, i);

    int best = 0;
    for (int i = 1; i < K; ++i) {
        if (rewards[static_cast<std::size_t>(i)] > rewards[static_cast<std::size_t>(best)]) best = i;
    }
    const double top = rewards[static_cast<std::size_t>(best)];
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(top));
    for (int i = 0; i < K; ++i) {
        if (i != best && top - rewards[static_cast<std::size_t>(i)] <= tie_tol) {
            throw TiedBestArm("arms " + std::to_string(best) + " and " + std::to_string(i) +
                              " share the maximum expected reward");
        }
    }

    GapProfile profile;
    profile.best_index = best;
    profile.gaps.resize(static_cast<std::size_t>(K));
    profile.delta_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
        const double gap = top - rewards[static_cast<std::size_t>(i)];
        profile.gaps[static_cast<std::size_t>(i)] = gap;
        if (i != best) profile.delta_min = std::min(profile.delta_min, gap);
    }
    return profile;
}

// Instance hardness: sum of Delta_i^{-2} over the d largest-reward arms
// (all arms when K < d), with the best arm's zero gap replaced by delta_min.
inline double hardness(const LinearBanditInstance& inst) {
    const GapProfile profile = gap_profile(inst);
    std::vector<double> gaps = profile.gaps;
    gaps[static_cast<std::size_t>(profile.best_index)] = profile.delta_min;
    std::sort(gaps.begin(), gaps.end());
    const std::size_t terms = std::min<std::size_t>(gaps.size(), static_cast<std::size_t>(inst.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < terms; ++i) sum += 1.0 / (gaps[i] * gaps[i]);
    return sum;
}

inline void LinearBanditInstance::validate() const {
    if (arms_.size() < 2) throw Error("InvalidInstance", "an instance needs at least 2 arms");
    if (theta_.size() < 1) throw Error("InvalidInstance", "parameter dimension must be >= 1");
    if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
        throw Error("InvalidInstance", "noise_std must be finite and >= 0");
    }
    if (!theta_.allFinite()) throw Error("InvalidInstance", "theta has non-finite entries");
    for (const Vec& a : arms_) {
        if (a.size() != theta_.size()) {
            throw Error("InvalidInstance", "arm dimension does not match theta");
        }
        if (!a.allFinite()) throw Error("InvalidInstance", "arm has non-finite entries");
    }
    gap_profile(*this);  // throws TiedBestArm unless the best arm is strictly unique
}

// ---------------------------------------------------------------------------
// File formats

inline nlohmann::ordered_json instance_to_json(const LinearBanditInstance& inst) {
    nlohmann::ordered_json j;
    auto arms = nlohmann::ordered_json::array();
    for (const Vec& a : inst.arms()) {
        arms.push_back(std::vector<double>(a.data(), a.data() + a.size()));
    }
    j["arms"] = std::move(arms);
    j["theta"] = std::vector<double>(inst.theta().data(), inst.theta().data() + inst.theta().size());
    j["noise_std"] = inst.noise_std();
    return j;
}

inline LinearBanditInstance instance_from_json(const nlohmann::json& j) {
    std::vector<Vec> arms;
    for (const auto& row : j.at("arms")) {
        const auto entries = row.get<std::vector<double>>();
        arms.push_back(Eigen::Map<const Vec>(entries.data(), static_cast<Eigen::Index>(entries.size())));
    }
    const auto th = j.at("theta").get<std::vector<double>>();
    Vec theta = Eigen::Map<const Vec>(th.data(), static_cast<Eigen::Index>(th.size()));
    const double noise = j.value("noise_std", 1.0);
    return LinearBanditInstance(std::move(arms), std::move(theta), noise);
}

// Arm-set-only CSV: K rows of d comma-separated numbers, row i = arm i.
inline std::vector<Vec> arms_from_csv(std::istream& in) {
    std::vector<Vec> arms;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> entries;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            entries.push_back(std::stod(cell));
        }
        arms.push_back(Eigen::Map<const Vec>(entries.data(), static_cast<Eigen::Index>(entries.size())));
        if (arms.back().size() != arms.front().size()) {
            throw Error("MalformedFile", "CSV rows have inconsistent column counts");
        }
    }
    if (arms.empty()) throw EmptyArmSet("CSV contains no arms");
    return arms;
}

}  // namespace malinbai
