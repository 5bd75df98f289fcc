#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "malinbai/errors.hpp"
#include "malinbai/linalg.hpp"

namespace malinbai {

// A probability design over an arm set, keyed by position in the arm list,
// together with the exact achieved worst-case quadratic norm g(pi).
struct DesignWeights {
    std::map<int, double> weights;
    double g_value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> g_log;  // running best g after each iteration
};

struct PullAllocation {
    std::map<int, int> counts;  // positive counts only
    int total = 0;
};

inline Mat weighted_design_matrix(const std::vector<Vec>& arms, const std::map<int, double>& weights) {
    const Eigen::Index d = arms.front().size();
    Mat V = Mat::Zero(d, d);
    for (const auto& [i, w] : weights) {
        if (w != 0.0) V.noalias() += w * arms[static_cast<std::size_t>(i)] * arms[static_cast<std::size_t>(i)].transpose();
    }
    return V;
}

// V_m of one round: the exact weighted sum of outer products for an
// integer pull allocation.
inline Mat design_matrix(const std::vector<Vec>& arms, const PullAllocation& alloc) {
    const Eigen::Index d = arms.front().size();
    Mat V = Mat::Zero(d, d);
    for (const auto& [i, c] : alloc.counts) {
        V.noalias() += static_cast<double>(c) * arms[static_cast<std::size_t>(i)] *
                       arms[static_cast<std::size_t>(i)].transpose();
    }
    return V;
}

namespace detail {

// Exact g(pi) = max_i a_i^T V(pi)^{-1} a_i, with the maximizing index.
// Returns infinity when V is numerically singular.
inline std::pair<double, int> design_g(const std::vector<Vec>& arms, const Mat& V) {
    Eigen::LDLT<Mat> ldlt(V);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-13 * ldlt.vectorD().maxCoeff()) {
        return {std::numeric_limits<double>::infinity(), -1};
    }
    double g = -1.0;
    int arg = -1;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const double n = arms[i].dot(ldlt.solve(arms[i]));
        if (n > g) {
            g = n;
            arg = static_cast<int>(i);
        }
    }
    return {g, arg};
}

}  // namespace detail

// Frank-Wolfe solver for the approximate G-optimal design over a spanning
// arm set in R^{d_p}. Starts from the uniform design; each step moves mass
// to the arm with the largest quadratic norm using the closed-form step
// gamma = (g/d - 1)/(g - 1); stops once g <= (1 + epsilon) * d_p. If
// max_iter is exhausted the best iterate seen is returned unconverged.
inline DesignWeights g_optimal_design(const std::vector<Vec>& arms, double epsilon = 1.0,
                                      int max_iter = 10000) {
    if (arms.empty()) throw EmptyArmSet("cannot design over an empty arm set");
    const int K = static_cast<int>(arms.size());
    const int d = static_cast<int>(arms.front().size());
    if (K < d) {
        throw DegenerateSpan("need at least d_p arms to span the projected space");
    }

    std::vector<double> w(static_cast<std::size_t>(K), 1.0 / K);
    DesignWeights best;
    const double target = (1.0 + epsilon) * d;

    for (int it = 0; it <= max_iter; ++it) {
        Mat V = Mat::Zero(d, d);
        for (int i = 0; i < K; ++i) {
            V.noalias() += w[static_cast<std::size_t>(i)] * arms[static_cast<std::size_t>(i)] *
                           arms[static_cast<std::size_t>(i)].transpose();
        }
        const auto [g, k] = detail::design_g(arms, V);
        if (!std::isfinite(g)) {
            if (it == 0) throw DegenerateSpan("arms do not span the projected space");
            break;  // numerically degenerate iterate; keep the best seen
        }
        if (g < best.g_value) {
            best.g_value = g;
            best.weights.clear();
            for (int i = 0; i < K; ++i) best.weights[i] = w[static_cast<std::size_t>(i)];
        }
        best.iterations = it;
        best.g_log.push_back(best.g_value);
        if (best.g_value <= target) {
            best.converged = true;
            break;
        }
        if (it == max_iter) break;

        const double gamma = (g / d - 1.0) / (g - 1.0);
        for (double& x : w) x *= (1.0 - gamma);
        w[static_cast<std::size_t>(k)] += gamma;
    }

    // Kiefer-Wolfowitz: no design can beat g = d_p.
    if (best.g_value < d * (1.0 - 1e-6)) {
        throw Error("KieferWolfowitzViolation", "computed g below the dimension lower bound");
    }
    return best;
}

// Drop weights below the threshold and renormalize; g is recomputed for the
// pruned design over the full arm set (infinite when the pruned support no
// longer spans, which callers must reject).
inline DesignWeights prune_support(const std::vector<Vec>& arms, const DesignWeights& design,
                                   double threshold) {
    DesignWeights pruned;
    pruned.iterations = design.iterations;
    pruned.converged = design.converged;
    pruned.g_log = design.g_log;
    double kept = 0.0;
    for (const auto& [i, w] : design.weights) {
        if (w >= threshold) {
            pruned.weights[i] = w;
            kept += w;
        }
    }
    if (pruned.weights.empty()) {
        throw AllPruned("every design weight falls below the pruning threshold");
    }
    for (auto& [i, w] : pruned.weights) w /= kept;
    pruned.g_value = detail::design_g(arms, weighted_design_matrix(arms, pruned.weights)).first;
    return pruned;
}

// Integer rounding of b * pi by largest remainder, ties to the lower arm
// index. Conserves the total exactly and never allocates outside the
// design support.
inline PullAllocation round_allocation(const DesignWeights& design, int b) {
    PullAllocation alloc;
    alloc.total = b;
    std::vector<std::pair<int, double>> remainders;  // (index, fractional part)
    int assigned = 0;
    std::map<int, int> counts;
    for (const auto& [i, w] : design.weights) {
        if (w <= 0.0) continue;
        const double exact = b * w;
        const int base = static_cast<int>(std::floor(exact));
        counts[i] = base;
        assigned += base;
        remainders.emplace_back(i, exact - base);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b2) { return a.second > b2.second; });
    int leftover = b - assigned;
    for (const auto& [i, frac] : remainders) {
        if (leftover == 0) break;
        ++counts[i];
        --leftover;
    }
    for (const auto& [i, c] : counts) {
        if (c > 0) alloc.counts[i] = c;
    }
    return alloc;
}

namespace detail {

inline int allocation_rank(const std::vector<Vec>& arms, const PullAllocation& alloc) {
    std::vector<Vec> support;
    for (const auto& [i, c] : alloc.counts) {
        if (c > 0) support.push_back(arms[static_cast<std::size_t>(i)]);
    }
    if (support.empty()) return 0;
    try {
        return rank_basis(support).dim();
    } catch (const EmptyArmSet&) {
        return 0;
    }
}

}  // namespace detail

// Rounding can starve a dimension when small design weights floor to zero.
// Repair by moving single pulls from the largest-count arm to the
// highest-weight unallocated support arm until the allocation spans.
inline PullAllocation ensure_spanning_allocation(const std::vector<Vec>& arms,
                                                 const DesignWeights& design,
                                                 PullAllocation alloc) {
    const int d = static_cast<int>(arms.front().size());
    const int max_moves = static_cast<int>(design.weights.size()) + 2;
    for (int move = 0; move < max_moves && detail::allocation_rank(arms, alloc) < d; ++move) {
        int recipient = -1;
        double recipient_weight = -1.0;
        for (const auto& [i, w] : design.weights) {
            if (w > 0.0 && alloc.counts.find(i) == alloc.counts.end() && w > recipient_weight) {
                recipient = i;
                recipient_weight = w;
            }
        }
        if (recipient < 0) break;  // every support arm already has a pull
        int donor = -1;
        int donor_count = 0;
        for (const auto& [i, c] : alloc.counts) {
            if (c > donor_count) {
                donor = i;
                donor_count = c;
            }
        }
        if (donor < 0) break;
        if (--alloc.counts[donor] == 0) alloc.counts.erase(donor);
        alloc.counts[recipient] = 1;
    }
    return alloc;
}

}  // namespace malinbai
