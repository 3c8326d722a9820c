#pragma once

#include "rfrl/rng.hpp"
#include "rfrl/types.hpp"

#include <cstdint>

namespace rfrl {

/// Result of exact policy evaluation. v[h](s) is the value at step h
/// (0-based) from state s; v has horizon+1 entries with v[H] identically 0.
struct PolicyValue {
    double value = 0.0;
    std::vector<Vec> v;
};

/// Exact backward-induction evaluation of V^pi under (mdp, reward).
PolicyValue evaluate_policy(const EpisodicMdp& mdp, const Policy& policy,
                            const RewardFunction& reward);

struct OptimalPlan {
    Policy policy;  // deterministic, ties broken toward the lowest action index
    double value = 0.0;
    std::vector<Vec> v;
};

/// Greedy backward induction; the returned value dominates every Markov policy.
OptimalPlan optimal_policy(const EpisodicMdp& mdp, const RewardFunction& reward);

/// Exact forward state-action occupancy under the policy, starting from the
/// fixed initial state.
OccupancyMeasure occupancy(const EpisodicMdp& mdp, const Policy& policy);

/// Roll out `stop_step` actions (1 <= stop_step <= H) from the initial state.
Trajectory sample_trajectory(const EpisodicMdp& mdp, const Policy& policy,
                             int stop_step, std::uint64_t seed);
Trajectory sample_trajectory(const EpisodicMdp& mdp, const Policy& policy,
                             int stop_step, Rng& rng);

/// Total variation distance between two probability rows: half the L1 gap.
/// Throws if either argument is not a probability vector.
double tv_distance(const Eigen::Ref<const Vec>& p, const Eigen::Ref<const Vec>& q);

/// Value gap between two MDP/reward pairs under a shared policy together with
/// its two exact expectation decompositions; all three coincide up to
/// roundoff.
struct SimulationGap {
    double lhs = 0.0;        // V^pi_{P1,r1} - V^pi_{P2,r2}
    double rhs_form1 = 0.0;  // occupancy under P2, future values under (P1,r1)
    double rhs_form2 = 0.0;  // occupancy under P1, future values under (P2,r2)
};

SimulationGap simulation_gap(const EpisodicMdp& p1, const RewardFunction& r1,
                             const EpisodicMdp& p2, const RewardFunction& r2,
                             const Policy& policy);

}  // namespace rfrl
