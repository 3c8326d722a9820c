#include "rfrl/mdp.hpp"

#include <cmath>

namespace rfrl {

using detail::require;

namespace {

void check_dims(const EpisodicMdp& mdp, const Policy& policy) {
    require(static_cast<int>(policy.pi.size()) == mdp.horizon,
            "policy step count mismatch");
    for (const Mat& p : policy.pi)
        require(p.rows() == mdp.state_count && p.cols() == mdp.action_count,
                "policy table shape mismatch");
}

void check_dims(const EpisodicMdp& mdp, const RewardFunction& reward) {
    require(static_cast<int>(reward.r.size()) == mdp.horizon,
            "reward step count mismatch");
    for (const Mat& rh : reward.r)
        require(rh.rows() == mdp.state_count && rh.cols() == mdp.action_count,
                "reward table shape mismatch");
}

}  // namespace

PolicyValue evaluate_policy(const EpisodicMdp& mdp, const Policy& policy,
                            const RewardFunction& reward) {
    check_dims(mdp, policy);
    check_dims(mdp, reward);

    const int S = mdp.state_count;
    const int K = mdp.action_count;
    PolicyValue out;
    out.v.assign(mdp.horizon + 1, Vec::Zero(S));
    for (int h = mdp.horizon - 1; h >= 0; --h) {
        Vec next = mdp.kernels[h] * out.v[h + 1];  // (S*K) future values
        for (int s = 0; s < S; ++s) {
            double vs = 0.0;
            for (int a = 0; a < K; ++a)
                vs += policy.pi[h](s, a) * (reward.r[h](s, a) + next(mdp.sa(s, a)));
            out.v[h](s) = vs;
        }
    }
    out.value = out.v[0](mdp.initial_state);
    return out;
}

OptimalPlan optimal_policy(const EpisodicMdp& mdp, const RewardFunction& reward) {
    check_dims(mdp, reward);

    const int S = mdp.state_count;
    const int K = mdp.action_count;
    OptimalPlan out;
    out.v.assign(mdp.horizon + 1, Vec::Zero(S));
    out.policy.pi.assign(mdp.horizon, Mat::Zero(S, K));
    for (int h = mdp.horizon - 1; h >= 0; --h) {
        Vec next = mdp.kernels[h] * out.v[h + 1];
        for (int s = 0; s < S; ++s) {
            int best_a = 0;
            double best_q = -1.0;
            for (int a = 0; a < K; ++a) {
                const double q = reward.r[h](s, a) + next(mdp.sa(s, a));
                if (q > best_q) {  // strict: ties keep the lowest action index
                    best_q = q;
                    best_a = a;
                }
            }
            out.v[h](s) = best_q;
            out.policy.pi[h](s, best_a) = 1.0;
        }
    }
    out.value = out.v[0](mdp.initial_state);
    return out;
}

OccupancyMeasure occupancy(const EpisodicMdp& mdp, const Policy& policy) {
    check_dims(mdp, policy);

    const int S = mdp.state_count;
    const int K = mdp.action_count;
    OccupancyMeasure out;
    out.m.reserve(mdp.horizon);

    Vec state_dist = Vec::Zero(S);
    state_dist(mdp.initial_state) = 1.0;
    for (int h = 0; h < mdp.horizon; ++h) {
        Mat occ(S, K);
        for (int s = 0; s < S; ++s)
            occ.row(s) = state_dist(s) * policy.pi[h].row(s);
        out.m.push_back(occ);

        Vec next = Vec::Zero(S);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < K; ++a)
                if (occ(s, a) > 0.0)
                    next += occ(s, a) * mdp.kernels[h].row(mdp.sa(s, a)).transpose();
        state_dist = next;
    }
    return out;
}

Trajectory sample_trajectory(const EpisodicMdp& mdp, const Policy& policy,
                             int stop_step, Rng& rng) {
    check_dims(mdp, policy);
    require(stop_step >= 1 && stop_step <= mdp.horizon, "stop_step out of range");

    Trajectory traj;
    traj.states.reserve(stop_step + 1);
    traj.actions.reserve(stop_step);
    int s = mdp.initial_state;
    traj.states.push_back(s);
    for (int h = 0; h < stop_step; ++h) {
        const int a = rng.categorical(policy.pi[h].row(s).transpose());
        traj.actions.push_back(a);
        s = rng.categorical(mdp.kernels[h].row(mdp.sa(s, a)).transpose());
        traj.states.push_back(s);
    }
    return traj;
}

Trajectory sample_trajectory(const EpisodicMdp& mdp, const Policy& policy,
                             int stop_step, std::uint64_t seed) {
    Rng rng(seed);
    return sample_trajectory(mdp, policy, stop_step, rng);
}

double tv_distance(const Eigen::Ref<const Vec>& p, const Eigen::Ref<const Vec>& q) {
    require(p.size() == q.size(), "tv_distance: size mismatch");
    constexpr double sum_tol = 1e-9;
    require((p.array() >= -kKernelRowTol).all() && (q.array() >= -kKernelRowTol).all(),
            "tv_distance: negative entry");
    require(std::abs(p.sum() - 1.0) <= sum_tol && std::abs(q.sum() - 1.0) <= sum_tol,
            "tv_distance: input does not sum to 1");
    return 0.5 * (p - q).cwiseAbs().sum();
}

SimulationGap simulation_gap(const EpisodicMdp& p1, const RewardFunction& r1,
                             const EpisodicMdp& p2, const RewardFunction& r2,
                             const Policy& policy) {
    require(p1.horizon == p2.horizon && p1.state_count == p2.state_count &&
                p1.action_count == p2.action_count,
            "simulation_gap: dimension mismatch");

    const PolicyValue v1 = evaluate_policy(p1, policy, r1);
    const PolicyValue v2 = evaluate_policy(p2, policy, r2);
    const OccupancyMeasure occ1 = occupancy(p1, policy);
    const OccupancyMeasure occ2 = occupancy(p2, policy);

    const int S = p1.state_count;
    const int K = p1.action_count;
    SimulationGap gap;
    gap.lhs = v1.value - v2.value;
    for (int h = 0; h < p1.horizon; ++h) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < K; ++a) {
                const Eigen::Index row = p1.sa(s, a);
                const double dr = r1.r[h](s, a) - r2.r[h](s, a);
                const double dp_v1 =
                    (p1.kernels[h].row(row) - p2.kernels[h].row(row)).dot(v1.v[h + 1]);
                const double dp_v2 =
                    (p1.kernels[h].row(row) - p2.kernels[h].row(row)).dot(v2.v[h + 1]);
                gap.rhs_form1 += occ2.m[h](s, a) * (dr + dp_v1);
                gap.rhs_form2 += occ1.m[h](s, a) * (dr + dp_v2);
            }
        }
    }
    return gap;
}

}  // namespace rfrl
