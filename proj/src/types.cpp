#include "rfrl/types.hpp"

#include <cmath>

namespace rfrl {

using detail::require;

void EpisodicMdp::validate() const {
    require(horizon > 0, "horizon must be positive");
    require(state_count > 0, "state_count must be positive");
    require(action_count > 0, "action_count must be positive");
    require(initial_state >= 0 && initial_state < state_count,
            "initial_state out of range");
    require(static_cast<int>(kernels.size()) == horizon,
            "kernel count must equal horizon");

    const Eigen::Index rows = static_cast<Eigen::Index>(state_count) * action_count;
    for (const Mat& p : kernels) {
        require(p.rows() == rows && p.cols() == state_count, "kernel shape mismatch");
        require((p.array() >= -kKernelRowTol).all(), "negative transition probability");
        for (Eigen::Index i = 0; i < rows; ++i)
            require(std::abs(p.row(i).sum() - 1.0) <= kKernelRowTol,
                    "kernel row does not sum to 1");
    }

    if (!factorization) return;
    const LowRankFactorization& f = *factorization;
    require(f.dim > 0, "factorization dimension must be positive");
    require(static_cast<int>(f.phi.size()) == horizon &&
                static_cast<int>(f.mu.size()) == horizon,
            "factorization step count mismatch");
    const double sqrt_d = std::sqrt(static_cast<double>(f.dim));
    for (int h = 0; h < horizon; ++h) {
        const Mat& phi = f.phi[h];
        const Mat& mu = f.mu[h];
        require(phi.rows() == rows && phi.cols() == f.dim, "phi shape mismatch");
        require(mu.rows() == state_count && mu.cols() == f.dim, "mu shape mismatch");
        for (Eigen::Index i = 0; i < rows; ++i)
            require(phi.row(i).norm() <= 1.0 + kPhiNormTol, "phi row norm exceeds 1");
        for (Eigen::Index s = 0; s < state_count; ++s)
            require(mu.row(s).norm() <= sqrt_d + kMuNormTol, "mu row norm exceeds sqrt(d)");
        require(mu.colwise().sum().norm() <= sqrt_d + kMuNormTol,
                "column sums of mu exceed sqrt(d)");
        // The factored kernel must reproduce the stored one entrywise.
        Mat prod = phi * mu.transpose();
        require((prod.array() >= -kFactorReproTol).all() &&
                    (prod.array() <= 1.0 + kFactorReproTol).all(),
                "factorized probability outside [0,1]");
        require((prod - kernels[h]).cwiseAbs().maxCoeff() <= kFactorReproTol,
                "factorization does not reproduce the kernel");
    }
}

void RewardFunction::validate(const EpisodicMdp& mdp) const {
    require(static_cast<int>(r.size()) == mdp.horizon, "reward step count mismatch");
    double max_sum = 0.0;
    for (const Mat& rh : r) {
        require(rh.rows() == mdp.state_count && rh.cols() == mdp.action_count,
                "reward table shape mismatch");
        require((rh.array() >= 0.0).all() && (rh.array() <= 1.0).all(),
                "reward entries must lie in [0,1]");
        max_sum += rh.maxCoeff();
    }
    require(max_sum <= 1.0 + kRewardSumTol, "sum of per-step maximal rewards exceeds 1");
}

RewardFunction RewardFunction::zero(int horizon, int states, int actions) {
    RewardFunction out;
    out.r.assign(horizon, Mat::Zero(states, actions));
    return out;
}

void Policy::validate(const EpisodicMdp& mdp) const {
    require(static_cast<int>(pi.size()) == mdp.horizon, "policy step count mismatch");
    for (const Mat& p : pi) {
        require(p.rows() == mdp.state_count && p.cols() == mdp.action_count,
                "policy table shape mismatch");
        require((p.array() >= -kPolicyRowTol).all(), "negative action probability");
        for (Eigen::Index s = 0; s < p.rows(); ++s)
            require(std::abs(p.row(s).sum() - 1.0) <= kPolicyRowTol,
                    "policy row does not sum to 1");
    }
}

Policy Policy::uniform(int horizon, int states, int actions) {
    Policy out;
    out.pi.assign(horizon, Mat::Constant(states, actions, 1.0 / actions));
    return out;
}

Policy Policy::deterministic(int horizon, int states, int actions,
                             const std::vector<std::vector<int>>& action_for) {
    detail::require(static_cast<int>(action_for.size()) == horizon,
                    "action table step count mismatch");
    Policy out;
    out.pi.assign(horizon, Mat::Zero(states, actions));
    for (int h = 0; h < horizon; ++h) {
        detail::require(static_cast<int>(action_for[h].size()) == states,
                        "action table state count mismatch");
        for (int s = 0; s < states; ++s) {
            const int a = action_for[h][s];
            detail::require(a >= 0 && a < actions, "action index out of range");
            out.pi[h](s, a) = 1.0;
        }
    }
    return out;
}

}  // namespace rfrl
