#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rfrl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Absolute tolerances used by the structural validators.
inline constexpr double kKernelRowTol = 1e-12;
inline constexpr double kFactorReproTol = 1e-12;
inline constexpr double kPhiNormTol = 1e-12;
inline constexpr double kMuNormTol = 1e-9;
inline constexpr double kPolicyRowTol = 1e-12;
inline constexpr double kRewardSumTol = 1e-12;
inline constexpr double kOccupancyTol = 1e-10;

/// Low-rank decomposition of a time-inhomogeneous transition kernel:
/// P_h(s'|s,a) = <phi[h].row(s*K+a), mu[h].row(s')>.
struct LowRankFactorization {
    Eigen::Index dim = 0;
    std::vector<Mat> phi;  // per step: (S*K) x d
    std::vector<Mat> mu;   // per step: S x d
};

/// Finite episodic MDP with dense per-step kernels and a fixed initial state.
/// Steps are 0-based internally; kernels[h] has shape (S*K) x S with the row
/// for (s,a) at index s*K+a.
struct EpisodicMdp {
    int horizon = 0;
    int state_count = 0;
    int action_count = 0;
    int initial_state = 0;
    std::vector<Mat> kernels;
    std::optional<LowRankFactorization> factorization;

    Eigen::Index sa(int s, int a) const {
        return static_cast<Eigen::Index>(s) * action_count + a;
    }

    /// Throws std::invalid_argument if any structural invariant fails:
    /// stochastic rows, and (when present) exact factorization reproduction
    /// plus the feature norm bounds.
    void validate() const;
};

/// Per-step reward tables r[h] of shape S x K with entries in [0,1] and
/// sum_h max_{s,a} r_h(s,a) <= 1.
struct RewardFunction {
    std::vector<Mat> r;

    void validate(const EpisodicMdp& mdp) const;
    static RewardFunction zero(int horizon, int states, int actions);
};

/// Markov policy: per-step row-stochastic tables pi[h] of shape S x K.
struct Policy {
    std::vector<Mat> pi;

    void validate(const EpisodicMdp& mdp) const;
    static Policy uniform(int horizon, int states, int actions);
    /// Deterministic policy from a per-(h,s) action table.
    static Policy deterministic(int horizon, int states, int actions,
                                const std::vector<std::vector<int>>& action_for);
};

/// A (possibly truncated) rollout: states.size() == actions.size() + 1.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;

    int length() const { return static_cast<int>(actions.size()); }
};

/// Per-step probability tables over (s,a) pairs.
struct OccupancyMeasure {
    std::vector<Mat> m;  // per step: S x K, each summing to 1
};

namespace detail {

inline void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace detail

}  // namespace rfrl
