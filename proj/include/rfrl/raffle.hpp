#pragma once

#include "rfrl/mdp.hpp"
#include "rfrl/model_class.hpp"

#include <cstdint>
#include <functional>

namespace rfrl {

/// Iteration-indexed exploration constants. All logs are natural.
struct BonusParams {
    double beta3 = 1.0;
    double delta = 0.1;
    std::size_t n_phi = 1;
    std::size_t n_psi = 1;
    int horizon = 1;
    Eigen::Index dim = 1;
    int action_count = 1;

    /// zeta_n = log(2 |Phi| |Psi| n H / delta) / n
    double zeta(int n) const;
    /// lambda_n = beta3 * d * log(2 n H |Phi| / delta)
    double lambda(int n) const;
    /// alpha_hat_n = 5 * sqrt(2 beta3 n zeta_n (K + d^2))
    double alpha_hat(int n) const;
};

struct EpisodeSample {
    Trajectory trajectory;
    Triple triple;  // (s_h, a_h, s_{h+1}) at the requested step
};

/// One exploration episode for step h (1-based): roll in with the current
/// policy up to step h-2, take two uniform actions at steps h-1 and h, and
/// stop after observing s_{h+1}. At h=1 only the single uniform action at the
/// initial state is taken.
EpisodeSample collect_episode(const EpisodicMdp& env, const Policy& rollin, int h,
                              Rng& rng);

/// Empirical covariance rebuilt from scratch with the current features:
/// lambda * I + sum over the dataset of phi(s,a) phi(s,a)^T.
Mat update_covariance(const std::vector<Triple>& data_h, const Mat& phi_h,
                      double lambda, int action_count);

/// min{ alpha * sqrt(phi^T U^{-1} phi), 1 } for one state-action feature.
double bonus(const Eigen::Ref<const Vec>& phi_sa, const Mat& u_hat, double alpha);

/// Bonus values for every (s,a) at one step, sharing a single factorization.
Mat bonus_table(const Mat& phi_h, const Mat& u_hat, double alpha, int state_count,
                int action_count);

struct TruncatedPlan {
    Policy policy;  // deterministic greedy, ties toward the lowest action
    double v_hat = 0.0;
    std::vector<Vec> v;
};

/// Clipped backward induction Q = min{1, b + P V}; the greedy policy attains
/// the maximum over all Markov policies because the clipped operator is
/// monotone.
TruncatedPlan plan_truncated(const EpisodicMdp& model, const std::vector<Mat>& bonus);

/// Inclusive termination test 2 V_hat + 2 sqrt(K zeta_n) <= epsilon.
bool should_terminate(double v_hat, int action_count, double zeta_n, double epsilon);

struct RaffleConfig {
    double epsilon = 0.1;
    double delta = 0.1;
    double beta3 = 1.0;
    double bonus_scale = 1.0;  // multiplier on alpha_hat_n inside the bonus only
    int max_iterations = 1000;
    std::uint64_t seed = 0;
};

struct IterationRow {
    int n = 0;
    std::vector<double> loglik_per_step;
    double v_hat = 0.0;
    double zeta = 0.0;
    double alpha_hat = 0.0;  // unscaled
    double lambda = 0.0;
    bool terminated = false;
};

/// Snapshot of the exploration loop handed to an optional per-iteration
/// observer (used by the verification suites).
struct ExplorationState {
    int iteration = 0;
    const TransitionDataset* datasets = nullptr;
    const Policy* current_policy = nullptr;       // the policy just computed
    const EpisodicMdp* estimated_model = nullptr; // carries the fitted factorization
    const std::vector<Mat>* covariances = nullptr;
    double zeta = 0.0;
    double lambda = 0.0;
    double alpha_hat = 0.0;
    long trajectory_count = 0;
};
using ExplorationObserver = std::function<void(const ExplorationState&)>;

struct RaffleOutput {
    EpisodicMdp model;        // estimated kernel with fitted factorization
    std::vector<Mat> bonus;   // final bonus tables per step, S x K
    Policy policy;            // final exploration policy
    int iterations = 0;       // n at exit
    long trajectory_count = 0;
    bool terminated = false;  // false when the iteration budget ran out
    std::vector<IterationRow> log;
};

/// The exploration loop: per iteration collect one episode per step, refit
/// the MLE, rebuild covariances and bonuses, plan, and test termination.
RaffleOutput run_exploration(const EpisodicMdp& env, const ModelClass& mc,
                             const RaffleConfig& config,
                             const ExplorationObserver& observer = nullptr);

/// Planning against a given reward: exact optimal policy under the model.
Policy plan_for_reward(const EpisodicMdp& model, const RewardFunction& reward);

struct SystemIdError {
    Vec per_step;
    double max_error = 0.0;
};

/// Occupancy-weighted total variation between the estimated and true kernels,
/// with occupancy computed exactly under the true model.
SystemIdError system_identification_error(const EpisodicMdp& p_hat,
                                          const EpisodicMdp& p_star,
                                          const Policy& policy);

}  // namespace rfrl
