#pragma once

#include "rfrl/mdp.hpp"
#include "rfrl/model_class.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace rfrl {

/// Per-step sampling distributions q_h over state-action pairs.
struct SamplingDistribution {
    std::vector<Mat> q;  // per step: S x K, summing to 1

    void validate(int horizon, int states, int actions) const;
};

SamplingDistribution uniform_sampling(int horizon, int states, int actions);
/// q_h proportional to the exact occupancy of the probe policy.
SamplingDistribution occupancy_sampling(const EpisodicMdp& mdp, const Policy& probe);

/// N_f independent draws from one step's distribution; no environment
/// interaction is involved.
std::vector<std::pair<int, int>> sample_pairs(const Mat& q_h, int n_f, Rng& rng);

/// Exact Q^pi_{P,h,r}(s,a) for a reward that vanishes at step h (0-based):
/// the expectation of V^pi_{h+1} under the model's transition row.
double target_q(const EpisodicMdp& model, const Policy& policy,
                const RewardFunction& reward, int h, int s, int a);
/// All (s,a) targets at one step, sharing a single backward pass.
Mat target_q_table(const EpisodicMdp& model, const Policy& policy,
                   const RewardFunction& reward, int h);

/// w*_h = sum_{s'} mu_h(s') V^pi_{h+1}(s') under the factorized true model;
/// satisfies <phi_h(s,a), w*> = target_q(...) for every pair.
Vec compute_w_star(const EpisodicMdp& true_model, const Policy& policy,
                   const RewardFunction& reward, int h);

/// A battery of T rewards vanishing at and before step h, with matching
/// random deterministic evaluation policies; w_star holds the d x T true
/// weight matrix when the reference model carries a factorization.
struct RewardDesign {
    int task_count = 0;
    std::vector<RewardFunction> rewards;
    std::vector<Policy> policies;
    std::optional<Mat> w_star;
};

RewardDesign design_rewards(const EpisodicMdp& reference, int h, int task_count,
                            std::uint64_t seed);

struct DiversityCheck {
    double sigma_d_sq = 0.0;
    bool ok = false;
};

/// Smallest squared singular value of W* against the threshold C_D * T / d.
DiversityCheck check_diversity(const Mat& w_star, double c_d);

/// Minimum state-visitation probability over steps 2..H under the probe
/// policy. Step 1 is excluded: the initial state is fixed, so its marginal is
/// degenerate whenever S > 1. For H == 1 the step-1 marginal is used.
double check_reachability(const EpisodicMdp& true_model, const Policy& probe);

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix, dropping
/// eigendirections below `rel_cutoff` times the largest eigenvalue.
Mat pinv_psd(const Mat& m, double rel_cutoff = 1e-10);

/// Exact covariance Sigma_q(phi, phi') = sum_{s,a} q(s,a) phi(s,a) phi'(s,a)^T.
Mat covariance(const Mat& q_h, const Mat& phi_h, const Mat& phi2_h, int action_count);

/// Divergence D_q(phi, phi') = Sigma(phi',phi') -
/// Sigma(phi',phi) Sigma(phi,phi)^+ Sigma(phi,phi'), symmetrized.
Mat divergence(const Mat& q_h, const Mat& phi_h, const Mat& phi2_h, int action_count);

/// Trace of the divergence (the squared Frobenius norm of its PSD square
/// root). Throws if an eigenvalue falls below the -1e-9 floor.
double divergence_score(const Mat& q_h, const Mat& phi_star_h, const Mat& phi_tilde_h,
                        int action_count);

/// Sampled pairs and regression targets, indexed [h][t].
struct RepLearnData {
    std::vector<std::vector<std::vector<std::pair<int, int>>>> samples;
    std::vector<std::vector<Vec>> targets;
};

struct RepLearnStep {
    int phi_index = 0;
    Mat weights;        // d x T fitted weight vectors
    double loss = 0.0;  // total squared residual over all tasks
    bool ambiguous = false;  // another candidate also fits essentially exactly
};

struct RepLearnOutput {
    std::vector<RepLearnStep> per_step;
};

/// For every step and candidate, solve the T least-squares problems and keep
/// the candidate with minimal total residual (lowest index on ties). The
/// OpenMP grid and the serial reference agree bit for bit.
RepLearnOutput fit_representation(const RepLearnData& data,
                                  const std::vector<StepTable>& feature_class,
                                  int action_count, bool parallel = true);
RepLearnOutput fit_representation_serial(const RepLearnData& data,
                                         const std::vector<StepTable>& feature_class,
                                         int action_count);

struct RepLearnConfig {
    int task_count = 4;  // T >= d
    int sample_count = 2000;  // N_f
    double c_d = 0.1;         // diversity threshold, diagnostic only
    std::uint64_t seed = 0;
};

struct RepLearnDiagnostics {
    std::vector<double> sigma_d_sq;      // per step (last step is degenerate)
    std::vector<bool> diversity_ok;      // per step
    double eta_min = 0.0;                // reachability of the uniform probe
    double c_b = 0.0;                    // max_{h,s,a} q_h(s,a)
    double c_min = 0.0;                  // max finite ratio q_h / occupancy
    bool q_support_reachable = true;     // false if q puts mass where occupancy is 0
    std::vector<double> divergence_vs_truth;  // per step, when the truth is known
};

struct RepLearnRun {
    RepLearnOutput fit;
    RepLearnDiagnostics diagnostics;
};

/// The full planning-phase procedure: design rewards per step (re-drawing up
/// to 20 times until the diversity check passes when it is diagnosable),
/// sample pairs from q, compute targets under the estimated model, and fit.
/// `truth` enables the diagnostics; pass the environment when available.
RepLearnRun run_replearn(const EpisodicMdp& estimated_model,
                         const std::vector<StepTable>& feature_class,
                         const SamplingDistribution& q, const RepLearnConfig& config,
                         const EpisodicMdp* truth = nullptr);

}  // namespace rfrl
