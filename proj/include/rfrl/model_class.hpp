#pragma once

#include "rfrl/types.hpp"

#include <cstddef>
#include <vector>

namespace rfrl {

/// One observed transition at some step.
struct Triple {
    int s = 0;
    int a = 0;
    int s_next = 0;
};

/// Append-only per-step transition datasets D_h.
struct TransitionDataset {
    std::vector<std::vector<Triple>> steps;

    explicit TransitionDataset(int horizon = 0) : steps(horizon) {}
    int horizon() const { return static_cast<int>(steps.size()); }
};

/// A full candidate embedding: one table per step.
using StepTable = std::vector<Mat>;

/// Probability floor inside the log so a candidate assigning zero mass to an
/// observed transition loses with certainty instead of producing -inf.
inline constexpr double kLogFloor = 1e-300;

/// True iff the pair induces a valid kernel at every step: all inner products
/// within [0,1] (tolerance 1e-12) and every row summing to 1 within 1e-10.
bool validate_pair(const StepTable& phi, const StepTable& mu);

/// Sum over triples of log <phi_h(s,a), mu_h(s')>, floored at kLogFloor.
/// Precondition: the (phi,mu) pair is valid at this step.
double log_likelihood(const Mat& phi_h, const Mat& mu_h,
                      const std::vector<Triple>& data_h, int action_count);

/// Finite candidate sets (Phi, Psi) with cached per-pair validity. Pair index
/// p = phi_index * mus.size() + mu_index.
struct ModelClass {
    int horizon = 0;
    int state_count = 0;
    int action_count = 0;
    Eigen::Index dim = 0;
    std::vector<StepTable> phis;
    std::vector<StepTable> mus;
    std::vector<char> validity;

    std::size_t n_phi() const { return phis.size(); }
    std::size_t n_mu() const { return mus.size(); }
    std::size_t n_pairs() const { return phis.size() * mus.size(); }
    bool pair_valid(std::size_t phi_index, std::size_t mu_index) const {
        return validity[phi_index * mus.size() + mu_index] != 0;
    }

    /// Screens every pair with validate_pair; throws std::invalid_argument
    /// if no valid pair remains.
    void screen();
};

/// Per-pair log-likelihoods on one step's dataset; invalid pairs get -inf.
/// The OpenMP kernel and its serial reference produce identical bits.
std::vector<double> score_pairs(const ModelClass& mc, const std::vector<Triple>& data_h,
                                int h);
std::vector<double> score_pairs_serial(const ModelClass& mc,
                                       const std::vector<Triple>& data_h, int h);

struct MleStepChoice {
    int phi_index = 0;
    int mu_index = 0;
    double log_likelihood = 0.0;
};

struct MleResult {
    std::vector<MleStepChoice> per_step;
    LowRankFactorization factorization;  // the selected embeddings per step
    std::vector<Mat> kernels;            // induced kernels phi * mu^T per step
};

/// Exact per-step maximum-likelihood fit over all valid pairs. Ties and empty
/// datasets resolve to the lowest (phi index, mu index).
MleResult mle_fit(const TransitionDataset& data, const ModelClass& mc,
                  bool parallel = true);

}  // namespace rfrl
