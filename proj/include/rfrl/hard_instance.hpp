#pragma once

#include "rfrl/types.hpp"

#include <array>
#include <string>

namespace rfrl {

/// Parameters of the tree-structured benchmark family. The state space is
/// {waiting, outlier, good, bad} plus a binary tree of depth `depth`, for
/// S = 3 + 2^depth states; the factorization dimension equals S.
///
/// Action 0 is the waiting action, actions 1 and 2 descend the tree, and the
/// remaining actions form the padding set of size K-3.
struct HardInstanceParams {
    int horizon = 9;        // H
    int depth = 2;          // tree depth D >= 1
    int action_count = 4;   // K >= 3
    int waiting_horizon = 0;  // H_bar; 0 selects the default floor(H/3)
    double epsilon0 = 0.1;  // leaf perturbation in (0, 1/4]

    int effective_waiting_horizon() const {
        return waiting_horizon > 0 ? waiting_horizon : horizon / 3;
    }
    int state_count() const { return 3 + (1 << depth); }
    void validate() const;
};

struct HardInstance {
    EpisodicMdp mdp;  // factorized, with d = S
    RewardFunction reward;
    // (h*, leaf index, action index), 1-based step, present for perturbed members
    std::optional<std::array<int, 3>> perturbation;
};

/// State indices within a built instance.
int waiting_state(const HardInstanceParams& p);
int tree_state(const HardInstanceParams& p, int layer, int node);  // 1-based layer/node
int leaf_state(const HardInstanceParams& p, int leaf);             // 1-based leaf index
int outlier_state(const HardInstanceParams& p);
int good_state(const HardInstanceParams& p);
int bad_state(const HardInstanceParams& p);
std::string state_label(const HardInstanceParams& p, int state);

/// The unperturbed reference member: waiting self-loop gated at H_bar,
/// deterministic tree descent under actions 1/2, any other tree action falls
/// to the outlier state, leaves split 1/2-1/2 between good and bad, and the
/// three sink states absorb.
HardInstance build_reference(const HardInstanceParams& params);

/// The member whose leaf `ell_star` under action `a_star` at step `h_star`
/// (1-based, in {1+D,...,H_bar+D}) shifts epsilon0 of mass toward the good
/// state.
HardInstance build_perturbed(const HardInstanceParams& params, int h_star, int ell_star,
                             int a_star);

/// Reward 1 in the good state and 1/2 in the outlier state, both only at the
/// final step.
RewardFunction canonical_reward(const HardInstanceParams& params);

/// All (h*, leaf, action) perturbation indices in lexicographic order.
std::vector<std::array<int, 3>> enumerate_family(const HardInstanceParams& params);

}  // namespace rfrl
