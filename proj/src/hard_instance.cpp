#include "rfrl/hard_instance.hpp"

#include <cmath>

namespace rfrl {

using detail::require;

void HardInstanceParams::validate() const {
    require(depth >= 1, "tree depth must be at least 1");
    require(action_count >= 3, "at least 3 actions are required");
    require(epsilon0 > 0.0 && epsilon0 <= 0.25, "epsilon0 must lie in (0, 1/4]");
    const int h_bar = effective_waiting_horizon();
    require(h_bar >= 1, "waiting horizon must be at least 1");
    require(horizon >= h_bar + depth + 1,
            "horizon must be at least waiting_horizon + depth + 1");
}

int waiting_state(const HardInstanceParams&) { return 0; }

int tree_state(const HardInstanceParams& p, int layer, int node) {
    detail::require(layer >= 1 && layer <= p.depth, "tree layer out of range");
    detail::require(node >= 1 && node <= (1 << (layer - 1)), "tree node out of range");
    return (1 << (layer - 1)) + node - 1;
}

int leaf_state(const HardInstanceParams& p, int leaf) {
    return tree_state(p, p.depth, leaf);
}

int outlier_state(const HardInstanceParams& p) { return p.state_count() - 3; }
int good_state(const HardInstanceParams& p) { return p.state_count() - 2; }
int bad_state(const HardInstanceParams& p) { return p.state_count() - 1; }

std::string state_label(const HardInstanceParams& p, int state) {
    if (state == waiting_state(p)) return "s_w";
    if (state == outlier_state(p)) return "s_o";
    if (state == good_state(p)) return "s_g";
    if (state == bad_state(p)) return "s_b";
    for (int layer = 1; layer <= p.depth; ++layer)
        for (int node = 1; node <= (1 << (layer - 1)); ++node)
            if (tree_state(p, layer, node) == state)
                return "s_" + std::to_string(layer) + "_" + std::to_string(node);
    return "?";
}

namespace {

HardInstance build(const HardInstanceParams& p, int h_star, int ell_star, int a_star) {
    p.validate();
    const int S = p.state_count();
    const int K = p.action_count;
    const int H = p.horizon;
    const int h_bar = p.effective_waiting_horizon();
    const int s_w = waiting_state(p);
    const int root = tree_state(p, 1, 1);
    const int s_o = outlier_state(p);
    const int s_g = good_state(p);
    const int s_b = bad_state(p);

    LowRankFactorization f;
    f.dim = S;
    for (int h1 = 1; h1 <= H; ++h1) {  // 1-based step, for the waiting gate
        Mat phi = Mat::Zero(static_cast<Eigen::Index>(S) * K, S);
        Mat mu = Mat::Zero(S, S);

        // Next-state embeddings: coordinates coincide with state indices.
        mu(s_w, s_w) = (h1 <= h_bar) ? 1.0 : 0.0;
        mu(root, s_w) = (h1 > h_bar) ? 1.0 : 0.0;
        mu(root, root) = 1.0;
        for (int layer = 2; layer <= p.depth; ++layer)
            for (int node = 1; node <= (1 << (layer - 1)); ++node) {
                const int s = tree_state(p, layer, node);
                mu(s, s) = 1.0;
            }
        mu(s_o, s_o) = 1.0;
        mu(s_g, s_g) = 1.0;
        mu(s_b, s_b) = 1.0;

        // Waiting state: the waiting action probes coordinate s_w, everything
        // else points straight at the root.
        for (int a = 0; a < K; ++a) {
            const Eigen::Index row = static_cast<Eigen::Index>(s_w) * K + a;
            phi(row, a == 0 ? s_w : root) = 1.0;
        }
        // Interior tree nodes descend under actions 1/2 and fall out otherwise.
        for (int layer = 1; layer < p.depth; ++layer) {
            for (int node = 1; node <= (1 << (layer - 1)); ++node) {
                const int s = tree_state(p, layer, node);
                for (int a = 0; a < K; ++a) {
                    const Eigen::Index row = static_cast<Eigen::Index>(s) * K + a;
                    if (a == 1 || a == 2)
                        phi(row, tree_state(p, layer + 1, 2 * node + a - 2)) = 1.0;
                    else
                        phi(row, s_o) = 1.0;
                }
            }
        }
        // Leaves split between the good and bad sinks under every action.
        for (int leaf = 1; leaf <= (1 << (p.depth - 1)); ++leaf) {
            const int s = leaf_state(p, leaf);
            for (int a = 0; a < K; ++a) {
                const Eigen::Index row = static_cast<Eigen::Index>(s) * K + a;
                const bool perturbed = (h1 == h_star && leaf == ell_star && a == a_star);
                const double shift = perturbed ? p.epsilon0 : 0.0;
                phi(row, s_g) = 0.5 + shift;
                phi(row, s_b) = 0.5 - shift;
            }
        }
        // Sinks absorb.
        for (int s : {s_o, s_g, s_b})
            for (int a = 0; a < K; ++a)
                phi(static_cast<Eigen::Index>(s) * K + a, s) = 1.0;

        f.phi.push_back(std::move(phi));
        f.mu.push_back(std::move(mu));
    }

    HardInstance out;
    out.mdp.horizon = H;
    out.mdp.state_count = S;
    out.mdp.action_count = K;
    out.mdp.initial_state = s_w;
    for (int h = 0; h < H; ++h)
        out.mdp.kernels.push_back(f.phi[h] * f.mu[h].transpose());
    out.mdp.factorization = std::move(f);
    out.reward = canonical_reward(p);
    return out;
}

}  // namespace

HardInstance build_reference(const HardInstanceParams& params) {
    return build(params, -1, -1, -1);
}

HardInstance build_perturbed(const HardInstanceParams& params, int h_star, int ell_star,
                             int a_star) {
    params.validate();
    const int h_bar = params.effective_waiting_horizon();
    require(h_star >= 1 + params.depth && h_star <= h_bar + params.depth,
            "perturbation step outside the family range");
    require(ell_star >= 1 && ell_star <= (1 << (params.depth - 1)),
            "perturbation leaf outside the family range");
    require(a_star >= 0 && a_star < params.action_count,
            "perturbation action outside the family range");

    HardInstance out = build(params, h_star, ell_star, a_star);
    out.perturbation = {h_star, ell_star, a_star};
    return out;
}

RewardFunction canonical_reward(const HardInstanceParams& params) {
    params.validate();
    RewardFunction out =
        RewardFunction::zero(params.horizon, params.state_count(), params.action_count);
    out.r[params.horizon - 1].row(good_state(params)).setConstant(1.0);
    out.r[params.horizon - 1].row(outlier_state(params)).setConstant(0.5);
    return out;
}

std::vector<std::array<int, 3>> enumerate_family(const HardInstanceParams& params) {
    params.validate();
    std::vector<std::array<int, 3>> out;
    const int h_bar = params.effective_waiting_horizon();
    for (int h = 1 + params.depth; h <= h_bar + params.depth; ++h)
        for (int leaf = 1; leaf <= (1 << (params.depth - 1)); ++leaf)
            for (int a = 0; a < params.action_count; ++a) out.push_back({h, leaf, a});
    return out;
}

}  // namespace rfrl
