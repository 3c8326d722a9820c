#include "rfrl/raffle.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace rfrl {

using detail::require;

double BonusParams::zeta(int n) const {
    require(n >= 1, "iteration index must be positive");
    return std::log(2.0 * n_phi * n_psi * n * horizon / delta) / n;
}

double BonusParams::lambda(int n) const {
    require(n >= 1, "iteration index must be positive");
    return beta3 * static_cast<double>(dim) * std::log(2.0 * n * horizon * n_phi / delta);
}

double BonusParams::alpha_hat(int n) const {
    const double n_zeta = std::log(2.0 * n_phi * n_psi * n * horizon / delta);
    return 5.0 * std::sqrt(2.0 * beta3 * n_zeta *
                           (action_count + static_cast<double>(dim) * dim));
}

EpisodeSample collect_episode(const EpisodicMdp& env, const Policy& rollin, int h,
                              Rng& rng) {
    require(h >= 1 && h <= env.horizon, "episode step out of range");

    EpisodeSample out;
    Trajectory& traj = out.trajectory;
    traj.states.reserve(h + 1);
    traj.actions.reserve(h);
    int s = env.initial_state;
    traj.states.push_back(s);
    for (int step = 0; step < h; ++step) {  // 0-based; uniform at steps h-2, h-1
        const bool uniform = step >= h - 2;
        const int a = uniform ? rng.uniform_int(env.action_count)
                              : rng.categorical(rollin.pi[step].row(s).transpose());
        traj.actions.push_back(a);
        s = rng.categorical(env.kernels[step].row(env.sa(s, a)).transpose());
        traj.states.push_back(s);
    }
    out.triple = {traj.states[h - 1], traj.actions[h - 1], traj.states[h]};
    return out;
}

Mat update_covariance(const std::vector<Triple>& data_h, const Mat& phi_h,
                      double lambda, int action_count) {
    const Eigen::Index d = phi_h.cols();
    Mat u = lambda * Mat::Identity(d, d);
    // Triples only enter through their (s,a) visit counts.
    std::vector<int> counts(phi_h.rows(), 0);
    for (const Triple& t : data_h)
        ++counts[static_cast<std::size_t>(t.s) * action_count + t.a];
    for (Eigen::Index row = 0; row < phi_h.rows(); ++row)
        if (counts[row] > 0)
            u.noalias() +=
                static_cast<double>(counts[row]) * phi_h.row(row).transpose() * phi_h.row(row);
    return u;
}

double bonus(const Eigen::Ref<const Vec>& phi_sa, const Mat& u_hat, double alpha) {
    Eigen::LLT<Mat> llt(u_hat);
    require(llt.info() == Eigen::Success, "covariance matrix is not positive definite");
    const double quad = phi_sa.dot(llt.solve(phi_sa));
    return std::min(alpha * std::sqrt(std::max(quad, 0.0)), 1.0);
}

Mat bonus_table(const Mat& phi_h, const Mat& u_hat, double alpha, int state_count,
                int action_count) {
    Eigen::LLT<Mat> llt(u_hat);
    require(llt.info() == Eigen::Success, "covariance matrix is not positive definite");
    Mat out(state_count, action_count);
    for (int s = 0; s < state_count; ++s) {
        for (int a = 0; a < action_count; ++a) {
            const Vec phi = phi_h.row(static_cast<Eigen::Index>(s) * action_count + a);
            const double quad = phi.dot(llt.solve(phi));
            out(s, a) = std::min(alpha * std::sqrt(std::max(quad, 0.0)), 1.0);
        }
    }
    return out;
}

TruncatedPlan plan_truncated(const EpisodicMdp& model, const std::vector<Mat>& bonus) {
    require(static_cast<int>(bonus.size()) == model.horizon,
            "bonus table step count mismatch");
    const int S = model.state_count;
    const int K = model.action_count;

    TruncatedPlan out;
    out.v.assign(model.horizon + 1, Vec::Zero(S));
    out.policy.pi.assign(model.horizon, Mat::Zero(S, K));
    for (int h = model.horizon - 1; h >= 0; --h) {
        Vec next = model.kernels[h] * out.v[h + 1];
        for (int s = 0; s < S; ++s) {
            int best_a = 0;
            double best_q = -1.0;
            for (int a = 0; a < K; ++a) {
                const double q = std::min(1.0, bonus[h](s, a) + next(model.sa(s, a)));
                if (q > best_q) {
                    best_q = q;
                    best_a = a;
                }
            }
            out.v[h](s) = best_q;
            out.policy.pi[h](s, best_a) = 1.0;
        }
    }
    out.v_hat = out.v[0](model.initial_state);
    return out;
}

bool should_terminate(double v_hat, int action_count, double zeta_n, double epsilon) {
    require(epsilon > 0.0, "epsilon must be positive");
    return 2.0 * v_hat + 2.0 * std::sqrt(action_count * zeta_n) <= epsilon;
}

RaffleOutput run_exploration(const EpisodicMdp& env, const ModelClass& mc,
                             const RaffleConfig& config,
                             const ExplorationObserver& observer) {
    require(config.epsilon > 0.0 && config.epsilon < 1.0, "epsilon must lie in (0,1)");
    require(config.delta > 0.0 && config.delta < 1.0, "delta must lie in (0,1)");
    require(config.max_iterations >= 1, "max_iterations must be positive");
    require(!mc.validity.empty(), "model class has not been screened");
    require(mc.horizon == env.horizon && mc.state_count == env.state_count &&
                mc.action_count == env.action_count,
            "model class dimensions do not match the environment");

    const int H = env.horizon;
    const int S = env.state_count;
    const int K = env.action_count;
    const Eigen::Index d = mc.dim;
    const std::size_t n_pairs = mc.n_pairs();
    const std::size_t n_mu = mc.n_mu();

    BonusParams params;
    params.beta3 = config.beta3;
    params.delta = config.delta;
    params.n_phi = mc.n_phi();
    params.n_psi = mc.n_mu();
    params.horizon = H;
    params.dim = d;
    params.action_count = K;

    Rng rng(config.seed);
    Policy policy = Policy::uniform(H, S, K);
    TransitionDataset data(H);
    for (auto& step : data.steps) step.reserve(config.max_iterations);

    // Running per-pair log-likelihoods; adding each new triple's contribution
    // in arrival order reproduces a from-scratch recomputation bit for bit.
    std::vector<std::vector<double>> loglik(H, std::vector<double>(n_pairs, 0.0));
    // Per-step visit counts; the covariance rebuild only needs these.
    std::vector<std::vector<int>> counts(
        H, std::vector<int>(static_cast<std::size_t>(S) * K, 0));

    EpisodicMdp est;
    est.horizon = H;
    est.state_count = S;
    est.action_count = K;
    est.initial_state = env.initial_state;
    est.kernels.assign(H, Mat::Zero(static_cast<Eigen::Index>(S) * K, S));
    est.factorization = LowRankFactorization{
        d, std::vector<Mat>(H, Mat::Zero(static_cast<Eigen::Index>(S) * K, d)),
        std::vector<Mat>(H, Mat::Zero(S, d))};
    std::vector<int> chosen_pair(H, -1);

    RaffleOutput out;
    out.log.reserve(std::min(config.max_iterations, 1 << 20));
    std::vector<Mat> covariances(H);
    std::vector<Mat> bonuses(H);

    for (int n = 1; n <= config.max_iterations; ++n) {
        for (int h = 1; h <= H; ++h) {
            const EpisodeSample ep = collect_episode(env, policy, h, rng);
            data.steps[h - 1].push_back(ep.triple);
            ++counts[h - 1][static_cast<std::size_t>(ep.triple.s) * K + ep.triple.a];
            const Eigen::Index row =
                static_cast<Eigen::Index>(ep.triple.s) * K + ep.triple.a;
            for (std::size_t p = 0; p < n_pairs; ++p) {
                if (!mc.validity[p]) continue;
                const std::size_t i = p / n_mu;
                const std::size_t j = p % n_mu;
                const double prob =
                    mc.phis[i][h - 1].row(row).dot(mc.mus[j][h - 1].row(ep.triple.s_next));
                loglik[h - 1][p] += std::log(std::max(prob, kLogFloor));
            }
        }

        IterationRow row;
        row.n = n;
        row.zeta = params.zeta(n);
        row.lambda = params.lambda(n);
        row.alpha_hat = params.alpha_hat(n);
        row.loglik_per_step.resize(H);

        const double alpha_scaled = config.bonus_scale * row.alpha_hat;
        for (int h = 0; h < H; ++h) {
            // Per-step argmax over valid pairs, lowest (phi, mu) index on ties.
            int best = -1;
            double best_score = -std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < n_pairs; ++p) {
                if (!mc.validity[p]) continue;
                if (best < 0 || loglik[h][p] > best_score) {
                    best = static_cast<int>(p);
                    best_score = loglik[h][p];
                }
            }
            row.loglik_per_step[h] = best_score;
            if (best != chosen_pair[h]) {
                chosen_pair[h] = best;
                const std::size_t i = static_cast<std::size_t>(best) / n_mu;
                const std::size_t j = static_cast<std::size_t>(best) % n_mu;
                est.factorization->phi[h] = mc.phis[i][h];
                est.factorization->mu[h] = mc.mus[j][h];
                est.kernels[h] = mc.phis[i][h] * mc.mus[j][h].transpose();
            }

            const Mat& phi_h = est.factorization->phi[h];
            Mat u = row.lambda * Mat::Identity(d, d);
            for (Eigen::Index r = 0; r < phi_h.rows(); ++r)
                if (counts[h][r] > 0)
                    u.noalias() += static_cast<double>(counts[h][r]) *
                                   phi_h.row(r).transpose() * phi_h.row(r);
            covariances[h] = std::move(u);
            bonuses[h] = bonus_table(phi_h, covariances[h], alpha_scaled, S, K);
        }

        TruncatedPlan plan = plan_truncated(est, bonuses);
        row.v_hat = plan.v_hat;
        row.terminated = should_terminate(plan.v_hat, K, row.zeta, config.epsilon);
        out.log.push_back(row);
        policy = std::move(plan.policy);

        if (observer) {
            ExplorationState state;
            state.iteration = n;
            state.datasets = &data;
            state.current_policy = &policy;
            state.estimated_model = &est;
            state.covariances = &covariances;
            state.zeta = row.zeta;
            state.lambda = row.lambda;
            state.alpha_hat = row.alpha_hat;
            state.trajectory_count = static_cast<long>(n) * H;
            observer(state);
        }

        if (row.terminated) {
            out.model = est;
            out.bonus = bonuses;
            out.policy = policy;
            out.iterations = n;
            out.trajectory_count = static_cast<long>(n) * H;
            out.terminated = true;
            return out;
        }
    }

    out.model = est;
    out.bonus = bonuses;
    out.policy = policy;
    out.iterations = config.max_iterations;
    out.trajectory_count = static_cast<long>(config.max_iterations) * H;
    out.terminated = false;
    return out;
}

Policy plan_for_reward(const EpisodicMdp& model, const RewardFunction& reward) {
    return optimal_policy(model, reward).policy;
}

SystemIdError system_identification_error(const EpisodicMdp& p_hat,
                                          const EpisodicMdp& p_star,
                                          const Policy& policy) {
    require(p_hat.horizon == p_star.horizon && p_hat.state_count == p_star.state_count &&
                p_hat.action_count == p_star.action_count,
            "system_identification_error: dimension mismatch");

    const OccupancyMeasure occ = occupancy(p_star, policy);
    SystemIdError out;
    out.per_step = Vec::Zero(p_star.horizon);
    for (int h = 0; h < p_star.horizon; ++h) {
        double err = 0.0;
        for (int s = 0; s < p_star.state_count; ++s) {
            for (int a = 0; a < p_star.action_count; ++a) {
                const double w = occ.m[h](s, a);
                if (w <= 0.0) continue;
                err += w * tv_distance(p_hat.kernels[h].row(p_hat.sa(s, a)).transpose(),
                                       p_star.kernels[h].row(p_star.sa(s, a)).transpose());
            }
        }
        out.per_step(h) = err;
    }
    out.max_error = out.per_step.maxCoeff();
    return out;
}

}  // namespace rfrl
