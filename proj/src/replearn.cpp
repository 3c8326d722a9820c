#include "rfrl/replearn.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace rfrl {

using detail::require;

void SamplingDistribution::validate(int horizon, int states, int actions) const {
    require(static_cast<int>(q.size()) == horizon, "sampling step count mismatch");
    for (const Mat& qh : q) {
        require(qh.rows() == states && qh.cols() == actions,
                "sampling table shape mismatch");
        require((qh.array() >= 0.0).all(), "negative sampling probability");
        require(std::abs(qh.sum() - 1.0) <= 1e-12, "sampling table does not sum to 1");
    }
}

SamplingDistribution uniform_sampling(int horizon, int states, int actions) {
    SamplingDistribution out;
    out.q.assign(horizon, Mat::Constant(states, actions, 1.0 / (states * actions)));
    return out;
}

SamplingDistribution occupancy_sampling(const EpisodicMdp& mdp, const Policy& probe) {
    const OccupancyMeasure occ = occupancy(mdp, probe);
    SamplingDistribution out;
    out.q.reserve(mdp.horizon);
    for (const Mat& m : occ.m) out.q.push_back(m / m.sum());
    return out;
}

std::vector<std::pair<int, int>> sample_pairs(const Mat& q_h, int n_f, Rng& rng) {
    require(n_f >= 1, "sample count must be positive");
    const int K = static_cast<int>(q_h.cols());
    Vec flat(q_h.size());
    for (int s = 0; s < q_h.rows(); ++s)
        for (int a = 0; a < K; ++a) flat(static_cast<Eigen::Index>(s) * K + a) = q_h(s, a);

    std::vector<std::pair<int, int>> out;
    out.reserve(n_f);
    for (int i = 0; i < n_f; ++i) {
        const int idx = rng.categorical(flat);
        out.emplace_back(idx / K, idx % K);
    }
    return out;
}

Mat target_q_table(const EpisodicMdp& model, const Policy& policy,
                   const RewardFunction& reward, int h) {
    require(h >= 0 && h < model.horizon, "step index out of range");
    require(reward.r[h].cwiseAbs().maxCoeff() == 0.0,
            "target reward must vanish at the regression step");

    const PolicyValue pv = evaluate_policy(model, policy, reward);
    Mat out(model.state_count, model.action_count);
    Vec next = model.kernels[h] * pv.v[h + 1];
    for (int s = 0; s < model.state_count; ++s)
        for (int a = 0; a < model.action_count; ++a) out(s, a) = next(model.sa(s, a));
    return out;
}

double target_q(const EpisodicMdp& model, const Policy& policy,
                const RewardFunction& reward, int h, int s, int a) {
    return target_q_table(model, policy, reward, h)(s, a);
}

Vec compute_w_star(const EpisodicMdp& true_model, const Policy& policy,
                   const RewardFunction& reward, int h) {
    require(true_model.factorization.has_value(),
            "compute_w_star requires a factorized model");
    require(h >= 0 && h < true_model.horizon, "step index out of range");
    require(reward.r[h].cwiseAbs().maxCoeff() == 0.0,
            "reward must vanish at the regression step");

    const PolicyValue pv = evaluate_policy(true_model, policy, reward);
    return true_model.factorization->mu[h].transpose() * pv.v[h + 1];
}

namespace {

Policy random_deterministic_policy(int horizon, int states, int actions, Rng& rng) {
    std::vector<std::vector<int>> table(horizon, std::vector<int>(states, 0));
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < states; ++s) table[h][s] = rng.uniform_int(actions);
    return Policy::deterministic(horizon, states, actions, table);
}

/// Random reward vanishing at steps <= h, concentrated just after it, with
/// per-step maxima summing to exactly 1.
RewardFunction random_tail_reward(int horizon, int states, int actions, int h,
                                  Rng& rng) {
    RewardFunction out = RewardFunction::zero(horizon, states, actions);
    if (h + 1 >= horizon) return out;  // no later step exists
    double max_sum = 0.0;
    for (int step = h + 1; step < horizon; ++step) {
        const double weight = (step == h + 1) ? 4.0 : 1.0;
        for (int s = 0; s < states; ++s)
            for (int a = 0; a < actions; ++a)
                out.r[step](s, a) = weight * rng.uniform01();
        max_sum += out.r[step].maxCoeff();
    }
    for (int step = h + 1; step < horizon; ++step) out.r[step] /= max_sum;
    return out;
}

}  // namespace

RewardDesign design_rewards(const EpisodicMdp& reference, int h, int task_count,
                            std::uint64_t seed) {
    require(h >= 0 && h < reference.horizon, "step index out of range");
    const Eigen::Index d =
        reference.factorization ? reference.factorization->dim : Eigen::Index(0);
    if (d > 0)
        require(task_count >= d, "task count must be at least the feature dimension");
    require(task_count >= 1, "task count must be positive");

    Rng rng(seed);
    RewardDesign out;
    out.task_count = task_count;
    const bool diagnosable = reference.factorization.has_value();
    const bool degenerate = (h + 1 >= reference.horizon);
    if (diagnosable) out.w_star = Mat::Zero(d, task_count);

    for (int t = 0; t < task_count; ++t) {
        RewardFunction r;
        Policy pi;
        Vec w;
        // A task whose true weight vector is numerically zero carries no
        // signal; redraw it unless the step is degenerate by construction.
        for (int attempt = 0; attempt < 20; ++attempt) {
            r = random_tail_reward(reference.horizon, reference.state_count,
                                   reference.action_count, h, rng);
            pi = random_deterministic_policy(reference.horizon, reference.state_count,
                                             reference.action_count, rng);
            if (!diagnosable || degenerate) break;
            w = compute_w_star(reference, pi, r, h);
            if (w.norm() > 1e-12) break;
        }
        if (diagnosable && !degenerate) out.w_star->col(t) = w;
        out.rewards.push_back(std::move(r));
        out.policies.push_back(std::move(pi));
    }
    return out;
}

DiversityCheck check_diversity(const Mat& w_star, double c_d) {
    const Eigen::Index d = w_star.rows();
    const Eigen::Index t = w_star.cols();
    require(t >= d, "diversity check requires at least d tasks");

    Eigen::SelfAdjointEigenSolver<Mat> es(w_star * w_star.transpose());
    DiversityCheck out;
    out.sigma_d_sq = std::max(es.eigenvalues().minCoeff(), 0.0);
    out.ok = out.sigma_d_sq >= c_d * static_cast<double>(t) / static_cast<double>(d);
    return out;
}

double check_reachability(const EpisodicMdp& true_model, const Policy& probe) {
    const OccupancyMeasure occ = occupancy(true_model, probe);
    double min_visit = std::numeric_limits<double>::infinity();
    const int first = true_model.horizon > 1 ? 1 : 0;
    for (int h = first; h < true_model.horizon; ++h) {
        const Vec marginal = occ.m[h].rowwise().sum();
        min_visit = std::min(min_visit, marginal.minCoeff());
    }
    return min_visit;
}

Mat pinv_psd(const Mat& m, double rel_cutoff) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const Vec& ev = es.eigenvalues();
    const double max_ev = ev.maxCoeff();
    Mat out = Mat::Zero(m.rows(), m.cols());
    if (max_ev <= 0.0) return out;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > rel_cutoff * max_ev) {
            const Vec u = es.eigenvectors().col(i);
            out.noalias() += (1.0 / ev(i)) * u * u.transpose();
        }
    }
    return out;
}

Mat covariance(const Mat& q_h, const Mat& phi_h, const Mat& phi2_h, int action_count) {
    require(phi_h.cols() == phi2_h.cols(), "feature dimension mismatch");
    Mat out = Mat::Zero(phi_h.cols(), phi2_h.cols());
    for (int s = 0; s < q_h.rows(); ++s) {
        for (int a = 0; a < action_count; ++a) {
            const double w = q_h(s, a);
            if (w == 0.0) continue;
            const Eigen::Index row = static_cast<Eigen::Index>(s) * action_count + a;
            out.noalias() += w * phi_h.row(row).transpose() * phi2_h.row(row);
        }
    }
    return out;
}

Mat divergence(const Mat& q_h, const Mat& phi_h, const Mat& phi2_h, int action_count) {
    const Mat s22 = covariance(q_h, phi2_h, phi2_h, action_count);
    const Mat s21 = covariance(q_h, phi2_h, phi_h, action_count);
    const Mat s11 = covariance(q_h, phi_h, phi_h, action_count);
    Mat d = s22 - s21 * pinv_psd(s11) * s21.transpose();
    return 0.5 * (d + d.transpose());
}

double divergence_score(const Mat& q_h, const Mat& phi_star_h, const Mat& phi_tilde_h,
                        int action_count) {
    const Mat d = divergence(q_h, phi_star_h, phi_tilde_h, action_count);
    Eigen::SelfAdjointEigenSolver<Mat> es(d);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::runtime_error("divergence has an eigenvalue below the -1e-9 floor");
    return d.trace();
}

namespace {

struct StepCandidateFit {
    Mat weights;
    double loss = 0.0;
};

/// Least squares for every task of one (step, candidate) cell. Samples are
/// aggregated by state-action cell (sums of identical feature rows), which
/// keeps the problem exact for arbitrary per-sample targets and makes the
/// result independent of sample order.
StepCandidateFit fit_cell(const Mat& phi_h,
                          const std::vector<std::vector<std::pair<int, int>>>& samples,
                          const std::vector<Vec>& targets, int action_count) {
    const Eigen::Index d = phi_h.cols();
    const int tasks = static_cast<int>(samples.size());
    StepCandidateFit out;
    out.weights = Mat::Zero(d, tasks);
    for (int t = 0; t < tasks; ++t) {
        const auto& pairs = samples[t];
        const Vec& y = targets[t];
        std::vector<int> count(phi_h.rows(), 0);
        std::vector<double> sum_y(phi_h.rows(), 0.0);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Eigen::Index row =
                static_cast<Eigen::Index>(pairs[i].first) * action_count + pairs[i].second;
            ++count[row];
            sum_y[row] += y(static_cast<Eigen::Index>(i));
        }
        Mat gram = Mat::Zero(d, d);
        Vec rhs = Vec::Zero(d);
        for (Eigen::Index row = 0; row < phi_h.rows(); ++row) {
            if (count[row] == 0) continue;
            gram.noalias() +=
                static_cast<double>(count[row]) * phi_h.row(row).transpose() * phi_h.row(row);
            rhs.noalias() += sum_y[row] * phi_h.row(row).transpose();
        }
        const Vec w = pinv_psd(gram) * rhs;
        out.weights.col(t) = w;
        // Residuals are summed per sample in the squared form; the expanded
        // normal-equation form cancels catastrophically near zero loss.
        const Vec fits = phi_h * w;
        double residual = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Eigen::Index row =
                static_cast<Eigen::Index>(pairs[i].first) * action_count + pairs[i].second;
            const double diff = fits(row) - y(static_cast<Eigen::Index>(i));
            residual += diff * diff;
        }
        out.loss += residual;
    }
    return out;
}

RepLearnOutput assemble(const std::vector<std::vector<StepCandidateFit>>& fits) {
    RepLearnOutput out;
    for (const auto& per_candidate : fits) {
        RepLearnStep step;
        step.loss = std::numeric_limits<double>::infinity();
        int exact = 0;
        for (std::size_t c = 0; c < per_candidate.size(); ++c) {
            if (per_candidate[c].loss <= 1e-12) ++exact;
            if (per_candidate[c].loss < step.loss) {
                step.loss = per_candidate[c].loss;
                step.phi_index = static_cast<int>(c);
                step.weights = per_candidate[c].weights;
            }
        }
        step.ambiguous = exact >= 2;
        out.per_step.push_back(std::move(step));
    }
    return out;
}

}  // namespace

RepLearnOutput fit_representation_serial(const RepLearnData& data,
                                         const std::vector<StepTable>& feature_class,
                                         int action_count) {
    require(!feature_class.empty(), "feature class is empty");
    const int H = static_cast<int>(data.samples.size());
    std::vector<std::vector<StepCandidateFit>> fits(
        H, std::vector<StepCandidateFit>(feature_class.size()));
    for (int h = 0; h < H; ++h)
        for (std::size_t c = 0; c < feature_class.size(); ++c)
            fits[h][c] =
                fit_cell(feature_class[c][h], data.samples[h], data.targets[h], action_count);
    return assemble(fits);
}

RepLearnOutput fit_representation(const RepLearnData& data,
                                  const std::vector<StepTable>& feature_class,
                                  int action_count, bool parallel) {
    if (!parallel) return fit_representation_serial(data, feature_class, action_count);
    require(!feature_class.empty(), "feature class is empty");
    const int H = static_cast<int>(data.samples.size());
    const std::ptrdiff_t n_cells = static_cast<std::ptrdiff_t>(H) * feature_class.size();
    std::vector<std::vector<StepCandidateFit>> fits(
        H, std::vector<StepCandidateFit>(feature_class.size()));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t cell = 0; cell < n_cells; ++cell) {
        const int h = static_cast<int>(cell / feature_class.size());
        const std::size_t c = static_cast<std::size_t>(cell % feature_class.size());
        fits[h][c] =
            fit_cell(feature_class[c][h], data.samples[h], data.targets[h], action_count);
    }
    return assemble(fits);
}

RepLearnRun run_replearn(const EpisodicMdp& estimated_model,
                         const std::vector<StepTable>& feature_class,
                         const SamplingDistribution& q, const RepLearnConfig& config,
                         const EpisodicMdp* truth) {
    require(!feature_class.empty(), "feature class is empty");
    const int H = estimated_model.horizon;
    const int S = estimated_model.state_count;
    const int K = estimated_model.action_count;
    q.validate(H, S, K);

    const EpisodicMdp& reference =
        (truth && truth->factorization) ? *truth : estimated_model;
    const bool diagnosable = reference.factorization.has_value();

    RepLearnRun out;
    out.diagnostics.sigma_d_sq.assign(H, 0.0);
    out.diagnostics.diversity_ok.assign(H, false);

    Rng rng(config.seed);
    RepLearnData data;
    data.samples.resize(H);
    data.targets.resize(H);
    for (int h = 0; h < H; ++h) {
        RewardDesign design;
        for (int attempt = 0; attempt < 20; ++attempt) {
            RewardDesign candidate = design_rewards(reference, h, config.task_count, rng.raw());
            if (!diagnosable || h + 1 >= H) {
                design = std::move(candidate);
                break;
            }
            const DiversityCheck check = check_diversity(*candidate.w_star, config.c_d);
            if (check.sigma_d_sq >= out.diagnostics.sigma_d_sq[h]) {
                design = std::move(candidate);
                out.diagnostics.sigma_d_sq[h] = check.sigma_d_sq;
                out.diagnostics.diversity_ok[h] = check.ok;
            }
            if (check.ok) break;
        }

        data.samples[h].resize(config.task_count);
        data.targets[h].resize(config.task_count);
        for (int t = 0; t < config.task_count; ++t) {
            const Mat targets =
                target_q_table(estimated_model, design.policies[t], design.rewards[t], h);
            auto pairs = sample_pairs(q.q[h], config.sample_count, rng);
            Vec y(config.sample_count);
            for (int i = 0; i < config.sample_count; ++i)
                y(i) = targets(pairs[i].first, pairs[i].second);
            data.samples[h][t] = std::move(pairs);
            data.targets[h][t] = std::move(y);
        }
    }

    out.fit = fit_representation(data, feature_class, K);

    if (truth) {
        const Policy probe = Policy::uniform(H, S, K);
        out.diagnostics.eta_min = check_reachability(*truth, probe);
        const OccupancyMeasure occ = occupancy(*truth, probe);
        double c_b = 0.0, c_min = 0.0;
        bool reachable = true;
        for (int h = 0; h < H; ++h) {
            c_b = std::max(c_b, q.q[h].maxCoeff());
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < K; ++a) {
                    if (q.q[h](s, a) <= 0.0) continue;
                    if (occ.m[h](s, a) <= 0.0)
                        reachable = false;
                    else
                        c_min = std::max(c_min, q.q[h](s, a) / occ.m[h](s, a));
                }
            }
        }
        out.diagnostics.c_b = c_b;
        out.diagnostics.c_min = c_min;
        out.diagnostics.q_support_reachable = reachable;
        if (truth->factorization) {
            out.diagnostics.divergence_vs_truth.resize(H);
            for (int h = 0; h < H; ++h) {
                const Mat& learned = feature_class[out.fit.per_step[h].phi_index][h];
                out.diagnostics.divergence_vs_truth[h] =
                    divergence_score(q.q[h], truth->factorization->phi[h], learned, K);
            }
        }
    }
    return out;
}

}  // namespace rfrl
