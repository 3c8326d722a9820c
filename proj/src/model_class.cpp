#include "rfrl/model_class.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfrl {

using detail::require;

bool validate_pair(const StepTable& phi, const StepTable& mu) {
    if (phi.size() != mu.size() || phi.empty()) return false;
    constexpr double entry_tol = 1e-12;
    constexpr double row_tol = 1e-10;
    for (std::size_t h = 0; h < phi.size(); ++h) {
        if (phi[h].cols() != mu[h].cols()) return false;
        Mat prod = phi[h] * mu[h].transpose();
        if (!((prod.array() >= -entry_tol).all() && (prod.array() <= 1.0 + entry_tol).all()))
            return false;
        for (Eigen::Index i = 0; i < prod.rows(); ++i)
            if (std::abs(prod.row(i).sum() - 1.0) > row_tol) return false;
    }
    return true;
}

double log_likelihood(const Mat& phi_h, const Mat& mu_h,
                      const std::vector<Triple>& data_h, int action_count) {
    double total = 0.0;
    for (const Triple& t : data_h) {
        const Eigen::Index row = static_cast<Eigen::Index>(t.s) * action_count + t.a;
        const double p = phi_h.row(row).dot(mu_h.row(t.s_next));
        total += std::log(std::max(p, kLogFloor));
    }
    return total;
}

void ModelClass::screen() {
    validity.assign(n_pairs(), 0);
    bool any = false;
    for (std::size_t i = 0; i < phis.size(); ++i) {
        for (std::size_t j = 0; j < mus.size(); ++j) {
            const bool ok = validate_pair(phis[i], mus[j]);
            validity[i * mus.size() + j] = ok ? 1 : 0;
            any = any || ok;
        }
    }
    require(any, "model class contains no valid (phi, mu) pair");
}

std::vector<double> score_pairs_serial(const ModelClass& mc,
                                       const std::vector<Triple>& data_h, int h) {
    std::vector<double> scores(mc.n_pairs(), -std::numeric_limits<double>::infinity());
    for (std::size_t p = 0; p < mc.n_pairs(); ++p) {
        if (!mc.validity[p]) continue;
        const std::size_t i = p / mc.n_mu();
        const std::size_t j = p % mc.n_mu();
        scores[p] = log_likelihood(mc.phis[i][h], mc.mus[j][h], data_h, mc.action_count);
    }
    return scores;
}

std::vector<double> score_pairs(const ModelClass& mc, const std::vector<Triple>& data_h,
                                int h) {
    std::vector<double> scores(mc.n_pairs(), -std::numeric_limits<double>::infinity());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(mc.n_pairs());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        if (!mc.validity[p]) continue;
        const std::size_t i = static_cast<std::size_t>(p) / mc.n_mu();
        const std::size_t j = static_cast<std::size_t>(p) % mc.n_mu();
        scores[p] = log_likelihood(mc.phis[i][h], mc.mus[j][h], data_h, mc.action_count);
    }
    return scores;
}

namespace {

MleStepChoice pick_best(const ModelClass& mc, const std::vector<double>& scores) {
    MleStepChoice best;
    double best_score = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < mc.n_phi(); ++i) {
        for (std::size_t j = 0; j < mc.n_mu(); ++j) {
            if (!mc.pair_valid(i, j)) continue;
            const double s = scores[i * mc.n_mu() + j];
            if (!found || s > best_score) {  // strict: ties keep the lowest indices
                best = {static_cast<int>(i), static_cast<int>(j), s};
                best_score = s;
                found = true;
            }
        }
    }
    return best;
}

}  // namespace

MleResult mle_fit(const TransitionDataset& data, const ModelClass& mc, bool parallel) {
    require(!mc.validity.empty(), "model class has not been screened");
    require(data.horizon() == mc.horizon, "dataset step count mismatch");
    bool any = std::any_of(mc.validity.begin(), mc.validity.end(),
                           [](char c) { return c != 0; });
    require(any, "model class contains no valid (phi, mu) pair");

    MleResult out;
    out.per_step.reserve(mc.horizon);
    out.factorization.dim = mc.dim;
    for (int h = 0; h < mc.horizon; ++h) {
        const std::vector<double> scores = parallel
                                               ? score_pairs(mc, data.steps[h], h)
                                               : score_pairs_serial(mc, data.steps[h], h);
        const MleStepChoice choice = pick_best(mc, scores);
        out.per_step.push_back(choice);
        out.factorization.phi.push_back(mc.phis[choice.phi_index][h]);
        out.factorization.mu.push_back(mc.mus[choice.mu_index][h]);
        out.kernels.push_back(mc.phis[choice.phi_index][h] *
                              mc.mus[choice.mu_index][h].transpose());
    }
    return out;
}

}  // namespace rfrl
