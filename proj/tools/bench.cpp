// Benchmark comparing the OpenMP kernels against their serial references:
// the MLE pair-scoring sweep and the representation-regression grid.

#include "rfrl/harness.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool match) {
    std::printf("%-24s serial %8.1f ms   parallel %8.1f ms   speedup %5.2fx   %s\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms,
                match ? "results match" : "RESULTS DIFFER");
}

}  // namespace

int main() {
    using namespace rfrl;

    // Sized-up synthetic workload: 128 candidate pairs, 20k triples per step.
    SyntheticEnvSpec spec;
    spec.d = 4;
    spec.S = 10;
    spec.K = 5;
    spec.H = 4;
    spec.n_phi_decoys = 15;
    spec.n_mu_decoys = 7;
    spec.seed = 1;
    const Environment env = make_synthetic_env(spec);

    Rng rng(2);
    TransitionDataset data(spec.H);
    for (int h = 0; h < spec.H; ++h)
        for (int i = 0; i < 20000; ++i) {
            const int s = rng.uniform_int(spec.S);
            const int a = rng.uniform_int(spec.K);
            const int sn =
                rng.categorical(env.mdp.kernels[h].row(env.mdp.sa(s, a)).transpose());
            data.steps[h].push_back({s, a, sn});
        }

    {
        auto t0 = std::chrono::steady_clock::now();
        MleResult serial = mle_fit(data, env.model_class, /*parallel=*/false);
        const double serial_ms = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        MleResult parallel = mle_fit(data, env.model_class, /*parallel=*/true);
        const double parallel_ms = ms_since(t0);
        bool match = true;
        for (int h = 0; h < spec.H; ++h)
            match = match &&
                    serial.per_step[h].phi_index == parallel.per_step[h].phi_index &&
                    serial.per_step[h].mu_index == parallel.per_step[h].mu_index &&
                    serial.per_step[h].log_likelihood ==
                        parallel.per_step[h].log_likelihood;
        report("mle pair scoring", serial_ms, parallel_ms, match);
    }

    {
        const SamplingDistribution q = uniform_sampling(spec.H, spec.S, spec.K);
        const int tasks = 8;
        const int n_f = 20000;
        RepLearnData rep;
        rep.samples.resize(spec.H);
        rep.targets.resize(spec.H);
        for (int h = 0; h < spec.H; ++h) {
            const RewardDesign design = design_rewards(env.mdp, h, tasks, 7 + h);
            rep.samples[h].resize(tasks);
            rep.targets[h].resize(tasks);
            for (int t = 0; t < tasks; ++t) {
                const Mat targets =
                    target_q_table(env.mdp, design.policies[t], design.rewards[t], h);
                auto pairs = sample_pairs(q.q[h], n_f, rng);
                Vec y(n_f);
                for (int i = 0; i < n_f; ++i) y(i) = targets(pairs[i].first, pairs[i].second);
                rep.samples[h][t] = std::move(pairs);
                rep.targets[h][t] = std::move(y);
            }
        }

        auto t0 = std::chrono::steady_clock::now();
        RepLearnOutput serial =
            fit_representation_serial(rep, env.model_class.phis, spec.K);
        const double serial_ms = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        RepLearnOutput parallel = fit_representation(rep, env.model_class.phis, spec.K);
        const double parallel_ms = ms_since(t0);
        bool match = true;
        for (int h = 0; h < spec.H; ++h)
            match = match &&
                    serial.per_step[h].phi_index == parallel.per_step[h].phi_index &&
                    serial.per_step[h].loss == parallel.per_step[h].loss;
        report("regression grid", serial_ms, parallel_ms, match);
    }

    return 0;
}
