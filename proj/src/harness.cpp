#include "rfrl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace rfrl {

namespace {

void config_require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

std::uint64_t seed_field(const json& j, const char* key, std::uint64_t fallback) {
    return j.contains(key) ? j.at(key).get<std::uint64_t>() : fallback;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        const json& env = j.at("environment");
        const std::string type = env.at("type").get<std::string>();
        if (type == "synthetic") {
            c.environment.kind = EnvironmentSpec::Kind::synthetic;
            SyntheticEnvSpec& s = c.environment.synthetic;
            s.d = env.value("d", 2);
            s.S = env.value("S", 4);
            s.K = env.value("K", 3);
            s.H = env.value("H", 3);
            s.n_phi_decoys = env.value("n_phi_decoys", 3);
            s.n_mu_decoys = env.value("n_mu_decoys", 2);
            s.seed = seed_field(env, "seed", 1);
        } else if (type == "hard_instance") {
            c.environment.kind = EnvironmentSpec::Kind::hard_instance;
            HardInstanceEnvSpec& h = c.environment.hard;
            h.params.horizon = env.value("horizon", 9);
            h.params.depth = env.value("depth", 2);
            h.params.action_count = env.value("actions", 4);
            h.params.waiting_horizon = env.value("h_bar", 0);
            h.params.epsilon0 = env.value("epsilon0", 0.1);
            h.n_family_decoys = env.value("n_family_decoys", 1);
            if (env.contains("perturbation")) {
                const json& p = env.at("perturbation");
                config_require(p.is_array() && p.size() == 3,
                               "perturbation must be [h, leaf, action]");
                h.perturbation = {p[0].get<int>(), p[1].get<int>(), p[2].get<int>()};
            }
        } else if (type == "file") {
            c.environment.kind = EnvironmentSpec::Kind::file;
            c.environment.file.mdp_path = env.at("mdp_path").get<std::string>();
            c.environment.file.model_class_path =
                env.at("model_class_path").get<std::string>();
        } else {
            throw ConfigError("unknown environment type: " + type);
        }

        const json& alg = j.at("algorithm");
        c.algorithm.epsilon = alg.value("epsilon", 0.1);
        c.algorithm.delta = alg.value("delta", 0.1);
        c.algorithm.beta3 = alg.value("beta3", 1.0);
        c.algorithm.bonus_scale = alg.value("bonus_scale", 1.0);
        c.algorithm.max_iterations = alg.value("max_iterations", 1000);
        c.algorithm.seed = seed_field(alg, "seed", 7);

        if (j.contains("evaluation")) {
            const json& ev = j.at("evaluation");
            c.evaluation.n_test_rewards = ev.value("n_test_rewards", 10);
            c.evaluation.n_test_policies = ev.value("n_test_policies", 10);
            c.evaluation.seed = seed_field(ev, "seed", 99);
            if (ev.contains("replearn")) {
                const json& rl = ev.at("replearn");
                RepLearnConfig rc;
                rc.task_count = rl.value("T", 4);
                rc.sample_count = rl.value("N_f", 2000);
                rc.c_d = rl.value("C_D", 0.1);
                rc.seed = seed_field(rl, "seed", 1234);
                c.evaluation.replearn = rc;
                const std::string mode = rl.value("q_mode", std::string("uniform"));
                if (mode == "uniform")
                    c.evaluation.q_mode = EvaluationSpec::QMode::uniform;
                else if (mode == "probe_occupancy")
                    c.evaluation.q_mode = EvaluationSpec::QMode::probe_occupancy;
                else
                    throw ConfigError("unknown q_mode: " + mode);
            }
        }

        if (j.contains("output")) {
            c.output.csv_path = j.at("output").value("csv", c.output.csv_path);
            c.output.json_path = j.at("output").value("json", c.output.json_path);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    config_require(c.algorithm.epsilon > 0.0 && c.algorithm.epsilon < 1.0,
                   "epsilon must lie in (0,1)");
    config_require(c.algorithm.delta > 0.0 && c.algorithm.delta < 1.0,
                   "delta must lie in (0,1)");
    config_require(c.algorithm.max_iterations >= 1, "max_iterations must be >= 1");
    return c;
}

json to_json(const ExperimentConfig& c) {
    json env;
    switch (c.environment.kind) {
        case EnvironmentSpec::Kind::synthetic:
            env = json{{"type", "synthetic"},
                       {"d", c.environment.synthetic.d},
                       {"S", c.environment.synthetic.S},
                       {"K", c.environment.synthetic.K},
                       {"H", c.environment.synthetic.H},
                       {"n_phi_decoys", c.environment.synthetic.n_phi_decoys},
                       {"n_mu_decoys", c.environment.synthetic.n_mu_decoys},
                       {"seed", c.environment.synthetic.seed}};
            break;
        case EnvironmentSpec::Kind::hard_instance: {
            env = json{{"type", "hard_instance"},
                       {"horizon", c.environment.hard.params.horizon},
                       {"depth", c.environment.hard.params.depth},
                       {"actions", c.environment.hard.params.action_count},
                       {"h_bar", c.environment.hard.params.waiting_horizon},
                       {"epsilon0", c.environment.hard.params.epsilon0},
                       {"n_family_decoys", c.environment.hard.n_family_decoys}};
            if (c.environment.hard.perturbation)
                env["perturbation"] = *c.environment.hard.perturbation;
            break;
        }
        case EnvironmentSpec::Kind::file:
            env = json{{"type", "file"},
                       {"mdp_path", c.environment.file.mdp_path},
                       {"model_class_path", c.environment.file.model_class_path}};
            break;
    }
    json out{{"environment", env},
             {"algorithm",
              {{"epsilon", c.algorithm.epsilon},
               {"delta", c.algorithm.delta},
               {"beta3", c.algorithm.beta3},
               {"bonus_scale", c.algorithm.bonus_scale},
               {"max_iterations", c.algorithm.max_iterations},
               {"seed", c.algorithm.seed}}},
             {"evaluation",
              {{"n_test_rewards", c.evaluation.n_test_rewards},
               {"n_test_policies", c.evaluation.n_test_policies},
               {"seed", c.evaluation.seed}}},
             {"output", {{"csv", c.output.csv_path}, {"json", c.output.json_path}}}};
    if (c.evaluation.replearn) {
        out["evaluation"]["replearn"] =
            json{{"T", c.evaluation.replearn->task_count},
                 {"N_f", c.evaluation.replearn->sample_count},
                 {"C_D", c.evaluation.replearn->c_d},
                 {"seed", c.evaluation.replearn->seed},
                 {"q_mode", c.evaluation.q_mode == EvaluationSpec::QMode::uniform
                                ? "uniform"
                                : "probe_occupancy"}};
    }
    return out;
}

ExperimentConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    return config_from_json(j);
}

namespace {

/// Simplex weights with entries bounded away from zero.
Vec random_simplex(Eigen::Index d, Rng& rng) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.uniform(0.05, 1.0);
    return v / v.sum();
}

double max_row_tv(const std::vector<Mat>& a, const std::vector<Mat>& b) {
    double worst = 0.0;
    for (std::size_t h = 0; h < a.size(); ++h)
        for (Eigen::Index r = 0; r < a[h].rows(); ++r)
            worst = std::max(worst, 0.5 * (a[h].row(r) - b[h].row(r)).cwiseAbs().sum());
    return worst;
}

std::vector<Mat> induced_kernels(const StepTable& phi, const StepTable& mu) {
    std::vector<Mat> out;
    out.reserve(phi.size());
    for (std::size_t h = 0; h < phi.size(); ++h)
        out.push_back(phi[h] * mu[h].transpose());
    return out;
}

}  // namespace

Environment make_synthetic_env(const SyntheticEnvSpec& spec) {
    config_require(spec.d >= 1 && spec.S >= 1 && spec.K >= 1 && spec.H >= 1,
                   "synthetic environment dimensions must be positive");
    config_require(spec.d <= spec.S, "feature dimension must not exceed state count");
    config_require(spec.n_phi_decoys >= 0 && spec.n_mu_decoys >= 0,
                   "decoy counts must be nonnegative");

    Rng rng(spec.seed);
    const Eigen::Index rows = static_cast<Eigen::Index>(spec.S) * spec.K;

    StepTable phi_true, mu_true;
    for (int h = 0; h < spec.H; ++h) {
        Mat anchors(spec.S, spec.d);  // columns are next-state distributions
        for (Eigen::Index k = 0; k < spec.d; ++k) {
            Vec col(spec.S);
            for (int s = 0; s < spec.S; ++s) col(s) = rng.uniform(0.05, 1.0);
            anchors.col(k) = col / col.sum();
        }
        Mat weights(rows, spec.d);
        for (Eigen::Index r = 0; r < rows; ++r)
            weights.row(r) = random_simplex(spec.d, rng).transpose();
        phi_true.push_back(std::move(weights));
        mu_true.push_back(std::move(anchors));
    }

    Environment env;
    env.mdp.horizon = spec.H;
    env.mdp.state_count = spec.S;
    env.mdp.action_count = spec.K;
    env.mdp.initial_state = 0;
    env.mdp.kernels = induced_kernels(phi_true, mu_true);
    env.mdp.factorization =
        LowRankFactorization{spec.d, phi_true, mu_true};
    env.mdp.validate();

    ModelClass& mc = env.model_class;
    mc.horizon = spec.H;
    mc.state_count = spec.S;
    mc.action_count = spec.K;
    mc.dim = spec.d;
    mc.phis.push_back(phi_true);
    mc.mus.push_back(mu_true);

    const std::vector<Mat> true_kernels = env.mdp.kernels;
    constexpr double tv_gate = 0.02;
    constexpr double noise = 0.35;

    auto far_from_truth = [&](const StepTable& phi, const StepTable& mu) {
        return max_row_tv(induced_kernels(phi, mu), true_kernels) >= tv_gate;
    };

    for (int k = 0; k < spec.n_phi_decoys; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            StepTable cand;
            for (int h = 0; h < spec.H; ++h) {
                Mat w = phi_true[h];
                for (Eigen::Index r = 0; r < rows; ++r) {
                    for (Eigen::Index c = 0; c < spec.d; ++c)
                        w(r, c) = std::max(w(r, c) + noise * rng.uniform(-1.0, 1.0), 0.01);
                    w.row(r) /= w.row(r).sum();
                }
                cand.push_back(std::move(w));
            }
            bool far = true;
            for (const StepTable& mu : mc.mus) far = far && far_from_truth(cand, mu);
            if (far) {
                mc.phis.push_back(std::move(cand));
                placed = true;
            }
        }
        config_require(placed, "failed to generate a feature decoy in 100 attempts");
    }

    for (int k = 0; k < spec.n_mu_decoys; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            StepTable cand;
            for (int h = 0; h < spec.H; ++h) {
                Mat m = mu_true[h];
                for (Eigen::Index c = 0; c < spec.d; ++c) {
                    for (int s = 0; s < spec.S; ++s)
                        m(s, c) = std::max(m(s, c) + noise * rng.uniform(-1.0, 1.0) /
                                                         spec.S,
                                           0.01 / spec.S);
                    m.col(c) /= m.col(c).sum();
                }
                cand.push_back(std::move(m));
            }
            bool far = true;
            for (const StepTable& phi : mc.phis) far = far && far_from_truth(phi, cand);
            if (far) {
                mc.mus.push_back(std::move(cand));
                placed = true;
            }
        }
        config_require(placed, "failed to generate an anchor decoy in 100 attempts");
    }

    mc.screen();
    return env;
}

Environment make_hard_instance_env(const HardInstanceEnvSpec& spec) {
    HardInstance chosen = spec.perturbation
                              ? build_perturbed(spec.params, (*spec.perturbation)[0],
                                                (*spec.perturbation)[1],
                                                (*spec.perturbation)[2])
                              : build_reference(spec.params);

    Environment env;
    env.mdp = chosen.mdp;
    ModelClass& mc = env.model_class;
    mc.horizon = env.mdp.horizon;
    mc.state_count = env.mdp.state_count;
    mc.action_count = env.mdp.action_count;
    mc.dim = env.mdp.factorization->dim;
    mc.phis.push_back(env.mdp.factorization->phi);
    mc.mus.push_back(env.mdp.factorization->mu);

    // Other family members (always including the reference) act as decoys;
    // they share the same mu embeddings.
    std::vector<std::array<int, 3>> family = enumerate_family(spec.params);
    const HardInstance reference = build_reference(spec.params);
    if (spec.perturbation) mc.phis.push_back(reference.mdp.factorization->phi);
    int added = spec.perturbation ? 1 : 0;
    for (const auto& idx : family) {
        if (added >= spec.n_family_decoys) break;
        if (spec.perturbation && idx == *spec.perturbation) continue;
        mc.phis.push_back(
            build_perturbed(spec.params, idx[0], idx[1], idx[2]).mdp.factorization->phi);
        ++added;
    }
    mc.screen();
    return env;
}

Environment build_environment(const EnvironmentSpec& spec) {
    switch (spec.kind) {
        case EnvironmentSpec::Kind::synthetic:
            return make_synthetic_env(spec.synthetic);
        case EnvironmentSpec::Kind::hard_instance:
            return make_hard_instance_env(spec.hard);
        case EnvironmentSpec::Kind::file: {
            Environment env;
            env.mdp = mdp_from_json(json::parse(read_text(spec.file.mdp_path)));
            env.model_class =
                model_class_from_json(json::parse(read_text(spec.file.model_class_path)));
            config_require(env.model_class.horizon == env.mdp.horizon &&
                               env.model_class.state_count == env.mdp.state_count &&
                               env.model_class.action_count == env.mdp.action_count,
                           "model class dimensions do not match the MDP");
            return env;
        }
    }
    throw ConfigError("unreachable environment kind");
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RewardFunction random_reward(int H, int S, int K, Rng& rng) {
    RewardFunction r = RewardFunction::zero(H, S, K);
    double max_sum = 0.0;
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < K; ++a) r.r[h](s, a) = rng.uniform01();
        max_sum += r.r[h].maxCoeff();
    }
    for (int h = 0; h < H; ++h) r.r[h] /= max_sum;
    return r;
}

Policy random_stochastic_policy(int H, int S, int K, Rng& rng) {
    Policy p;
    p.pi.assign(H, Mat::Zero(S, K));
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            Vec row(K);
            for (int a = 0; a < K; ++a) row(a) = rng.uniform(0.01, 1.0);
            p.pi[h].row(s) = (row / row.sum()).transpose();
        }
    return p;
}

}  // namespace

std::string run_record_csv(const RunRecord& record) {
    std::string out = "n,h,loglik,v_hat,zeta_n,alpha_hat_n,lambda_n,terminated\n";
    for (const IterationRow& row : record.iterations) {
        out += std::to_string(row.n);
        out += ',';
        out += std::to_string(row.loglik_per_step.size());
        out += ",\"[";
        for (std::size_t h = 0; h < row.loglik_per_step.size(); ++h) {
            if (h > 0) out += ',';
            out += fmt_double(row.loglik_per_step[h]);
        }
        out += "]\",";
        out += fmt_double(row.v_hat);
        out += ',';
        out += fmt_double(row.zeta);
        out += ',';
        out += fmt_double(row.alpha_hat);
        out += ',';
        out += fmt_double(row.lambda);
        out += ',';
        out += row.terminated ? '1' : '0';
        out += '\n';
    }
    return out;
}

json run_record_json(const RunRecord& record) {
    json rows = json::array();
    for (const IterationRow& r : record.iterations)
        rows.push_back(json{{"n", r.n},
                            {"loglik", r.loglik_per_step},
                            {"v_hat", r.v_hat},
                            {"zeta_n", r.zeta},
                            {"alpha_hat_n", r.alpha_hat},
                            {"lambda_n", r.lambda},
                            {"terminated", r.terminated}});

    json sysid = json::array();
    for (const SystemIdError& e : record.sysid_per_policy) {
        std::vector<double> per(e.per_step.data(), e.per_step.data() + e.per_step.size());
        sysid.push_back(json{{"per_step", per}, {"max", e.max_error}});
    }

    json final{{"terminated", record.terminated},
               {"n_epsilon", record.n_epsilon},
               {"trajectory_count", record.trajectory_count},
               {"suboptimality_gaps", record.suboptimality_gaps},
               {"system_identification", {{"per_policy", sysid}, {"max", record.sysid_max}}},
               {"wall_clock_sec", record.wall_clock_sec}};
    if (record.replearn) {
        const RepLearnRun& rl = *record.replearn;
        json steps = json::array();
        for (const RepLearnStep& s : rl.fit.per_step)
            steps.push_back(json{{"phi_index", s.phi_index},
                                 {"loss", s.loss},
                                 {"ambiguous", s.ambiguous}});
        final["replearn"] = json{{"per_step", steps},
                                 {"sigma_d_sq", rl.diagnostics.sigma_d_sq},
                                 {"diversity_ok", rl.diagnostics.diversity_ok},
                                 {"eta_min", rl.diagnostics.eta_min},
                                 {"c_b", rl.diagnostics.c_b},
                                 {"c_min", rl.diagnostics.c_min},
                                 {"q_support_reachable", rl.diagnostics.q_support_reachable},
                                 {"divergence_vs_truth", rl.diagnostics.divergence_vs_truth}};
    }
    return json{{"config", record.config_echo},
                {"iterations", std::move(rows)},
                {"final", std::move(final)},
                {"exit_code", record.exit_code}};
}

RunRecord run(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const Environment env = build_environment(config.environment);
    const int H = env.mdp.horizon;
    const int S = env.mdp.state_count;
    const int K = env.mdp.action_count;

    RunRecord record;
    record.config_echo = to_json(config);

    RaffleOutput raffle = run_exploration(env.mdp, env.model_class, config.algorithm);
    record.iterations = std::move(raffle.log);
    record.terminated = raffle.terminated;
    record.n_epsilon = raffle.iterations;
    record.trajectory_count = raffle.trajectory_count;
    record.exit_code = raffle.terminated ? 0 : 2;

    // Planning metrics are drawn from the evaluation seed, independently of
    // the exploration seed.
    Rng eval_rng(config.evaluation.seed);
    for (int i = 0; i < config.evaluation.n_test_rewards; ++i) {
        const RewardFunction r = random_reward(H, S, K, eval_rng);
        const Policy planned = plan_for_reward(raffle.model, r);
        const double v_star = optimal_policy(env.mdp, r).value;
        const double v_planned = evaluate_policy(env.mdp, planned, r).value;
        record.suboptimality_gaps.push_back(v_star - v_planned);
    }
    for (int i = 0; i < config.evaluation.n_test_policies; ++i) {
        const Policy pi = random_stochastic_policy(H, S, K, eval_rng);
        record.sysid_per_policy.push_back(
            system_identification_error(raffle.model, env.mdp, pi));
        record.sysid_max = std::max(record.sysid_max,
                                    record.sysid_per_policy.back().max_error);
    }

    if (config.evaluation.replearn) {
        const SamplingDistribution q =
            config.evaluation.q_mode == EvaluationSpec::QMode::uniform
                ? uniform_sampling(H, S, K)
                : occupancy_sampling(env.mdp, Policy::uniform(H, S, K));
        record.replearn = run_replearn(raffle.model, env.model_class.phis, q,
                                       *config.evaluation.replearn, &env.mdp);
    }

    record.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    atomic_write_text(config.output.csv_path, run_record_csv(record));
    atomic_write_text(config.output.json_path, run_record_json(record).dump(2) + "\n");
    return record;
}

}  // namespace rfrl
