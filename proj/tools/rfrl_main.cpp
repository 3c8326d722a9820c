// Command-line front end: experiment runner, benchmark-instance generator,
// standalone representation learning, and the property-verification suites.
//
// Exit codes: 0 success, 2 exploration budget exhausted, 3 configuration
// error, 4 verification failure.

#include "rfrl/harness.hpp"
#include "rfrl/verify.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int cmd_run(const std::string& config_path, const rfrl::json& overrides) {
    rfrl::json doc = rfrl::json::parse(rfrl::read_text(config_path));
    for (const auto& [key, value] : overrides.items()) doc["algorithm"][key] = value;

    const rfrl::ExperimentConfig config = rfrl::config_from_json(doc);
    const rfrl::RunRecord record = rfrl::run(config);

    std::cout << (record.terminated ? "terminated" : "budget-exhausted")
              << " n=" << record.n_epsilon
              << " trajectories=" << record.trajectory_count << "\n";
    double worst_gap = 0.0;
    for (double g : record.suboptimality_gaps) worst_gap = std::max(worst_gap, g);
    std::cout << "max suboptimality gap: " << worst_gap << "\n";
    std::cout << "max system-identification error: " << record.sysid_max << "\n";
    if (record.replearn) {
        std::cout << "divergence vs truth per step:";
        for (double v : record.replearn->diagnostics.divergence_vs_truth)
            std::cout << " " << v;
        std::cout << "\n";
    }
    std::cout << "wrote " << config.output.csv_path << " and "
              << config.output.json_path << "\n";
    return record.exit_code;
}

int cmd_hard_instance(const rfrl::HardInstanceParams& params,
                      const std::vector<int>& index, const std::string& out_path) {
    rfrl::json doc;
    if (!index.empty()) {
        const rfrl::HardInstance m =
            rfrl::build_perturbed(params, index[0], index[1], index[2]);
        doc = rfrl::json{{"mdp", rfrl::to_json(m.mdp)},
                         {"reward", rfrl::to_json(m.reward)},
                         {"perturbation", *m.perturbation}};
    } else {
        const rfrl::HardInstance ref = rfrl::build_reference(params);
        rfrl::json family = rfrl::json::array();
        for (const auto& idx : rfrl::enumerate_family(params)) family.push_back(idx);
        rfrl::json labels = rfrl::json::array();
        for (int s = 0; s < params.state_count(); ++s)
            labels.push_back(rfrl::state_label(params, s));
        doc = rfrl::json{{"params",
                          {{"horizon", params.horizon},
                           {"depth", params.depth},
                           {"actions", params.action_count},
                           {"h_bar", params.effective_waiting_horizon()},
                           {"epsilon0", params.epsilon0}}},
                         {"state_labels", labels},
                         {"reference", {{"mdp", rfrl::to_json(ref.mdp)},
                                        {"reward", rfrl::to_json(ref.reward)}}},
                         {"family", family}};
    }
    rfrl::atomic_write_text(out_path, doc.dump(2) + "\n");
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_replearn(const std::string& config_path) {
    const rfrl::ExperimentConfig config = rfrl::load_config(config_path);
    const rfrl::Environment env = rfrl::build_environment(config.environment);

    rfrl::RepLearnConfig rl =
        config.evaluation.replearn.value_or(rfrl::RepLearnConfig{});
    const rfrl::SamplingDistribution q =
        config.evaluation.q_mode == rfrl::EvaluationSpec::QMode::uniform
            ? rfrl::uniform_sampling(env.mdp.horizon, env.mdp.state_count,
                                     env.mdp.action_count)
            : rfrl::occupancy_sampling(env.mdp,
                                       rfrl::Policy::uniform(env.mdp.horizon,
                                                             env.mdp.state_count,
                                                             env.mdp.action_count));
    // Standalone mode regresses against the exact environment kernel, the
    // zero-estimation-error limit of the full pipeline.
    const rfrl::RepLearnRun result =
        rfrl::run_replearn(env.mdp, env.model_class.phis, q, rl, &env.mdp);

    rfrl::json steps = rfrl::json::array();
    for (const rfrl::RepLearnStep& s : result.fit.per_step)
        steps.push_back(rfrl::json{{"phi_index", s.phi_index},
                                   {"loss", s.loss},
                                   {"ambiguous", s.ambiguous}});
    const rfrl::json doc{{"per_step", steps},
                         {"sigma_d_sq", result.diagnostics.sigma_d_sq},
                         {"diversity_ok", result.diagnostics.diversity_ok},
                         {"eta_min", result.diagnostics.eta_min},
                         {"c_b", result.diagnostics.c_b},
                         {"c_min", result.diagnostics.c_min},
                         {"divergence_vs_truth",
                          result.diagnostics.divergence_vs_truth}};
    rfrl::atomic_write_text(config.output.json_path, doc.dump(2) + "\n");
    std::cout << "wrote " << config.output.json_path << "\n";
    for (double v : result.diagnostics.divergence_vs_truth)
        std::cout << "divergence " << v << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reward-free exploration laboratory for low-rank episodic MDPs"};
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "execute an experiment from a config file");
    std::string run_config;
    run_cmd->add_option("--config", run_config, "JSON config path")->required();
    double epsilon = 0, delta = 0, beta3 = 0, bonus_scale = 0;
    int max_iter = 0;
    std::uint64_t seed = 0;
    auto* opt_eps = run_cmd->add_option("--epsilon", epsilon, "override target accuracy");
    auto* opt_delta = run_cmd->add_option("--delta", delta, "override failure probability");
    auto* opt_beta3 = run_cmd->add_option("--beta3", beta3, "override the regularizer coefficient");
    auto* opt_scale = run_cmd->add_option("--bonus-scale", bonus_scale,
                                          "override the bonus multiplier");
    auto* opt_iter = run_cmd->add_option("--max-iter", max_iter, "override the iteration budget");
    auto* opt_seed = run_cmd->add_option("--seed", seed, "override the exploration seed");

    // hard-instance
    auto* hard_cmd = app.add_subcommand("hard-instance",
                                        "emit a benchmark family member or manifest");
    rfrl::HardInstanceParams params;
    std::vector<int> index;
    std::string out_path = "hard_instance.json";
    hard_cmd->add_option("--depth", params.depth, "tree depth");
    hard_cmd->add_option("--horizon", params.horizon, "episode horizon");
    hard_cmd->add_option("--actions", params.action_count, "action count");
    hard_cmd->add_option("--h-bar", params.waiting_horizon,
                         "waiting horizon (0 = floor(H/3))");
    hard_cmd->add_option("--epsilon0", params.epsilon0, "leaf perturbation");
    hard_cmd->add_option("--index", index, "perturbation index h,l,a")
        ->delimiter(',')
        ->expected(3);
    hard_cmd->add_option("--out", out_path, "output path");

    // replearn
    auto* rep_cmd = app.add_subcommand(
        "replearn", "representation learning against the exact environment kernel");
    std::string rep_config;
    rep_cmd->add_option("--config", rep_config, "JSON config path")->required();

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "run a property-verification suite");
    std::string suite;
    verify_cmd
        ->add_option("suite", suite,
                     "one of: all, mdp-core, model-class, raffle, replearn, "
                     "hard-instances, simulation, elliptical, harness")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            rfrl::json overrides;
            if (*opt_eps) overrides["epsilon"] = epsilon;
            if (*opt_delta) overrides["delta"] = delta;
            if (*opt_beta3) overrides["beta3"] = beta3;
            if (*opt_scale) overrides["bonus_scale"] = bonus_scale;
            if (*opt_iter) overrides["max_iterations"] = max_iter;
            if (*opt_seed) overrides["seed"] = seed;
            return cmd_run(run_config, overrides);
        }
        if (hard_cmd->parsed()) return cmd_hard_instance(params, index, out_path);
        if (rep_cmd->parsed()) return cmd_replearn(rep_config);
        if (verify_cmd->parsed())
            return rfrl::run_verify(suite, std::cout) ? 0 : 4;
    } catch (const rfrl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
