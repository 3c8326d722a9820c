#pragma once

#include "rfrl/hard_instance.hpp"
#include "rfrl/raffle.hpp"
#include "rfrl/replearn.hpp"
#include "rfrl/serialize.hpp"

#include <optional>
#include <string>

namespace rfrl {

/// Thrown for malformed configuration files or impossible generator settings;
/// the CLI maps it to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntheticEnvSpec {
    Eigen::Index d = 2;
    int S = 4;
    int K = 3;
    int H = 3;
    int n_phi_decoys = 3;
    int n_mu_decoys = 2;
    std::uint64_t seed = 1;
};

struct HardInstanceEnvSpec {
    HardInstanceParams params;
    std::optional<std::array<int, 3>> perturbation;
    int n_family_decoys = 1;  // extra family members mixed into the class
};

struct FileEnvSpec {
    std::string mdp_path;
    std::string model_class_path;
};

struct EnvironmentSpec {
    enum class Kind { synthetic, hard_instance, file } kind = Kind::synthetic;
    SyntheticEnvSpec synthetic;
    HardInstanceEnvSpec hard;
    FileEnvSpec file;
};

struct EvaluationSpec {
    int n_test_rewards = 10;
    int n_test_policies = 10;
    std::uint64_t seed = 99;
    std::optional<RepLearnConfig> replearn;
    enum class QMode { uniform, probe_occupancy } q_mode = QMode::uniform;
};

struct OutputSpec {
    std::string csv_path = "run.csv";
    std::string json_path = "run.json";
};

struct ExperimentConfig {
    EnvironmentSpec environment;
    RaffleConfig algorithm;
    EvaluationSpec evaluation;
    OutputSpec output;
};

ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Environment plus the realizable candidate class whose first (phi, mu) pair
/// is the truth.
struct Environment {
    EpisodicMdp mdp;
    ModelClass model_class;
};

/// Random factorized environment: d anchor next-state distributions per step
/// and per-(s,a) simplex mixing weights, so every candidate pairing stays a
/// valid kernel. Decoys are perturbed-and-renormalized copies, each inducing
/// a kernel at least 0.02 away from the truth in max-row total variation.
Environment make_synthetic_env(const SyntheticEnvSpec& spec);

Environment make_hard_instance_env(const HardInstanceEnvSpec& spec);

Environment build_environment(const EnvironmentSpec& spec);

struct RunRecord {
    json config_echo;
    std::vector<IterationRow> iterations;
    bool terminated = false;
    int n_epsilon = 0;
    long trajectory_count = 0;
    std::vector<double> suboptimality_gaps;
    std::vector<SystemIdError> sysid_per_policy;
    double sysid_max = 0.0;
    std::optional<RepLearnRun> replearn;
    double wall_clock_sec = 0.0;
    int exit_code = 0;  // 0 normal, 2 iteration budget exhausted
};

std::string run_record_csv(const RunRecord& record);
json run_record_json(const RunRecord& record);

/// Full experiment: exploration, planning metrics against exact ground truth,
/// optional representation learning, and atomic CSV/JSON persistence.
RunRecord run(const ExperimentConfig& config);

}  // namespace rfrl
