#include "rfrl/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rfrl {

using detail::require;

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const json& j) {
    require(j.is_array() && !j.empty() && j[0].is_array(), "expected a nested array");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        require(static_cast<Eigen::Index>(j[i].size()) == cols, "ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

namespace {

json step_tables_to_json(const std::vector<Mat>& tables) {
    json out = json::array();
    for (const Mat& t : tables) out.push_back(matrix_to_json(t));
    return out;
}

std::vector<Mat> step_tables_from_json(const json& j) {
    std::vector<Mat> out;
    for (const json& t : j) out.push_back(matrix_from_json(t));
    return out;
}

}  // namespace

json to_json(const EpisodicMdp& mdp) {
    json j{{"H", mdp.horizon},
           {"S", mdp.state_count},
           {"K", mdp.action_count},
           {"initial_state", mdp.initial_state},
           {"kernels", step_tables_to_json(mdp.kernels)}};
    if (mdp.factorization) {
        j["d"] = mdp.factorization->dim;
        j["phi"] = step_tables_to_json(mdp.factorization->phi);
        j["mu"] = step_tables_to_json(mdp.factorization->mu);
    }
    return j;
}

EpisodicMdp mdp_from_json(const json& j) {
    EpisodicMdp mdp;
    mdp.horizon = j.at("H").get<int>();
    mdp.state_count = j.at("S").get<int>();
    mdp.action_count = j.at("K").get<int>();
    mdp.initial_state = j.value("initial_state", 0);
    mdp.kernels = step_tables_from_json(j.at("kernels"));
    if (j.contains("phi")) {
        LowRankFactorization f;
        f.dim = j.at("d").get<Eigen::Index>();
        f.phi = step_tables_from_json(j.at("phi"));
        f.mu = step_tables_from_json(j.at("mu"));
        mdp.factorization = std::move(f);
    }
    mdp.validate();
    return mdp;
}

json to_json(const Policy& policy) { return json{{"pi", step_tables_to_json(policy.pi)}}; }

Policy policy_from_json(const json& j) {
    Policy p;
    p.pi = step_tables_from_json(j.at("pi"));
    return p;
}

json to_json(const RewardFunction& reward) {
    return json{{"r", step_tables_to_json(reward.r)}};
}

RewardFunction reward_from_json(const json& j) {
    RewardFunction r;
    r.r = step_tables_from_json(j.at("r"));
    return r;
}

json to_json(const ModelClass& mc) {
    json phis = json::array();
    for (const StepTable& cand : mc.phis) phis.push_back(step_tables_to_json(cand));
    json mus = json::array();
    for (const StepTable& cand : mc.mus) mus.push_back(step_tables_to_json(cand));
    return json{{"H", mc.horizon}, {"S", mc.state_count}, {"K", mc.action_count},
                {"d", mc.dim},     {"phis", phis},        {"mus", mus}};
}

ModelClass model_class_from_json(const json& j) {
    ModelClass mc;
    mc.horizon = j.at("H").get<int>();
    mc.state_count = j.at("S").get<int>();
    mc.action_count = j.at("K").get<int>();
    mc.dim = j.at("d").get<Eigen::Index>();
    for (const json& cand : j.at("phis")) mc.phis.push_back(step_tables_from_json(cand));
    for (const json& cand : j.at("mus")) mc.mus.push_back(step_tables_from_json(cand));
    mc.screen();
    return mc;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rfrl
