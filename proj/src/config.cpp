#include "rstrack/config.hpp"

#include <fstream>
#include <functional>
#include <stdexcept>

namespace rstrack {

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: malformed line " + std::to_string(lineno) + " in " +
                                     path);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string mode_name(EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::off: return "off";
        case EstimatorMode::analytic: return "analytic";
        case EstimatorMode::learned: return "learned";
        case EstimatorMode::fused: return "fused";
    }
    return "analytic";
}

EstimatorMode mode_from_name(const std::string& name) {
    if (name == "off") return EstimatorMode::off;
    if (name == "analytic") return EstimatorMode::analytic;
    if (name == "learned") return EstimatorMode::learned;
    if (name == "fused") return EstimatorMode::fused;
    throw std::runtime_error("config: unknown estimator mode '" + name + "'");
}

TrackerConfig tracker_config_from(const std::map<std::string, std::string>& kv) {
    TrackerConfig cfg;
    std::map<std::string, std::function<void(const std::string&)>> setters;
    auto set_int = [&](const char* key, int& field) {
        setters[key] = [&field](const std::string& v) { field = std::stoi(v); };
    };
    auto set_double = [&](const char* key, double& field) {
        setters[key] = [&field](const std::string& v) { field = std::stod(v); };
    };
    auto set_bool = [&](const char* key, bool& field) {
        setters[key] = [&field, key](const std::string& v) {
            if (v == "true" || v == "1")
                field = true;
            else if (v == "false" || v == "0")
                field = false;
            else
                throw std::runtime_error(std::string("config: bad boolean for ") + key);
        };
    };

    set_int("patch_size", cfg.patch_size);
    set_int("rsi_patch_size", cfg.rsi_patch_size);
    set_double("pad_td", cfg.pad_td);
    set_double("pad_rsi", cfg.pad_rsi);
    set_int("cell_size", cfg.cell_size);
    set_int("lp_rho", cfg.lp_rho);
    set_int("lp_theta", cfg.lp_theta);
    setters["mode"] = [&cfg](const std::string& v) { cfg.mode = mode_from_name(v); };
    set_double("max_rotation_step_deg", cfg.max_rotation_step_deg);
    set_double("max_scale_step", cfg.max_scale_step);
    set_double("kappa", cfg.kappa);
    set_int("check_period", cfg.check_period);
    set_int("energy_period", cfg.energy_period);
    set_int("history", cfg.history);
    set_double("mu", cfg.mu);
    set_int("max_steps_per_update", cfg.max_steps_per_update);
    set_int("bootstrap_frames", cfg.bootstrap_frames);
    set_double("bootstrap_alpha_cap", cfg.bootstrap_alpha_cap);
    set_int("memory_capacity", cfg.memory_capacity);
    set_int("init_train_steps", cfg.init_train_steps);
    set_double("label_sigma_factor", cfg.label_sigma_factor);
    set_int("filter_min", cfg.filter_min);
    set_int("filter_max", cfg.filter_max);
    setters["seed"] = [&cfg](const std::string& v) {
        cfg.seed = std::uint32_t(std::stoul(v));
    };
    set_bool("learn_adapters", cfg.learn_adapters);
    set_int("rsi_update_pairs", cfg.rsi_update_pairs);
    set_double("fused_rot_gate_deg", cfg.fused_rot_gate_deg);
    set_double("fused_scale_gate", cfg.fused_scale_gate);
    set_int("regressor_epochs", cfg.regressor_epochs);
    set_double("regressor_lr", cfg.regressor_lr);
    set_int("regressor_batch", cfg.regressor_batch);
    set_bool("updates_enabled", cfg.updates_enabled);
    set_bool("gating_enabled", cfg.gating_enabled);

    for (const auto& [key, value] : kv) {
        auto it = setters.find(key);
        if (it == setters.end()) throw std::runtime_error("config: unknown key '" + key + "'");
        it->second(value);
    }
    return cfg;
}

TrackerConfig load_tracker_config(const std::string& path) {
    return tracker_config_from(parse_config_file(path));
}

}  // namespace rstrack
