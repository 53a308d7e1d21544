#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vhetnet/harness.hpp"

namespace vhetnet::harness {

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const char* ctx) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw Error(std::string("config: unknown key ") + ctx + "." + it.key());
    }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

inline void maybe_grid(const nlohmann::json& j, const char* key, AntennaGrid& into) {
    if (!j.contains(key)) return;
    const auto a = j.at(key).get<std::array<int, 2>>();
    into = {a[0], a[1]};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"scenario", "objectives", "networks", "drops", "sca", "output_dir"},
                       "");
    ExperimentConfig cfg;
    if (j.contains("scenario")) {
        const nlohmann::json& s = j.at("scenario");
        detail::check_keys(s,
                           {"area_side_m", "num_mbs", "has_haps", "num_ues", "carrier_hz",
                            "haps_altitude_m", "mbs_height_m", "ue_height_m", "mbs_antennas",
                            "haps_antennas", "rician_k", "rician_k_is_db", "shadow_sigma_db",
                            "noise_dbm", "p_max_mbs_dbm", "p_max_haps_dbm", "bandwidth_hz",
                            "backhaul_bps", "gamma_min", "gamma_max",
                            "element_spacing_wavelengths", "seed"},
                           "scenario");
        ScenarioConfig& c = cfg.scenario;
        detail::maybe(s, "area_side_m", c.area_side_m);
        detail::maybe(s, "num_mbs", c.num_mbs);
        detail::maybe(s, "has_haps", c.has_haps);
        detail::maybe(s, "num_ues", c.num_ues);
        detail::maybe(s, "carrier_hz", c.carrier_hz);
        detail::maybe(s, "haps_altitude_m", c.haps_altitude_m);
        detail::maybe(s, "mbs_height_m", c.mbs_height_m);
        detail::maybe(s, "ue_height_m", c.ue_height_m);
        detail::maybe_grid(s, "mbs_antennas", c.mbs_antennas);
        detail::maybe_grid(s, "haps_antennas", c.haps_antennas);
        detail::maybe(s, "rician_k", c.rician_k);
        detail::maybe(s, "rician_k_is_db", c.rician_k_is_db);
        detail::maybe(s, "shadow_sigma_db", c.shadow_sigma_db);
        detail::maybe(s, "noise_dbm", c.noise_dbm);
        detail::maybe(s, "p_max_mbs_dbm", c.p_max_mbs_dbm);
        detail::maybe(s, "p_max_haps_dbm", c.p_max_haps_dbm);
        detail::maybe(s, "bandwidth_hz", c.bandwidth_hz);
        detail::maybe(s, "backhaul_bps", c.backhaul_bps);
        detail::maybe(s, "gamma_min", c.gamma_min);
        detail::maybe(s, "gamma_max", c.gamma_max);
        detail::maybe(s, "element_spacing_wavelengths", c.element_spacing_wavelengths);
        detail::maybe(s, "seed", c.seed);
    }
    if (j.contains("objectives")) {
        cfg.objectives.clear();
        for (const auto& o : j.at("objectives"))
            cfg.objectives.push_back(objective_from_string(o.get<std::string>()));
    }
    if (j.contains("networks")) {
        cfg.networks.clear();
        for (const auto& n : j.at("networks"))
            cfg.networks.push_back(network_from_string(n.get<std::string>()));
    }
    detail::maybe(j, "drops", cfg.drops);
    if (j.contains("sca")) {
        const nlohmann::json& s = j.at("sca");
        detail::check_keys(s,
                           {"epsilon", "max_iter", "assoc_mode", "refreeze_after",
                            "enforce_gamma_min", "m_exp"},
                           "sca");
        detail::maybe(s, "epsilon", cfg.sca.epsilon);
        detail::maybe(s, "max_iter", cfg.sca.max_iter);
        if (s.contains("assoc_mode"))
            cfg.sca.association_mode = assoc_mode_from_string(s.at("assoc_mode").get<std::string>());
        detail::maybe(s, "refreeze_after", cfg.sca.refreeze_association_after_iter);
        detail::maybe(s, "enforce_gamma_min", cfg.sca.enforce_gamma_min);
        detail::maybe(s, "m_exp", cfg.sca.m_exp);
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("config: " + path.string() + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error("config: " + path.string() + ": " + e.what());
    }
}

struct CliOutcome {
    std::optional<ExperimentConfig> config;  // empty: print message, exit with exit_code
    int exit_code = 0;
    std::string message;
};

// Config-file values load first (via --config), then explicit flags override
// them. Unknown flags or bad enum values yield a usage message and a nonzero
// exit code through the returned outcome.
inline CliOutcome parse_cli(int argc, const char* const* argv) {
    ExperimentConfig base;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc)
            base = load_config(argv[i + 1]);
        else if (a.rfind("--config=", 0) == 0)
            base = load_config(a.substr(9));
    }

    CLI::App app{"joint association and beamforming Monte-Carlo runner"};
    std::string config_file;
    int drops = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> objectives, networks;
    std::string assoc_mode, out_dir;
    app.add_option("--config", config_file, "JSON configuration file");
    CLI::Option* drops_opt = app.add_option("--drops", drops, "Monte-Carlo drops");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "base RNG seed");
    CLI::Option* obj_opt = app.add_option("--objective", objectives, "objective (repeatable)")
                               ->check(CLI::IsMember({"wsr", "pf", "mmf"}));
    CLI::Option* net_opt = app.add_option("--network", networks, "network (repeatable)")
                               ->check(CLI::IsMember({"vhetnet", "terrestrial"}));
    CLI::Option* assoc_opt = app.add_option("--assoc-mode", assoc_mode, "association handling")
                                 ->check(CLI::IsMember({"exhaustive", "bnb", "heuristic"}));
    CLI::Option* out_opt = app.add_option("--out", out_dir, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        const int code = app.exit(e, os, os);
        return {std::nullopt, code, os.str()};
    }
    if (drops_opt->count()) base.drops = drops;
    if (seed_opt->count()) base.scenario.seed = seed;
    if (obj_opt->count()) {
        base.objectives.clear();
        for (const std::string& o : objectives) base.objectives.push_back(objective_from_string(o));
    }
    if (net_opt->count()) {
        base.networks.clear();
        for (const std::string& n : networks) base.networks.push_back(network_from_string(n));
    }
    if (assoc_opt->count()) base.sca.association_mode = assoc_mode_from_string(assoc_mode);
    if (out_opt->count()) base.output_dir = out_dir;
    return {std::move(base), 0, ""};
}

}  // namespace vhetnet::harness
