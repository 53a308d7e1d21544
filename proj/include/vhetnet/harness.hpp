#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vhetnet/jubd.hpp"

namespace vhetnet::harness {

enum class Network { VHetNet, Terrestrial };

inline const char* to_string(Network n) {
    return n == Network::VHetNet ? "vhetnet" : "terrestrial";
}

inline Network network_from_string(const std::string& s) {
    if (s == "vhetnet") return Network::VHetNet;
    if (s == "terrestrial") return Network::Terrestrial;
    throw Error("unknown network (use vhetnet|terrestrial): " + s);
}

inline jubd::Objective objective_from_string(const std::string& s) {
    if (s == "wsr") return jubd::Objective::WeightedSumRate;
    if (s == "pf") return jubd::Objective::ProportionalFairness;
    if (s == "mmf") return jubd::Objective::MaxMinFairness;
    throw Error("unknown objective (use wsr|pf|mmf): " + s);
}

inline mip::AssociationMode assoc_mode_from_string(const std::string& s) {
    if (s == "exhaustive") return mip::AssociationMode::Exhaustive;
    if (s == "bnb") return mip::AssociationMode::BranchAndBound;
    if (s == "heuristic") return mip::AssociationMode::HeuristicFixed;
    throw Error("unknown association mode (use exhaustive|bnb|heuristic): " + s);
}

// One Monte-Carlo campaign. `scenario` always describes the vHetNet variant;
// the terrestrial baseline is derived from it by swapping the HAPS for one
// extra MBS, so both networks see identical UE drops for a given seed.
struct ExperimentConfig {
    ScenarioConfig scenario = paper_scenario();
    std::vector<jubd::Objective> objectives{jubd::Objective::WeightedSumRate,
                                            jubd::Objective::ProportionalFairness,
                                            jubd::Objective::MaxMinFairness};
    std::vector<Network> networks{Network::VHetNet, Network::Terrestrial};
    int drops = 1;
    jubd::SCAOptions sca;
    std::filesystem::path output_dir = "out";

    void validate() const {
        scenario.validate();
        if (!scenario.has_haps)
            throw Error("experiment: scenario must describe the vHetNet variant (has_haps)");
        if (drops < 1) throw Error("experiment: drops must be >= 1");
        if (objectives.empty()) throw Error("experiment: need at least one objective");
        if (networks.empty()) throw Error("experiment: need at least one network");
        for (std::size_t i = 0; i < objectives.size(); ++i)
            for (std::size_t j = i + 1; j < objectives.size(); ++j)
                if (objectives[i] == objectives[j])
                    throw Error("experiment: duplicate objective");
        for (std::size_t i = 0; i < networks.size(); ++i)
            for (std::size_t j = i + 1; j < networks.size(); ++j)
                if (networks[i] == networks[j]) throw Error("experiment: duplicate network");
    }
};

inline ScenarioConfig scenario_for(const ScenarioConfig& base, Network n) {
    ScenarioConfig cfg = base;
    if (n == Network::Terrestrial) {
        cfg.has_haps = false;
        cfg.num_mbs += 1;
    }
    return cfg;
}

struct DropResult {
    int drop = 0;
    std::uint64_t seed = 0;
    jubd::Objective objective = jubd::Objective::WeightedSumRate;
    Network network = Network::VHetNet;
    SEReport se;
    int iterations = 0;
    bool converged = false;
    double wall_ms = 0.0;
    // constraint margins of the reported beams, kept so downstream checks need
    // not re-solve
    jubd::FeasibilityReport feasibility;
    double alpha_gap = 0.0;  // min over UEs of achieved SINR minus its bound
};

struct ExperimentResult {
    std::vector<DropResult> results;    // drop-major, config order within a drop
    std::vector<std::string> failures;  // skipped runs, one message each
    std::vector<std::filesystem::path> files;
};

namespace detail {

// shortest round-trip decimal form, so reruns are byte-identical
inline std::string csv_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) throw Error("csv: value formatting failed");
    return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("harness: cannot write " + path.string());
    return out;
}

inline const char* kCsvHeader = "drop,seed,objective,network,ue,metric,value\n";

inline void row_prefix(std::ostream& out, const DropResult& r) {
    out << r.drop << ',' << r.seed << ',' << to_string(r.objective) << ','
        << to_string(r.network) << ',';
}

inline void write_per_ue_csv(const std::filesystem::path& path,
                             const std::vector<DropResult>& results) {
    std::ofstream out = open_out(path);
    out << kCsvHeader;
    for (const DropResult& r : results)
        for (std::size_t u = 0; u < r.se.per_ue_se.size(); ++u) {
            row_prefix(out, r);
            out << u << ",per_ue_se," << csv_double(r.se.per_ue_se[u]) << '\n';
        }
}

template <typename Extract>
void write_scalar_csv(const std::filesystem::path& path, const std::vector<DropResult>& results,
                      const char* metric, Extract extract) {
    std::ofstream out = open_out(path);
    out << kCsvHeader;
    for (const DropResult& r : results) {
        row_prefix(out, r);
        out << ',' << metric << ',' << csv_double(extract(r)) << '\n';
    }
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v, double mu) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline void write_summary(const std::filesystem::path& path, const ExperimentConfig& config,
                          const ExperimentResult& res) {
    std::ofstream out = open_out(path);
    out << "accepted runs: " << res.results.size() << "\n";
    out << "excluded runs: " << res.failures.size() << "\n\n";
    out << std::left << std::setw(12) << "network" << std::setw(10) << "objective" << std::setw(11)
        << "metric" << std::right << std::setw(6) << "n" << std::setw(13) << "mean"
        << std::setw(13) << "std" << std::setw(13) << "p5" << "\n";
    out << std::fixed << std::setprecision(6);
    for (Network network : config.networks)
        for (jubd::Objective objective : config.objectives) {
            std::vector<double> per_ue, sum, min;
            for (const DropResult& r : res.results) {
                if (r.network != network || r.objective != objective) continue;
                per_ue.insert(per_ue.end(), r.se.per_ue_se.begin(), r.se.per_ue_se.end());
                sum.push_back(r.se.sum_se);
                min.push_back(r.se.min_se);
            }
            const std::array<std::pair<const char*, const std::vector<double>*>, 3> metrics{
                {{"per_ue_se", &per_ue}, {"sum_se", &sum}, {"min_se", &min}}};
            for (const auto& [name, samples] : metrics) {
                const double mu = mean(*samples);
                const double p5 = samples->empty() ? 0.0 : empirical_cdf(*samples).percentile(0.05);
                out << std::left << std::setw(12) << to_string(network) << std::setw(10)
                    << to_string(objective) << std::setw(11) << name << std::right << std::setw(6)
                    << samples->size() << std::setw(13) << mu << std::setw(13)
                    << sample_std(*samples, mu) << std::setw(13) << p5 << "\n";
            }
        }
}

}  // namespace detail

// Runs the campaign serially (each drop owns decorrelated RNG streams, so the
// schedule has no effect on the outputs) and writes per_ue_se.csv, sum_se.csv,
// min_se.csv and summary.txt into config.output_dir. Placement and channels
// are generated once per (drop, network) and shared by all objectives, so
// objective comparisons are paired; UE positions are drawn before station
// layout, so the two networks of one drop serve the same users. Failed runs
// are reported on stderr and excluded from the outputs.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec)
        throw Error("harness: cannot create output dir " + config.output_dir.string() + ": " +
                    ec.message());

    ExperimentResult out;
    for (int drop = 0; drop < config.drops; ++drop) {
        const std::uint64_t drop_seed =
            mix_seed(config.scenario.seed, static_cast<std::uint64_t>(drop));
        for (Network network : config.networks) {
            const ScenarioConfig cfg = scenario_for(config.scenario, network);
            Rng place_rng(mix_seed(drop_seed, 0));
            Rng chan_rng(mix_seed(drop_seed, 1));
            const Placement pl = build_placement(cfg, place_rng);
            const ChannelSet channels = sample_channel_set(cfg, pl, chan_rng);
            for (jubd::Objective objective : config.objectives) {
                const auto t0 = std::chrono::steady_clock::now();
                std::string failure;
                jubd::SolutionReport report;
                try {
                    report = jubd::sca_solve({objective, {}}, channels, cfg, config.sca);
                    if (report.status != jubd::SCAStatus::Converged &&
                        report.status != jubd::SCAStatus::IterationLimit)
                        failure = to_string(report.status);
                } catch (const std::exception& e) {
                    failure = e.what();
                }
                const double ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count();
                if (!failure.empty()) {
                    std::ostringstream msg;
                    msg << "drop " << drop << ' ' << to_string(network) << ' '
                        << to_string(objective) << ": " << failure;
                    std::cerr << "harness: excluding " << msg.str() << "\n";
                    out.failures.push_back(msg.str());
                    continue;
                }
                DropResult r;
                r.drop = drop;
                r.seed = drop_seed;
                r.objective = objective;
                r.network = network;
                r.se = report.se;
                r.iterations = report.iterations;
                r.converged = report.status == jubd::SCAStatus::Converged;
                r.wall_ms = ms;
                r.feasibility = report.feasibility;
                r.alpha_gap = report.alpha_gap_trace.empty() ? 0.0 : report.alpha_gap_trace.back();
                out.results.push_back(std::move(r));
            }
        }
    }

    const std::filesystem::path per_ue = config.output_dir / "per_ue_se.csv";
    const std::filesystem::path sum = config.output_dir / "sum_se.csv";
    const std::filesystem::path min = config.output_dir / "min_se.csv";
    const std::filesystem::path summary = config.output_dir / "summary.txt";
    detail::write_per_ue_csv(per_ue, out.results);
    detail::write_scalar_csv(sum, out.results, "sum_se",
                             [](const DropResult& r) { return r.se.sum_se; });
    detail::write_scalar_csv(min, out.results, "min_se",
                             [](const DropResult& r) { return r.se.min_se; });
    detail::write_summary(summary, config, out);
    out.files = {per_ue, sum, min, summary};
    return out;
}

// vHetNet minus terrestrial, matched per seed.
struct NetworkDelta {
    int pairs = 0;
    double mean_min_se = 0.0;
    double p5_min_se = 0.0;  // 5th percentile of the paired min-SE deltas
    double mean_sum_se = 0.0;
    double p5_sum_se = 0.0;
};

inline std::map<jubd::Objective, NetworkDelta> compare_networks(
    const std::vector<DropResult>& results) {
    struct Pair {
        std::optional<SEReport> net[2];
    };
    std::map<jubd::Objective, std::map<std::uint64_t, Pair>> table;
    for (const DropResult& r : results) {
        auto& slot = table[r.objective][r.seed].net[r.network == Network::VHetNet ? 0 : 1];
        if (slot)
            throw Error("compare_networks: duplicate result for one (objective, seed, network)");
        slot = r.se;
    }
    if (table.empty()) throw Error("compare_networks: no results");
    std::map<jubd::Objective, NetworkDelta> out;
    for (const auto& [objective, by_seed] : table) {
        std::vector<double> dmin, dsum;
        for (const auto& [seed, pair] : by_seed) {
            if (!pair.net[0] || !pair.net[1])
                throw Error("compare_networks: seed sets differ between networks (objective " +
                            std::string(to_string(objective)) + ", seed " + std::to_string(seed) +
                            ")");
            dmin.push_back(pair.net[0]->min_se - pair.net[1]->min_se);
            dsum.push_back(pair.net[0]->sum_se - pair.net[1]->sum_se);
        }
        NetworkDelta d;
        d.pairs = static_cast<int>(dmin.size());
        d.mean_min_se = detail::mean(dmin);
        d.mean_sum_se = detail::mean(dsum);
        d.p5_min_se = empirical_cdf(dmin).percentile(0.05);
        d.p5_sum_se = empirical_cdf(dsum).percentile(0.05);
        out[objective] = d;
    }
    return out;
}

}  // namespace vhetnet::harness
