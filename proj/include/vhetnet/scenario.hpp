#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vhetnet/common.hpp"

namespace vhetnet {

struct AntennaGrid {
    int rows = 1;
    int cols = 1;
    int count() const { return rows * cols; }
};

// Network-level scenario description. Defaults reproduce the full-scale
// simulation setup; desk_scenario() shrinks it for fast deterministic tests.
struct ScenarioConfig {
    double area_side_m = 4000.0;
    int num_mbs = 4;
    bool has_haps = true;
    int num_ues = 16;
    double carrier_hz = 2.545e9;
    double haps_altitude_m = 20000.0;
    double mbs_height_m = 25.0;
    double ue_height_m = 1.5;
    AntennaGrid mbs_antennas{4, 4};
    AntennaGrid haps_antennas{8, 8};
    double rician_k = 10.0;
    bool rician_k_is_db = false;
    double shadow_sigma_db = 8.0;
    double noise_dbm = -100.0;
    double p_max_mbs_dbm = 43.0;
    double p_max_haps_dbm = 52.0;
    double bandwidth_hz = 1e6;
    double backhaul_bps = 20e9;
    double gamma_min = 1000.0;  // SINR floor, only active when enforcement is enabled
    double gamma_max = 1e6;     // big-M SINR ceiling for association coupling
    double element_spacing_wavelengths = 0.5;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_mbs < 0) throw Error("config: num_mbs must be nonnegative");
        if (num_ues < 1) throw Error("config: need at least one UE");
        if (num_mbs == 0 && !has_haps) throw Error("config: no base stations");
        if (area_side_m <= 0 || carrier_hz <= 0 || bandwidth_hz <= 0 || backhaul_bps <= 0)
            throw Error("config: lengths, frequencies and rates must be positive");
        if (haps_altitude_m <= 0 || mbs_height_m <= 0 || ue_height_m <= 0)
            throw Error("config: heights must be positive");
        if (mbs_antennas.count() < 1 || haps_antennas.count() < 1)
            throw Error("config: antenna grids must be nonempty");
        if (gamma_min < 0 || gamma_max <= gamma_min)
            throw Error("config: need gamma_max > gamma_min >= 0");
        if (shadow_sigma_db < 0) throw Error("config: shadow sigma must be nonnegative");
        if (rician_k < 0 && !rician_k_is_db) throw Error("config: linear K must be nonnegative");
    }

    int num_stations() const { return num_mbs + (has_haps ? 1 : 0); }
    bool station_is_haps(int s) const { return has_haps && s == num_mbs; }
    const AntennaGrid& station_antennas(int s) const {
        return station_is_haps(s) ? haps_antennas : mbs_antennas;
    }
    double station_power_watt(int s) const {
        return dbm_to_watt(station_is_haps(s) ? p_max_haps_dbm : p_max_mbs_dbm);
    }
    double noise_watt() const { return dbm_to_watt(noise_dbm); }
    double rician_k_linear() const { return rician_k_is_db ? db_to_linear(rician_k) : rician_k; }
};

inline ScenarioConfig paper_scenario() { return {}; }

inline ScenarioConfig desk_scenario() {
    ScenarioConfig cfg;
    cfg.num_mbs = 2;
    cfg.num_ues = 4;
    cfg.mbs_antennas = {2, 2};
    cfg.haps_antennas = {4, 4};
    return cfg;
}

struct Placement {
    std::vector<Eigen::Vector3d> mbs;
    Eigen::Vector3d haps = Eigen::Vector3d::Zero();  // meaningful iff has_haps
    std::vector<Eigen::Vector3d> ues;
};

// Free-space path loss (4 pi f d / c)^2, linear.
inline double fspl(double carrier_hz, double distance_m) {
    if (carrier_hz <= 0.0 || distance_m <= 0.0) throw Error("fspl: inputs must be positive");
    const double x = 4.0 * kPi * carrier_hz * distance_m / kSpeedOfLight;
    return x * x;
}

// Deterministic MBS layout over the square: a k x k grid for B = k^2, the
// grid plus a central site for B = k^2 + 1 (k >= 2), otherwise the first B
// cells of the ceil(sqrt(B)) grid in row-major order. Coordinates are
// centered on the origin.
inline std::vector<Eigen::Vector3d> mbs_grid(const ScenarioConfig& cfg) {
    const int b_count = cfg.num_mbs;
    if (b_count == 0) return {};
    if (b_count > 64) throw Error("build_placement: MBS count exceeds grid capacity");
    auto grid_points = [&](int k) {
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                pts.emplace_back(((j + 0.5) / k - 0.5) * cfg.area_side_m,
                                 ((i + 0.5) / k - 0.5) * cfg.area_side_m, cfg.mbs_height_m);
        return pts;
    };
    const int root = static_cast<int>(std::lround(std::floor(std::sqrt(static_cast<double>(b_count)))));
    if (root * root == b_count) return grid_points(root);
    if (root >= 2 && root * root + 1 == b_count) {
        auto pts = grid_points(root);
        pts.emplace_back(0.0, 0.0, cfg.mbs_height_m);
        return pts;
    }
    const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(b_count))));
    auto pts = grid_points(k);
    pts.resize(static_cast<std::size_t>(b_count));
    return pts;
}

// UE positions are drawn first so that scenarios differing only in the base
// station layout share identical user drops for a given rng state.
inline Placement build_placement(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    Placement pl;
    const double half = cfg.area_side_m / 2.0;
    pl.ues.reserve(static_cast<std::size_t>(cfg.num_ues));
    for (int u = 0; u < cfg.num_ues; ++u) {
        const double x = rng.uniform(-half, half);
        const double y = rng.uniform(-half, half);
        pl.ues.emplace_back(x, y, cfg.ue_height_m);
    }
    pl.mbs = mbs_grid(cfg);
    if (cfg.has_haps) pl.haps = Eigen::Vector3d(0.0, 0.0, cfg.haps_altitude_m);
    return pl;
}

// Uniform planar array steering vector. Element (r, c) of the grid gets phase
// 2 pi spacing (r sin(el) cos(az) + c sin(el) sin(az)); elevation is measured
// from the array normal, so boresight yields the all-ones vector.
inline Eigen::VectorXcd upa_steering(const AntennaGrid& grid, double spacing_wavelengths,
                                     double azimuth, double elevation) {
    Eigen::VectorXcd v(grid.count());
    const double se = std::sin(elevation);
    const double kx = 2.0 * kPi * spacing_wavelengths * se * std::cos(azimuth);
    const double ky = 2.0 * kPi * spacing_wavelengths * se * std::sin(azimuth);
    for (int r = 0; r < grid.rows; ++r)
        for (int c = 0; c < grid.cols; ++c)
            v[r * grid.cols + c] = std::polar(1.0, kx * r + ky * c);
    return v;
}

// HAPS-to-UE link: 3D Rician mixture of a LoS steering component and an
// i.i.d. complex-normal scatter component, scaled by free-space path loss.
// Consumes exactly haps_antennas.count() complex normals from rng.
inline Eigen::VectorXcd sample_haps_channel(const ScenarioConfig& cfg, const Placement& pl, int u,
                                            Rng& rng) {
    if (!cfg.has_haps) throw Error("sample_haps_channel: scenario has no HAPS");
    const Eigen::Vector3d d = pl.ues[static_cast<std::size_t>(u)] - pl.haps;
    const double dist = d.norm();
    const double pl_lin = fspl(cfg.carrier_hz, dist);
    // array normal points straight down
    const double elevation = std::atan2(d.head<2>().norm(), -d.z());
    const double azimuth = std::atan2(d.y(), d.x());
    const Eigen::VectorXcd los =
        upa_steering(cfg.haps_antennas, cfg.element_spacing_wavelengths, azimuth, elevation);
    const int n = cfg.haps_antennas.count();
    Eigen::VectorXcd scatter(n);
    for (int r = 0; r < n; ++r) scatter[r] = rng.cnormal();
    const double k = cfg.rician_k_linear();
    return (std::sqrt(1.0 / (1.0 + k)) * scatter + std::sqrt(k / (1.0 + k)) * los) /
           std::sqrt(pl_lin);
}

// MBS-to-UE link: Rayleigh entries with one log-normal shadowing gain shared
// across the link's elements. Consumes one normal (always, even when the
// shadowing deviation is zero) followed by mbs_antennas.count() complex
// normals, in that order.
inline Eigen::VectorXcd sample_mbs_channel(const ScenarioConfig& cfg, const Placement& pl, int b,
                                           int u, Rng& rng) {
    if (b < 0 || b >= cfg.num_mbs) throw Error("sample_mbs_channel: bad station index");
    const double dist =
        (pl.ues[static_cast<std::size_t>(u)] - pl.mbs[static_cast<std::size_t>(b)]).norm();
    const double pl_lin = fspl(cfg.carrier_hz, dist);
    const double shadow_db = rng.normal() * cfg.shadow_sigma_db;
    const double gain = std::pow(10.0, shadow_db / 10.0) / std::sqrt(pl_lin);
    const int n = cfg.mbs_antennas.count();
    Eigen::VectorXcd h(n);
    for (int r = 0; r < n; ++r) h[r] = rng.cnormal() * gain;
    return h;
}

// One channel matrix per station; the HAPS matrix, when present, is last.
struct ChannelSet {
    std::vector<Eigen::MatrixXcd> mbs;  // each N_b x U
    std::optional<Eigen::MatrixXcd> haps;

    int num_stations() const { return static_cast<int>(mbs.size()) + (haps ? 1 : 0); }
    const Eigen::MatrixXcd& station(int s) const {
        if (s < static_cast<int>(mbs.size())) return mbs[static_cast<std::size_t>(s)];
        if (haps && s == static_cast<int>(mbs.size())) return *haps;
        throw Error("ChannelSet: bad station index");
    }
};

// Draw order: station by station (MBSs first, HAPS last), users in order
// within a station.
inline ChannelSet sample_channel_set(const ScenarioConfig& cfg, const Placement& pl, Rng& rng) {
    ChannelSet cs;
    cs.mbs.reserve(static_cast<std::size_t>(cfg.num_mbs));
    for (int b = 0; b < cfg.num_mbs; ++b) {
        Eigen::MatrixXcd h(cfg.mbs_antennas.count(), cfg.num_ues);
        for (int u = 0; u < cfg.num_ues; ++u) h.col(u) = sample_mbs_channel(cfg, pl, b, u, rng);
        cs.mbs.push_back(std::move(h));
    }
    if (cfg.has_haps) {
        Eigen::MatrixXcd h(cfg.haps_antennas.count(), cfg.num_ues);
        for (int u = 0; u < cfg.num_ues; ++u) h.col(u) = sample_haps_channel(cfg, pl, u, rng);
        cs.haps = std::move(h);
    }
    return cs;
}

}  // namespace vhetnet
