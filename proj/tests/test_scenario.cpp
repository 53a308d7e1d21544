#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <set>

#include "vhetnet/scenario.hpp"

using namespace vhetnet;

TEST_CASE("config validation") {
    ScenarioConfig cfg = desk_scenario();
    REQUIRE_NOTHROW(cfg.validate());
    SECTION("no users") {
        cfg.num_ues = 0;
        REQUIRE_THROWS_AS(cfg.validate(), Error);
    }
    SECTION("no stations at all") {
        cfg.num_mbs = 0;
        cfg.has_haps = false;
        REQUIRE_THROWS_AS(cfg.validate(), Error);
    }
    SECTION("gamma ordering") {
        cfg.gamma_max = cfg.gamma_min;
        REQUIRE_THROWS_AS(cfg.validate(), Error);
    }
    SECTION("nonpositive area") {
        cfg.area_side_m = 0.0;
        REQUIRE_THROWS_AS(cfg.validate(), Error);
    }
}

TEST_CASE("mbs grid layouts") {
    ScenarioConfig cfg = paper_scenario();

    SECTION("four stations sit at the quarter points") {
        cfg.num_mbs = 4;
        Rng rng(1);
        Placement pl = build_placement(cfg, rng);
        REQUIRE(pl.mbs.size() == 4);
        std::set<std::pair<double, double>> seen;
        for (const auto& p : pl.mbs) seen.insert({p.x(), p.y()});
        REQUIRE(seen.count({-1000.0, -1000.0}) == 1);
        REQUIRE(seen.count({1000.0, -1000.0}) == 1);
        REQUIRE(seen.count({-1000.0, 1000.0}) == 1);
        REQUIRE(seen.count({1000.0, 1000.0}) == 1);
    }
    SECTION("five stations add a centered site") {
        cfg.num_mbs = 5;
        cfg.has_haps = false;
        Rng rng(1);
        Placement pl = build_placement(cfg, rng);
        REQUIRE(pl.mbs.size() == 5);
        REQUIRE(pl.mbs.back().x() == 0.0);
        REQUIRE(pl.mbs.back().y() == 0.0);
    }
    SECTION("haps sits above the center") {
        Rng rng(1);
        Placement pl = build_placement(cfg, rng);
        REQUIRE(pl.haps.x() == 0.0);
        REQUIRE(pl.haps.y() == 0.0);
        REQUIRE(pl.haps.z() == 20000.0);
    }
    SECTION("grid capacity is bounded") {
        cfg.num_mbs = 100;
        Rng rng(1);
        REQUIRE_THROWS_AS(build_placement(cfg, rng), Error);
    }
}

TEST_CASE("ue placement is deterministic and in-area") {
    ScenarioConfig cfg = paper_scenario();
    Rng r1(77), r2(77);
    Placement a = build_placement(cfg, r1);
    Placement b = build_placement(cfg, r2);
    REQUIRE(a.ues.size() == 16);
    for (std::size_t u = 0; u < a.ues.size(); ++u) {
        REQUIRE(a.ues[u] == b.ues[u]);
        REQUIRE(std::abs(a.ues[u].x()) <= 2000.0);
        REQUIRE(std::abs(a.ues[u].y()) <= 2000.0);
        REQUIRE(a.ues[u].z() == cfg.ue_height_m);
    }
}

TEST_CASE("ue drops are identical across station layouts") {
    ScenarioConfig vhet = desk_scenario();
    ScenarioConfig terr = desk_scenario();
    terr.num_mbs = 3;
    terr.has_haps = false;
    Rng r1(5), r2(5);
    Placement a = build_placement(vhet, r1);
    Placement b = build_placement(terr, r2);
    for (std::size_t u = 0; u < a.ues.size(); ++u) REQUIRE(a.ues[u] == b.ues[u]);
}

TEST_CASE("free space path loss") {
    const double f = 2.545e9;
    SECTION("20 km haps link") {
        const double loss = fspl(f, 20000.0);
        REQUIRE(loss == Catch::Approx(4.55e12).epsilon(0.01));
        REQUIRE(linear_to_db(loss) == Catch::Approx(126.6).margin(0.1));
    }
    SECTION("unit-loss distance") {
        const double d = kSpeedOfLight / (4.0 * kPi * f);
        REQUIRE(fspl(f, d) == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("square law") {
        REQUIRE(fspl(f, 2.0 * 350.0) == Catch::Approx(4.0 * fspl(f, 350.0)).epsilon(1e-12));
        REQUIRE(fspl(2.0 * f, 350.0) == Catch::Approx(4.0 * fspl(f, 350.0)).epsilon(1e-12));
    }
    SECTION("monotone in distance and frequency") {
        REQUIRE(fspl(f, 100.0) < fspl(f, 101.0));
        REQUIRE(fspl(f, 100.0) < fspl(f + 1e6, 100.0));
    }
    SECTION("domain errors") {
        REQUIRE_THROWS_AS(fspl(f, 0.0), Error);
        REQUIRE_THROWS_AS(fspl(0.0, 10.0), Error);
        REQUIRE_THROWS_AS(fspl(f, -1.0), Error);
    }
}

TEST_CASE("upa steering vector") {
    SECTION("boresight gives all ones") {
        Eigen::VectorXcd v = upa_steering({4, 4}, 0.5, 0.3, 0.0);
        REQUIRE(v.size() == 16);
        for (int i = 0; i < v.size(); ++i) {
            REQUIRE(v[i].real() == Catch::Approx(1.0).margin(1e-12));
            REQUIRE(v[i].imag() == Catch::Approx(0.0).margin(1e-12));
        }
    }
    SECTION("single element") {
        Eigen::VectorXcd v = upa_steering({1, 1}, 0.5, 1.0, 1.0);
        REQUIRE(v.size() == 1);
        REQUIRE(std::abs(v[0] - std::complex<double>(1.0, 0.0)) < 1e-12);
    }
    SECTION("two-element endfire phase difference is pi") {
        Eigen::VectorXcd v = upa_steering({2, 1}, 0.5, 0.0, kPi / 2.0);
        const double phase = std::arg(v[1] / v[0]);
        REQUIRE(std::abs(std::abs(phase) - kPi) < 1e-9);
    }
    SECTION("unit magnitude everywhere") {
        Eigen::VectorXcd v = upa_steering({3, 5}, 0.5, 0.7, 0.4);
        for (int i = 0; i < v.size(); ++i) REQUIRE(std::abs(v[i]) == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("haps channel statistics") {
    ScenarioConfig cfg = paper_scenario();
    Rng prng(3);
    Placement pl = build_placement(cfg, prng);
    const int u = 0;
    const double dist = (pl.ues[0] - pl.haps).norm();
    const double loss = fspl(cfg.carrier_hz, dist);
    const int n = cfg.haps_antennas.count();

    SECTION("strong-K limit is the deterministic steering vector") {
        cfg.rician_k = 1e12;
        Rng rng(9);
        Eigen::VectorXcd h = sample_haps_channel(cfg, pl, u, rng);
        REQUIRE(h.squaredNorm() * loss == Catch::Approx(static_cast<double>(n)).epsilon(1e-3));
    }
    SECTION("scatter-only and mixed cases have unit per-element second moment") {
        for (double k : {0.0, 10.0}) {
            cfg.rician_k = k;
            Rng rng(11);
            double acc = 0.0;
            const int draws = 10000;
            for (int i = 0; i < draws; ++i)
                acc += sample_haps_channel(cfg, pl, u, rng).squaredNorm() * loss;
            REQUIRE(acc / draws == Catch::Approx(static_cast<double>(n)).epsilon(0.03));
        }
    }
}

TEST_CASE("mbs channel statistics") {
    ScenarioConfig cfg = paper_scenario();
    Rng prng(4);
    Placement pl = build_placement(cfg, prng);
    const double dist = (pl.ues[0] - pl.mbs[0]).norm();
    const double loss = fspl(cfg.carrier_hz, dist);

    SECTION("no shadowing: unit-variance rayleigh entries") {
        cfg.shadow_sigma_db = 0.0;
        Rng rng(13);
        double acc = 0.0;
        int count = 0;
        for (int i = 0; i < 2000; ++i) {
            Eigen::VectorXcd h = sample_mbs_channel(cfg, pl, 0, 0, rng);
            acc += h.squaredNorm() * loss;
            count += static_cast<int>(h.size());
        }
        REQUIRE(acc / count == Catch::Approx(1.0).epsilon(0.05));
    }
    SECTION("shadow gain is shared across elements and has the configured spread") {
        Rng rng(17);
        Rng shadow_rng(17);  // replicates the documented draw order
        std::vector<double> shadow_db;
        for (int i = 0; i < 10000; ++i) {
            Eigen::VectorXcd h = sample_mbs_channel(cfg, pl, 0, 0, rng);
            const double expected_db = shadow_rng.normal() * cfg.shadow_sigma_db;
            const double gain = std::pow(10.0, expected_db / 10.0) / std::sqrt(loss);
            for (int r = 0; r < h.size(); ++r) {
                const std::complex<double> base = shadow_rng.cnormal();
                REQUIRE(std::abs(h[r] - base * gain) < 1e-12 * std::max(1.0, std::abs(h[r])));
            }
            shadow_db.push_back(expected_db);
        }
        double mean = 0.0;
        for (double v : shadow_db) mean += v;
        mean /= static_cast<double>(shadow_db.size());
        double var = 0.0;
        for (double v : shadow_db) var += (v - mean) * (v - mean);
        var /= static_cast<double>(shadow_db.size() - 1);
        REQUIRE(std::sqrt(var) == Catch::Approx(8.0).margin(0.3));
        // median amplitude gain over draws is the pure path loss
        std::sort(shadow_db.begin(), shadow_db.end());
        const double median_gain = std::pow(10.0, shadow_db[shadow_db.size() / 2] / 10.0);
        REQUIRE(median_gain == Catch::Approx(1.0).margin(0.05));
    }
}

TEST_CASE("channel set assembly") {
    ScenarioConfig cfg = paper_scenario();
    Rng prng(6);
    Placement pl = build_placement(cfg, prng);

    SECTION("shapes follow the antenna grids") {
        Rng rng(21);
        ChannelSet cs = sample_channel_set(cfg, pl, rng);
        REQUIRE(cs.mbs.size() == 4);
        for (const auto& h : cs.mbs) {
            REQUIRE(h.rows() == 16);
            REQUIRE(h.cols() == 16);
        }
        REQUIRE(cs.haps.has_value());
        REQUIRE(cs.haps->rows() == 64);
        REQUIRE(cs.haps->cols() == 16);
        REQUIRE(cs.num_stations() == 5);
    }
    SECTION("same seed gives identical channels") {
        Rng r1(33), r2(33);
        ChannelSet a = sample_channel_set(cfg, pl, r1);
        ChannelSet b = sample_channel_set(cfg, pl, r2);
        for (std::size_t s = 0; s < a.mbs.size(); ++s) REQUIRE(a.mbs[s] == b.mbs[s]);
        REQUIRE(*a.haps == *b.haps);
    }
    SECTION("no haps matrix without a haps") {
        cfg.has_haps = false;
        Rng rng(33);
        ChannelSet cs = sample_channel_set(cfg, pl, rng);
        REQUIRE_FALSE(cs.haps.has_value());
        REQUIRE(cs.num_stations() == 4);
        REQUIRE_THROWS_AS(cs.station(4), Error);
    }
}
