#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "vhetnet/metrics.hpp"

using namespace vhetnet;

namespace {

ChannelSet single_station_channels(const Eigen::MatrixXcd& h) {
    ChannelSet cs;
    cs.mbs.push_back(h);
    return cs;
}

Eigen::MatrixXcd random_complex(int rows, int cols, Rng& rng) {
    Eigen::MatrixXcd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = rng.cnormal();
    return m;
}

}  // namespace

TEST_CASE("matched filter single link") {
    Rng rng(1);
    Eigen::MatrixXcd h = random_complex(4, 1, rng);
    const double p = 2.5;
    const double noise = 1e-3;
    Beamforming bf;
    bf.w.push_back(std::sqrt(p) * h / h.norm());
    const double g = sinr(single_station_channels(h), bf, 0, noise);
    REQUIRE(g == Catch::Approx(p * h.squaredNorm() / noise).epsilon(1e-12));
}

TEST_CASE("zero beamforming gives zero sinr") {
    Rng rng(2);
    Eigen::MatrixXcd h = random_complex(4, 2, rng);
    Beamforming bf;
    bf.w.push_back(Eigen::MatrixXcd::Zero(4, 2));
    REQUIRE(sinr(single_station_channels(h), bf, 0, 1.0) == 0.0);
    REQUIRE(sinr(single_station_channels(h), bf, 1, 1.0) == 0.0);
}

TEST_CASE("sinr matches scalar recomputation") {
    Rng rng(3);
    const int n = 3, U = 2;
    Eigen::MatrixXcd h = random_complex(n, U, rng);
    Eigen::MatrixXcd w = random_complex(n, U, rng);
    Beamforming bf;
    bf.w.push_back(w);
    const double noise = 0.37;
    for (int u = 0; u < U; ++u) {
        // explicit loops, no Eigen reductions
        std::complex<double> sig(0, 0);
        for (int r = 0; r < n; ++r) sig += std::conj(h(r, u)) * w(r, u);
        double interf = 0.0;
        for (int k = 0; k < U; ++k) {
            if (k == u) continue;
            std::complex<double> x(0, 0);
            for (int r = 0; r < n; ++r) x += std::conj(h(r, u)) * w(r, k);
            interf += std::norm(x);
        }
        const double expected = std::norm(sig) / (interf + noise);
        REQUIRE(sinr(single_station_channels(h), bf, u, noise) ==
                Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("common phase rotation leaves sinr unchanged") {
    Rng rng(4);
    Eigen::MatrixXcd h = random_complex(4, 3, rng);
    Eigen::MatrixXcd w = random_complex(4, 3, rng);
    Beamforming bf1, bf2;
    bf1.w.push_back(w);
    bf2.w.push_back(std::polar(1.0, 1.234) * w);
    for (int u = 0; u < 3; ++u)
        REQUIRE(sinr(single_station_channels(h), bf1, u, 0.5) ==
                Catch::Approx(sinr(single_station_channels(h), bf2, u, 0.5)).epsilon(1e-12));
}

TEST_CASE("interference never helps") {
    Rng rng(5);
    Eigen::MatrixXcd h = random_complex(4, 2, rng);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(4, 2);
    w.col(0) = h.col(0) / h.col(0).norm();
    Beamforming clean;
    clean.w.push_back(w);
    const double before = sinr(single_station_channels(h), clean, 0, 0.1);
    Eigen::MatrixXcd w2 = w;
    w2.col(1) = random_complex(4, 1, rng);
    Beamforming noisy;
    noisy.w.push_back(w2);
    const double after = sinr(single_station_channels(h), noisy, 0, 0.1);
    REQUIRE(after <= before + 1e-15);
}

TEST_CASE("multi-station sinr sums over stations") {
    Rng rng(6);
    Eigen::MatrixXcd h1 = random_complex(2, 2, rng);
    Eigen::MatrixXcd h2 = random_complex(3, 2, rng);
    ChannelSet cs;
    cs.mbs.push_back(h1);
    cs.haps = h2;
    Beamforming bf;
    bf.w.push_back(random_complex(2, 2, rng));
    bf.w.push_back(random_complex(3, 2, rng));
    const double noise = 0.2;
    double sig = std::norm(h1.col(0).dot(bf.w[0].col(0))) + std::norm(h2.col(0).dot(bf.w[1].col(0)));
    double interf = std::norm(h1.col(0).dot(bf.w[0].col(1))) + std::norm(h2.col(0).dot(bf.w[1].col(1)));
    REQUIRE(sinr(cs, bf, 0, noise) == Catch::Approx(sig / (interf + noise)).epsilon(1e-12));
}

TEST_CASE("se report on an orthogonal unit-sinr instance") {
    const int U = 16;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(U, U);
    const double noise = 0.01;
    Eigen::MatrixXcd w = std::sqrt(noise) * Eigen::MatrixXcd::Identity(U, U);
    ChannelSet cs = single_station_channels(h);
    Beamforming bf;
    bf.w.push_back(w);
    std::vector<int> serving(U, 0);
    Association assoc = Association::from_serving(serving, 1);
    SEReport rep = se_report(cs, assoc, bf, noise);
    REQUIRE(rep.sum_se == Catch::Approx(16.0).epsilon(1e-9));
    REQUIRE(rep.min_se == Catch::Approx(1.0).epsilon(1e-9));
    REQUIRE(rep.weighted_sum_se == Catch::Approx(rep.sum_se).epsilon(1e-12));

    Eigen::VectorXd half = Eigen::VectorXd::Constant(U, 0.5);
    SEReport rep2 = se_report(cs, assoc, bf, noise, half);
    REQUIRE(rep2.weighted_sum_se == Catch::Approx(8.0).epsilon(1e-9));
    REQUIRE(rep2.weighted_sum_se <= rep2.sum_se);
}

TEST_CASE("se report aggregates match per-ue recomputation") {
    Rng rng(7);
    const int U = 5;
    Eigen::MatrixXcd h = random_complex(4, U, rng);
    Eigen::MatrixXcd w = random_complex(4, U, rng);
    ChannelSet cs = single_station_channels(h);
    Beamforming bf;
    bf.w.push_back(w);
    Association assoc = Association::from_serving(std::vector<int>(U, 0), 1);
    SEReport rep = se_report(cs, assoc, bf, 0.3);
    double sum = 0.0, mn = 1e300;
    for (int u = 0; u < U; ++u) {
        const double se = std::log2(1.0 + sinr(cs, bf, u, 0.3));
        REQUIRE(rep.per_ue_se[u] == Catch::Approx(se).epsilon(1e-12));
        sum += se;
        mn = std::min(mn, se);
    }
    REQUIRE(rep.sum_se == Catch::Approx(sum).epsilon(1e-12));
    REQUIRE(rep.min_se == Catch::Approx(mn).epsilon(1e-12));
    REQUIRE(rep.sum_se >= U * rep.min_se - 1e-12);
}

TEST_CASE("association validation") {
    Association ok = Association::from_serving({0, 1, 0}, 2);
    REQUIRE_NOTHROW(ok.validate());
    REQUIRE(ok.serving_station(1) == 1);
    Association bad = ok;
    bad.a(0, 0) = 0;
    REQUIRE_THROWS_AS(bad.validate(), Error);
    REQUIRE_THROWS_AS(Association::from_serving({2}, 2), Error);
}

TEST_CASE("empirical cdf") {
    SECTION("four point example") {
        Cdf cdf = empirical_cdf({2.0, 1.0, 4.0, 3.0});
        auto pts = cdf.points();
        REQUIRE(pts.size() == 4);
        REQUIRE(pts[0] == std::make_pair(1.0, 0.25));
        REQUIRE(pts[1] == std::make_pair(2.0, 0.5));
        REQUIRE(pts[2] == std::make_pair(3.0, 0.75));
        REQUIRE(pts[3] == std::make_pair(4.0, 1.0));
    }
    SECTION("identical samples") {
        std::vector<double> v(100, 7.25);
        REQUIRE(empirical_cdf(v).percentile(0.05) == 7.25);
    }
    SECTION("uniform order statistics") {
        Rng rng(8);
        std::vector<double> v;
        for (int i = 0; i < 1000; ++i) v.push_back(rng.uniform());
        const double p5 = empirical_cdf(v).percentile(0.05);
        REQUIRE(p5 >= 0.03);
        REQUIRE(p5 <= 0.07);
    }
    SECTION("nearest rank is exact on small sets") {
        Cdf cdf = empirical_cdf({10.0, 20.0, 30.0, 40.0});
        REQUIRE(cdf.percentile(0.05) == 10.0);
        REQUIRE(cdf.percentile(0.25) == 10.0);
        REQUIRE(cdf.percentile(0.26) == 20.0);
        REQUIRE(cdf.percentile(1.0) == 40.0);
    }
    SECTION("empty input throws") { REQUIRE_THROWS_AS(empirical_cdf({}), Error); }
}
