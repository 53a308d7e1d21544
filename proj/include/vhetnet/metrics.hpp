#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "vhetnet/common.hpp"
#include "vhetnet/scenario.hpp"

namespace vhetnet {

// 0/1 station-by-user assignment; each user is served by exactly one station.
struct Association {
    Eigen::MatrixXi a;  // S x U

    static Association from_serving(const std::vector<int>& serving, int num_stations) {
        Association as;
        as.a = Eigen::MatrixXi::Zero(num_stations, static_cast<int>(serving.size()));
        for (std::size_t u = 0; u < serving.size(); ++u) {
            if (serving[u] < 0 || serving[u] >= num_stations)
                throw Error("Association: station index out of range");
            as.a(serving[u], static_cast<int>(u)) = 1;
        }
        return as;
    }

    int num_stations() const { return static_cast<int>(a.rows()); }
    int num_ues() const { return static_cast<int>(a.cols()); }

    int serving_station(int u) const {
        for (int s = 0; s < a.rows(); ++s)
            if (a(s, u) == 1) return s;
        throw Error("Association: user has no serving station");
    }

    void validate() const {
        for (int u = 0; u < a.cols(); ++u) {
            int sum = 0;
            for (int s = 0; s < a.rows(); ++s) {
                if (a(s, u) != 0 && a(s, u) != 1) throw Error("Association: entries must be 0/1");
                sum += a(s, u);
            }
            if (sum != 1) throw Error("Association: column sums must equal 1");
        }
    }
};

// Per-station beamforming matrices, one column per user.
struct Beamforming {
    std::vector<Eigen::MatrixXcd> w;  // per station, N_s x U

    int num_stations() const { return static_cast<int>(w.size()); }

    double station_power(int s) const { return w[static_cast<std::size_t>(s)].squaredNorm(); }
};

inline double sinr(const ChannelSet& channels, const Beamforming& bf, int u, double noise_var) {
    if (noise_var <= 0.0) throw Error("sinr: noise variance must be positive");
    const int S = channels.num_stations();
    if (bf.num_stations() != S) throw Error("sinr: station count mismatch");
    double signal = 0.0;
    double interference = 0.0;
    for (int s = 0; s < S; ++s) {
        const Eigen::MatrixXcd& h = channels.station(s);
        const Eigen::MatrixXcd& w = bf.w[static_cast<std::size_t>(s)];
        if (h.rows() != w.rows() || h.cols() != w.cols()) throw Error("sinr: shape mismatch");
        const Eigen::VectorXcd hu = h.col(u);
        for (int k = 0; k < w.cols(); ++k) {
            const double p = std::norm(hu.dot(w.col(k)));
            if (k == u)
                signal += p;
            else
                interference += p;
        }
    }
    return signal / (interference + noise_var);
}

struct SEReport {
    Eigen::VectorXd per_ue_sinr;
    Eigen::VectorXd per_ue_se;
    double sum_se = 0.0;
    double min_se = 0.0;
    double weighted_sum_se = 0.0;
};

inline SEReport se_report(const ChannelSet& channels, const Association& assoc,
                          const Beamforming& bf, double noise_var,
                          const Eigen::VectorXd& weights = {}) {
    assoc.validate();
    const int U = assoc.num_ues();
    if (weights.size() != 0 && weights.size() != U) throw Error("se_report: weight size mismatch");
    SEReport rep;
    rep.per_ue_sinr.resize(U);
    rep.per_ue_se.resize(U);
    for (int u = 0; u < U; ++u) {
        rep.per_ue_sinr[u] = sinr(channels, bf, u, noise_var);
        rep.per_ue_se[u] = std::log2(1.0 + rep.per_ue_sinr[u]);
    }
    rep.sum_se = rep.per_ue_se.sum();
    rep.min_se = rep.per_ue_se.minCoeff();
    rep.weighted_sum_se =
        weights.size() == 0 ? rep.sum_se : weights.dot(rep.per_ue_se);
    return rep;
}

// Right-continuous empirical distribution over the sample set.
class Cdf {
  public:
    explicit Cdf(std::vector<double> samples) : sorted_(std::move(samples)) {
        if (sorted_.empty()) throw Error("empirical_cdf: no samples");
        std::sort(sorted_.begin(), sorted_.end());
    }

    std::vector<std::pair<double, double>> points() const {
        std::vector<std::pair<double, double>> pts;
        const double n = static_cast<double>(sorted_.size());
        pts.reserve(sorted_.size());
        for (std::size_t i = 0; i < sorted_.size(); ++i)
            pts.emplace_back(sorted_[i], static_cast<double>(i + 1) / n);
        return pts;
    }

    // nearest-rank percentile: smallest sample with CDF >= q
    double percentile(double q) const {
        if (q < 0.0 || q > 1.0) throw Error("percentile: q outside [0,1]");
        const auto n = sorted_.size();
        std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        if (rank == 0) rank = 1;
        if (rank > n) rank = n;
        return sorted_[rank - 1];
    }

    const std::vector<double>& sorted() const { return sorted_; }

  private:
    std::vector<double> sorted_;
};

inline Cdf empirical_cdf(std::vector<double> samples) { return Cdf(std::move(samples)); }

}  // namespace vhetnet
