#pragma once

// Joint user association and downlink beamforming by successive convex
// approximation. Three objectives (weighted sum rate, proportional fairness,
// max-min fairness) share one mixed-integer conic subproblem skeleton built
// around a quadratic-over-linear SINR lower bound that is re-expanded each
// iteration.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vhetnet/common.hpp"
#include "vhetnet/conic/builders.hpp"
#include "vhetnet/conic/program.hpp"
#include "vhetnet/conic/solver.hpp"
#include "vhetnet/metrics.hpp"
#include "vhetnet/mip.hpp"
#include "vhetnet/scenario.hpp"

namespace vhetnet::jubd {

enum class Objective { WeightedSumRate, ProportionalFairness, MaxMinFairness };

inline const char* to_string(Objective o) {
    switch (o) {
        case Objective::WeightedSumRate: return "wsr";
        case Objective::ProportionalFairness: return "pf";
        case Objective::MaxMinFairness: return "mmf";
    }
    return "?";
}

struct ObjectiveKind {
    Objective kind = Objective::WeightedSumRate;
    std::vector<double> weights;  // WeightedSumRate only; empty means all-ones

    static ObjectiveKind wsr(std::vector<double> w = {}) { return {Objective::WeightedSumRate, std::move(w)}; }
    static ObjectiveKind pf() { return {Objective::ProportionalFairness, {}}; }
    static ObjectiveKind mmf() { return {Objective::MaxMinFairness, {}}; }
};

struct SCAOptions {
    double epsilon = 1e-4;  // relative objective change with absolute floor 1
    int max_iter = 10;
    mip::AssociationMode association_mode = mip::AssociationMode::BranchAndBound;
    int refreeze_association_after_iter = -1;  // < 0: re-optimize every iteration
    bool enforce_gamma_min = false;
    int m_exp = 6;  // exponential upper-bound accuracy (proportional fairness)
    conic::SolverOptions solver;
    const conic::ConeSolver* backend = nullptr;
};

// Index maps of one subproblem instance. Outer index station, inner user.
struct SubproblemVariables {
    std::vector<std::vector<std::vector<conic::Var>>> w_re, w_im;  // [s][u][antenna]
    std::vector<std::vector<conic::Var>> p, q, a;                  // [s][u]
    std::vector<conic::Var> t;      // per user; empty for max-min fairness
    std::vector<conic::Var> alpha;  // per-user SINR lower bound
    std::vector<conic::Var> beta;   // per-user interference-plus-noise bound
    std::vector<conic::Var> eta;    // backhaul big-M slacks; empty when dropped
    conic::Var objective_var;       // tree root or the min-SINR variable
    bool has_backhaul = false;

    int num_stations() const { return static_cast<int>(a.size()); }
    int num_ues() const { return a.empty() ? 0 : static_cast<int>(a[0].size()); }
};

// Expansion point of the SCA loop. p0/q0/beta0 live in noise-normalized
// units (channels divided by the noise amplitude): beta0 >= 1 corresponds to
// interference-plus-noise >= sigma_n^2.
struct SCAState {
    Association assoc;
    Beamforming beams;  // physical units (sqrt W)
    Eigen::MatrixXd p0, q0;
    Eigen::VectorXd beta0;
    int iteration = 0;
    std::vector<double> trace;
};

enum class SCAStatus { Converged, IterationLimit, Infeasible, SolverFailure };

inline const char* to_string(SCAStatus s) {
    switch (s) {
        case SCAStatus::Converged: return "converged";
        case SCAStatus::IterationLimit: return "iteration-limit";
        case SCAStatus::Infeasible: return "infeasible";
        case SCAStatus::SolverFailure: return "solver-failure";
    }
    return "?";
}

struct FeasibilityReport {
    bool assoc_valid = false;
    double zero_beam_max = 0.0;    // largest beam norm on a non-serving pair
    double power_margin_min = 0.0; // min over stations, relative to the budget
    std::vector<double> power_margin;
    double backhaul_margin_bits = std::numeric_limits<double>::infinity();
    std::optional<double> gamma_min_margin;

    bool ok(double tol = 1e-5) const {
        bool good = assoc_valid && zero_beam_max <= tol && power_margin_min >= -tol &&
                    backhaul_margin_bits >= -tol;
        if (gamma_min_margin) good = good && *gamma_min_margin >= -tol;
        return good;
    }
};

struct SolutionReport {
    SCAStatus status = SCAStatus::SolverFailure;
    Association assoc;
    Beamforming beams;
    std::vector<double> objective_trace;
    std::vector<double> iteration_ms;
    std::vector<double> alphas;          // final subproblem SINR lower bounds
    std::vector<double> alpha_gap_trace; // per iteration: min_u achieved-SINR minus alpha
    SEReport se;
    FeasibilityReport feasibility;
    int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXcd normalized_channel(const ChannelSet& channels, int s, double noise_amp) {
    return channels.station(s) / noise_amp;
}

// Re(h^H w) and Im(h^H w) as linear expressions over the stacked re/im parts.
inline conic::LinExpr re_inner(const Eigen::VectorXcd& h, const std::vector<conic::Var>& wre,
                               const std::vector<conic::Var>& wim) {
    conic::LinExpr e;
    for (int r = 0; r < h.size(); ++r) {
        e = e + h(r).real() * conic::LinExpr(wre[static_cast<std::size_t>(r)]) +
            h(r).imag() * conic::LinExpr(wim[static_cast<std::size_t>(r)]);
    }
    return e;
}

inline conic::LinExpr im_inner(const Eigen::VectorXcd& h, const std::vector<conic::Var>& wre,
                               const std::vector<conic::Var>& wim) {
    conic::LinExpr e;
    for (int r = 0; r < h.size(); ++r) {
        e = e + h(r).real() * conic::LinExpr(wim[static_cast<std::size_t>(r)]) -
            h(r).imag() * conic::LinExpr(wre[static_cast<std::size_t>(r)]);
    }
    return e;
}

constexpr double kExpansionFloor = 1e-8;

// Shared constraint skeleton: beams, association binaries, power budgets,
// interference bounds, the signal-product slacks and their Taylor link, and
// the backhaul big-M block (dropped when provably inactive).
inline void add_common(conic::Program& prog, SubproblemVariables& v, const ChannelSet& channels,
                       const SCAState& state, const ScenarioConfig& cfg, const SCAOptions& opts) {
    using conic::LinExpr;
    using conic::Var;
    const int S = channels.num_stations();
    const int U = static_cast<int>(channels.station(0).cols());
    const double noise_amp = std::sqrt(cfg.noise_watt());

    std::vector<Eigen::MatrixXcd> hn;
    hn.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) hn.push_back(normalized_channel(channels, s, noise_amp));

    v.w_re.resize(static_cast<std::size_t>(S));
    v.w_im.resize(static_cast<std::size_t>(S));
    v.p.assign(static_cast<std::size_t>(S), {});
    v.q.assign(static_cast<std::size_t>(S), {});
    v.a.assign(static_cast<std::size_t>(S), {});
    for (int s = 0; s < S; ++s) {
        const int N = static_cast<int>(channels.station(s).rows());
        v.w_re[static_cast<std::size_t>(s)].resize(static_cast<std::size_t>(U));
        v.w_im[static_cast<std::size_t>(s)].resize(static_cast<std::size_t>(U));
        for (int u = 0; u < U; ++u) {
            auto& wre = v.w_re[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
            auto& wim = v.w_im[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
            const std::string tag = std::to_string(s) + "_" + std::to_string(u);
            for (int r = 0; r < N; ++r) {
                wre.push_back(prog.add_var("wr" + tag + "_" + std::to_string(r)));
                wim.push_back(prog.add_var("wi" + tag + "_" + std::to_string(r)));
            }
            v.p[static_cast<std::size_t>(s)].push_back(prog.add_var("p" + tag));
            v.q[static_cast<std::size_t>(s)].push_back(prog.add_var("q" + tag));
            Var a = prog.add_var("a" + tag);
            prog.mark_binary(a);
            v.a[static_cast<std::size_t>(s)].push_back(a);
        }
    }
    for (int u = 0; u < U; ++u) {
        v.alpha.push_back(prog.add_var("alpha" + std::to_string(u)));
        v.beta.push_back(prog.add_var("beta" + std::to_string(u)));
    }

    // one serving station per user
    for (int u = 0; u < U; ++u) {
        LinExpr sum;
        for (int s = 0; s < S; ++s)
            sum = sum + LinExpr(v.a[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)]);
        prog.add_zero(sum - 1.0, "assoc" + std::to_string(u));
    }

    // per-beam big-M power and per-station budget
    for (int s = 0; s < S; ++s) {
        const double P = cfg.station_power_watt(s);
        std::vector<LinExpr> all_terms;
        for (int u = 0; u < U; ++u) {
            const auto& wre = v.w_re[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
            const auto& wim = v.w_im[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
            std::vector<LinExpr> terms;
            for (Var w : wre) terms.emplace_back(w);
            for (Var w : wim) terms.emplace_back(w);
            all_terms.insert(all_terms.end(), terms.begin(), terms.end());
            conic::add_soc_quadratic_le_linear(
                prog, terms,
                P * LinExpr(v.a[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)]),
                "beam_pw" + std::to_string(s) + "_" + std::to_string(u));
        }
        conic::add_soc_quadratic_le_linear(prog, all_terms, LinExpr(P),
                                           "bs_pw" + std::to_string(s));
    }

    // signal slacks: p below the real part (inequality only where the Taylor
    // slope is positive; pinned otherwise so the variable stays determined),
    // q pinned to the imaginary part
    for (int s = 0; s < S; ++s) {
        for (int u = 0; u < U; ++u) {
            const auto& wre = v.w_re[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
            const auto& wim = v.w_im[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)];
            const Eigen::VectorXcd h = hn[static_cast<std::size_t>(s)].col(u);
            LinExpr re = re_inner(h, wre, wim);
            LinExpr im = im_inner(h, wre, wim);
            const std::string tag = std::to_string(s) + "_" + std::to_string(u);
            LinExpr pr = re - LinExpr(v.p[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)]);
            if (state.p0(s, u) > kExpansionFloor)
                prog.add_nonneg(pr, "p" + tag);
            else
                prog.add_zero(pr, "p" + tag);
            prog.add_zero(im - LinExpr(v.q[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)]),
                          "q" + tag);
        }
    }

    // interference-plus-noise upper bound (noise is 1 in normalized units)
    for (int u = 0; u < U; ++u) {
        std::vector<LinExpr> terms;
        for (int s = 0; s < S; ++s) {
            const Eigen::VectorXcd h = hn[static_cast<std::size_t>(s)].col(u);
            for (int k = 0; k < U; ++k) {
                if (k == u) continue;
                const auto& wre = v.w_re[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
                const auto& wim = v.w_im[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
                terms.push_back(re_inner(h, wre, wim));
                terms.push_back(im_inner(h, wre, wim));
            }
        }
        conic::add_soc_quadratic_le_linear(prog, terms, LinExpr(v.beta[static_cast<std::size_t>(u)]) - 1.0,
                                           "intf" + std::to_string(u));
    }

    // SINR lower bound via the expanded quadratic-over-linear surrogate
    for (int u = 0; u < U; ++u) {
        conic::QolExpansion e;
        std::vector<conic::Var> pcol, qcol;
        for (int s = 0; s < S; ++s) {
            e.p0.push_back(state.p0(s, u));
            e.q0.push_back(state.q0(s, u));
            pcol.push_back(v.p[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)]);
            qcol.push_back(v.q[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)]);
        }
        e.beta0 = state.beta0(u);
        conic::add_qol_taylor_bound(prog, v.alpha[static_cast<std::size_t>(u)], pcol, qcol,
                                    v.beta[static_cast<std::size_t>(u)], e,
                                    "sinr_lb" + std::to_string(u));
    }

    if (opts.enforce_gamma_min) {
        for (int u = 0; u < U; ++u)
            prog.add_nonneg(LinExpr(v.alpha[static_cast<std::size_t>(u)]) - cfg.gamma_min,
                            "gamma_min" + std::to_string(u));
    }

    // backhaul: sum of HAPS-served SINR bounds, linked through big-M rows.
    // The threshold lives in the log2 domain; beyond 60 bits the constraint
    // cannot bind (alpha <= gamma_max * U << 2^60) and the block is dropped.
    const double bh_bits = cfg.backhaul_bps / cfg.bandwidth_hz;
    v.has_backhaul = cfg.has_haps && bh_bits <= 60.0;
    if (v.has_backhaul) {
        const int sh = S - 1;  // HAPS is the last station
        LinExpr sum;
        for (int u = 0; u < U; ++u) {
            Var eta = prog.add_var("eta" + std::to_string(u));
            v.eta.push_back(eta);
            LinExpr ah(v.a[static_cast<std::size_t>(sh)][static_cast<std::size_t>(u)]);
            LinExpr alpha(v.alpha[static_cast<std::size_t>(u)]);
            const std::string tag = std::to_string(u);
            prog.add_nonneg(LinExpr(eta), "eta_pos" + tag);
            prog.add_nonneg(cfg.gamma_max * ah - LinExpr(eta), "eta_cap" + tag);
            prog.add_nonneg(alpha - LinExpr(eta), "eta_le_alpha" + tag);
            prog.add_nonneg(cfg.gamma_max * (1.0 - ah) - alpha + LinExpr(eta), "eta_link" + tag);
            sum = sum + LinExpr(eta);
        }
        prog.add_nonneg((std::exp2(bh_bits) - 1.0) - sum, "backhaul");
    } else {
        // the big-M rows above imply 0 <= alpha <= gamma_max; keep those
        // bounds explicit when the block is dropped, both for fidelity and to
        // stop the SINR bound of an interference-free user from running away
        for (int u = 0; u < U; ++u) {
            prog.add_nonneg(LinExpr(v.alpha[static_cast<std::size_t>(u)]),
                            "alpha_pos" + std::to_string(u));
            prog.add_nonneg(cfg.gamma_max - LinExpr(v.alpha[static_cast<std::size_t>(u)]),
                            "alpha_cap" + std::to_string(u));
        }
    }
}

// number of squarings encoding t^(1/xi) <= 1+alpha for xi = 2^-j; xi = 1 -> 0
inline int weight_chain_length(double xi) {
    if (xi == 1.0) return 0;
    if (xi > 0.0 && xi < 1.0) {
        const double j = -std::log2(xi);
        const int ji = static_cast<int>(std::lround(j));
        if (ji >= 1 && ji <= 30 && xi * std::exp2(static_cast<double>(ji)) == 1.0) return ji;
    }
    throw Error("unsupported rate weight (use 1 or an exact power of 1/2): " + std::to_string(xi));
}

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p *= 2;
    return p;
}

// t variables, their link to alpha, and the product tree whose root is the
// objective. `link` encodes the per-user coupling t_u vs alpha_u.
template <typename LinkFn>
inline conic::Var add_rate_product(conic::Program& prog, SubproblemVariables& v, int U,
                                   LinkFn&& link) {
    using conic::LinExpr;
    using conic::Var;
    for (int u = 0; u < U; ++u) {
        Var t = prog.add_var("t" + std::to_string(u));
        v.t.push_back(t);
        prog.add_nonneg(LinExpr(t), "t_pos" + std::to_string(u));
        link(u, t);
    }
    std::vector<Var> leaves = v.t;
    const int padded = next_pow2(U);
    if (padded > U) {
        Var pad = prog.add_var("pad_one");
        prog.add_zero(LinExpr(pad) - 1.0, "pad_pin");
        leaves.resize(static_cast<std::size_t>(padded), pad);
    }
    return conic::add_geometric_mean_tree(prog, leaves);
}

}  // namespace detail

// Matched-filter start: every served link gets an equal share of its station
// budget along the channel direction, which makes the products real positive.
inline SCAState initialize_state(const ChannelSet& channels, const Association& A0,
                                 const ScenarioConfig& cfg) {
    const int S = channels.num_stations();
    const int U = static_cast<int>(channels.station(0).cols());
    if (A0.num_stations() != S || A0.num_ues() != U)
        throw Error("initialize_state: association shape mismatch");
    A0.validate();
    const double noise_amp = std::sqrt(cfg.noise_watt());

    std::vector<int> served(static_cast<std::size_t>(S), 0);
    for (int u = 0; u < U; ++u) served[static_cast<std::size_t>(A0.serving_station(u))]++;

    SCAState st;
    st.assoc = A0;
    st.beams.w.clear();
    for (int s = 0; s < S; ++s) {
        const Eigen::MatrixXcd& H = channels.station(s);
        Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(H.rows(), U);
        for (int u = 0; u < U; ++u) {
            if (A0.serving_station(u) != s) continue;
            const double hn = H.col(u).norm();
            if (hn <= 0.0) throw Error("initialize_state: zero channel for a served link");
            const double scale =
                std::sqrt(cfg.station_power_watt(s) / static_cast<double>(served[static_cast<std::size_t>(s)]));
            W.col(u) = scale / hn * H.col(u);
        }
        st.beams.w.push_back(std::move(W));
    }

    st.p0 = Eigen::MatrixXd::Zero(S, U);
    st.q0 = Eigen::MatrixXd::Zero(S, U);
    st.beta0 = Eigen::VectorXd::Ones(U);
    for (int u = 0; u < U; ++u) {
        double interference = 0.0;
        for (int s = 0; s < S; ++s) {
            const Eigen::VectorXcd h = channels.station(s).col(u) / noise_amp;
            for (int k = 0; k < U; ++k) {
                const std::complex<double> x = h.dot(st.beams.w[static_cast<std::size_t>(s)].col(k));
                if (k == u)
                    st.p0(s, u) = std::abs(x);
                else
                    interference += std::norm(x);
            }
        }
        st.beta0(u) = 1.0 + interference;
    }
    return st;
}

inline std::pair<conic::Program, SubproblemVariables> build_wsr_subproblem(
    const ChannelSet& channels, const SCAState& state, const ScenarioConfig& cfg,
    const SCAOptions& opts, const std::vector<double>& weights = {}) {
    using conic::LinExpr;
    using conic::Var;
    const int U = static_cast<int>(channels.station(0).cols());
    std::vector<double> xi = weights.empty() ? std::vector<double>(static_cast<std::size_t>(U), 1.0) : weights;
    if (static_cast<int>(xi.size()) != U) throw Error("build_wsr_subproblem: weight count mismatch");
    std::vector<int> chain;
    for (double w : xi) chain.push_back(detail::weight_chain_length(w));

    conic::Program prog;
    SubproblemVariables v;
    detail::add_common(prog, v, channels, state, cfg, opts);
    Var root = detail::add_rate_product(prog, v, U, [&](int u, Var t) {
        // t^(2^j) <= 1 + alpha via j squarings
        LinExpr cur(t);
        for (int k = 0; k < chain[static_cast<std::size_t>(u)]; ++k) {
            Var s = prog.add_var("tw" + std::to_string(u) + "_" + std::to_string(k));
            conic::add_hyperbolic(prog, cur, LinExpr(s), LinExpr(1.0),
                                  "t_sq" + std::to_string(u) + "_" + std::to_string(k));
            cur = LinExpr(s);
        }
        prog.add_nonneg(1.0 + LinExpr(v.alpha[static_cast<std::size_t>(u)]) - cur,
                        "rate_link" + std::to_string(u));
    });
    v.objective_var = root;
    prog.set_objective_maximize(LinExpr(root));
    return {std::move(prog), std::move(v)};
}

inline std::pair<conic::Program, SubproblemVariables> build_pf_subproblem(
    const ChannelSet& channels, const SCAState& state, const ScenarioConfig& cfg,
    const SCAOptions& opts) {
    using conic::LinExpr;
    using conic::Var;
    const int U = static_cast<int>(channels.station(0).cols());
    conic::Program prog;
    SubproblemVariables v;
    detail::add_common(prog, v, channels, state, cfg, opts);
    Var root = detail::add_rate_product(prog, v, U, [&](int u, Var t) {
        conic::add_exp_upper_bound(prog, t, 1.0 + LinExpr(v.alpha[static_cast<std::size_t>(u)]),
                                   opts.m_exp);
    });
    v.objective_var = root;
    prog.set_objective_maximize(LinExpr(root));
    return {std::move(prog), std::move(v)};
}

inline std::pair<conic::Program, SubproblemVariables> build_mmf_subproblem(
    const ChannelSet& channels, const SCAState& state, const ScenarioConfig& cfg,
    const SCAOptions& opts) {
    using conic::LinExpr;
    using conic::Var;
    const int U = static_cast<int>(channels.station(0).cols());
    conic::Program prog;
    SubproblemVariables v;
    detail::add_common(prog, v, channels, state, cfg, opts);
    Var gm = prog.add_var("gamma_m");
    for (int u = 0; u < U; ++u)
        prog.add_nonneg(LinExpr(v.alpha[static_cast<std::size_t>(u)]) - LinExpr(gm),
                        "mmf" + std::to_string(u));
    v.objective_var = gm;
    prog.set_objective_maximize(LinExpr(gm));
    return {std::move(prog), std::move(v)};
}

inline std::pair<conic::Program, SubproblemVariables> build_subproblem(
    const ObjectiveKind& objective, const ChannelSet& channels, const SCAState& state,
    const ScenarioConfig& cfg, const SCAOptions& opts) {
    switch (objective.kind) {
        case Objective::WeightedSumRate:
            return build_wsr_subproblem(channels, state, cfg, opts, objective.weights);
        case Objective::ProportionalFairness:
            return build_pf_subproblem(channels, state, cfg, opts);
        case Objective::MaxMinFairness:
            return build_mmf_subproblem(channels, state, cfg, opts);
    }
    throw Error("build_subproblem: unknown objective");
}

// Rebuild (A, W) from a solved subproblem. Binaries must be integral within
// a loose band; columns of non-serving pairs are zeroed exactly.
inline std::pair<Association, Beamforming> extract_solution(const SubproblemVariables& v,
                                                            const conic::Solution& sol) {
    const int S = v.num_stations();
    const int U = v.num_ues();
    Association assoc;
    assoc.a = Eigen::MatrixXi::Zero(S, U);
    for (int s = 0; s < S; ++s) {
        for (int u = 0; u < U; ++u) {
            const double val = sol.x[static_cast<std::size_t>(
                v.a[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)].id)];
            if (val > 0.01 && val < 0.99)
                throw Error("extract_solution: association binary not integral: " +
                            std::to_string(val));
            assoc.a(s, u) = val >= 0.99 ? 1 : 0;
        }
    }
    assoc.validate();

    Beamforming bf;
    for (int s = 0; s < S; ++s) {
        const auto& wre = v.w_re[static_cast<std::size_t>(s)];
        const int N = static_cast<int>(wre[0].size());
        Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(N, U);
        for (int u = 0; u < U; ++u) {
            if (assoc.a(s, u) == 0) continue;  // hard zero for non-serving pairs
            for (int r = 0; r < N; ++r) {
                const double re = sol.x[static_cast<std::size_t>(
                    v.w_re[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)][static_cast<std::size_t>(r)].id)];
                const double im = sol.x[static_cast<std::size_t>(
                    v.w_im[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)][static_cast<std::size_t>(r)].id)];
                W(r, u) = {re, im};
            }
        }
        bf.w.push_back(std::move(W));
    }
    return {std::move(assoc), std::move(bf)};
}

// Margins of the original problem's hard constraints at a candidate (A, W).
// The backhaul comparison stays in the log2 domain so huge thresholds stay
// finite.
inline FeasibilityReport validate_solution(const ChannelSet& channels, const Association& assoc,
                                           const Beamforming& bf, const ScenarioConfig& cfg,
                                           bool check_gamma_min = false) {
    const int S = channels.num_stations();
    const int U = static_cast<int>(channels.station(0).cols());
    FeasibilityReport rep;
    rep.assoc_valid = true;
    try {
        assoc.validate();
    } catch (const Error&) {
        rep.assoc_valid = false;
    }

    for (int s = 0; s < S; ++s) {
        for (int u = 0; u < U; ++u) {
            if (rep.assoc_valid && assoc.a(s, u) == 1) continue;
            rep.zero_beam_max =
                std::max(rep.zero_beam_max, bf.w[static_cast<std::size_t>(s)].col(u).norm());
        }
    }

    rep.power_margin_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < S; ++s) {
        const double P = cfg.station_power_watt(s);
        const double used = bf.station_power(s);
        const double margin = (P - used) / std::max(1.0, P);
        rep.power_margin.push_back(margin);
        rep.power_margin_min = std::min(rep.power_margin_min, margin);
    }

    std::vector<double> sinrs;
    for (int u = 0; u < U; ++u) sinrs.push_back(sinr(channels, bf, u, cfg.noise_watt()));

    if (cfg.has_haps) {
        const int sh = S - 1;
        double bits = 0.0;
        for (int u = 0; u < U; ++u)
            if (assoc.a(sh, u) == 1) bits += std::log2(1.0 + sinrs[static_cast<std::size_t>(u)]);
        rep.backhaul_margin_bits = cfg.backhaul_bps / cfg.bandwidth_hz - bits;
    }

    if (check_gamma_min) {
        double worst = std::numeric_limits<double>::infinity();
        for (double g : sinrs) worst = std::min(worst, g - cfg.gamma_min);
        rep.gamma_min_margin = worst;
    }
    return rep;
}

// The SCA loop: solve the mixed-integer subproblem, re-expand at the solution,
// repeat until the objective change falls under epsilon (relative, floored at
// one) or the iteration cap. A trial step that fails to improve is discarded
// and the incumbent kept: the surrogate guarantees ascent under exact solves,
// so a decrease is solver noise and the incumbent is the stopping point.
inline SolutionReport sca_solve(const ObjectiveKind& objective, const ChannelSet& channels,
                                const ScenarioConfig& cfg, const SCAOptions& opts = {},
                                const std::optional<Association>& initial_association = {}) {
    if (opts.epsilon <= 0.0 || opts.max_iter < 1) throw Error("sca_solve: bad options");
    const int S = channels.num_stations();
    const int U = static_cast<int>(channels.station(0).cols());
    const double noise_amp = std::sqrt(cfg.noise_watt());

    Association A0 =
        initial_association ? *initial_association : mip::heuristic_association(channels);
    SCAState state = initialize_state(channels, A0, cfg);

    mip::MisocpOptions mopts;
    mopts.mode = opts.association_mode;
    mopts.solver = opts.solver;
    mopts.backend = opts.backend;

    SolutionReport rep;
    rep.assoc = state.assoc;
    rep.beams = state.beams;

    bool have_iterate = false;
    for (int n = 1; n <= opts.max_iter; ++n) {
        const auto t0 = std::chrono::steady_clock::now();
        auto [prog, vars] = build_subproblem(objective, channels, state, cfg, opts);

        conic::FixedVars prefixed;
        const bool freeze = opts.association_mode == mip::AssociationMode::HeuristicFixed ||
                            (opts.refreeze_association_after_iter >= 0 &&
                             n > opts.refreeze_association_after_iter);
        if (freeze) {
            for (int s = 0; s < S; ++s)
                for (int u = 0; u < U; ++u)
                    prefixed.push_back(
                        {vars.a[static_cast<std::size_t>(s)][static_cast<std::size_t>(u)],
                         state.assoc.a(s, u) == 1 ? 1.0 : 0.0});
        }

        mip::MisocpResult res = mip::solve_misocp(prog, mopts, prefixed);
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();

        if (res.solution.status != conic::SolveStatus::Optimal) {
            if (!have_iterate)
                rep.status = res.solution.status == conic::SolveStatus::Infeasible
                                 ? SCAStatus::Infeasible
                                 : SCAStatus::SolverFailure;
            else
                rep.status = SCAStatus::SolverFailure;
            break;
        }

        const double obj = res.solution.objective;
        if (have_iterate) {
            const double prev = rep.objective_trace.back();
            if (obj < prev) {
                // an exact subproblem solve cannot decrease the objective (the
                // incumbent stays feasible at its old value), so a decrease
                // marks the solver's accuracy limit: keep the incumbent
                rep.status = SCAStatus::Converged;
                break;
            }
        }

        auto [assoc, beams] = extract_solution(vars, res.solution);

        // phase-normalize the expansion: rotating each beam so the serving
        // product is real positive changes nothing physical and keeps the
        // next surrogate's q slopes at zero
        Eigen::MatrixXd p0 = Eigen::MatrixXd::Zero(S, U);
        for (int s = 0; s < S; ++s) {
            Eigen::MatrixXcd& W = beams.w[static_cast<std::size_t>(s)];
            const Eigen::MatrixXcd h = channels.station(s) / noise_amp;
            for (int u = 0; u < U; ++u) {
                const std::complex<double> x = h.col(u).dot(W.col(u));
                const double mag = std::abs(x);
                if (mag > 0.0) W.col(u) *= std::conj(x) / mag;
                p0(s, u) = mag;
            }
        }
        std::vector<int> served(static_cast<std::size_t>(S), 0);
        for (int u = 0; u < U; ++u) served[static_cast<std::size_t>(assoc.serving_station(u))]++;
        for (int u = 0; u < U; ++u) {
            const int s = assoc.serving_station(u);
            if (p0(s, u) < detail::kExpansionFloor) {
                // degenerate serving product: restart this user's expansion
                // from its matched-filter value
                const double hn2 = (channels.station(s).col(u) / noise_amp).norm();
                p0(s, u) = std::sqrt(cfg.station_power_watt(s) /
                                     static_cast<double>(served[static_cast<std::size_t>(s)])) *
                           hn2;
            }
        }

        state.assoc = assoc;
        state.beams = beams;
        state.p0 = std::move(p0);
        state.q0.setZero(S, U);
        for (int u = 0; u < U; ++u)
            state.beta0(u) = std::max(
                1.0,
                res.solution.x[static_cast<std::size_t>(vars.beta[static_cast<std::size_t>(u)].id)]);
        state.iteration = n;
        state.trace.push_back(obj);

        rep.assoc = state.assoc;
        rep.beams = state.beams;
        rep.objective_trace.push_back(obj);
        rep.iteration_ms.push_back(ms);
        rep.alphas.clear();
        double gap = std::numeric_limits<double>::infinity();
        for (int u = 0; u < U; ++u) {
            const double a = res.solution.x[static_cast<std::size_t>(
                vars.alpha[static_cast<std::size_t>(u)].id)];
            rep.alphas.push_back(a);
            gap = std::min(gap, sinr(channels, beams, u, cfg.noise_watt()) - a);
        }
        rep.alpha_gap_trace.push_back(gap);
        have_iterate = true;

        if (rep.objective_trace.size() >= 2) {
            const double prev = rep.objective_trace[rep.objective_trace.size() - 2];
            if (std::abs(obj - prev) < opts.epsilon * std::max(1.0, std::abs(prev))) {
                rep.status = SCAStatus::Converged;
                break;
            }
        }
        if (n == opts.max_iter) rep.status = SCAStatus::IterationLimit;
    }

    rep.iterations = static_cast<int>(rep.objective_trace.size());
    Eigen::VectorXd w;
    if (objective.kind == Objective::WeightedSumRate && !objective.weights.empty())
        w = Eigen::Map<const Eigen::VectorXd>(objective.weights.data(),
                                              static_cast<Eigen::Index>(objective.weights.size()));
    rep.se = se_report(channels, rep.assoc, rep.beams, cfg.noise_watt(), w);
    rep.feasibility =
        validate_solution(channels, rep.assoc, rep.beams, cfg, opts.enforce_gamma_min);
    return rep;
}

}  // namespace vhetnet::jubd
