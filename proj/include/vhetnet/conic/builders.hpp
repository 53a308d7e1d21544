#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vhetnet/conic/program.hpp"

namespace vhetnet::conic {

// z^2 <= x * y with x + y >= 0, encoded as || [2z, x - y] || <= x + y.
inline void add_hyperbolic(Program& prog, const LinExpr& z, const LinExpr& x, const LinExpr& y,
                           std::string label = {}) {
    prog.add_soc(x + y, {2.0 * z, x - y}, std::move(label));
}

// Sum_i terms_i^2 <= rhs via the rotated-cone identity
// || [2 terms, rhs - 1] || <= rhs + 1. With no terms this degenerates to
// rhs >= 0.
inline void add_soc_quadratic_le_linear(Program& prog, const std::vector<LinExpr>& terms,
                                        const LinExpr& rhs, std::string label = {}) {
    if (terms.empty()) {
        prog.add_nonneg(rhs, std::move(label));
        return;
    }
    std::vector<LinExpr> tail;
    tail.reserve(terms.size() + 1);
    for (const LinExpr& t : terms) tail.push_back(2.0 * t);
    tail.push_back(rhs - 1.0);
    prog.add_soc(rhs + 1.0, std::move(tail), std::move(label));
}

// Balanced binary tree of hyperbolic cones bounding the geometric mean of the
// leaves: the returned root r satisfies r^(2^Q) <= prod(t) at any feasible
// point with nonnegative node values. Leaf count must be a power of two; the
// caller pads with constant-1 variables.
inline Var add_geometric_mean_tree(Program& prog, const std::vector<Var>& leaves) {
    const std::size_t n = leaves.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw Error("add_geometric_mean_tree: leaf count must be a power of two");
    if (n == 1) return leaves[0];
    std::vector<Var> level = leaves;
    int depth = 0;
    while (level.size() > 1) {
        ++depth;
        std::vector<Var> up;
        up.reserve(level.size() / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            Var parent = prog.add_var("gm" + std::to_string(depth) + "_" + std::to_string(i / 2));
            add_hyperbolic(prog, LinExpr(parent), LinExpr(level[i]), LinExpr(level[i + 1]));
            up.push_back(parent);
        }
        level = std::move(up);
    }
    return level[0];
}

// Approximate e^t <= bound through m+4 slack variables: two shifted squares,
// a fourth-order Taylor row, then m squarings. Accurate to well under 1% on
// t in [-3, 3] for m >= 6.
inline void add_exp_upper_bound(Program& prog, Var t, const LinExpr& bound, int m = 6) {
    if (m < 1) throw Error("add_exp_upper_bound: m must be >= 1");
    auto square_le = [&](const LinExpr& u, Var k) {
        // u^2 <= 4k
        prog.add_soc(LinExpr(k) + 1.0, {u, 1.0 - LinExpr(k)});
    };
    std::vector<Var> k;
    k.reserve(static_cast<std::size_t>(m) + 4);
    for (int i = 1; i <= m + 4; ++i) k.push_back(prog.add_var("exp_k" + std::to_string(i)));

    const double inv1 = std::ldexp(1.0, -(m - 1));  // 2^(1-m)
    const double inv2 = std::ldexp(1.0, -m);        // 2^-m
    square_le(LinExpr(2.0) + inv1 * t, k[0]);
    square_le(LinExpr(5.0 / 3.0) + inv2 * t, k[1]);
    square_le(2.0 * k[0], k[2]);
    prog.add_nonneg(LinExpr(k[3]) - LinExpr(k[1]) - (1.0 / 24.0) * k[2] - 19.0 / 72.0);
    for (int i = 4; i < m + 4; ++i) square_le(2.0 * k[static_cast<std::size_t>(i) - 1], k[static_cast<std::size_t>(i)]);
    prog.add_nonneg(bound - LinExpr(k.back()));
}

struct QolExpansion {
    std::vector<double> p0, q0;
    double beta0 = 0.0;
};

// Value of the Taylor under-estimator of sum_b (p_b^2 + q_b^2) / beta at the
// given point.
inline double qol_taylor_rhs(const QolExpansion& e, std::span<const double> p,
                             std::span<const double> q, double beta) {
    double v = 0.0;
    for (std::size_t b = 0; b < e.p0.size(); ++b) {
        const double s = e.p0[b] * e.p0[b] + e.q0[b] * e.q0[b];
        v += 2.0 * (e.p0[b] * p[b] + e.q0[b] * q[b]) / e.beta0 - s * beta / (e.beta0 * e.beta0);
    }
    return v;
}

// First-order Taylor lower bound of the quadratic-over-linear SINR form:
// alpha <= sum_b [ 2 p0 p / b0 + 2 q0 q / b0 ] - (sum_b p0^2 + q0^2) beta / b0^2.
// Constant terms cancel exactly at the expansion point.
inline void add_qol_taylor_bound(Program& prog, Var alpha, std::span<const Var> p,
                                 std::span<const Var> q, Var beta, const QolExpansion& e,
                                 std::string label = {}) {
    if (e.beta0 <= 0.0) throw Error("add_qol_taylor_bound: expansion denominator must be positive");
    if (e.p0.size() != p.size() || e.q0.size() != q.size() || p.size() != q.size())
        throw Error("add_qol_taylor_bound: mismatched expansion sizes");
    LinExpr rhs;
    double s_total = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        if (e.p0[b] != 0.0) rhs += (2.0 * e.p0[b] / e.beta0) * p[b];
        if (e.q0[b] != 0.0) rhs += (2.0 * e.q0[b] / e.beta0) * q[b];
        s_total += e.p0[b] * e.p0[b] + e.q0[b] * e.q0[b];
    }
    if (s_total != 0.0) rhs -= (s_total / (e.beta0 * e.beta0)) * beta;
    prog.add_nonneg(rhs - LinExpr(alpha), std::move(label));
}

}  // namespace vhetnet::conic
