#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "vhetnet/conic/program.hpp"
#include "vhetnet/conic/solver.hpp"
#include "vhetnet/metrics.hpp"

namespace vhetnet::mip {

enum class AssociationMode { Exhaustive, BranchAndBound, HeuristicFixed };

inline const char* to_string(AssociationMode m) {
    switch (m) {
        case AssociationMode::Exhaustive: return "exhaustive";
        case AssociationMode::BranchAndBound: return "bnb";
        case AssociationMode::HeuristicFixed: return "heuristic";
    }
    return "?";
}

struct MisocpOptions {
    AssociationMode mode = AssociationMode::BranchAndBound;
    int exhaustive_cap = 4096;
    double prune_slack = 1e-9;
    double rel_gap = 1e-6;   // early-stop certificate on the bound gap
    double int_tol = 1e-6;   // integrality tolerance on relaxed binaries
    conic::SolverOptions solver;
    const conic::ConeSolver* backend = nullptr;
};

struct MisocpResult {
    conic::Solution solution;
    int relaxations_solved = 0;
    int branched_nodes = 0;
    int node_failures = 0;  // relaxations that ended in numerical failure
    double certified_bound = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> incumbent_trace;
};

// Every 0/1 station-by-user matrix with unit column sums, in odometer order
// (last user varies fastest).
inline std::vector<Association> enumerate_associations(int b_plus, int u_count, int cap = 4096) {
    if (b_plus < 1 || u_count < 1) throw Error("enumerate_associations: empty dimensions");
    double total = 1.0;
    for (int u = 0; u < u_count; ++u) total *= static_cast<double>(b_plus);
    if (total > static_cast<double>(cap))
        throw Error("enumerate_associations: fixing count exceeds cap; use BranchAndBound mode");
    std::vector<Association> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<int> serving(static_cast<std::size_t>(u_count), 0);
    while (true) {
        out.push_back(Association::from_serving(serving, b_plus));
        int u = u_count - 1;
        while (u >= 0 && ++serving[static_cast<std::size_t>(u)] == b_plus) {
            serving[static_cast<std::size_t>(u)] = 0;
            --u;
        }
        if (u < 0) break;
    }
    return out;
}

// Strongest average link wins; ties go to the lowest station index.
inline Association heuristic_association(const ChannelSet& channels) {
    const int S = channels.num_stations();
    if (S < 1) throw Error("heuristic_association: no stations");
    const int U = static_cast<int>(channels.station(0).cols());
    std::vector<int> serving(static_cast<std::size_t>(U), 0);
    for (int u = 0; u < U; ++u) {
        double best = -1.0;
        for (int s = 0; s < S; ++s) {
            const double gain = channels.station(s).col(u).squaredNorm();
            if (gain > best) {
                best = gain;
                serving[static_cast<std::size_t>(u)] = s;
            }
        }
    }
    return Association::from_serving(serving, S);
}

namespace detail {

// SOS1 groups recovered from single-row zero constraints of the shape
// sum_i a_i - 1 == 0 over binary variables.
struct BinaryStructure {
    std::vector<std::vector<std::int32_t>> groups;
    std::vector<std::int32_t> loose;  // binaries not in any group
};

inline BinaryStructure detect_groups(const conic::Program& prog) {
    BinaryStructure bs;
    std::vector<char> grouped(static_cast<std::size_t>(prog.num_vars()), 0);
    for (const conic::Constraint& c : prog.constraints()) {
        if (c.kind != conic::ConeKind::Zero || c.rows.size() != 1) continue;
        const conic::LinExpr& e = c.rows[0];
        if (e.terms().empty()) continue;
        bool sos1 = std::abs(e.constant() + 1.0) < 1e-12;
        for (const conic::LinTerm& t : e.terms()) {
            if (std::abs(t.coef - 1.0) > 1e-12 || !prog.is_binary(conic::Var{t.var}) ||
                grouped[static_cast<std::size_t>(t.var)]) {
                sos1 = false;
                break;
            }
        }
        if (!sos1) continue;
        std::vector<std::int32_t> g;
        for (const conic::LinTerm& t : e.terms()) {
            grouped[static_cast<std::size_t>(t.var)] = 1;
            g.push_back(t.var);
        }
        bs.groups.push_back(std::move(g));
    }
    for (std::int32_t id : prog.binaries())
        if (!grouped[static_cast<std::size_t>(id)]) bs.loose.push_back(id);
    return bs;
}

inline bool is_integral(double v, double tol) {
    return std::abs(v - std::round(v)) <= tol;
}

}  // namespace detail

// Optimize the program over its binary variables. `prefixed` entries are
// honored in every mode; Exhaustive and BranchAndBound explore only the
// remaining free binaries.
inline MisocpResult solve_misocp(const conic::Program& prog, const MisocpOptions& opts = {},
                                 const conic::FixedVars& prefixed = {}) {
    MisocpResult res;
    auto solve_node = [&](const conic::FixedVars& fixed) {
        ++res.relaxations_solved;
        return conic::solve_relaxation(prog, fixed, opts.solver, opts.backend);
    };

    if (opts.mode == AssociationMode::HeuristicFixed) {
        res.solution = solve_node(prefixed);
        res.certified_bound = res.solution.objective;
        if (res.solution.status == conic::SolveStatus::Optimal)
            res.incumbent_trace.push_back(res.solution.objective);
        return res;
    }

    std::vector<char> prefixed_mask(static_cast<std::size_t>(prog.num_vars()), 0);
    for (const conic::FixedVar& f : prefixed) prefixed_mask[static_cast<std::size_t>(f.var.id)] = 1;
    detail::BinaryStructure bs = detail::detect_groups(prog);

    if (opts.mode == AssociationMode::Exhaustive) {
        // one slot per free group plus one per free loose binary
        std::vector<std::vector<std::int32_t>> group_choices;
        for (const auto& g : bs.groups) {
            std::vector<std::int32_t> free_members;
            bool pinned = false;
            for (std::int32_t id : g) {
                if (prefixed_mask[static_cast<std::size_t>(id)])
                    pinned = true;  // leave prefixed groups alone
                else
                    free_members.push_back(id);
            }
            if (!pinned && !free_members.empty()) group_choices.push_back(std::move(free_members));
        }
        std::vector<std::int32_t> free_loose;
        for (std::int32_t id : bs.loose)
            if (!prefixed_mask[static_cast<std::size_t>(id)]) free_loose.push_back(id);

        double total = 1.0;
        for (const auto& g : group_choices) total *= static_cast<double>(g.size());
        total *= std::pow(2.0, static_cast<double>(free_loose.size()));
        if (total > static_cast<double>(opts.exhaustive_cap))
            throw Error("solve_misocp: exhaustive fixing count exceeds cap; use BranchAndBound mode");

        std::vector<std::size_t> pick(group_choices.size(), 0);
        std::vector<int> bits(free_loose.size(), 0);
        res.solution.status = conic::SolveStatus::Infeasible;
        bool any_numfail = false;
        while (true) {
            conic::FixedVars fixed = prefixed;
            for (std::size_t gi = 0; gi < group_choices.size(); ++gi)
                for (std::size_t mi = 0; mi < group_choices[gi].size(); ++mi)
                    fixed.push_back({conic::Var{group_choices[gi][mi]}, mi == pick[gi] ? 1.0 : 0.0});
            for (std::size_t li = 0; li < free_loose.size(); ++li)
                fixed.push_back({conic::Var{free_loose[li]}, static_cast<double>(bits[li])});

            conic::Solution sol = solve_node(fixed);
            if (sol.status == conic::SolveStatus::Unbounded) {
                res.solution = sol;
                return res;
            }
            if (sol.status == conic::SolveStatus::NumericalFailure) any_numfail = true;
            if (sol.status == conic::SolveStatus::Optimal &&
                (res.solution.status != conic::SolveStatus::Optimal ||
                 sol.objective > res.solution.objective)) {
                res.solution = sol;
                res.incumbent_trace.push_back(sol.objective);
            }

            // odometer over (groups, loose bits)
            std::size_t gi = 0;
            while (gi < pick.size() && ++pick[gi] == group_choices[gi].size()) pick[gi++] = 0;
            if (gi < pick.size()) continue;
            std::size_t li = 0;
            while (li < bits.size() && ++bits[li] == 2) bits[li++] = 0;
            if (li < bits.size()) continue;
            break;
        }
        if (res.solution.status != conic::SolveStatus::Optimal && any_numfail)
            res.solution.status = conic::SolveStatus::NumericalFailure;
        res.certified_bound = res.solution.objective;
        return res;
    }

    // ---- best-first branch and bound ----
    struct Node {
        double bound;
        std::uint64_t seq;
        conic::FixedVars fixed;
    };
    auto worse = [](const Node& a, const Node& b) {
        return a.bound < b.bound || (a.bound == b.bound && a.seq > b.seq);
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
    std::uint64_t seq = 0;
    open.push({std::numeric_limits<double>::infinity(), seq++, prefixed});

    // group id per binary for sibling lookup
    std::vector<int> group_of(static_cast<std::size_t>(prog.num_vars()), -1);
    for (std::size_t gi = 0; gi < bs.groups.size(); ++gi)
        for (std::int32_t id : bs.groups[gi]) group_of[static_cast<std::size_t>(id)] = static_cast<int>(gi);

    bool have_incumbent = false;
    double incumbent = -std::numeric_limits<double>::infinity();
    double stop_bound = -std::numeric_limits<double>::infinity();
    conic::Solution best;
    best.status = conic::SolveStatus::Infeasible;
    bool any_numfail = false;

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (have_incumbent) {
            if (node.bound <= incumbent + opts.prune_slack) continue;
            if (node.bound - incumbent <= opts.rel_gap * std::max(1.0, std::abs(incumbent))) {
                stop_bound = node.bound;
                break;
            }
        }

        conic::Solution sol = solve_node(node.fixed);
        if (sol.status == conic::SolveStatus::Unbounded) {
            res.solution = sol;
            return res;
        }
        if (sol.status == conic::SolveStatus::Infeasible) continue;

        std::vector<char> fixed_mask(static_cast<std::size_t>(prog.num_vars()), 0);
        for (const conic::FixedVar& f : node.fixed) fixed_mask[static_cast<std::size_t>(f.var.id)] = 1;

        if (sol.status == conic::SolveStatus::NumericalFailure) {
            ++res.node_failures;
            // a stalled relaxation cannot be bounded, but its subtree can
            // still be partitioned exactly: expand the first undecided group
            // (or loose binary) blindly under the inherited bound
            const std::vector<std::int32_t>* expand_group = nullptr;
            for (const auto& g : bs.groups) {
                bool decided = false;
                bool has_free = false;
                for (std::int32_t id : g) {
                    if (!fixed_mask[static_cast<std::size_t>(id)]) has_free = true;
                }
                for (const conic::FixedVar& f : node.fixed)
                    if (f.value == 1.0 && group_of[static_cast<std::size_t>(f.var.id)] ==
                                              group_of[static_cast<std::size_t>(g[0])])
                        decided = true;
                if (!decided && has_free) {
                    expand_group = &g;
                    break;
                }
            }
            if (expand_group) {
                ++res.branched_nodes;
                for (std::int32_t pick : *expand_group) {
                    if (fixed_mask[static_cast<std::size_t>(pick)]) continue;
                    conic::FixedVars fixed = node.fixed;
                    for (std::int32_t id : *expand_group)
                        if (!fixed_mask[static_cast<std::size_t>(id)])
                            fixed.push_back({conic::Var{id}, id == pick ? 1.0 : 0.0});
                    open.push({node.bound, seq++, std::move(fixed)});
                }
                continue;
            }
            std::int32_t loose_free = -1;
            for (std::int32_t id : bs.loose)
                if (!fixed_mask[static_cast<std::size_t>(id)]) {
                    loose_free = id;
                    break;
                }
            if (loose_free >= 0) {
                ++res.branched_nodes;
                for (double v : {1.0, 0.0}) {
                    conic::FixedVars fixed = node.fixed;
                    fixed.push_back({conic::Var{loose_free}, v});
                    open.push({node.bound, seq++, std::move(fixed)});
                }
                continue;
            }
            // fully fixed leaf failed: an unverifiable point is skipped
            any_numfail = true;
            continue;
        }
        if (have_incumbent && sol.objective <= incumbent + opts.prune_slack) continue;

        // most fractional free binary
        std::int32_t frac_var = -1;
        double frac_score = std::numeric_limits<double>::infinity();
        for (std::int32_t id : prog.binaries()) {
            if (fixed_mask[static_cast<std::size_t>(id)]) continue;
            const double v = sol.x[static_cast<std::size_t>(id)];
            if (detail::is_integral(v, opts.int_tol)) continue;
            const double score = std::abs(v - 0.5);
            if (score < frac_score) {
                frac_score = score;
                frac_var = id;
            }
        }

        if (frac_var < 0) {
            // integral: new incumbent
            incumbent = sol.objective;
            have_incumbent = true;
            best = std::move(sol);
            res.incumbent_trace.push_back(incumbent);
            continue;
        }

        ++res.branched_nodes;
        const int gi = group_of[static_cast<std::size_t>(frac_var)];
        // child: variable picked (whole group collapses)
        {
            conic::FixedVars fixed = node.fixed;
            fixed.push_back({conic::Var{frac_var}, 1.0});
            if (gi >= 0)
                for (std::int32_t id : bs.groups[static_cast<std::size_t>(gi)])
                    if (id != frac_var && !fixed_mask[static_cast<std::size_t>(id)])
                        fixed.push_back({conic::Var{id}, 0.0});
            open.push({sol.objective, seq++, std::move(fixed)});
        }
        // child: variable excluded
        {
            bool viable = true;
            if (gi >= 0) {
                // at least one sibling must stay available
                viable = false;
                for (std::int32_t id : bs.groups[static_cast<std::size_t>(gi)]) {
                    if (id == frac_var) continue;
                    if (!fixed_mask[static_cast<std::size_t>(id)]) {
                        viable = true;
                        break;
                    }
                    for (const conic::FixedVar& f : node.fixed)
                        if (f.var.id == id && f.value == 1.0) viable = true;
                    if (viable) break;
                }
            }
            if (viable) {
                conic::FixedVars fixed = node.fixed;
                fixed.push_back({conic::Var{frac_var}, 0.0});
                open.push({sol.objective, seq++, std::move(fixed)});
            }
        }
    }

    if (have_incumbent) {
        res.solution = std::move(best);
        res.certified_bound = std::max({incumbent, stop_bound, open.empty() ? incumbent : open.top().bound});
    } else {
        res.solution.status =
            any_numfail ? conic::SolveStatus::NumericalFailure : conic::SolveStatus::Infeasible;
    }
    return res;
}

}  // namespace vhetnet::mip
