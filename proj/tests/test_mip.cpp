#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "vhetnet/common.hpp"
#include "vhetnet/conic/builders.hpp"
#include "vhetnet/mip.hpp"
#include "vhetnet/scenario.hpp"

using namespace vhetnet;
using conic::LinExpr;
using conic::Program;
using conic::SolveStatus;
using conic::Var;

namespace {

// Station pick with a shared budget over the picks: small MISOCP whose root
// relaxation is usually fractional.
struct PickInstance {
    Program prog;
    std::vector<std::vector<Var>> a;  // a[u][s]
    std::vector<Var> y;
};

PickInstance make_pick_instance(int stations, int ues, Rng& rng) {
    PickInstance inst;
    Program& prog = inst.prog;
    std::vector<std::vector<double>> gain(ues, std::vector<double>(stations));
    std::vector<std::vector<double>> cost(ues, std::vector<double>(stations));
    for (int u = 0; u < ues; ++u)
        for (int s = 0; s < stations; ++s) {
            gain[u][s] = rng.uniform(0.2, 4.0);
            cost[u][s] = rng.uniform(0.5, 1.5);
        }
    double budget = 0.0;
    for (int u = 0; u < ues; ++u) {
        double lo = cost[u][0];
        for (int s = 1; s < stations; ++s) lo = std::min(lo, cost[u][s]);
        budget += lo;
    }
    budget += 0.35;

    LinExpr obj;
    LinExpr spend;
    for (int u = 0; u < ues; ++u) {
        inst.a.emplace_back();
        LinExpr pick_sum;
        LinExpr supply;
        for (int s = 0; s < stations; ++s) {
            Var v = prog.add_var("a" + std::to_string(u) + "_" + std::to_string(s));
            prog.mark_binary(v);
            inst.a.back().push_back(v);
            pick_sum = pick_sum + LinExpr(v);
            supply = supply + gain[u][s] * LinExpr(v);
            spend = spend + cost[u][s] * LinExpr(v);
        }
        prog.add_zero(pick_sum - 1.0, "pick" + std::to_string(u));
        Var yu = prog.add_var("y" + std::to_string(u));
        inst.y.push_back(yu);
        prog.add_nonneg(LinExpr(yu), "ypos" + std::to_string(u));
        conic::add_hyperbolic(prog, LinExpr(yu), supply, LinExpr(1.0), "rate" + std::to_string(u));
        obj = obj + LinExpr(yu);
    }
    prog.add_nonneg(budget - spend, "budget");
    prog.set_objective_maximize(obj);
    return inst;
}

std::vector<int> extract_serving(const PickInstance& inst, const conic::Solution& sol) {
    std::vector<int> serving;
    for (const auto& row : inst.a) {
        int pick = -1;
        for (std::size_t s = 0; s < row.size(); ++s)
            if (sol.x[static_cast<std::size_t>(row[s].id)] > 0.5) pick = static_cast<int>(s);
        REQUIRE(pick >= 0);
        serving.push_back(pick);
    }
    return serving;
}

}  // namespace

TEST_CASE("enumerate_associations counts and uniqueness") {
    CHECK(mip::enumerate_associations(2, 1).size() == 2);
    CHECK(mip::enumerate_associations(3, 2).size() == 9);
    auto all = mip::enumerate_associations(2, 4);
    CHECK(all.size() == 16);
    std::set<std::vector<int>> seen;
    for (const Association& assoc : all) {
        assoc.validate();
        std::vector<int> key;
        for (int u = 0; u < assoc.num_ues(); ++u) key.push_back(assoc.serving_station(u));
        seen.insert(key);
    }
    CHECK(seen.size() == 16);
}

TEST_CASE("enumerate_associations rejects counts beyond the cap") {
    CHECK_THROWS_WITH(mip::enumerate_associations(4, 8),
                      Catch::Matchers::ContainsSubstring("BranchAndBound"));
    CHECK_NOTHROW(mip::enumerate_associations(4, 6));  // 4096 exactly
}

TEST_CASE("heuristic_association picks the strongest link, ties to lowest index") {
    ScenarioConfig cfg = desk_scenario();
    cfg.seed = 77;
    Rng place_rng(cfg.seed);
    Placement placement = build_placement(cfg, place_rng);
    Rng chan_rng(mix_seed(cfg.seed, 1));
    ChannelSet channels = sample_channel_set(cfg, placement, chan_rng);
    Association assoc = mip::heuristic_association(channels);
    assoc.validate();
    for (int u = 0; u < cfg.num_ues; ++u) {
        const int pick = assoc.serving_station(u);
        const double pick_gain = channels.station(pick).col(u).squaredNorm();
        for (int s = 0; s < channels.num_stations(); ++s) {
            const double g = channels.station(s).col(u).squaredNorm();
            if (s < pick) CHECK(g < pick_gain);
            CHECK(g <= pick_gain + 1e-18);
        }
    }
}

TEST_CASE("branch and bound matches exhaustive on a 1-UE 2-station instance") {
    Rng rng(41);
    PickInstance inst = make_pick_instance(2, 1, rng);
    mip::MisocpOptions ex;
    ex.mode = mip::AssociationMode::Exhaustive;
    mip::MisocpOptions bb;
    bb.mode = mip::AssociationMode::BranchAndBound;
    auto re = mip::solve_misocp(inst.prog, ex);
    auto rb = mip::solve_misocp(inst.prog, bb);
    REQUIRE(re.solution.status == SolveStatus::Optimal);
    REQUIRE(rb.solution.status == SolveStatus::Optimal);
    CHECK(std::abs(re.solution.objective - rb.solution.objective) <=
          1e-6 * std::max(1.0, std::abs(re.solution.objective)));
    CHECK(extract_serving(inst, re.solution) == extract_serving(inst, rb.solution));
}

TEST_CASE("branch and bound equals the exhaustive oracle on random instances") {
    for (int trial = 0; trial < 12; ++trial) {
        Rng rng(mix_seed(900, static_cast<std::uint64_t>(trial)));
        PickInstance inst = make_pick_instance(2, 3, rng);
        mip::MisocpOptions ex;
        ex.mode = mip::AssociationMode::Exhaustive;
        mip::MisocpOptions bb;
        bb.mode = mip::AssociationMode::BranchAndBound;
        auto re = mip::solve_misocp(inst.prog, ex);
        auto rb = mip::solve_misocp(inst.prog, bb);
        INFO("trial " << trial);
        REQUIRE(re.solution.status == SolveStatus::Optimal);
        REQUIRE(rb.solution.status == SolveStatus::Optimal);
        CHECK(std::abs(re.solution.objective - rb.solution.objective) <=
              1e-6 * std::max(1.0, std::abs(re.solution.objective)));
        CHECK(extract_serving(inst, re.solution) == extract_serving(inst, rb.solution));
        CHECK(rb.branched_nodes <= 8 - 1);
        for (std::size_t i = 1; i < rb.incumbent_trace.size(); ++i)
            CHECK(rb.incumbent_trace[i] >= rb.incumbent_trace[i - 1]);
        CHECK(rb.certified_bound >= rb.solution.objective - 1e-9);
        CHECK(rb.certified_bound - rb.solution.objective <=
              1e-6 * std::max(1.0, std::abs(rb.solution.objective)) + 1e-9);
    }
}

TEST_CASE("fractional root forces branching and lands on the integral optimum") {
    Program prog;
    Var a1 = prog.add_var("a1");
    Var a2 = prog.add_var("a2");
    prog.mark_binary(a1);
    prog.mark_binary(a2);
    prog.add_zero(LinExpr(a1) + LinExpr(a2) - 1.0, "pick");
    Var x = prog.add_var("x");
    prog.add_nonneg(2.0 * LinExpr(a1) - LinExpr(x), "cap1");
    prog.add_nonneg(2.0 * LinExpr(a2) - LinExpr(x), "cap2");
    prog.add_nonneg(LinExpr(x), "xpos");
    prog.set_objective_maximize(LinExpr(x));

    mip::MisocpOptions bb;
    bb.mode = mip::AssociationMode::BranchAndBound;
    auto rb = mip::solve_misocp(prog, bb);
    REQUIRE(rb.solution.status == SolveStatus::Optimal);
    CHECK(rb.solution.objective == Catch::Approx(0.0).margin(1e-7));
    CHECK(rb.branched_nodes == 1);
}

TEST_CASE("all binaries pre-fixed solves exactly one relaxation") {
    Rng rng(7);
    PickInstance inst = make_pick_instance(2, 2, rng);
    conic::FixedVars fixed;
    for (const auto& row : inst.a) {
        fixed.push_back({row[0], 1.0});
        for (std::size_t s = 1; s < row.size(); ++s) fixed.push_back({row[s], 0.0});
    }
    for (mip::AssociationMode mode : {mip::AssociationMode::BranchAndBound,
                                      mip::AssociationMode::Exhaustive,
                                      mip::AssociationMode::HeuristicFixed}) {
        mip::MisocpOptions opts;
        opts.mode = mode;
        auto r = mip::solve_misocp(inst.prog, opts, fixed);
        INFO(mip::to_string(mode));
        REQUIRE(r.solution.status == SolveStatus::Optimal);
        CHECK(r.relaxations_solved == 1);
        CHECK(r.branched_nodes == 0);
    }
}

TEST_CASE("prefixed assignments are honored by branch and bound") {
    Rng rng(13);
    PickInstance inst = make_pick_instance(2, 3, rng);
    conic::FixedVars fixed{{inst.a[0][1], 1.0}, {inst.a[0][0], 0.0}};
    mip::MisocpOptions bb;
    bb.mode = mip::AssociationMode::BranchAndBound;
    auto r = mip::solve_misocp(inst.prog, bb, fixed);
    REQUIRE(r.solution.status == SolveStatus::Optimal);
    CHECK(extract_serving(inst, r.solution)[0] == 1);
}

TEST_CASE("infeasible root returns Infeasible without branching") {
    Program prog;
    Var a1 = prog.add_var("a1");
    Var a2 = prog.add_var("a2");
    prog.mark_binary(a1);
    prog.mark_binary(a2);
    prog.add_zero(LinExpr(a1) + LinExpr(a2) - 1.0, "pick");
    Var x = prog.add_var("x");
    prog.add_nonneg(LinExpr(a1) + LinExpr(a2) - LinExpr(x), "cap");  // x <= 1
    prog.add_nonneg(LinExpr(x) - 5.0, "floor");                      // x >= 5
    prog.set_objective_maximize(LinExpr(x));

    for (mip::AssociationMode mode :
         {mip::AssociationMode::BranchAndBound, mip::AssociationMode::Exhaustive}) {
        mip::MisocpOptions opts;
        opts.mode = mode;
        auto r = mip::solve_misocp(prog, opts);
        INFO(mip::to_string(mode));
        CHECK(r.solution.status == SolveStatus::Infeasible);
        CHECK(r.branched_nodes == 0);
    }
}

TEST_CASE("unbounded relaxation is reported as Unbounded") {
    Program prog;
    Var a1 = prog.add_var("a1");
    Var a2 = prog.add_var("a2");
    prog.mark_binary(a1);
    prog.mark_binary(a2);
    prog.add_zero(LinExpr(a1) + LinExpr(a2) - 1.0, "pick");
    Var x = prog.add_var("x");
    prog.add_nonneg(LinExpr(x), "xpos");
    prog.set_objective_maximize(LinExpr(x));
    mip::MisocpOptions bb;
    bb.mode = mip::AssociationMode::BranchAndBound;
    auto r = mip::solve_misocp(prog, bb);
    CHECK(r.solution.status == SolveStatus::Unbounded);
}

TEST_CASE("exhaustive mode refuses instances beyond the cap") {
    Program prog;
    std::vector<Var> vars;
    for (int u = 0; u < 13; ++u) {
        LinExpr sum;
        for (int s = 0; s < 2; ++s) {
            Var v = prog.add_var("a" + std::to_string(u) + "_" + std::to_string(s));
            prog.mark_binary(v);
            sum = sum + LinExpr(v);
            vars.push_back(v);
        }
        prog.add_zero(sum - 1.0, "pick" + std::to_string(u));
    }
    LinExpr obj;
    for (Var v : vars) obj = obj + LinExpr(v);
    prog.set_objective_maximize(obj);  // 2^13 = 8192 > 4096
    mip::MisocpOptions ex;
    ex.mode = mip::AssociationMode::Exhaustive;
    CHECK_THROWS_WITH(mip::solve_misocp(prog, ex),
                      Catch::Matchers::ContainsSubstring("BranchAndBound"));
}
