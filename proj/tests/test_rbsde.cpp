#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "snellforge/errors.hpp"
#include "snellforge/laglad.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/rbsde.hpp"
#include "snellforge/snell.hpp"

#include "test_util.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace snellforge;

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

std::vector<double> test_driver(const LadlagProcess& xi) {
    std::vector<double> g(xi.at.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = 0.3 * xi.at[i] - 0.1;
    }
    return g;
}

} // namespace

TEST_CASE("a zero driver reduces to the plain envelope") {
    const FiniteFilteredSpace space = testutil::worked_space();
    const LadlagProcess xi = testutil::worked_reward(space);
    const RbsdeSolution sol =
        solve_with_driver_process(xi, std::vector<double>(7, 0.0), TerminalKind::Empty);
    const ValueProcesses vp = snell_backward(xi, TerminalKind::Empty);

    CHECK(sol.y.at == vp.v.at);
    CHECK(sol.y.pre == vp.v.pre);
    CHECK(sol.yplus == vp.vplus);
    CHECK(sol.integral == std::vector<double>(7, 0.0));
    CHECK(sol.residual == 0.0);
    CHECK(sol.parts.da == mertens_decompose(vp).da);
    CHECK(sol.parts.db == mertens_decompose(vp).db);
}

TEST_CASE("pure running gain with a flat obstacle") {
    const FiniteFilteredSpace space = binomial_space(1, 1.0);
    const LadlagProcess xi = make_process(space, {0, 0, 0}, {0, 0, 0});
    const RbsdeSolution sol =
        solve_with_driver_process(xi, std::vector<double>(3, 1.0), TerminalKind::Empty);

    CHECK(sol.y.at == std::vector<double>{1, 0, 0});
    CHECK(sol.y.pre == std::vector<double>{1, 0, 0});
    CHECK(sol.yplus == std::vector<double>{1, 0, 0});
    CHECK(sol.z == std::vector<double>{0, 0, 0});
    CHECK(sol.ortho == std::vector<double>{0, 0, 0});
    CHECK(sol.residual == 0.0);
    // Y + I is the constant 1, so the Snell side carries no reflection.
    CHECK(sol.integral == std::vector<double>{0, 1, 1});
    CHECK(sol.parts.da == std::vector<double>{0, 0, 0});
    CHECK(sol.parts.db == std::vector<double>{0, 0, 0});
    CHECK(sol.parts.dm == std::vector<double>{0, 0, 0});
}

TEST_CASE("solution matches the shifted envelope and the direct recursion") {
    for (const std::uint64_t seed : {7u, 29u, 643u, 90210u}) {
        const auto ri = testutil::random_instance(3, 3, seed);
        const FiniteFilteredSpace& space = *ri.instance.space;
        const LadlagProcess& xi = ri.instance.xi;
        const TerminalKind kind = ri.instance.terminal;
        const std::vector<double> g = test_driver(xi);
        const RbsdeSolution sol = solve_with_driver_process(xi, g, kind);

        CHECK(sol.residual <= 1e-10);

        SUBCASE("shifting by the accumulated driver gives a plain envelope") {
            std::vector<double> integral(space.node_count(), 0.0);
            for (int node = 1; node < space.node_count(); ++node) {
                const int p = space.parent_of(node);
                integral[node] = integral[p] + g[p] * space.dt();
            }
            CHECK(sup_diff(sol.integral, integral) == 0.0);

            std::vector<double> pre(space.node_count()), at(space.node_count());
            for (int node = 0; node < space.node_count(); ++node) {
                pre[node] = xi.pre[node] + integral[node];
                at[node] = xi.at[node] + integral[node];
            }
            const ValueProcesses vp = snell_backward(make_process(space, pre, at), kind);
            for (int node = 0; node < space.node_count(); ++node) {
                CHECK(std::abs(sol.y.at[node] - (vp.v.at[node] - integral[node])) <= 1e-12);
                CHECK(std::abs(sol.y.pre[node] - (vp.v.pre[node] - integral[node])) <= 1e-12);
            }
        }
        SUBCASE("direct clamped recursion agrees") {
            const testutil::ClampSolution oracle = testutil::floor_recursion(xi, g, kind);
            CHECK(sup_diff(sol.y.at, oracle.y.at) <= 1e-12);
            CHECK(sup_diff(sol.y.pre, oracle.y.pre) <= 1e-12);
            CHECK(sup_diff(sol.yplus, oracle.yplus) <= 1e-12);
        }
        SUBCASE("floor and recursion identities") {
            for (int node = 0; node < space.node_count(); ++node) {
                const bool at_terminal = space.time_of(node) == space.steps();
                if (!(kind == TerminalKind::Omega && at_terminal)) {
                    CHECK(sol.y.at[node] >= xi.at[node]);
                    CHECK(sol.y.at[node] == std::max(xi.at[node], sol.yplus[node]));
                }
                CHECK(sol.y.pre[node] >= xi.pre[node]);
            }
        }
    }
}

TEST_CASE("reflection operator") {
    const FiniteFilteredSpace space = testutil::worked_space();
    const LadlagProcess xi = testutil::worked_reward(space);

    SUBCASE("maps the reward to its envelope") {
        CHECK(ref_operator(xi, TerminalKind::Empty).at[0] == 5.0);
    }
    SUBCASE("is the identity on strong supermartingales") {
        const ValueProcesses vp = snell_backward(xi, TerminalKind::Empty);
        const LadlagProcess again = ref_operator(vp.v, TerminalKind::Empty);
        CHECK(again.at == vp.v.at);
        CHECK(again.pre == vp.v.pre);
    }
    SUBCASE("is monotone in the obstacle") {
        for (const std::uint64_t seed : {31u, 555u}) {
            const auto ri = testutil::random_instance(3, 2, seed);
            const FiniteFilteredSpace& sp = *ri.instance.space;
            const LadlagProcess& lo = ri.instance.xi;
            std::vector<double> pre = lo.pre, at = lo.at;
            for (double& v : pre) v += 0.75;
            for (double& v : at) v += 0.75;
            for (int node = 1; node < sp.node_count(); ++node) {
                at[node] += 0.25 * (node % 3);
            }
            const LadlagProcess hi = make_process(sp, pre, at);
            const LadlagProcess rlo = ref_operator(lo, ri.instance.terminal);
            const LadlagProcess rhi = ref_operator(hi, ri.instance.terminal);
            for (int node = 0; node < sp.node_count(); ++node) {
                CHECK(rhi.at[node] >= rlo.at[node] - 1e-14);
                CHECK(rhi.pre[node] >= rlo.pre[node] - 1e-14);
            }
        }
    }
}

TEST_CASE("frozen-driver iteration on a state-dependent gain") {
    const FiniteFilteredSpace space = binomial_space(1, 1.0);
    const LadlagProcess xi = make_process(space, {0, 0, 0}, {0, 2, 0});
    const LipschitzDriver driver = affine_driver(0.0, -0.1, 0.0);
    PicardParams params;
    const LipschitzSolveResult res = solve_lipschitz(xi, driver, TerminalKind::Empty, params);

    // Fixed point of y = 1 - 0.1 y.
    CHECK(std::abs(res.sol.y.at[0] - 1.0 / 1.1) <= 1e-9);
    CHECK(std::abs(res.sol.y.at[0] - (1.0 - 0.1 * res.sol.y.at[0])) <= 1e-10);
    CHECK(res.trace.iterations >= 2);
    CHECK(res.trace.sup_dist.back() <= params.tol);
    CHECK(res.sol.residual <= 1e-10);

    SUBCASE("a second starting point lands on the same solution") {
        const LipschitzSolveResult other =
            solve_lipschitz(xi, driver, TerminalKind::Empty, params, xi.at,
                            std::vector<double>(3, 0.0));
        CHECK(sup_diff(other.sol.y.at, res.sol.y.at) <= 10 * params.tol);
        CHECK(sup_diff(other.sol.y.pre, res.sol.y.pre) <= 10 * params.tol);
    }
    SUBCASE("recorded distances shrink along the schedule column in use") {
        const auto& k2 = res.trace.k2;
        REQUIRE(k2.size() >= 2);
        std::size_t col = 0;
        while (col < kBetaSchedule.size() && kBetaSchedule[col] != res.trace.beta_used) ++col;
        REQUIRE(col < kBetaSchedule.size());
        for (std::size_t j = 1; j + 1 < k2.size(); ++j) {
            CHECK(k2[j][col] < k2[j - 1][col]);
        }
    }
}

TEST_CASE("state-independent drivers converge in two sweeps") {
    const FiniteFilteredSpace space = testutil::worked_space();
    const LadlagProcess xi = testutil::worked_reward(space);
    const LipschitzSolveResult res =
        solve_lipschitz(xi, affine_driver(0.7, 0.0, 0.0), TerminalKind::Empty, PicardParams{});
    const RbsdeSolution direct =
        solve_with_driver_process(xi, std::vector<double>(7, 0.7), TerminalKind::Empty);
    CHECK(res.trace.iterations == 2);
    CHECK(res.sol.y.at == direct.y.at);
    CHECK(res.sol.y.pre == direct.y.pre);
}

TEST_CASE("iteration failure modes") {
    const FiniteFilteredSpace space = binomial_space(1, 1.0);
    const LadlagProcess xi = make_process(space, {0, 0, 0}, {0, 2, 0});

    SUBCASE("a large Lipschitz constant with a short budget fails loudly") {
        PicardParams params;
        params.max_iter = 2;
        CHECK_THROWS_WITH_AS(
            static_cast<void>(solve_lipschitz(xi, affine_driver(0.0, 50.0, 0.0),
                                              TerminalKind::Empty, params)),
            doctest::Contains("NoConvergence"), SolverError);
    }
    SUBCASE("drivers must declare a finite bound and an evaluator") {
        LipschitzDriver bad;
        CHECK_THROWS_WITH_AS(
            static_cast<void>(solve_lipschitz(xi, bad, TerminalKind::Empty, PicardParams{})),
            doctest::Contains("MissingLipschitzBound"), ValidationError);
        bad.eval = [](int, double y, double) { return y; };
        bad.bound = std::numeric_limits<double>::infinity();
        CHECK_THROWS_WITH_AS(
            static_cast<void>(solve_lipschitz(xi, bad, TerminalKind::Empty, PicardParams{})),
            doctest::Contains("MissingLipschitzBound"), ValidationError);
    }
    SUBCASE("an explicit beta is echoed in the trace") {
        PicardParams params;
        params.beta = 50.0;
        const auto res = solve_lipschitz(xi, affine_driver(0.0, -0.1, 0.0),
                                         TerminalKind::Empty, params);
        CHECK(res.trace.beta_used == 50.0);
    }
}

TEST_CASE("choice of the contraction weight") {
    CHECK(contracting_beta({{4, 9, 1}, {2, 10, 0.5}}) == 10.0);
    CHECK(contracting_beta({{4, 9, 1}, {5, 3, 0.5}}) == 100.0);
    CHECK(contracting_beta({{1, 1, 1}, {2, 2, 2}}) == 1000.0);
    CHECK(contracting_beta({{0, 0, 0}, {0, 0, 0}}) == 10.0);
    CHECK(contracting_beta({{3, 3, 3}}) == 10.0);
}

TEST_CASE("stability ratios between two driver processes") {
    const FiniteFilteredSpace space = binomial_space(1, 1.0);
    const LadlagProcess xi = make_process(space, {-5, -5, -5}, {-5, -5, -5});
    const std::vector<double> ga(3, 1.0), gb(3, 0.0);
    const RbsdeSolution sa = solve_with_driver_process(xi, ga, TerminalKind::Empty);
    const RbsdeSolution sb = solve_with_driver_process(xi, gb, TerminalKind::Empty);

    SUBCASE("equal drivers short-circuit") {
        const AprioriReport rep = apriori_diagnostic(sa, sa, ga, ga, 10.0, 0.5);
        CHECK(rep.drivers_equal);
        CHECK(rep.r1 == 0.0);
        CHECK(rep.r2 == 0.0);
    }
    SUBCASE("a state-free gap moves Y but neither martingale part") {
        const AprioriReport rep = apriori_diagnostic(sa, sb, ga, gb, 10.0, 0.5);
        CHECK(!rep.drivers_equal);
        CHECK(rep.dz2 == 0.0);
        CHECK(rep.dn2 == 0.0);
        CHECK(rep.r1 == 0.0);
        CHECK(rep.r1_within_eps2);
        CHECK(rep.r2 > 0.0);
        CHECK(std::isfinite(rep.r2));
    }
    SUBCASE("ratios are scale invariant") {
        const AprioriReport rep = apriori_diagnostic(sa, sb, ga, gb, 10.0, 0.5);
        const LadlagProcess xi2 = make_process(space, {-10, -10, -10}, {-10, -10, -10});
        const std::vector<double> ga2(3, 2.0), gb2(3, 0.0);
        const RbsdeSolution sa2 = solve_with_driver_process(xi2, ga2, TerminalKind::Empty);
        const RbsdeSolution sb2 = solve_with_driver_process(xi2, gb2, TerminalKind::Empty);
        const AprioriReport rep2 = apriori_diagnostic(sa2, sb2, ga2, gb2, 10.0, 0.5);
        CHECK(rep2.r1 == rep.r1);
        CHECK(std::abs(rep2.r2 - rep.r2) <= 1e-12 * std::abs(rep.r2));
    }
}

TEST_CASE("lipschitz solve on random instances stays feasible") {
    for (const std::uint64_t seed : {61u, 888u, 1729u}) {
        const auto ri = testutil::random_instance(3, 3, seed);
        const LadlagProcess& xi = ri.instance.xi;
        const TerminalKind kind = ri.instance.terminal;
        const auto res = solve_lipschitz(xi, affine_driver(0.2, -0.3, 0.1), kind, PicardParams{});
        CHECK(res.sol.residual <= 1e-10);
        const FiniteFilteredSpace& space = *ri.instance.space;
        for (int node = 0; node < space.node_count(); ++node) {
            const bool at_terminal = space.time_of(node) == space.steps();
            if (!(kind == TerminalKind::Omega && at_terminal)) {
                CHECK(res.sol.y.at[node] >= xi.at[node] - 1e-12);
            }
            CHECK(res.sol.y.pre[node] >= xi.pre[node] - 1e-12);
        }
    }
}
