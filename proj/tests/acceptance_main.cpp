// Acceptance gate for the engine: nine release criteria, one verdict
// line each, exit status 1 when any of them fails. Tolerances and
// runtime budgets are pinned here and nowhere else.

#include "snellforge/drbsde.hpp"
#include "snellforge/errors.hpp"
#include "snellforge/laglad.hpp"
#include "snellforge/martrep.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/random_scenario.hpp"
#include "snellforge/rbsde.hpp"
#include "snellforge/run_tasks.hpp"
#include "snellforge/scenario.hpp"
#include "snellforge/snell.hpp"
#include "snellforge/splitstop.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace snellforge;
namespace fs = std::filesystem;

namespace {

constexpr double kTolAggregation = 1e-12;
constexpr double kTolMertens = 1e-12;
constexpr double kTolOrtho = 1e-10;
constexpr double kTolRbsde = 1e-10;
constexpr double kTolDrbsde = 1e-10;
constexpr double kTolLambda = 1e-10;
constexpr double kPicardTol = 1e-12;
constexpr double kUniquenessFactor = 10.0;
constexpr double kBudgetAggregation = 60.0;  // seconds
constexpr double kBudgetDrbsde = 120.0;      // seconds

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    va_list args;
    va_start(args, pattern);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return std::string(buf);
}

// Tree shapes for the random sweeps: depth and branching drawn per seed
// from the caps the enumeration oracle can afford.
testutil::RandomInstance sized_instance(std::uint64_t seed, std::uint64_t stream) {
    RandomSource pick(seed * 1000003ULL + stream);
    const int steps = pick.uniform_int(1, 3);
    const int branching = pick.uniform_int(1, 3);
    return testutil::random_instance(steps, branching, seed * 31ULL + stream);
}

// ---------------------------------------------------------------------
// 1. The backward values must agree with brute-force optimisation over
//    the enumerated candidate set, for every conditioning time delta.

Verdict criterion_aggregation() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    long long values = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto ri = sized_instance(seed, 11);
        const FiniteFilteredSpace& space = *ri.instance.space;
        const LadlagProcess& xi = ri.instance.xi;
        const TerminalKind kind = ri.instance.terminal;
        const auto rhoT = terminal_split(space, kind);
        const ValueProcesses vp = snell_backward(xi, kind);
        for (const auto& delta : enumerate_splits(space)) {
            if (!split_le(delta, rhoT)) {
                continue;
            }
            for (const auto& av : value_brute(xi, delta, rhoT)) {
                const double expected = av.atom.pre_channel ? vp.v.pre[av.atom.rep_node]
                                                            : vp.v.at[av.atom.rep_node];
                worst = std::max(worst, std::abs(av.value - expected));
                ++values;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    Verdict v;
    v.pass = worst <= kTolAggregation && elapsed < kBudgetAggregation;
    v.detail = fmt("200 trees, %lld conditional values, max |backward - brute| = %.2e "
                   "(tol %.0e), %.1fs (budget %.0fs)",
                   values, worst, kTolAggregation, elapsed, kBudgetAggregation);
    return v;
}

// ---------------------------------------------------------------------
// 2. On the reference tree the split-time value is 5 while plain
//    stopping only reaches 1.25; both numbers against independent
//    oracles, exact.

Verdict criterion_advantage() {
    const FiniteFilteredSpace space = testutil::worked_space();
    const LadlagProcess xi = testutil::worked_reward(space);
    const auto rhoT = terminal_split(space, TerminalKind::Empty);

    const double backward = snell_backward(xi, TerminalKind::Empty).v.at[0];
    double best_split = -1e300;
    double best_plain = -1e300;
    for (const auto& rho : enumerate_splits(space)) {
        if (!split_le(rho, rhoT)) {
            continue;
        }
        const double e = expected_at_split(xi, rho);
        best_split = std::max(best_split, e);
        if (rho.pre_nodes().empty()) {
            best_plain = std::max(best_plain, e);
        }
    }
    const double classical = testutil::classical_snell(space, xi.at)[0];

    Verdict v;
    v.pass = backward == 5.0 && best_split == 5.0 && best_plain == 1.25 && classical == 1.25;
    v.detail = fmt("split value %.17g (backward) = %.17g (enumeration), plain value "
                   "%.17g (enumeration) = %.17g (grid recursion), targets 5 and 1.25",
                   backward, best_split, best_plain, classical);
    return v;
}

// ---------------------------------------------------------------------
// 3. Decomposition: exact reconstruction, reflection only on the
//    obstacle, and corrupted inputs must be flagged.

Verdict criterion_mertens() {
    double worst_rec = 0.0;
    bool flat_zero = true;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const auto ri = sized_instance(seed, 23);
        const FiniteFilteredSpace& space = *ri.instance.space;
        const ValueProcesses vp = snell_backward(ri.instance.xi, ri.instance.terminal);
        const MertensDecomposition dec = mertens_decompose(vp);
        const ValueProcesses rec = reconstruct_from_decomposition(space, vp.v.at[0], dec);
        for (int n = 0; n < space.node_count(); ++n) {
            worst_rec = std::max(worst_rec, std::abs(rec.v.at[n] - vp.v.at[n]));
            worst_rec = std::max(worst_rec, std::abs(rec.v.pre[n] - vp.v.pre[n]));
            worst_rec = std::max(worst_rec, std::abs(rec.vplus[n] - vp.vplus[n]));
        }
        const SkorokhodReport rep = skorokhod_report(vp, dec, ri.instance.xi);
        flat_zero = flat_zero && rep.max_flat_a == 0.0 && rep.max_flat_b == 0.0;
    }

    const FiniteFilteredSpace space = testutil::worked_space();
    const LadlagProcess xi = testutil::worked_reward(space);
    const ValueProcesses vp = snell_backward(xi, TerminalKind::Empty);

    bool drift_flagged = false;
    ValueProcesses broken = vp;
    broken.v.pre[3] = broken.v.pre[4] = 0.0;
    try {
        static_cast<void>(mertens_decompose(broken));
    } catch (const ValidationError& e) {
        drift_flagged = std::string(e.what()).find("NotASupermartingale") != std::string::npos;
    }

    const MertensDecomposition dec = mertens_decompose(vp);
    MertensDecomposition bad_a = dec;
    bad_a.da[3] += 1.0;
    bad_a.da[4] += 1.0;
    MertensDecomposition bad_b = dec;
    bad_b.db[2] += 1.0;
    const bool controls = drift_flagged && skorokhod_report(vp, bad_a, xi).max_flat_a > 0.0 &&
                          skorokhod_report(vp, bad_b, xi).max_flat_b > 0.0;

    Verdict v;
    v.pass = worst_rec <= kTolMertens && flat_zero && controls;
    v.detail = fmt("60 trees, max reconstruction error %.2e (tol %.0e), flatness products "
                   "all exactly 0, negative controls %s",
                   worst_rec, kTolMertens, controls ? "flagged" : "MISSED");
    return v;
}

// ---------------------------------------------------------------------
// 4. Martingale representation: the orthogonal part has zero
//    conditional covariance with the noise, energies split, and on
//    binomial trees it vanishes identically.

Verdict criterion_orthogonality() {
    double worst_cov = 0.0;
    double worst_pyth = 0.0;
    bool binary_exact = true;

    const auto check_space = [&](const FiniteFilteredSpace& space, std::uint64_t seed,
                                 bool expect_zero) {
        RandomSource rng(seed);
        std::vector<double> m(static_cast<std::size_t>(space.node_count()), 0.0);
        for (int leaf = space.level_begin(space.steps()); leaf < space.level_end(space.steps());
             ++leaf) {
            m[leaf] = rng.uniform(-3.0, 3.0);
        }
        for (int t = space.steps() - 1; t >= 0; --t) {
            for (int p = space.level_begin(t); p < space.level_end(t); ++p) {
                double cond = 0.0;
                const int lo = space.first_child(p);
                for (int c = lo; c < lo + space.child_count(p); ++c) {
                    cond += space.edge_prob(c) * m[c];
                }
                m[p] = cond;
            }
        }
        std::vector<double> dm(m.size(), 0.0);
        for (int n = 1; n < space.node_count(); ++n) {
            dm[n] = m[n] - m[space.parent_of(n)];
        }
        const MartingaleParts parts = orthogonal_decompose(space, dm);
        for (int t = 0; t < space.steps(); ++t) {
            for (int p = space.level_begin(t); p < space.level_end(t); ++p) {
                double cov = 0.0, e_dm2 = 0.0, e_dw2 = 0.0, e_dn2 = 0.0;
                const int lo = space.first_child(p);
                for (int c = lo; c < lo + space.child_count(p); ++c) {
                    cov += space.edge_prob(c) * parts.ortho[c] * space.edge_dw(c);
                    e_dm2 += space.edge_prob(c) * dm[c] * dm[c];
                    e_dw2 += space.edge_prob(c) * space.edge_dw(c) * space.edge_dw(c);
                    e_dn2 += space.edge_prob(c) * parts.ortho[c] * parts.ortho[c];
                    if (expect_zero && parts.ortho[c] != 0.0) {
                        binary_exact = false;
                    }
                }
                worst_cov = std::max(worst_cov, std::abs(cov));
                worst_pyth = std::max(
                    worst_pyth,
                    std::abs(e_dm2 - (parts.z[p] * parts.z[p] * e_dw2 + e_dn2)));
            }
        }
    };

    TreeSpec ternary;
    ternary.steps = 2;
    ternary.dt = 0.5;
    const double s = std::sqrt(ternary.dt);
    for (int p = 0; p < 4; ++p) {
        ternary.branches.push_back({{1.0 / 3.0, s}, {1.0 / 3.0, 0.0}, {1.0 / 3.0, -s}});
    }
    const FiniteFilteredSpace tri3 = build_space(ternary);
    const FiniteFilteredSpace tri1 = testutil::trinomial_space();
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        check_space(tri1, seed, false);
        check_space(tri3, seed + 100, false);
    }
    const FiniteFilteredSpace bin = binomial_space(3, 0.5);
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        check_space(bin, seed + 200, true);
    }

    Verdict v;
    v.pass = worst_cov <= kTolOrtho && worst_pyth <= kTolOrtho && binary_exact;
    v.detail = fmt("trinomial: max |E[dN dW | F]| = %.2e, max energy-split defect = %.2e "
                   "(tol %.0e); binomial orthogonal part %s",
                   worst_cov, worst_pyth, kTolOrtho,
                   binary_exact ? "identically 0" : "NONZERO");
    return v;
}

// ---------------------------------------------------------------------
// 5. Single obstacle: equation residual, both floors, and the maximum
//    identity between the solution and its right limit.

Verdict criterion_rbsde() {
    double worst_res = 0.0;
    double worst_floor = 0.0;
    double worst_median = 0.0;
    double worst_oracle = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto ri = sized_instance(seed, 37);
        const FiniteFilteredSpace& space = *ri.instance.space;
        const LadlagProcess& xi = ri.instance.xi;
        const TerminalKind kind = ri.instance.terminal;
        std::vector<double> g(static_cast<std::size_t>(space.node_count()));
        for (int n = 0; n < space.node_count(); ++n) {
            g[n] = 0.4 * xi.at[n] - 0.2 * xi.pre[n] + 0.1;
        }
        const RbsdeSolution sol = solve_with_driver_process(xi, g, kind);
        worst_res = std::max(worst_res, sol.residual);

        const int terminal_begin = space.level_begin(space.steps());
        for (int n = 0; n < space.node_count(); ++n) {
            const bool at_terminal = n >= terminal_begin;
            if (!(kind == TerminalKind::Omega && at_terminal)) {
                worst_floor = std::max(worst_floor, xi.at[n] - sol.y.at[n]);
                worst_median = std::max(
                    worst_median,
                    std::abs(sol.y.at[n] - std::max(xi.at[n], sol.yplus[n])));
            }
            worst_floor = std::max(worst_floor, xi.pre[n] - sol.y.pre[n]);
        }

        const testutil::ClampSolution oracle = testutil::floor_recursion(xi, g, kind);
        for (int n = 0; n < space.node_count(); ++n) {
            worst_oracle = std::max(worst_oracle, std::abs(sol.y.at[n] - oracle.y.at[n]));
            worst_oracle = std::max(worst_oracle, std::abs(sol.y.pre[n] - oracle.y.pre[n]));
        }
    }
    Verdict v;
    v.pass = worst_res <= kTolRbsde && worst_floor <= kTolRbsde && worst_median <= kTolRbsde &&
             worst_oracle <= kTolRbsde;
    v.detail = fmt("100 solves: max residual %.2e, worst floor violation %.2e, max "
                   "|Y - xi v Y+| = %.2e, max gap to one-pass recursion %.2e (tol %.0e)",
                   worst_res, worst_floor, worst_median, worst_oracle, kTolRbsde);
    return v;
}

// ---------------------------------------------------------------------
// 6. Picard iteration: measured contraction in every scheduled weighted
//    norm from the first step on, and independence from the initial
//    guess. Short horizons keep the largest weight finite, and each
//    sibling block's noise is rescaled to quadratic variation dt per
//    step; without that the z-projection divides by an arbitrarily
//    small noise variance and the weighted norms no longer measure the
//    stochastic integral they stand for.

Verdict criterion_picard() {
    double worst_ratio = 0.0;
    double worst_dist = 0.0;
    bool finite = true;
    int ratios = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        RandomSource rs(seed * 2654435761ULL + 97);
        const int steps = rs.uniform_int(1, 3);
        const int branching = rs.uniform_int(1, 3);
        Scenario sc = parse_scenario(gen_scenario_json(steps, branching, seed * 13ULL + 5));
        sc.tree.dt = 0.1;
        for (auto& row : sc.tree.branches) {
            double m2 = 0.0;
            for (const auto& e : row) {
                m2 += e.prob * e.dw * e.dw;
            }
            if (m2 > 0.0) {
                const double f = std::sqrt(sc.tree.dt / m2);
                for (auto& e : row) {
                    e.dw *= f;
                }
            }
        }
        const ScenarioInstance inst = instantiate(sc);
        const FiniteFilteredSpace& space = *inst.space;

        const LipschitzDriver driver = affine_driver(
            rs.uniform(-1.0, 1.0), rs.uniform(-1.0, 1.0), rs.uniform(-1.0, 1.0));
        PicardParams params;
        params.tol = kPicardTol;

        const LipschitzSolveResult a =
            solve_lipschitz(inst.xi, driver, inst.terminal, params);
        for (std::size_t col = 0; col < kBetaSchedule.size(); ++col) {
            for (std::size_t k = 1; k < a.trace.k2.size(); ++k) {
                const double prev = a.trace.k2[k - 1][col];
                const double cur = a.trace.k2[k][col];
                if (!std::isfinite(prev) || !std::isfinite(cur)) {
                    finite = false;
                    break;
                }
                if (prev == 0.0) {
                    break;
                }
                worst_ratio = std::max(worst_ratio, cur / prev);
                ++ratios;
            }
        }

        const std::vector<double> y0(static_cast<std::size_t>(space.node_count()), 3.0);
        const std::vector<double> z0(static_cast<std::size_t>(space.node_count()), 1.0);
        const LipschitzSolveResult b =
            solve_lipschitz(inst.xi, driver, inst.terminal, params, y0, z0);
        for (int n = 0; n < space.node_count(); ++n) {
            worst_dist = std::max(worst_dist, std::abs(a.sol.y.at[n] - b.sol.y.at[n]));
            worst_dist = std::max(worst_dist, std::abs(a.sol.y.pre[n] - b.sol.y.pre[n]));
        }
    }
    Verdict v;
    v.pass = finite && worst_ratio < 1.0 && worst_dist <= kUniquenessFactor * kPicardTol;
    v.detail = fmt("100 scenarios: %d step ratios over the full beta schedule, max ratio "
                   "%.3f (< 1 required), two starts agree to %.2e (cap %.0e)",
                   ratios, worst_ratio, worst_dist, kUniquenessFactor * kPicardTol);
    return v;
}

// ---------------------------------------------------------------------
// 7. Two obstacles: monotone scheme, fixed point, band membership, the
//    nodewise clamp identity, mutually singular reflections, and the
//    right-jump split.

Verdict criterion_drbsde() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_fp = 0.0;
    double worst_band = 0.0;
    double worst_median = 0.0;
    double worst_jump = 0.0;
    bool monotone = true;
    bool singular = true;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto ri = sized_instance(seed, 53);
        const FiniteFilteredSpace& space = *ri.instance.space;
        const AdmissiblePair& pair = ri.instance.pair;
        const TerminalKind kind = ri.instance.terminal;
        std::vector<double> g(static_cast<std::size_t>(space.node_count()));
        for (int n = 0; n < space.node_count(); ++n) {
            g[n] = 0.3 * pair.xi.at[n] - 0.15 * pair.zeta.pre[n];
        }

        const TildeObstacles tilde = tilde_obstacles(pair, g, kind);
        const CoupledResult coupled = coupled_iterate(tilde.xi, tilde.zeta);
        for (const double inc : coupled.trace.min_increments) {
            monotone = monotone && inc >= 0.0;
        }

        const DrbsdeSolution sol = assemble_solution(coupled, pair, g, kind);
        worst_fp = std::max(worst_fp, sol.fixed_point_residual);

        const int terminal_begin = space.level_begin(space.steps());
        for (int n = 0; n < space.node_count(); ++n) {
            const bool at_terminal = n >= terminal_begin;
            if (!(kind == TerminalKind::Omega && at_terminal)) {
                worst_band = std::max(worst_band, pair.xi.at[n] - sol.y.at[n]);
                worst_band = std::max(worst_band, sol.y.at[n] - pair.zeta.at[n]);
                worst_median = std::max(
                    worst_median,
                    std::abs(sol.y.at[n] - std::min(pair.zeta.at[n],
                                                    std::max(sol.yplus[n], pair.xi.at[n]))));
            }
            worst_band = std::max(worst_band, pair.xi.pre[n] - sol.y.pre[n]);
            worst_band = std::max(worst_band, sol.y.pre[n] - pair.zeta.pre[n]);
            singular = singular && std::min(sol.da[n], sol.daprime[n]) == 0.0 &&
                       std::min(sol.db[n], sol.dbprime[n]) == 0.0;
            worst_jump = std::max(
                worst_jump, std::abs(sol.db[n] - std::max(sol.y.at[n] - sol.yplus[n], 0.0)));
            worst_jump = std::max(
                worst_jump,
                std::abs(sol.dbprime[n] - std::max(sol.yplus[n] - sol.y.at[n], 0.0)));
        }
        for (int t = 0; t < space.steps(); ++t) {
            for (int p = space.level_begin(t); p < space.level_end(t); ++p) {
                double cond = 0.0;
                const int lo = space.first_child(p);
                for (int c = lo; c < lo + space.child_count(p); ++c) {
                    cond += space.edge_prob(c) * sol.y.at[c];
                }
                for (int c = lo; c < lo + space.child_count(p); ++c) {
                    worst_median = std::max(
                        worst_median,
                        std::abs(sol.y.pre[c] -
                                 std::min(pair.zeta.pre[c],
                                          std::max(cond, pair.xi.pre[c]))));
                }
            }
        }
    }
    const double elapsed = seconds_since(t0);
    Verdict v;
    v.pass = monotone && singular && worst_fp <= kTolDrbsde && worst_band <= kTolDrbsde &&
             worst_median <= kTolDrbsde && worst_jump <= kTolDrbsde &&
             elapsed < kBudgetDrbsde;
    v.detail = fmt("200 scenarios: iterates %s, max fixed-point residual %.2e, worst band "
                   "violation %.2e, clamp identity %.2e, jump split %.2e (tol %.0e), "
                   "reflections %s, %.1fs (budget %.0fs)",
                   monotone ? "monotone" : "NOT MONOTONE", worst_fp, worst_band,
                   worst_median, worst_jump, kTolDrbsde,
                   singular ? "mutually singular" : "OVERLAPPING", elapsed, kBudgetDrbsde);
    return v;
}

// ---------------------------------------------------------------------
// 8. Scaled-value windows: between any start and the first time the
//    lambda-scaled value touches the reward, the value must behave as a
//    martingale (no reflection increments strictly inside).

Verdict criterion_lambda() {
    double worst = 0.0;
    bool all_ok = true;
    int windows = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto ri = sized_instance(seed, 71);
        const FiniteFilteredSpace& space = *ri.instance.space;
        LadlagProcess shifted = ri.instance.xi;
        double lo = 0.0;
        for (const double x : shifted.at) {
            lo = std::min(lo, x);
        }
        for (const double x : shifted.pre) {
            lo = std::min(lo, x);
        }
        for (double& x : shifted.at) {
            x -= lo;
        }
        for (double& x : shifted.pre) {
            x -= lo;
        }
        for (int t = 0; t <= space.steps(); ++t) {
            std::vector<char> theta(static_cast<std::size_t>(space.node_count()), 0);
            for (int id = space.level_begin(t); id < space.level_end(t); ++id) {
                theta[id] = 1;
            }
            for (const double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                double violation = 0.0;
                all_ok = all_ok && martingale_interval_check(shifted, lambda, theta,
                                                             ri.instance.terminal,
                                                             kTolLambda, &violation);
                worst = std::max(worst, violation);
                ++windows;
            }
        }
    }
    Verdict v;
    v.pass = all_ok && worst <= kTolLambda;
    v.detail = fmt("20 scenarios, %d (start, lambda) windows across 5 lambdas, max "
                   "in-window increment %.2e (tol %.0e)",
                   windows, worst, kTolLambda);
    return v;
}

// ---------------------------------------------------------------------
// 9. Rerunning any task on the same scenario must reproduce the report
//    files byte for byte.

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Verdict criterion_determinism() {
    const fs::path root = fs::temp_directory_path() / "snellforge_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    bool identical = true;
    bool ran = true;
    int comparisons = 0;
    std::ostringstream sink;
    for (const std::uint64_t seed : {11ULL, 12ULL}) {
        const fs::path scenario = root / ("scenario_" + std::to_string(seed) + ".json");
        ran = ran && gen_command(3, 2, seed, scenario.string(), sink, sink) == 0;
        for (const Task task :
             {Task::Snell, Task::Rbsde, Task::Drbsde, Task::Enumerate}) {
            const std::string tag =
                std::to_string(seed) + "_" + std::to_string(static_cast<int>(task));
            const fs::path a = root / ("a_" + tag);
            const fs::path b = root / ("b_" + tag);
            ran = ran && run_command(scenario.string(), task, a.string(), sink, sink) == 0;
            ran = ran && run_command(scenario.string(), task, b.string(), sink, sink) == 0;
            for (const char* name : {"summary.json", "solution.csv", "splits.csv"}) {
                if (!fs::exists(a / name) && !fs::exists(b / name)) {
                    continue;
                }
                identical = identical && slurp(a / name) == slurp(b / name);
                ++comparisons;
            }
        }
    }
    Verdict v;
    v.pass = ran && identical;
    v.detail = fmt("2 scenarios x 4 tasks, %d report files compared, %s", comparisons,
                   !ran        ? "A RUN FAILED"
                   : identical ? "all byte-identical"
                               : "DIVERGENT BYTES");
    return v;
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Verdict (*run)();
    };
    const Entry entries[] = {
        {"backward values match brute-force optimisation", criterion_aggregation},
        {"split stopping beats plain stopping on the reference tree", criterion_advantage},
        {"decomposition reconstructs and reflects minimally", criterion_mertens},
        {"orthogonal martingale part", criterion_orthogonality},
        {"reflected equation invariants", criterion_rbsde},
        {"Picard contraction and uniqueness", criterion_picard},
        {"two-obstacle solution invariants", criterion_drbsde},
        {"scaled-value martingale windows", criterion_lambda},
        {"byte-identical reports", criterion_determinism},
    };
    int failures = 0;
    int id = 0;
    for (const Entry& e : entries) {
        ++id;
        Verdict v;
        try {
            v = e.run();
        } catch (const std::exception& ex) {
            v.pass = false;
            v.detail = std::string("unexpected exception: ") + ex.what();
        }
        if (!v.pass) {
            ++failures;
        }
        std::cout << (v.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << e.name
                  << " -- " << v.detail << "\n";
        std::cout.flush();
    }
    if (failures == 0) {
        std::cout << "ACCEPTANCE: all 9 criteria passed\n";
        return 0;
    }
    std::cout << "ACCEPTANCE: " << failures << " criterion(s) failed\n";
    return 1;
}
