#include "snellforge/run_tasks.hpp"

#include "snellforge/drbsde.hpp"
#include "snellforge/errors.hpp"
#include "snellforge/laglad.hpp"
#include "snellforge/martrep.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/random_scenario.hpp"
#include "snellforge/rbsde.hpp"
#include "snellforge/snell.hpp"
#include "snellforge/splitstop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace snellforge {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Task parse_task(const std::string& name) {
    if (name == "snell") return Task::Snell;
    if (name == "rbsde") return Task::Rbsde;
    if (name == "drbsde") return Task::Drbsde;
    if (name == "enumerate") return Task::Enumerate;
    throw ValidationError("UnknownTask",
                          "task must be snell, rbsde, drbsde or enumerate, got '" + name + "'");
}

std::uint64_t enumeration_cap() {
    const char* raw = std::getenv("SNELLFORGE_ENUM_CAP");
    if (raw == nullptr || *raw == '\0') {
        return kDefaultEnumerationCap;
    }
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(raw, &end, 10);
    if (end == raw || *end != '\0' || parsed == 0) {
        return kDefaultEnumerationCap;
    }
    return static_cast<std::uint64_t>(parsed);
}

namespace {

const char* task_name(Task task) {
    switch (task) {
    case Task::Snell: return "snell";
    case Task::Rbsde: return "rbsde";
    case Task::Drbsde: return "drbsde";
    case Task::Enumerate: return "enumerate";
    }
    return "?";
}

void print_error(std::ostream& err, const char* family, const std::string& code,
                 const std::string& message) {
    OrderedJson diag = OrderedJson::object();
    diag["error"] = family;
    diag["code"] = code;
    diag["message"] = message;
    err << diag.dump() << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("FileNotWritable", "cannot open '" + path + "' for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw ValidationError("FileNotWritable", "short write to '" + path + "'");
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("FileNotReadable", "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

PicardParams picard_params(const Scenario& sc) {
    PicardParams params;
    params.beta = sc.solver.beta;
    params.tol = sc.solver.tol;
    params.max_iter = sc.solver.max_iter;
    return params;
}

OrderedJson picard_json(const PicardTrace& trace) {
    OrderedJson pj = OrderedJson::object();
    pj["iterations"] = trace.iterations;
    pj["beta_used"] = trace.beta_used;
    pj["betas"] = OrderedJson::array({kBetaSchedule[0], kBetaSchedule[1], kBetaSchedule[2]});
    pj["sup_steps"] = trace.sup_dist;
    OrderedJson rows = OrderedJson::array();
    for (const auto& row : trace.k2) {
        rows.push_back(OrderedJson::array({row[0], row[1], row[2]}));
    }
    pj["k2"] = rows;
    return pj;
}

struct NumberColumn {
    std::string name;
    std::vector<double> values;
};

struct Artifacts {
    OrderedJson summary;
    std::vector<NumberColumn> solution;
    bool has_splits = false;
    std::string splits_csv;
};

std::string solution_csv_text(const std::vector<NumberColumn>& cols) {
    std::string text;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i > 0) text += ',';
        text += cols[i].name;
    }
    text += '\n';
    const std::size_t rows = cols.empty() ? 0 : cols.front().values.size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i > 0) text += ',';
            text += format_number(cols[i].values[r]);
        }
        text += '\n';
    }
    return text;
}

std::string join_ids(const std::vector<int>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

OrderedJson summary_header(const Scenario& sc, const FiniteFilteredSpace& space, Task task) {
    OrderedJson s = OrderedJson::object();
    s["task"] = task_name(task);
    s["terminal"] = sc.terminal == TerminalKind::Omega ? "omega" : "empty";
    s["steps"] = space.steps();
    s["nodes"] = space.node_count();
    s["leaves"] = space.leaf_count();
    s["driver"] = sc.has_driver ? sc.driver.kind : "none";
    s["seed"] = sc.seed;
    return s;
}

std::vector<NumberColumn> node_columns(const FiniteFilteredSpace& space) {
    const int n = space.node_count();
    NumberColumn node{"node", std::vector<double>(static_cast<std::size_t>(n))};
    NumberColumn time{"time", std::vector<double>(static_cast<std::size_t>(n))};
    for (int id = 0; id < n; ++id) {
        node.values[static_cast<std::size_t>(id)] = id;
        time.values[static_cast<std::size_t>(id)] = space.time_of(id);
    }
    return {node, time};
}

struct RbsdeRun {
    RbsdeSolution sol;
    bool has_picard = false;
    PicardTrace picard;
};

RbsdeRun run_rbsde(const Scenario& sc, const ScenarioInstance& inst) {
    RbsdeRun run;
    if (driver_is_lipschitz(sc)) {
        auto lr = solve_lipschitz(inst.xi, make_lipschitz_driver(sc, *inst.space),
                                  inst.terminal, picard_params(sc));
        run.sol = std::move(lr.sol);
        run.picard = std::move(lr.trace);
        run.has_picard = true;
    } else {
        run.sol = solve_with_driver_process(inst.xi, driver_process_values(sc, *inst.space),
                                            inst.terminal);
    }
    return run;
}

struct DrbsdeRun {
    DrbsdeSolution sol;
    CoupledTrace coupled;
    bool has_picard = false;
    PicardTrace picard;
};

// Solves and keeps the coupled-iteration trace: for state-dependent
// drivers the outer solve is run first and the trace is regenerated at
// the final frozen driver (the fixed point, so the rerun is identical to
// the last inner solve).
DrbsdeRun run_drbsde(const Scenario& sc, const ScenarioInstance& inst) {
    if (!inst.has_zeta) {
        throw ValidationError("SchemaViolation", "task drbsde requires obstacles.zeta");
    }
    DrbsdeRun run;
    std::vector<double> g;
    CoupledParams cp;
    cp.tol = std::min(1e-12, 0.1 * sc.solver.tol);
    if (driver_is_lipschitz(sc)) {
        auto dr = solve_drbsde(inst.pair, make_lipschitz_driver(sc, *inst.space),
                               inst.terminal, picard_params(sc));
        run.picard = std::move(dr.trace);
        run.has_picard = true;
        g = dr.sol.g;
    } else {
        g = driver_process_values(sc, *inst.space);
        cp.tol = std::min(1e-12, sc.solver.tol);
    }
    const TildeObstacles tilde = tilde_obstacles(inst.pair, g, inst.terminal);
    const CoupledResult coupled = coupled_iterate(tilde.xi, tilde.zeta, cp);
    run.sol = assemble_solution(coupled, inst.pair, g, inst.terminal);
    run.coupled = coupled.trace;
    return run;
}

Artifacts compute_artifacts(const Scenario& sc, const ScenarioInstance& inst, Task task,
                            std::uint64_t cap) {
    const FiniteFilteredSpace& space = *inst.space;
    Artifacts art;
    art.summary = summary_header(sc, space, task);

    switch (task) {
    case Task::Snell: {
        const ValueProcesses vp = snell_backward(inst.xi, inst.terminal);
        const MertensDecomposition dec = mertens_decompose(vp);
        const SkorokhodReport sko = skorokhod_report(vp, dec, inst.xi);
        art.summary["v0"] = vp.v.at[0];
        art.summary["v0_plus"] = vp.vplus[0];
        art.summary["max_flat_a"] = sko.max_flat_a;
        art.summary["max_flat_b"] = sko.max_flat_b;
        art.solution = node_columns(space);
        art.solution.push_back({"v_pre", vp.v.pre});
        art.solution.push_back({"v_at", vp.v.at});
        art.solution.push_back({"v_plus", vp.vplus});
        art.solution.push_back({"m", dec.m});
        art.solution.push_back({"a", dec.a});
        art.solution.push_back({"b", dec.b});
        break;
    }
    case Task::Rbsde: {
        const RbsdeRun run = run_rbsde(sc, inst);
        art.summary["y0"] = run.sol.y.at[0];
        art.summary["y0_plus"] = run.sol.yplus[0];
        art.summary["residual"] = run.sol.residual;
        if (run.has_picard) {
            art.summary["picard"] = picard_json(run.picard);
        }
        art.solution = node_columns(space);
        art.solution.push_back({"y_pre", run.sol.y.pre});
        art.solution.push_back({"y_at", run.sol.y.at});
        art.solution.push_back({"y_plus", run.sol.yplus});
        art.solution.push_back({"z", run.sol.z});
        art.solution.push_back({"ortho", run.sol.ortho});
        art.solution.push_back({"m", run.sol.parts.m});
        art.solution.push_back({"a", run.sol.parts.a});
        art.solution.push_back({"b", run.sol.parts.b});
        art.solution.push_back({"g", run.sol.g});
        art.solution.push_back({"integral", run.sol.integral});
        break;
    }
    case Task::Drbsde: {
        const DrbsdeRun run = run_drbsde(sc, inst);
        const MokobodzkiReport probe =
            mokobodzki_probe(inst.pair, run.sol.g, inst.terminal);
        art.summary["y0"] = run.sol.y.at[0];
        art.summary["y0_plus"] = run.sol.yplus[0];
        art.summary["iterations"] = run.sol.iterations;
        art.summary["fixed_point_residual"] = run.sol.fixed_point_residual;
        art.summary["residual"] = run.sol.residual;
        OrderedJson mk = OrderedJson::object();
        mk["holds_at_tolerance"] = probe.holds_at_tolerance;
        mk["truncated"] = probe.truncated;
        mk["worst_nonnegativity"] = probe.worst_nonnegativity;
        mk["worst_supermartingale"] = probe.worst_supermartingale;
        mk["worst_sandwich"] = probe.worst_sandwich;
        mk["iterations"] = probe.iterations;
        mk["note"] = probe.note;
        art.summary["mokobodzki"] = mk;
        if (run.has_picard) {
            art.summary["picard"] = picard_json(run.picard);
        }
        art.solution = node_columns(space);
        art.solution.push_back({"y_pre", run.sol.y.pre});
        art.solution.push_back({"y_at", run.sol.y.at});
        art.solution.push_back({"y_plus", run.sol.yplus});
        art.solution.push_back({"z", run.sol.z});
        art.solution.push_back({"ortho", run.sol.ortho});
        art.solution.push_back({"a", run.sol.a});
        art.solution.push_back({"b", run.sol.b});
        art.solution.push_back({"a_prime", run.sol.aprime});
        art.solution.push_back({"b_prime", run.sol.bprime});
        art.solution.push_back({"j", run.sol.j.at});
        art.solution.push_back({"jbar", run.sol.jbar.at});
        break;
    }
    case Task::Enumerate: {
        const std::uint64_t count = split_count(space);
        art.summary["count"] = count;
        art.summary["cap"] = cap;
        const bool listed = count <= cap;
        art.summary["listed"] = listed;
        if (listed) {
            const auto splits = enumerate_splits(space, cap);
            std::string text = "index,stop_nodes,pre_nodes\n";
            for (std::size_t i = 0; i < splits.size(); ++i) {
                text += std::to_string(i);
                text += ',';
                text += join_ids(splits[i].stop_nodes());
                text += ',';
                text += join_ids(splits[i].pre_nodes());
                text += '\n';
            }
            art.has_splits = true;
            art.splits_csv = std::move(text);
        }
        break;
    }
    }
    return art;
}

} // namespace

int run_command(const std::string& scenario_path, Task task, const std::string& out_dir,
                std::ostream& out, std::ostream& err) {
    try {
        const Scenario sc = load_scenario_file(scenario_path);
        const ScenarioInstance inst = instantiate(sc);
        const Artifacts art = compute_artifacts(sc, inst, task, enumeration_cap());

        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) {
            throw ValidationError("FileNotWritable",
                                  "cannot create output directory '" + out_dir + "'");
        }
        const fs::path dir(out_dir);
        write_text_file((dir / "scenario.json").string(), sc.raw.dump(2) + "\n");
        write_text_file((dir / "summary.json").string(), art.summary.dump(2) + "\n");
        if (!art.solution.empty()) {
            write_text_file((dir / "solution.csv").string(), solution_csv_text(art.solution));
        }
        if (art.has_splits) {
            write_text_file((dir / "splits.csv").string(), art.splits_csv);
        }
        out << task_name(task) << " report written to " << out_dir << "\n";
        return 0;
    } catch (const ValidationError& e) {
        print_error(err, "validation", e.code(), e.what());
        return 2;
    } catch (const SolverError& e) {
        print_error(err, "solver", e.code(), e.what());
        return 3;
    }
}

namespace {

enum class CheckStatus { Pass, Fail, Skip };

struct CheckLine {
    CheckStatus status;
    std::string name;
    std::string detail;
};

void add_line(std::vector<CheckLine>& lines, CheckStatus status, const std::string& name,
              const std::string& detail) {
    lines.push_back({status, name, detail});
}

void add_bound(std::vector<CheckLine>& lines, const std::string& name, double dev,
               double bound) {
    add_line(lines, dev <= bound ? CheckStatus::Pass : CheckStatus::Fail, name,
             "max_dev=" + format_number(dev) + " bound=" + format_number(bound));
}

void add_exact(std::vector<CheckLine>& lines, const std::string& name, double dev) {
    add_line(lines, dev == 0.0 ? CheckStatus::Pass : CheckStatus::Fail, name,
             "max_dev=" + format_number(dev) + " bound=0");
}

// Runs `body`, turning a thrown error into a single FAIL line so the
// rest of the suite still executes.
void guarded(std::vector<CheckLine>& lines, const std::string& section,
             const std::function<void()>& body) {
    try {
        body();
    } catch (const ValidationError& e) {
        add_line(lines, CheckStatus::Fail, section, e.what());
    } catch (const SolverError& e) {
        add_line(lines, CheckStatus::Fail, section, e.what());
    }
}

std::vector<char> stop_everything_at(const FiniteFilteredSpace& space, int t) {
    std::vector<char> stop(static_cast<std::size_t>(space.node_count()), 0);
    for (int id = space.level_begin(t); id < space.level_end(t); ++id) {
        stop[static_cast<std::size_t>(id)] = 1;
    }
    return stop;
}

int schedule_index(double beta) {
    for (std::size_t j = 0; j < kBetaSchedule.size(); ++j) {
        if (kBetaSchedule[j] == beta) {
            return static_cast<int>(j);
        }
    }
    return static_cast<int>(kBetaSchedule.size()) - 1;
}

std::vector<CheckLine> scenario_checks(const Scenario& sc, const ScenarioInstance& inst) {
    std::vector<CheckLine> lines;
    const FiniteFilteredSpace& space = *inst.space;
    const TerminalKind kind = inst.terminal;
    const int n = space.node_count();
    const int steps = space.steps();
    const std::uint64_t cap = enumeration_cap();

    {
        const auto violations = validate_space(sc.tree);
        if (violations.empty()) {
            add_line(lines, CheckStatus::Pass, "space-validation", "0 violations");
        } else {
            add_line(lines, CheckStatus::Fail, "space-validation",
                     violations.front().code + ": " + violations.front().detail);
        }
    }

    const ValueProcesses vp = snell_backward(inst.xi, kind);

    guarded(lines, "aggregation", [&] {
        const std::uint64_t count = split_count(space);
        if (count > cap) {
            const std::string why =
                "split_count=" + std::to_string(count) + " exceeds cap=" + std::to_string(cap);
            add_line(lines, CheckStatus::Skip, "aggregation", why);
            add_line(lines, CheckStatus::Skip, "strict-aggregation", why);
            return;
        }
        const SplitStoppingTime rhoT = terminal_split(space, kind);
        double dev = 0.0;
        for (int t = 0; t <= steps; ++t) {
            const auto stop = stop_everything_at(space, t);
            if (!(kind == TerminalKind::Omega && t == steps)) {
                const auto delta = lift(space, stop, LiftMode::Optional);
                for (const auto& av : value_brute(inst.xi, delta, rhoT, cap)) {
                    const double expected = av.atom.pre_channel ? vp.v.pre[av.atom.rep_node]
                                                                : vp.v.at[av.atom.rep_node];
                    dev = std::max(dev, std::abs(av.value - expected));
                }
            }
            const auto delta_pre = lift(space, stop, LiftMode::Predictable);
            for (const auto& av : value_brute(inst.xi, delta_pre, rhoT, cap)) {
                const double expected = av.atom.pre_channel ? vp.v.pre[av.atom.rep_node]
                                                            : vp.v.at[av.atom.rep_node];
                dev = std::max(dev, std::abs(av.value - expected));
            }
        }
        add_bound(lines, "aggregation", dev, 1e-12);

        double sdev = 0.0;
        for (int t = 0; t < steps; ++t) {
            const auto delta = lift(space, stop_everything_at(space, t), LiftMode::Optional);
            for (const auto& av : strict_value_brute(inst.xi, delta, rhoT, cap)) {
                sdev = std::max(sdev, std::abs(av.value - vp.vplus[av.atom.rep_node]));
            }
        }
        add_bound(lines, "strict-aggregation", sdev, 1e-12);
    });

    guarded(lines, "mertens", [&] {
        const MertensDecomposition dec = mertens_decompose(vp);
        const ValueProcesses rec = reconstruct_from_decomposition(space, vp.v.at[0], dec);
        double dev = 0.0;
        for (int id = 0; id < n; ++id) {
            dev = std::max(dev, std::abs(rec.v.at[id] - vp.v.at[id]));
            dev = std::max(dev, std::abs(rec.v.pre[id] - vp.v.pre[id]));
            dev = std::max(dev, std::abs(rec.vplus[id] - vp.vplus[id]));
        }
        add_bound(lines, "mertens-reconstruction", dev, 1e-12);

        const SkorokhodReport sko = skorokhod_report(vp, dec, inst.xi);
        add_exact(lines, "skorokhod-flatness", std::max(sko.max_flat_a, sko.max_flat_b));
    });

    guarded(lines, "interval-optimality", [&] {
        double low = 0.0;
        for (int id = 0; id < n; ++id) {
            low = std::min(low, std::min(inst.xi.pre[id], inst.xi.at[id]));
        }
        LadlagProcess shifted = inst.xi;
        if (low < 0.0) {
            for (int id = 0; id < n; ++id) {
                shifted.pre[id] -= low;
                shifted.at[id] -= low;
            }
        }
        std::vector<char> theta(static_cast<std::size_t>(n), 0);
        theta[0] = 1;
        bool ok = true;
        double worst = 0.0;
        for (const double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            double violation = 0.0;
            ok = martingale_interval_check(shifted, lambda, theta, kind, 1e-10, &violation) && ok;
            worst = std::max(worst, violation);
        }
        add_line(lines, ok ? CheckStatus::Pass : CheckStatus::Fail, "interval-optimality",
                 "max_increment=" + format_number(worst) + " bound=1e-10");
    });

    guarded(lines, "rbsde", [&] {
        const RbsdeRun run = run_rbsde(sc, inst);
        add_bound(lines, "rbsde-residual", run.sol.residual, 1e-10);

        double floor_gap = 0.0;
        double recursion_dev = 0.0;
        for (int id = 0; id < n; ++id) {
            // Under an Omega horizon the problem reads xi_{T-}, so the at
            // channel at terminal nodes is not an obstacle.
            const bool skip_at =
                kind == TerminalKind::Omega && space.time_of(id) == steps;
            if (!skip_at) {
                floor_gap = std::min(floor_gap, run.sol.y.at[id] - inst.xi.at[id]);
                recursion_dev = std::max(recursion_dev,
                                         std::abs(run.sol.y.at[id] -
                                                  std::max(inst.xi.at[id], run.sol.yplus[id])));
            }
            floor_gap = std::min(floor_gap, run.sol.y.pre[id] - inst.xi.pre[id]);
        }
        add_line(lines, floor_gap >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail,
                 "rbsde-floor", "min_gap=" + format_number(floor_gap));
        add_exact(lines, "rbsde-recursion", recursion_dev);

        if (run.has_picard) {
            const int jcol = schedule_index(contracting_beta(run.picard.k2));
            double max_ratio = 0.0;
            bool ratios_ok = true;
            for (std::size_t i = 1; i < run.picard.k2.size(); ++i) {
                const double prev = run.picard.k2[i - 1][jcol];
                const double cur = run.picard.k2[i][jcol];
                if (prev == 0.0) {
                    if (cur != 0.0) ratios_ok = false;
                    break;
                }
                const double r = cur / prev;
                max_ratio = std::max(max_ratio, r);
                if (!std::isfinite(r) || r >= 1.0) ratios_ok = false;
            }
            add_line(lines, ratios_ok ? CheckStatus::Pass : CheckStatus::Fail,
                     "picard-contraction",
                     "max_ratio=" + format_number(max_ratio) +
                         " beta=" + format_number(kBetaSchedule[jcol]));

            const LadlagProcess seed = ref_operator(inst.xi, kind);
            const std::vector<double> z0(static_cast<std::size_t>(n), 0.0);
            const auto second = solve_lipschitz(inst.xi, make_lipschitz_driver(sc, space),
                                                kind, picard_params(sc), seed.at, z0);
            double dev = 0.0;
            for (int id = 0; id < n; ++id) {
                dev = std::max(dev, std::abs(run.sol.y.at[id] - second.sol.y.at[id]));
                dev = std::max(dev, std::abs(run.sol.y.pre[id] - second.sol.y.pre[id]));
            }
            add_bound(lines, "picard-two-inits", dev, 10.0 * sc.solver.tol);
        }
    });

    if (inst.has_zeta) {
        guarded(lines, "drbsde", [&] {
            const DrbsdeRun run = run_drbsde(sc, inst);
            const DrbsdeSolution& sol = run.sol;

            double min_inc = 0.0;
            for (const double v : run.coupled.min_increments) {
                min_inc = std::min(min_inc, v);
            }
            add_line(lines, min_inc >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail,
                     "coupled-monotone", "min_increment=" + format_number(min_inc));
            add_bound(lines, "coupled-fixed-point", sol.fixed_point_residual, 1e-10);

            double sandwich = 0.0;
            double median_dev = 0.0;
            double singular = 0.0;
            double jumps = 0.0;
            double flat = 0.0;
            for (int id = 0; id < n; ++id) {
                const bool terminal_at = space.time_of(id) == steps;
                const bool skip_at = terminal_at && kind == TerminalKind::Omega;
                if (!skip_at) {
                    sandwich = std::max(sandwich, inst.pair.xi.at[id] - sol.y.at[id]);
                    sandwich = std::max(sandwich, sol.y.at[id] - inst.pair.zeta.at[id]);
                    const double med = std::min(inst.pair.zeta.at[id],
                                                std::max(sol.yplus[id], inst.pair.xi.at[id]));
                    median_dev = std::max(median_dev, std::abs(sol.y.at[id] - med));
                }
                sandwich = std::max(sandwich, inst.pair.xi.pre[id] - sol.y.pre[id]);
                sandwich = std::max(sandwich, sol.y.pre[id] - inst.pair.zeta.pre[id]);
                singular = std::max(singular, std::min(sol.db[id], sol.dbprime[id]));
                singular = std::max(singular, std::min(sol.da[id], sol.daprime[id]));
                const double gap = sol.yplus[id] - sol.y.at[id];
                jumps = std::max(jumps, std::abs(sol.db[id] - std::max(-gap, 0.0)));
                jumps = std::max(jumps, std::abs(sol.dbprime[id] - std::max(gap, 0.0)));
                flat = std::max(flat, std::abs(sol.db[id] * (sol.y.at[id] - inst.pair.xi.at[id])));
                flat = std::max(flat,
                                std::abs(sol.dbprime[id] * (inst.pair.zeta.at[id] - sol.y.at[id])));
                flat = std::max(flat, std::abs(sol.da[id] * (sol.y.pre[id] - inst.pair.xi.pre[id])));
                flat = std::max(flat,
                                std::abs(sol.daprime[id] * (inst.pair.zeta.pre[id] - sol.y.pre[id])));
            }
            for (int p = 0; p < n; ++p) {
                const int kc = space.child_count(p);
                if (kc == 0) continue;
                double cond = 0.0;
                for (int c = space.first_child(p); c < space.first_child(p) + kc; ++c) {
                    cond += space.edge_prob(c) * sol.y.at[c];
                }
                for (int c = space.first_child(p); c < space.first_child(p) + kc; ++c) {
                    const double med = std::min(inst.pair.zeta.pre[c],
                                                std::max(cond, inst.pair.xi.pre[c]));
                    median_dev = std::max(median_dev, std::abs(sol.y.pre[c] - med));
                }
            }
            add_bound(lines, "drbsde-sandwich", sandwich, 1e-10);
            add_bound(lines, "drbsde-median", median_dev, 1e-10);
            add_exact(lines, "drbsde-singularity", singular);
            add_bound(lines, "drbsde-jumps", jumps, 1e-10);
            add_bound(lines, "drbsde-skorokhod", flat, 1e-10);
            add_bound(lines, "drbsde-equation", sol.residual, 1e-10);

            const MokobodzkiReport probe = mokobodzki_probe(inst.pair, sol.g, kind);
            std::string detail = "worst_sandwich=" + format_number(probe.worst_sandwich);
            if (probe.truncated) {
                detail += " truncated: " + probe.note;
            }
            add_line(lines,
                     probe.holds_at_tolerance ? CheckStatus::Pass : CheckStatus::Fail,
                     "mokobodzki", detail);
        });
    }

    return lines;
}

const char* status_tag(CheckStatus status) {
    switch (status) {
    case CheckStatus::Pass: return "[PASS]";
    case CheckStatus::Fail: return "[FAIL]";
    case CheckStatus::Skip: return "[SKIP]";
    }
    return "[????]";
}

int print_report(const std::vector<CheckLine>& lines, std::ostream& out) {
    int passed = 0, failed = 0, skipped = 0;
    for (const auto& line : lines) {
        out << status_tag(line.status) << " " << line.name << " " << line.detail << "\n";
        switch (line.status) {
        case CheckStatus::Pass: ++passed; break;
        case CheckStatus::Fail: ++failed; break;
        case CheckStatus::Skip: ++skipped; break;
        }
    }
    out << "SUMMARY: " << passed << " passed, " << failed << " failed, " << skipped
        << " skipped\n";
    return failed > 0 ? 1 : 0;
}

int check_scenario_file(const std::string& path, std::ostream& out, std::ostream& err) {
    try {
        const Scenario sc = load_scenario_file(path);
        const ScenarioInstance inst = instantiate(sc);
        return print_report(scenario_checks(sc, inst), out);
    } catch (const ValidationError& e) {
        print_error(err, "validation", e.code(), e.what());
        return 2;
    } catch (const SolverError& e) {
        print_error(err, "solver", e.code(), e.what());
        return 3;
    }
}

// Parses a solution table; cells that fail to parse become NaN so they
// show up as value mismatches instead of aborting the replay.
struct StoredCsv {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
};

StoredCsv parse_solution_csv(const std::string& text) {
    StoredCsv table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("MalformedCsv", "empty table");
    }
    std::istringstream head(line);
    std::string cell;
    while (std::getline(head, cell, ',')) {
        table.names.push_back(cell);
        table.cols.emplace_back();
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t i = 0;
        while (std::getline(row, cell, ',')) {
            if (i >= table.names.size()) {
                throw ValidationError("MalformedCsv", "row wider than header");
            }
            char* end = nullptr;
            const double value = std::strtod(cell.c_str(), &end);
            const bool clean = end != cell.c_str() && *end == '\0';
            table.cols[i].push_back(clean ? value : std::numeric_limits<double>::quiet_NaN());
            ++i;
        }
        if (i != table.names.size()) {
            throw ValidationError("MalformedCsv", "row narrower than header");
        }
    }
    return table;
}

int replay_directory(const std::string& dir_path, std::ostream& out, std::ostream& err) {
    try {
        const fs::path dir(dir_path);
        const Scenario sc = load_scenario_file((dir / "scenario.json").string());
        const ScenarioInstance inst = instantiate(sc);

        OrderedJson stored_summary;
        const std::string summary_text = read_text_file((dir / "summary.json").string());
        try {
            stored_summary = OrderedJson::parse(summary_text);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("MalformedJson", std::string("summary.json: ") + e.what());
        }
        if (!stored_summary.is_object() || !stored_summary.contains("task") ||
            !stored_summary["task"].is_string()) {
            throw ValidationError("SchemaViolation", "summary.json lacks a task field");
        }
        const Task task = parse_task(stored_summary["task"].get<std::string>());

        std::uint64_t cap = enumeration_cap();
        if (task == Task::Enumerate && stored_summary.contains("cap") &&
            stored_summary["cap"].is_number_unsigned()) {
            cap = stored_summary["cap"].get<std::uint64_t>();
        }

        const Artifacts art = compute_artifacts(sc, inst, task, cap);
        std::vector<CheckLine> lines;

        const std::string recomputed_summary = art.summary.dump(2) + "\n";
        add_line(lines,
                 recomputed_summary == summary_text ? CheckStatus::Pass : CheckStatus::Fail,
                 "recomputation:summary.json",
                 recomputed_summary == summary_text ? "identical" : "differs");

        if (!art.solution.empty()) {
            const StoredCsv stored =
                parse_solution_csv(read_text_file((dir / "solution.csv").string()));
            if (stored.names.size() != art.solution.size()) {
                add_line(lines, CheckStatus::Fail, "recomputation:columns",
                         "stored " + std::to_string(stored.names.size()) + " columns, expected " +
                             std::to_string(art.solution.size()));
            }
            for (std::size_t i = 0; i < art.solution.size(); ++i) {
                const auto& col = art.solution[i];
                const std::string name = "recomputation:" + col.name;
                std::size_t found = stored.names.size();
                for (std::size_t j = 0; j < stored.names.size(); ++j) {
                    if (stored.names[j] == col.name) {
                        found = j;
                        break;
                    }
                }
                if (found == stored.names.size()) {
                    add_line(lines, CheckStatus::Fail, name, "column missing");
                    continue;
                }
                const auto& stored_col = stored.cols[found];
                if (stored_col.size() != col.values.size()) {
                    add_line(lines, CheckStatus::Fail, name, "row count differs");
                    continue;
                }
                int bad = -1;
                for (std::size_t r = 0; r < stored_col.size(); ++r) {
                    if (!(stored_col[r] == col.values[r])) {
                        bad = static_cast<int>(r);
                        break;
                    }
                }
                if (bad < 0) {
                    add_line(lines, CheckStatus::Pass, name, "identical");
                } else {
                    add_line(lines, CheckStatus::Fail, name,
                             "row " + std::to_string(bad) + ": stored " +
                                 format_number(stored_col[static_cast<std::size_t>(bad)]) +
                                 ", recomputed " +
                                 format_number(col.values[static_cast<std::size_t>(bad)]));
                }
            }
        }

        if (task == Task::Enumerate) {
            const fs::path splits = dir / "splits.csv";
            std::error_code ec;
            const bool exists = fs::exists(splits, ec);
            if (art.has_splits) {
                if (!exists) {
                    add_line(lines, CheckStatus::Fail, "recomputation:splits.csv",
                             "file missing");
                } else {
                    const std::string stored_text = read_text_file(splits.string());
                    add_line(lines,
                             stored_text == art.splits_csv ? CheckStatus::Pass
                                                           : CheckStatus::Fail,
                             "recomputation:splits.csv",
                             stored_text == art.splits_csv ? "identical" : "differs");
                }
            } else if (exists) {
                add_line(lines, CheckStatus::Fail, "recomputation:splits.csv",
                         "unexpected listing beyond the cap");
            }
        }

        return print_report(lines, out);
    } catch (const ValidationError& e) {
        print_error(err, "validation", e.code(), e.what());
        return 2;
    } catch (const SolverError& e) {
        print_error(err, "solver", e.code(), e.what());
        return 3;
    }
}

} // namespace

int check_command(const std::string& path, std::ostream& out, std::ostream& err) {
    std::error_code ec;
    const fs::path p(path);
    if (fs::is_directory(p, ec)) {
        return replay_directory(path, out, err);
    }
    const std::string name = p.filename().string();
    if (name == "summary.json" || name == "solution.csv" || name == "splits.csv" ||
        name == "scenario.json") {
        const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
        if (fs::exists(parent / "summary.json", ec)) {
            return replay_directory(parent.string(), out, err);
        }
    }
    return check_scenario_file(path, out, err);
}

int check_random_command(int count, std::uint64_t seed, std::ostream& out,
                         std::ostream& err) {
    if (count < 1) {
        print_error(err, "validation", "SchemaViolation", "--random needs a count >= 1");
        return 2;
    }
    RandomSource master(seed);
    int failures = 0;
    for (int i = 0; i < count; ++i) {
        const int steps = master.uniform_int(1, 3);
        const int branching = master.uniform_int(1, 3);
        const std::uint64_t sub_seed = master.raw();
        try {
            const OrderedJson doc = gen_scenario_json(steps, branching, sub_seed);
            const Scenario sc = parse_scenario(doc);
            const ScenarioInstance inst = instantiate(sc);
            const auto lines = scenario_checks(sc, inst);
            int failed = 0, skipped = 0;
            std::string first_fail;
            for (const auto& line : lines) {
                if (line.status == CheckStatus::Fail) {
                    ++failed;
                    if (first_fail.empty()) {
                        first_fail = line.name + " " + line.detail;
                    }
                } else if (line.status == CheckStatus::Skip) {
                    ++skipped;
                }
            }
            const std::string head = "scenario " + std::to_string(i) +
                                     " steps=" + std::to_string(steps) +
                                     " branching=" + std::to_string(branching) +
                                     " seed=" + std::to_string(sub_seed);
            if (failed > 0) {
                ++failures;
                out << "[FAIL] " << head << " first=" << first_fail << "\n";
            } else {
                out << "[PASS] " << head << " checks=" << lines.size()
                    << " skipped=" << skipped << "\n";
            }
        } catch (const ValidationError& e) {
            ++failures;
            out << "[FAIL] scenario " << i << " " << e.what() << "\n";
        } catch (const SolverError& e) {
            ++failures;
            out << "[FAIL] scenario " << i << " " << e.what() << "\n";
        }
    }
    out << "SUMMARY: " << (count - failures) << " passed, " << failures << " failed\n";
    return failures > 0 ? 1 : 0;
}

int gen_command(int steps, int branching, std::uint64_t seed, const std::string& out_path,
                std::ostream& out, std::ostream& err) {
    try {
        const OrderedJson doc = gen_scenario_json(steps, branching, seed);
        const fs::path p(out_path);
        if (p.has_parent_path()) {
            std::error_code ec;
            fs::create_directories(p.parent_path(), ec);
        }
        write_text_file(out_path, doc.dump(2) + "\n");
        out << "scenario written to " << out_path << "\n";
        return 0;
    } catch (const ValidationError& e) {
        print_error(err, "validation", e.code(), e.what());
        return 2;
    }
}

} // namespace snellforge
