#include "snellforge/random_scenario.hpp"

#include "snellforge/errors.hpp"
#include "snellforge/probspace.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace snellforge {

namespace {

OrderedJson obstacle_json(const std::vector<double>& pre, const std::vector<double>& at) {
    OrderedJson out = OrderedJson::object();
    out["pre"] = pre;
    out["at"] = at;
    return out;
}

} // namespace

OrderedJson gen_scenario_json(int steps, int branching, std::uint64_t seed) {
    if (steps < 1 || steps > 5 || branching < 1 || branching > 3) {
        throw ValidationError("CapExceeded",
                              "generator accepts 1 <= steps <= 5 and 1 <= branching <= 3, got steps=" +
                                  std::to_string(steps) + " branching=" + std::to_string(branching));
    }

    RandomSource rng(seed);

    const double dt_choices[3] = {0.1, 0.25, 0.5};
    const double dt = dt_choices[rng.uniform_int(0, 2)];

    TreeSpec spec;
    spec.steps = steps;
    spec.dt = dt;

    OrderedJson tree = OrderedJson::object();
    const bool binomial = (branching == 2) && (rng.uniform01() < 0.25);
    if (binomial) {
        spec = binomial_spec(steps, dt);
        tree["kind"] = "binomial";
    } else {
        // Level-by-level construction; node ids are breadth-first, so the
        // branch rows line up with non-terminal node ids.
        const double scale = std::sqrt(dt);
        std::vector<int> level_count(static_cast<std::size_t>(steps) + 1, 0);
        level_count[0] = 1;
        OrderedJson branches = OrderedJson::array();
        OrderedJson noise = OrderedJson::array();
        for (int t = 0; t < steps; ++t) {
            for (int i = 0; i < level_count[static_cast<std::size_t>(t)]; ++i) {
                const int k = (branching == 1) ? 1 : rng.uniform_int(1, branching);
                level_count[static_cast<std::size_t>(t) + 1] += k;

                std::vector<double> probs(static_cast<std::size_t>(k));
                double total = 0.0;
                for (double& w : probs) {
                    w = rng.uniform(0.2, 1.0);
                    total += w;
                }
                for (double& w : probs) {
                    w /= total;
                }

                std::vector<double> dws(static_cast<std::size_t>(k), 0.0);
                if (k > 1) {
                    double mean = 0.0;
                    for (std::size_t j = 0; j < dws.size(); ++j) {
                        dws[j] = rng.uniform(-scale, scale);
                        mean += probs[j] * dws[j];
                    }
                    for (double& dw : dws) {
                        dw -= mean;
                    }
                }

                std::vector<EdgeSpec> edges(static_cast<std::size_t>(k));
                for (std::size_t j = 0; j < edges.size(); ++j) {
                    edges[j].prob = probs[j];
                    edges[j].dw = dws[j];
                }
                spec.branches.push_back(edges);
                branches.push_back(probs);
                noise.push_back(dws);
            }
        }
        tree["kind"] = "explicit";
        tree["branches"] = branches;
        tree["noise"] = noise;
    }

    const FiniteFilteredSpace space = build_space(spec);
    const int n = space.node_count();

    const bool omega = rng.uniform01() < (1.0 / 3.0);

    std::vector<double> xi_at(static_cast<std::size_t>(n));
    for (double& v : xi_at) {
        v = rng.uniform(-5.0, 5.0);
    }
    // The lower limit is known one step ahead, so it is constant on each
    // sibling block: one draw per parent.
    std::vector<double> xi_pre(static_cast<std::size_t>(n), 0.0);
    for (int p = 0; p < n; ++p) {
        const int kc = space.child_count(p);
        if (kc == 0) {
            continue;
        }
        const double v = rng.uniform(-5.0, 5.0);
        for (int c = space.first_child(p); c < space.first_child(p) + kc; ++c) {
            xi_pre[static_cast<std::size_t>(c)] = v;
        }
    }
    xi_pre[0] = xi_at[0];

    std::vector<double> zeta_at(static_cast<std::size_t>(n));
    for (int id = 0; id < n; ++id) {
        zeta_at[static_cast<std::size_t>(id)] = xi_at[static_cast<std::size_t>(id)] + rng.uniform(0.0, 3.0);
    }
    std::vector<double> zeta_pre(static_cast<std::size_t>(n), 0.0);
    for (int p = 0; p < n; ++p) {
        const int kc = space.child_count(p);
        if (kc == 0) {
            continue;
        }
        const double gap = rng.uniform(0.0, 3.0);
        for (int c = space.first_child(p); c < space.first_child(p) + kc; ++c) {
            zeta_pre[static_cast<std::size_t>(c)] = xi_pre[static_cast<std::size_t>(c)] + gap;
        }
    }

    // The barriers have to touch on the horizon channel.
    for (int leaf = space.level_begin(steps); leaf < space.level_end(steps); ++leaf) {
        if (omega) {
            zeta_pre[static_cast<std::size_t>(leaf)] = xi_pre[static_cast<std::size_t>(leaf)];
        } else {
            zeta_at[static_cast<std::size_t>(leaf)] = xi_at[static_cast<std::size_t>(leaf)];
        }
    }
    zeta_pre[0] = zeta_at[0];

    OrderedJson driver = OrderedJson::object();
    const double kind_roll = rng.uniform01();
    if (kind_roll < 1.0 / 3.0) {
        std::vector<double> values(static_cast<std::size_t>(n));
        for (double& v : values) {
            v = rng.uniform(-1.0, 1.0);
        }
        driver["kind"] = "process";
        driver["values"] = values;
    } else if (kind_roll < 2.0 / 3.0) {
        const double a = rng.uniform(-1.0, 1.0);
        const double b = rng.uniform(-0.45, 0.45);
        const double c = rng.uniform(-0.45, 0.45);
        driver["kind"] = "affine";
        driver["a"] = a;
        driver["b"] = b;
        driver["c"] = c;
        driver["lipschitz_bound"] = std::max(std::abs(b), std::abs(c));
    } else {
        std::vector<double> a_nodes(static_cast<std::size_t>(n));
        for (double& v : a_nodes) {
            v = rng.uniform(-1.0, 1.0);
        }
        const double b = rng.uniform(-0.45, 0.45);
        const double c = rng.uniform(-0.45, 0.45);
        driver["kind"] = "table";
        driver["a"] = a_nodes;
        driver["b"] = b;
        driver["c"] = c;
        driver["lipschitz_bound"] = std::max(std::abs(b), std::abs(c));
    }

    OrderedJson doc = OrderedJson::object();
    OrderedJson grid = OrderedJson::object();
    grid["steps"] = steps;
    grid["dt"] = dt;
    doc["grid"] = grid;
    doc["tree"] = tree;
    OrderedJson obstacles = OrderedJson::object();
    obstacles["xi"] = obstacle_json(xi_pre, xi_at);
    obstacles["zeta"] = obstacle_json(zeta_pre, zeta_at);
    doc["obstacles"] = obstacles;
    OrderedJson terminal = OrderedJson::object();
    terminal["H_T"] = omega ? "omega" : "empty";
    doc["terminal"] = terminal;
    doc["driver"] = driver;
    OrderedJson solver = OrderedJson::object();
    solver["beta"] = -1.0;
    solver["tol"] = 1e-12;
    solver["max_iter"] = 200;
    doc["solver"] = solver;
    doc["seed"] = seed;
    return doc;
}

} // namespace snellforge
