#include "snellforge/scenario.hpp"

#include "snellforge/errors.hpp"

#include <fstream>
#include <set>
#include <string>

namespace snellforge {

namespace {

[[noreturn]] void schema_error(const std::string& detail) {
    throw ValidationError("SchemaViolation", detail);
}

const OrderedJson& require_object(const OrderedJson& doc, const std::string& key) {
    if (!doc.contains(key)) schema_error("missing required field '" + key + "'");
    const OrderedJson& v = doc.at(key);
    if (!v.is_object()) schema_error("field '" + key + "' must be an object");
    return v;
}

double require_number(const OrderedJson& obj, const std::string& key,
                      const std::string& where) {
    if (!obj.contains(key)) schema_error("missing required field '" + where + "." + key + "'");
    const OrderedJson& v = obj.at(key);
    if (!v.is_number()) schema_error("field '" + where + "." + key + "' must be a number");
    return v.get<double>();
}

int require_int(const OrderedJson& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) schema_error("missing required field '" + where + "." + key + "'");
    const OrderedJson& v = obj.at(key);
    if (!v.is_number_integer()) {
        schema_error("field '" + where + "." + key + "' must be an integer");
    }
    return v.get<int>();
}

std::string require_string(const OrderedJson& obj, const std::string& key,
                           const std::string& where) {
    if (!obj.contains(key)) schema_error("missing required field '" + where + "." + key + "'");
    const OrderedJson& v = obj.at(key);
    if (!v.is_string()) schema_error("field '" + where + "." + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> number_array(const OrderedJson& v, const std::string& where) {
    if (!v.is_array()) schema_error("field '" + where + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_number()) schema_error("field '" + where + "' must contain numbers only");
        out.push_back(item.get<double>());
    }
    return out;
}

void reject_unknown_keys(const OrderedJson& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.count(it.key()) == 0) {
            schema_error("unknown field '" + where + "." + it.key() + "'");
        }
    }
}

// Scalar or per-node array; the scalar is broadcast.
std::vector<double> coefficient_column(const OrderedJson& obj, const std::string& key,
                                       const std::string& where) {
    if (!obj.contains(key)) return {0.0};
    const OrderedJson& v = obj.at(key);
    if (v.is_number()) return {v.get<double>()};
    return number_array(v, where + "." + key);
}

void parse_obstacle(const OrderedJson& obj, const std::string& where,
                    std::vector<double>& pre, std::vector<double>& at) {
    if (!obj.is_object()) schema_error("field '" + where + "' must be an object");
    reject_unknown_keys(obj, {"pre", "at"}, where);
    if (!obj.contains("pre") || !obj.contains("at")) {
        schema_error("field '" + where + "' needs both 'pre' and 'at' arrays");
    }
    pre = number_array(obj.at("pre"), where + ".pre");
    at = number_array(obj.at("at"), where + ".at");
}

DriverSpec parse_driver(const OrderedJson& obj) {
    if (!obj.is_object()) schema_error("field 'driver' must be an object");
    DriverSpec spec;
    spec.kind = require_string(obj, "kind", "driver");
    if (spec.kind == "process") {
        reject_unknown_keys(obj, {"kind", "values"}, "driver");
        if (!obj.contains("values")) schema_error("process driver needs 'values'");
        spec.values = number_array(obj.at("values"), "driver.values");
    } else if (spec.kind == "affine") {
        reject_unknown_keys(obj, {"kind", "a", "b", "c", "lipschitz_bound"}, "driver");
        spec.a = obj.contains("a") ? require_number(obj, "a", "driver") : 0.0;
        spec.b = obj.contains("b") ? require_number(obj, "b", "driver") : 0.0;
        spec.c = obj.contains("c") ? require_number(obj, "c", "driver") : 0.0;
        if (!obj.contains("lipschitz_bound")) {
            throw ValidationError("MissingLipschitzBound",
                                  "affine drivers must declare 'lipschitz_bound'");
        }
        spec.lipschitz_bound = require_number(obj, "lipschitz_bound", "driver");
    } else if (spec.kind == "table") {
        reject_unknown_keys(obj, {"kind", "a", "b", "c", "lipschitz_bound"}, "driver");
        spec.a_nodes = coefficient_column(obj, "a", "driver");
        spec.b_nodes = coefficient_column(obj, "b", "driver");
        spec.c_nodes = coefficient_column(obj, "c", "driver");
        if (!obj.contains("lipschitz_bound")) {
            throw ValidationError("MissingLipschitzBound",
                                  "table drivers must declare 'lipschitz_bound'");
        }
        spec.lipschitz_bound = require_number(obj, "lipschitz_bound", "driver");
    } else {
        schema_error("driver.kind must be one of 'process', 'affine', 'table'");
    }
    return spec;
}

} // namespace

Scenario parse_scenario(const OrderedJson& doc) {
    if (!doc.is_object()) schema_error("scenario root must be an object");
    reject_unknown_keys(
        doc, {"grid", "tree", "obstacles", "terminal", "driver", "solver", "seed"}, "$");

    Scenario sc;
    sc.raw = doc;

    const OrderedJson& grid = require_object(doc, "grid");
    reject_unknown_keys(grid, {"steps", "dt"}, "grid");
    const int steps = require_int(grid, "steps", "grid");
    const double dt = require_number(grid, "dt", "grid");

    const OrderedJson& tree = require_object(doc, "tree");
    const std::string kind = require_string(tree, "kind", "tree");
    if (kind == "binomial") {
        reject_unknown_keys(tree, {"kind"}, "tree");
        sc.tree = binomial_spec(steps, dt);
    } else if (kind == "explicit") {
        reject_unknown_keys(tree, {"kind", "branches", "noise"}, "tree");
        if (!tree.contains("branches") || !tree.contains("noise")) {
            schema_error("explicit trees need 'branches' and 'noise'");
        }
        const OrderedJson& branches = tree.at("branches");
        const OrderedJson& noise = tree.at("noise");
        if (!branches.is_array() || !noise.is_array() || branches.size() != noise.size()) {
            schema_error("tree.branches and tree.noise must be arrays of equal length");
        }
        sc.tree.steps = steps;
        sc.tree.dt = dt;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const std::vector<double> probs =
                number_array(branches.at(i), "tree.branches[" + std::to_string(i) + "]");
            const std::vector<double> dws =
                number_array(noise.at(i), "tree.noise[" + std::to_string(i) + "]");
            if (probs.size() != dws.size()) {
                schema_error("tree.branches[" + std::to_string(i) +
                             "] and the matching noise row differ in length");
            }
            std::vector<EdgeSpec> edges;
            edges.reserve(probs.size());
            for (std::size_t k = 0; k < probs.size(); ++k) {
                edges.push_back({probs[k], dws[k]});
            }
            sc.tree.branches.push_back(std::move(edges));
        }
    } else {
        schema_error("tree.kind must be 'binomial' or 'explicit'");
    }

    const OrderedJson& obstacles = require_object(doc, "obstacles");
    reject_unknown_keys(obstacles, {"xi", "zeta"}, "obstacles");
    if (!obstacles.contains("xi")) schema_error("obstacles.xi is required");
    parse_obstacle(obstacles.at("xi"), "obstacles.xi", sc.xi_pre, sc.xi_at);
    if (obstacles.contains("zeta")) {
        sc.has_zeta = true;
        parse_obstacle(obstacles.at("zeta"), "obstacles.zeta", sc.zeta_pre, sc.zeta_at);
    }

    const OrderedJson& terminal = require_object(doc, "terminal");
    reject_unknown_keys(terminal, {"H_T"}, "terminal");
    const std::string ht = require_string(terminal, "H_T", "terminal");
    if (ht == "empty") {
        sc.terminal = TerminalKind::Empty;
    } else if (ht == "omega") {
        sc.terminal = TerminalKind::Omega;
    } else {
        schema_error("terminal.H_T must be 'empty' or 'omega'");
    }

    if (doc.contains("driver")) {
        sc.has_driver = true;
        sc.driver = parse_driver(doc.at("driver"));
    }

    if (doc.contains("solver")) {
        const OrderedJson& solver = doc.at("solver");
        if (!solver.is_object()) schema_error("field 'solver' must be an object");
        reject_unknown_keys(solver, {"beta", "tol", "max_iter"}, "solver");
        if (solver.contains("beta")) sc.solver.beta = require_number(solver, "beta", "solver");
        if (solver.contains("tol")) sc.solver.tol = require_number(solver, "tol", "solver");
        if (solver.contains("max_iter")) {
            sc.solver.max_iter = require_int(solver, "max_iter", "solver");
        }
        if (sc.solver.tol <= 0.0 || sc.solver.max_iter < 1) {
            schema_error("solver.tol must be positive and solver.max_iter at least 1");
        }
    }

    if (doc.contains("seed")) {
        const OrderedJson& v = doc.at("seed");
        if (!v.is_number_integer()) schema_error("field 'seed' must be an integer");
        sc.seed = v.get<std::uint64_t>();
    }
    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("FileNotReadable", "cannot open scenario file " + path);
    }
    OrderedJson doc;
    try {
        doc = OrderedJson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("MalformedJson", e.what());
    }
    return parse_scenario(doc);
}

ScenarioInstance instantiate(const Scenario& sc) {
    ScenarioInstance inst;
    inst.space = std::make_unique<FiniteFilteredSpace>(build_space(sc.tree));
    inst.terminal = sc.terminal;
    inst.xi = make_process(*inst.space, sc.xi_pre, sc.xi_at);
    inst.has_zeta = sc.has_zeta;
    if (sc.has_zeta) {
        inst.pair.xi = inst.xi;
        inst.pair.zeta = make_process(*inst.space, sc.zeta_pre, sc.zeta_at);
        validate_admissible(inst.pair, sc.terminal);
    }
    return inst;
}

std::vector<double> driver_process_values(const Scenario& sc,
                                          const FiniteFilteredSpace& space) {
    if (!sc.has_driver) {
        return std::vector<double>(space.node_count(), 0.0);
    }
    if (sc.driver.kind != "process") {
        throw ValidationError("SchemaViolation",
                              "driver kind '" + sc.driver.kind +
                                  "' is state-dependent; a process driver was expected");
    }
    if (static_cast<int>(sc.driver.values.size()) != space.node_count()) {
        throw ValidationError("MissingNodeValue",
                              "driver.values must list one value per node (" +
                                  std::to_string(space.node_count()) + ")");
    }
    return sc.driver.values;
}

LipschitzDriver make_lipschitz_driver(const Scenario& sc, const FiniteFilteredSpace& space) {
    if (!driver_is_lipschitz(sc)) {
        throw ValidationError("SchemaViolation", "driver is not state-dependent");
    }
    const DriverSpec& d = sc.driver;
    LipschitzDriver out;
    out.bound = d.lipschitz_bound;
    if (d.kind == "affine") {
        out.eval = [a = d.a, b = d.b, c = d.c](int, double y, double z) {
            return a + b * y + c * z;
        };
        return out;
    }
    const int n = space.node_count();
    auto column = [n](const std::vector<double>& col,
                      const std::string& name) -> std::vector<double> {
        if (col.size() == 1) return std::vector<double>(n, col[0]);
        if (static_cast<int>(col.size()) != n) {
            throw ValidationError("MissingNodeValue", "driver." + name +
                                                          " must be a scalar or list one "
                                                          "value per node");
        }
        return col;
    };
    out.eval = [a = column(d.a_nodes, "a"), b = column(d.b_nodes, "b"),
                c = column(d.c_nodes, "c")](int node, double y, double z) {
        return a[node] + b[node] * y + c[node] * z;
    };
    return out;
}

bool driver_is_lipschitz(const Scenario& sc) {
    return sc.has_driver && (sc.driver.kind == "affine" || sc.driver.kind == "table");
}

} // namespace snellforge
