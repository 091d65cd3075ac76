#pragma once

#include "snellforge/drbsde.hpp"
#include "snellforge/laglad.hpp"
#include "snellforge/probspace.hpp"
#include "snellforge/rbsde.hpp"
#include "snellforge/splitstop.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace snellforge {

using OrderedJson = nlohmann::ordered_json;

struct SolverSettings {
    double beta = -1.0;
    double tol = 1e-12;
    int max_iter = 200;
};

// Driver specification as it appears in scenario files.
//   process: g given per node (omega, t) only
//   affine:  g = a + b y + c z, declared bound required
//   table:   affine with per-node coefficients, declared bound required
struct DriverSpec {
    std::string kind = "process";
    std::vector<double> values;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    std::vector<double> a_nodes;
    std::vector<double> b_nodes;
    std::vector<double> c_nodes;
    double lipschitz_bound = 0.0;
};

struct Scenario {
    TreeSpec tree;
    std::vector<double> xi_pre, xi_at;
    bool has_zeta = false;
    std::vector<double> zeta_pre, zeta_at;
    TerminalKind terminal = TerminalKind::Empty;
    bool has_driver = false;
    DriverSpec driver;
    SolverSettings solver;
    std::uint64_t seed = 0;
    OrderedJson raw;
};

// Schema-level parse. Throws ValidationError with codes
// "SchemaViolation" (missing/ill-typed/unknown fields),
// "MissingLipschitzBound" (affine or table driver without a declared
// bound), plus anything build-time validation raises later.
Scenario parse_scenario(const OrderedJson& doc);

// Reads and parses a scenario file. Adds "FileNotReadable" and
// "MalformedJson".
Scenario load_scenario_file(const std::string& path);

// The materialized scenario: the filtered space on the heap (processes
// hold pointers into it) plus validated obstacle processes.
struct ScenarioInstance {
    std::unique_ptr<FiniteFilteredSpace> space;
    LadlagProcess xi;
    bool has_zeta = false;
    AdmissiblePair pair; // filled when has_zeta
    TerminalKind terminal = TerminalKind::Empty;
};

ScenarioInstance instantiate(const Scenario& sc);

// The driver as a plain per-node process; only valid for kind "process"
// (absent driver counts as the zero process).
std::vector<double> driver_process_values(const Scenario& sc,
                                          const FiniteFilteredSpace& space);

// The driver as a Lipschitz object; only valid for kinds "affine" and
// "table".
LipschitzDriver make_lipschitz_driver(const Scenario& sc, const FiniteFilteredSpace& space);

// True when the driver is state-dependent (affine or table).
bool driver_is_lipschitz(const Scenario& sc);

} // namespace snellforge
