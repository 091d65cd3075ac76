#pragma once

#include "snellforge/scenario.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace snellforge {

enum class Task { Snell, Rbsde, Drbsde, Enumerate };

// Throws ValidationError("UnknownTask").
Task parse_task(const std::string& name);

// Cap used for listings and brute-force cross-checks. The environment
// variable SNELLFORGE_ENUM_CAP overrides the built-in default.
std::uint64_t enumeration_cap();

// Shortest exact decimal form, used by every report writer so that equal
// doubles always produce equal bytes.
std::string format_number(double v);

// Commands behind the CLI verbs. All of them write human-readable
// progress to `out` and machine-readable one-line JSON diagnostics to
// `err` on failure. Exit codes: 0 success, 1 a check found a violation,
// 2 invalid input, 3 solver failure.

int run_command(const std::string& scenario_path, Task task, const std::string& out_dir,
                std::ostream& out, std::ostream& err);

// `path` is either a scenario file (full invariant suite) or a run
// output directory (recompute everything and compare against the stored
// reports; a path to one of the report files inside such a directory is
// accepted too).
int check_command(const std::string& path, std::ostream& out, std::ostream& err);

int check_random_command(int count, std::uint64_t seed, std::ostream& out,
                         std::ostream& err);

int gen_command(int steps, int branching, std::uint64_t seed, const std::string& out_path,
                std::ostream& out, std::ostream& err);

} // namespace snellforge
