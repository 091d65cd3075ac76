#include "snellforge/errors.hpp"
#include "snellforge/run_tasks.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Optimal split stopping and reflected backward equations on finite trees"};
    app.require_subcommand(1);

    std::string run_file, run_task, run_out;
    CLI::App* run = app.add_subcommand("run", "Solve one scenario and write reports");
    run->add_option("file", run_file, "scenario JSON file")->required();
    run->add_option("--task", run_task, "snell, rbsde, drbsde or enumerate")->required();
    run->add_option("--out", run_out, "output directory")->required();

    std::string check_path;
    int random_count = 0;
    std::uint64_t check_seed = 0;
    CLI::App* check = app.add_subcommand("check", "Run the invariant suite");
    check->add_option("file", check_path, "scenario file or run output directory");
    CLI::Option* random_opt =
        check->add_option("--random", random_count, "check this many random scenarios");
    check->add_option("--seed", check_seed, "seed for --random");

    int gen_steps = 0;
    int gen_branching = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen", "Generate a random scenario file");
    gen->add_option("--steps", gen_steps, "grid steps (at most 5)")->required();
    gen->add_option("--branching", gen_branching, "branching cap (at most 3)")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) {
        snellforge::Task task;
        try {
            task = snellforge::parse_task(run_task);
        } catch (const snellforge::ValidationError& e) {
            std::cerr << R"({"error":"validation","code":")" << e.code() << R"(","message":")"
                      << e.what() << "\"}\n";
            return 2;
        }
        return snellforge::run_command(run_file, task, run_out, std::cout, std::cerr);
    }
    if (check->parsed()) {
        const bool wants_random = random_opt->count() > 0;
        if (wants_random == !check_path.empty()) {
            std::cerr << R"({"error":"validation","code":"SchemaViolation",)"
                      << R"("message":"check takes either a path or --random N --seed S"})"
                      << "\n";
            return 2;
        }
        if (wants_random) {
            return snellforge::check_random_command(random_count, check_seed, std::cout,
                                                    std::cerr);
        }
        return snellforge::check_command(check_path, std::cout, std::cerr);
    }
    if (gen->parsed()) {
        return snellforge::gen_command(gen_steps, gen_branching, gen_seed, gen_out, std::cout,
                                       std::cerr);
    }
    return 2;
}
